"""Dense bounded-variable simplex solver.

Small LPs only: the intended use is the siting master relaxation inside
branch and bound, which has tens of structural variables and at most a few
hundred cut rows.  The implementation keeps an explicit basis inverse with
product-form updates and periodic refactorization, and uses Bland's rule
throughout so it cannot cycle.

Rows are ``a @ x  (<= | >= | =)  rhs`` and every variable carries a lower
and upper bound, either of which may be infinite.  Duals follow the
Lagrangian convention for minimization: perturbing ``rhs_i`` by ``+eps``
moves the optimal objective by ``duals[i] * eps``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LpProblem",
    "LpSolution",
    "NumericalBreakdownError",
    "solve_lp",
]

LE, GE, EQ = "<=", ">=", "="

_TOL_PRICE = 1e-9
_TOL_RATIO = 1e-10
_TINY_PIVOT = 1e-11
_REFACTOR_EVERY = 64


class NumericalBreakdownError(RuntimeError):
    """A pivot stayed below the breakdown threshold after refactorization."""


@dataclass
class LpProblem:
    """min ``c @ x`` s.t. ``A x (senses) b``, ``lo <= x <= hi``."""

    c: np.ndarray
    A: np.ndarray
    senses: list
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float)
        self.lo = np.asarray(self.lo, dtype=float)
        self.hi = np.asarray(self.hi, dtype=float)
        if self.A.size == 0:
            self.A = np.zeros((len(self.b), len(self.c)))
        if len(self.c) != self.A.shape[1]:
            raise ValueError("cost vector length does not match column count")
        if len(self.b) != self.A.shape[0] or len(self.senses) != self.A.shape[0]:
            raise ValueError("row data lengths are inconsistent")
        if len(self.lo) != len(self.c) or len(self.hi) != len(self.c):
            raise ValueError("bound vector lengths do not match column count")
        for s in self.senses:
            if s not in (LE, GE, EQ):
                raise ValueError(f"unknown row sense {s!r}")


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    objective: float = float("nan")
    duals: np.ndarray | None = None
    iterations: int = 0
    reduced_costs: np.ndarray = field(default=None, repr=False)


class _Tableau:
    """Equality-form working problem: [A | I_slack | artificials]."""

    def __init__(self, p: LpProblem):
        m, n = p.A.shape
        self.m, self.n = m, n
        slack_lo = np.zeros(m)
        slack_hi = np.zeros(m)
        for i, s in enumerate(p.senses):
            if s == LE:
                slack_lo[i], slack_hi[i] = 0.0, np.inf
            elif s == GE:
                slack_lo[i], slack_hi[i] = -np.inf, 0.0
            else:
                slack_lo[i], slack_hi[i] = 0.0, 0.0
        self.A = np.hstack([p.A, np.eye(m)])
        self.lo = np.concatenate([p.lo, slack_lo])
        self.hi = np.concatenate([p.hi, slack_hi])
        self.b = p.b.copy()
        self.cost = np.concatenate([p.c, np.zeros(m)])

        # nonbasic resting values: finite bound nearest the role, 0 if free
        v = np.where(np.isfinite(self.lo), self.lo,
                     np.where(np.isfinite(self.hi), self.hi, 0.0))
        self.nb_val = v

        # start from the all-slack basis; rows whose slack value falls
        # outside the slack bounds get an artificial column
        resid = self.b - p.A @ v[:n]
        basis = list(range(n, n + m))
        art_cols = []
        for i in range(m):
            r = resid[i]
            if not (self.lo[n + i] - 1e-12 <= r <= self.hi[n + i] + 1e-12):
                clamped = min(max(r, self.lo[n + i]), self.hi[n + i])
                self.nb_val[n + i] = clamped
                col = np.zeros(m)
                col[i] = 1.0 if r - clamped > 0 else -1.0
                art_cols.append(col)
                basis[i] = n + m + len(art_cols) - 1
        self.n_art = len(art_cols)
        if art_cols:
            self.A = np.hstack([self.A, np.array(art_cols).T])
            self.lo = np.concatenate([self.lo, np.zeros(self.n_art)])
            self.hi = np.concatenate([self.hi, np.full(self.n_art, np.inf)])
            self.nb_val = np.concatenate([self.nb_val, np.zeros(self.n_art)])
            self.cost = np.concatenate([self.cost, np.zeros(self.n_art)])
        self.N = self.A.shape[1]
        self._absA = np.abs(self.A)
        self.basis = np.array(basis, dtype=int)
        self.in_basis = np.zeros(self.N, dtype=bool)
        self.in_basis[self.basis] = True
        self.iterations = 0
        self._repairs = 0
        # artificial columns may carry -1 entries, so the starting basis
        # matrix is not the identity; build its inverse explicitly
        self.binv = np.eye(m)
        self.xb = np.zeros(m)
        self.refactor()

    def refactor(self) -> bool:
        """Rebuild the basis inverse; returns True if a repair was needed."""
        repaired = False
        try:
            self.binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError:
            self._repair_basis()
            repaired = True
        vn = self.nb_val.copy()
        vn[self.basis] = 0.0
        self.xb = self.binv @ (self.b - self.A @ vn)
        return repaired

    def _repair_basis(self):
        """Swap dependent basic columns for slack unit columns.

        Accumulated pivots can leave an exactly singular basis matrix.
        The slack columns form the identity, so a greedy pass that keeps
        current basic columns while they stay independent and fills the
        rank gaps from unused slacks always reaches full rank.
        """
        self._repairs += 1
        if self._repairs > 32:
            raise NumericalBreakdownError("basis repair limit exceeded")
        cand = [j for j in range(self.n, self.n + self.m)
                if not self.in_basis[j]]
        cols = list(self.basis) + cand
        M = self.A[:, cols]
        picked, Q = [], []
        for k in range(M.shape[1]):
            v = M[:, k].astype(float, copy=True)
            scale = max(1.0, float(np.linalg.norm(v)))
            for q in Q:  # orthogonalize twice for stability
                v -= (q @ v) * q
            for q in Q:
                v -= (q @ v) * q
            nrm = float(np.linalg.norm(v))
            if nrm > 1e-8 * scale:
                Q.append(v / nrm)
                picked.append(k)
                if len(picked) == self.m:
                    break
        if len(picked) < self.m:  # pragma: no cover - slacks span I
            raise NumericalBreakdownError("basis repair failed to reach rank")
        new_basis = np.array([cols[k] for k in picked], dtype=int)
        for v in set(self.basis) - set(new_basis):
            self.in_basis[v] = False
            self.nb_val[v] = (self.lo[v] if np.isfinite(self.lo[v])
                              else self.hi[v] if np.isfinite(self.hi[v])
                              else 0.0)
        self.basis = new_basis
        self.in_basis[new_basis] = True
        self.binv = np.linalg.inv(self.A[:, self.basis])

    def values(self) -> np.ndarray:
        v = self.nb_val.copy()
        v[self.basis] = self.xb
        return v

    def duals_and_reduced(self, cost: np.ndarray):
        pi = cost[self.basis] @ self.binv
        d = cost - pi @ self.A
        return pi, d

    def run(self, cost: np.ndarray) -> str:
        """Bland-rule simplex to optimality; returns 'optimal'|'unbounded'."""
        since_refactor = 0
        stale_retries = 0
        while True:
            self.iterations += 1
            since_refactor += 1
            if since_refactor >= _REFACTOR_EVERY:
                self.refactor()
                since_refactor = 0
            pi, d = self.duals_and_reduced(cost)
            # forward-error floor of each reduced cost: noise in pi @ A_j
            # scales with |pi| @ |A_j|, which dwarfs any absolute tolerance
            # once the basis is ill-conditioned
            price_floor = _TOL_PRICE * (1.0 + np.abs(pi) @ self._absA)

            enter, direction = -1, 0.0
            for j in range(self.N):
                if self.in_basis[j]:
                    continue
                if self.lo[j] == self.hi[j]:
                    continue  # fixed column can never improve
                vj = self.nb_val[j]
                free = not np.isfinite(self.lo[j]) and not np.isfinite(self.hi[j])
                if free:
                    if d[j] < -price_floor[j]:
                        enter, direction = j, 1.0
                        break
                    if d[j] > price_floor[j]:
                        enter, direction = j, -1.0
                        break
                elif vj == self.lo[j] or (np.isfinite(self.lo[j]) and vj <= self.lo[j]):
                    if d[j] < -price_floor[j]:
                        enter, direction = j, 1.0
                        break
                else:  # resting at upper bound
                    if d[j] > price_floor[j]:
                        enter, direction = j, -1.0
                        break
            if enter < 0:
                return "optimal"

            y = self.binv @ self.A[:, enter]
            # per-row noise floor of y = binv @ A_col; entries below it are
            # numerical zeros and a pivot on one would leave a near-singular
            # basis behind
            y_noise = _TOL_RATIO * (1.0 + np.abs(self.binv) @ self._absA[:, enter])
            step = np.inf
            leave_row = -1
            leave_at_lower = True
            for i in range(self.m):
                yi = direction * y[i]
                if yi > y_noise[i]:  # basic value decreases toward its lower bound
                    if np.isfinite(self.lo[self.basis[i]]):
                        t = (self.xb[i] - self.lo[self.basis[i]]) / yi
                        if t < step - _TOL_RATIO or (
                            t < step + _TOL_RATIO
                            and (leave_row < 0 or self.basis[i] < self.basis[leave_row])
                        ):
                            step, leave_row, leave_at_lower = max(t, 0.0), i, True
                elif yi < -y_noise[i]:  # basic value increases toward its upper bound
                    if np.isfinite(self.hi[self.basis[i]]):
                        t = (self.xb[i] - self.hi[self.basis[i]]) / yi
                        if t < step - _TOL_RATIO or (
                            t < step + _TOL_RATIO
                            and (leave_row < 0 or self.basis[i] < self.basis[leave_row])
                        ):
                            step, leave_row, leave_at_lower = max(t, 0.0), i, False
            span = self.hi[enter] - self.lo[enter]
            bound_flip = np.isfinite(span) and span <= step
            if bound_flip:
                step = span
            if not np.isfinite(step):
                # an unblocked ray found with a stale inverse may be noise
                # (real blocking ratios misread as zeros); trust the verdict
                # only when it reappears on a freshly factorized basis
                if since_refactor > 1 and stale_retries <= self.m + self.N:
                    stale_retries += 1
                    self.refactor()
                    since_refactor = 0
                    continue
                return "unbounded"

            self.xb -= direction * step * y
            if bound_flip:
                self.nb_val[enter] = self.hi[enter] if direction > 0 else self.lo[enter]
                continue

            piv = y[leave_row]
            piv_floor = (_TINY_PIVOT / _TOL_RATIO) * y_noise[leave_row]
            if abs(piv) < piv_floor:
                # the ratio test ran on noisy numbers; rebuild the basis
                # inverse and redo the whole iteration from clean data
                if stale_retries > self.m + self.N:
                    raise NumericalBreakdownError(
                        f"pivot magnitude {abs(piv):.3e} below threshold"
                    )
                stale_retries += 1
                self.refactor()
                since_refactor = 0
                continue
            stale_retries = 0
            leaving = self.basis[leave_row]
            self.nb_val[leaving] = (
                self.lo[leaving] if leave_at_lower else self.hi[leaving]
            )
            self.in_basis[leaving] = False
            self.in_basis[enter] = True
            self.basis[leave_row] = enter
            self.xb[leave_row] = self.nb_val[enter] + direction * step

            # product-form update of the basis inverse
            self.binv[leave_row, :] /= piv
            col = y.copy()
            col[leave_row] = 0.0
            self.binv -= np.outer(col, self.binv[leave_row, :])


def solve_lp(p: LpProblem) -> LpSolution:
    """Solve a bounded-variable LP to proven optimality.

    Returns an LpSolution whose status is ``optimal``, ``infeasible`` or
    ``unbounded``.  Optimal solutions carry primal values, row duals and a
    strong-duality certificate checked by the caller's tests.
    """
    if np.any(p.lo > p.hi):
        return LpSolution(status="infeasible")
    t = _Tableau(p)
    if t.n_art:
        phase1_cost = np.zeros(t.N)
        phase1_cost[t.N - t.n_art:] = 1.0
        status = t.run(phase1_cost)
        if status != "optimal":
            raise NumericalBreakdownError("phase one terminated abnormally")
        infeas = phase1_cost @ t.values()
        if infeas > 1e-7:
            return LpSolution(status="infeasible", iterations=t.iterations)
        # freeze artificials at zero for phase two
        t.lo[t.N - t.n_art:] = 0.0
        t.hi[t.N - t.n_art:] = 0.0
        t.nb_val[t.N - t.n_art:] = 0.0
    status = t.run(t.cost)
    if status == "unbounded":
        return LpSolution(status="unbounded", iterations=t.iterations)
    # clean inverse for the certificates; a repair moves the iterate, so
    # optimality must then be re-proven from the repaired basis
    while t.refactor():
        status = t.run(t.cost)
        if status == "unbounded":
            return LpSolution(status="unbounded", iterations=t.iterations)
    values = t.values()
    pi, d = t.duals_and_reduced(t.cost)
    x = values[: t.n]
    return LpSolution(
        status="optimal",
        x=x,
        objective=float(p.c @ x),
        duals=pi.copy(),
        iterations=t.iterations,
        reduced_costs=d[: t.n].copy(),
    )
