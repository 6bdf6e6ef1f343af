"""Sample-average siting: CVaR risk shaping, enumeration, Benders.

The first-stage problem picks a binary build vector x over candidate sites
to minimize

    build_cost(x) + E[second-stage cost] + beta * CVaR_alpha(scenario shed)

over a weighted scenario set.  ``variant="base"`` drops the risk term
(beta must be 0); ``variant="bo_cvar"`` keeps it.  Risk-aware solves over a
tail-stratified scenario set need no special casing here — the weights
already encode the conditioning.

Two solvers share the evaluation machinery: exhaustive enumeration (the
oracle, exact for up to 16 sites) and an L-shaped method that alternates
between a cut-based master — solved by branch and bound on x with LP
relaxations from the ``lp`` module — and scenario dispatches that either
confirm the master's guess or return violated optimality cuts.  Relatively
complete recourse (shed arcs) means only optimality cuts ever arise.
"""

from __future__ import annotations

import heapq
import itertools
import sys
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dispatch import DispatchEngine, SitingDecision
from .grid import GridInstance
from .lp import LpProblem, solve_lp

__all__ = [
    "Cut",
    "FirstStageValue",
    "Solution",
    "SolveConfig",
    "TooManySitesError",
    "cvar",
    "evaluate_first_stage",
    "solve_enumeration",
    "solve_lshaped",
]

VARIANTS = ("base", "bo_cvar")
ENUMERATION_SITE_CAP = 16
MAX_SHED_CUTS_PER_ITER = 64


class TooManySitesError(ValueError):
    """Enumeration over 2^J decisions was asked for with J too large."""


@dataclass(frozen=True)
class SolveConfig:
    variant: str = "base"
    alpha: float = 0.99
    beta: float = 0.0
    shed_penalty: float | None = None
    gap_tol: float = 1e-6
    max_iters: int = 200
    verbose: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta < 0.0:
            raise ValueError("beta must be nonnegative")
        if self.variant == "base" and self.beta != 0.0:
            raise ValueError("the base variant has no risk term; beta must be 0")
        if not self.gap_tol > 0.0:
            raise ValueError("gap_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class Cut:
    kind: str        # "cost" (aggregated) | "shed" (per scenario)
    scenario: int    # -1 for the aggregated cost cut
    constant: float
    coeffs: tuple


@dataclass(eq=False)
class Solution:
    x: SitingDecision
    build_cost: float
    exp_cost: float
    cvar_shed: float
    scalarized: float
    lower_bound: float
    iters: int
    cuts_added: int
    status: str = "optimal"  # optimal | iteration_limit
    bound_trace: tuple = ()  # (lower bound, incumbent) per iteration


class FirstStageValue(NamedTuple):
    exp_cost: float
    sheds: np.ndarray
    cvar_shed: float
    scalarized: float


def cvar(values_with_weights, alpha: float) -> float:
    """CVaR_alpha: mean of the worst (1 - alpha) probability mass.

    Computed by sorting descending and averaging the top tail with
    fractional inclusion of the boundary atom; equals the
    minimization form  min_eta  eta + E[max(0, v - eta)]/(1 - alpha).
    """
    pairs = list(values_with_weights)
    if not pairs:
        raise ValueError("cvar of an empty sample is undefined")
    values = np.array([p[0] for p in pairs], dtype=float)
    weights = np.array([p[1] for p in pairs], dtype=float)
    return _cvar_arrays(values, weights, alpha)


def _cvar_arrays(values: np.ndarray, weights: np.ndarray, alpha: float) -> float:
    if values.size == 0:
        raise ValueError("cvar of an empty sample is undefined")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    total = float(weights.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError("weights must sum to 1")
    tail = 1.0 - alpha
    order = np.argsort(-values, kind="stable")
    acc = 0.0
    cum = 0.0
    for idx in order:
        take = min(float(weights[idx]), tail - cum)
        if take <= 0.0:
            break
        acc += take * float(values[idx])
        cum += take
    return acc / cum if cum > 0.0 else float(values[order[0]])


class _Evaluator:
    """Batched, memoized first-stage evaluation over a fixed scenario set."""

    def __init__(self, instance: GridInstance, sset, cfg: SolveConfig,
                 threads: int = 1):
        self.instance = instance
        self.cfg = cfg
        self.threads = threads
        self.weights = sset.weights
        self.demands = sset.demands
        self.avail = sset.avail
        self.cost_engine = DispatchEngine(instance, "cost", cfg.shed_penalty)
        self.shed_engine = DispatchEngine(instance, "min_shed")
        self._memo = {}

    def value(self, x: SitingDecision, want_cuts: bool = False):
        key = x.build
        hit = self._memo.get(key)
        if hit is not None and (not want_cuts or hit[1] is not None):
            return hit
        costs, _, cost_cuts = self.cost_engine.solve(
            x, self.demands, self.avail, want_cuts, self.threads)
        sheds, _, shed_cuts = self.shed_engine.solve(
            x, self.demands, self.avail, want_cuts, self.threads)
        exp_cost = self.instance.build_cost(x.build) + float(costs @ self.weights)
        cvar_shed = _cvar_arrays(sheds, self.weights, self.cfg.alpha)
        scalarized = exp_cost + self.cfg.beta * cvar_shed
        val = FirstStageValue(exp_cost, sheds, cvar_shed, scalarized)
        cuts = None
        if want_cuts:
            cuts = (costs, cost_cuts, shed_cuts)
        self._memo[key] = (val, cuts)
        return val, cuts


def evaluate_first_stage(x: SitingDecision, scenarios, instance: GridInstance,
                         cfg: SolveConfig) -> FirstStageValue:
    """(exp_cost, per-scenario sheds, cvar_shed, scalarized) at a decision."""
    val, _ = _Evaluator(instance, scenarios, cfg).value(x)
    return val


def solve_enumeration(instance: GridInstance, scenarios, cfg: SolveConfig,
                      threads: int = 1) -> Solution:
    """Exact optimum by evaluating every decision; the oracle solver."""
    n_sites = instance.n_sites
    if n_sites > ENUMERATION_SITE_CAP:
        raise TooManySitesError(
            f"{n_sites} sites implies 2^{n_sites} evaluations; "
            f"cap is {ENUMERATION_SITE_CAP}"
        )
    ev = _Evaluator(instance, scenarios, cfg, threads)
    best_x, best = None, None
    for bits in itertools.product((0, 1), repeat=n_sites):
        x = SitingDecision(bits)
        val, _ = ev.value(x)
        if best is None or val.scalarized < best.scalarized - 1e-12:
            best_x, best = x, val
    return Solution(
        x=best_x,
        build_cost=instance.build_cost(best_x.build),
        exp_cost=best.exp_cost,
        cvar_shed=best.cvar_shed,
        scalarized=best.scalarized,
        lower_bound=best.scalarized,
        iters=2 ** n_sites,
        cuts_added=0,
        status="optimal",
    )


# ----------------------------------------------------------------- master

class _Master:
    """Cut-based relaxation of the siting problem, solved by B&B on x.

    Columns: x_0..x_{J-1}, theta, then (for beta > 0) eta and one excess
    column per scenario that owns at least one shed cut.  theta and eta
    start bounded below by 0, which is valid because second-stage costs
    and sheds are nonnegative; without these bounds the first master
    iteration would be unbounded.
    """

    def __init__(self, instance, cfg, weights):
        self.J = instance.n_sites
        self.build = np.array([g.build_cost for g in instance.candidates])
        self.cfg = cfg
        self.weights = weights
        self.cost_cuts = []            # list[Cut], aggregated
        self.shed_cuts = {}            # scenario -> list[Cut]
        self._seen = set()
        self.n_cuts = 0

    def add_cost_cut(self, constant, coeffs):
        cut = Cut("cost", -1, float(constant), tuple(float(c) for c in coeffs))
        key = ("cost", cut.constant, cut.coeffs)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.cost_cuts.append(cut)
        self.n_cuts += 1
        return True

    def add_shed_cut(self, scenario, constant, coeffs):
        cut = Cut("shed", scenario, float(constant),
                  tuple(float(c) for c in coeffs))
        key = ("shed", scenario, cut.constant, cut.coeffs)
        if key in self._seen:
            return False
        self._seen.add(key)
        self.shed_cuts.setdefault(scenario, []).append(cut)
        self.n_cuts += 1
        return True

    def _cut_scale(self):
        """Largest cut magnitude: the natural unit for theta, eta and e_s.

        Expressing the value columns in this unit keeps every constraint
        entry and right-hand side within [-1, 1] after row scaling, which
        the dense simplex needs to stay well conditioned (cut data spans
        many orders of magnitude: penalty times capacity).
        """
        kappa = 1.0
        all_cuts = list(self.cost_cuts)
        for cuts in self.shed_cuts.values():
            all_cuts.extend(cuts)
        for cut in all_cuts:
            kappa = max(kappa, abs(cut.constant))
            if cut.coeffs:
                kappa = max(kappa, max(abs(a) for a in cut.coeffs))
        return kappa

    def _lp(self, fix_lo, fix_hi):
        J, cfg = self.J, self.cfg
        risk = cfg.beta > 0.0
        shed_scen = sorted(self.shed_cuts) if risk else []
        col_of_e = {s: J + 2 + i for i, s in enumerate(shed_scen)}
        n_cols = J + 1 + (1 + len(shed_scen) if risk else 0)
        kappa = self._cut_scale()

        # value columns hold theta/kappa, eta/kappa, e_s/kappa; their
        # objective coefficients carry the kappa back, so objective values
        # need no unscaling
        c = np.zeros(n_cols)
        c[:J] = self.build
        c[J] = kappa  # theta
        if risk:
            c[J + 1] = cfg.beta * kappa  # eta
            for s in shed_scen:
                c[col_of_e[s]] = (cfg.beta * self.weights[s]
                                  / (1.0 - cfg.alpha) * kappa)

        lo = np.zeros(n_cols)
        hi = np.full(n_cols, np.inf)
        lo[:J] = fix_lo
        hi[:J] = fix_hi

        rows, senses, rhs = [], [], []

        def add_row(row, const):
            scale = max(1.0, float(np.abs(row).max()))
            rows.append(row / scale)
            senses.append(">=")
            rhs.append(const / scale)

        for cut in self.cost_cuts:
            row = np.zeros(n_cols)
            row[:J] = -np.array(cut.coeffs)
            row[J] = kappa
            add_row(row, cut.constant)
        if risk:
            for s in shed_scen:
                for cut in self.shed_cuts[s]:
                    row = np.zeros(n_cols)
                    row[:J] = -np.array(cut.coeffs)
                    row[J + 1] = kappa
                    row[col_of_e[s]] = kappa
                    add_row(row, cut.constant)
        if not rows:
            rows = [np.zeros(n_cols)]
            senses = ["<="]
            rhs = [1.0]
        return LpProblem(c=np.array(c), A=np.array(rows), senses=senses,
                         b=np.array(rhs), lo=lo, hi=hi)

    def solve(self):
        """Exact MILP optimum over binary x: best-bound B&B, branching on
        the most fractional coordinate, node relaxations via solve_lp."""
        J = self.J
        root_lo, root_hi = np.zeros(J), np.ones(J)
        sol = solve_lp(self._lp(root_lo, root_hi))
        if sol.status != "optimal":
            raise RuntimeError(f"master relaxation came back {sol.status}")
        counter = itertools.count()
        heap = [(sol.objective, next(counter), root_lo, root_hi, sol, 0)]
        best_val, best_x = np.inf, None
        max_depth = 2 * J
        while heap:
            bound, _, lo, hi, sol, depth = heapq.heappop(heap)
            if bound >= best_val - 1e-12:
                break  # best-bound order: nothing left can improve
            xf = sol.x[:J]
            frac = np.abs(xf - np.round(xf))
            if frac.size == 0 or frac.max() <= 1e-7:
                if sol.objective < best_val - 1e-12:
                    best_val = sol.objective
                    best_x = tuple(int(round(v)) for v in xf)
                continue
            if depth >= max_depth:
                raise RuntimeError("branch-and-bound exceeded its depth cap")
            j = int(np.argmax(frac))
            for fixed in (0.0, 1.0):
                clo, chi = lo.copy(), hi.copy()
                clo[j] = chi[j] = fixed
                child = solve_lp(self._lp(clo, chi))
                if child.status != "optimal":
                    continue  # infeasible branch
                if child.objective < best_val - 1e-12:
                    heapq.heappush(heap, (child.objective, next(counter),
                                          clo, chi, child, depth + 1))
        if best_x is None:
            raise RuntimeError("branch-and-bound found no integral point")
        return SitingDecision(best_x), float(best_val)


def solve_lshaped(instance: GridInstance, scenarios, cfg: SolveConfig,
                  threads: int = 1) -> Solution:
    """Benders-style exact solve of the scalarized siting problem.

    Each iteration solves the cut master to optimality over binary x,
    evaluates the true scenario costs and sheds at the master's choice,
    and either proves the gap closed or adds violated optimality cuts
    (one aggregated expected-cost cut; per-scenario shed cuts, capped at
    the most violated per iteration).
    """
    ev = _Evaluator(instance, scenarios, cfg, threads)
    weights = ev.weights
    master = _Master(instance, cfg, weights)
    risk = cfg.beta > 0.0

    best_eval, best_x = None, None
    incumbent = np.inf
    lb = -np.inf
    trace = []
    status = "iteration_limit"
    iters = 0
    for it in range(1, cfg.max_iters + 1):
        iters = it
        x_hat, master_val = master.solve()
        lb = max(lb, master_val)
        val, cuts = ev.value(x_hat, want_cuts=True)
        if val.scalarized < incumbent - 1e-12:
            incumbent = val.scalarized
            best_eval, best_x = val, x_hat
        gap = (incumbent - lb) / max(1.0, abs(incumbent))
        trace.append((lb, incumbent))
        if cfg.verbose:
            print(
                f"iter {it}, lb {lb:.9g}, ub {incumbent:.9g}, "
                f"gap {max(gap, 0.0):.3g}, cuts_total {master.n_cuts}",
                file=sys.stderr,
            )
        if gap <= cfg.gap_tol:
            status = "optimal"
            break

        costs, cost_cuts, shed_cuts = cuts
        x_arr = x_hat.as_array()
        added = False
        # aggregated expected-cost cut: theta >= sum_s w_s (const_s + a_s x)
        agg_coeffs = weights @ cost_cuts
        agg_const = float(weights @ (costs - cost_cuts @ x_arr))
        added |= master.add_cost_cut(agg_const, agg_coeffs)
        if risk:
            consts = val.sheds - shed_cuts @ x_arr
            # violation of e_s >= const_s + a_s x - eta at the master's
            # optimal (eta, e) is what matters, but any scenario whose cut
            # is not yet implied can be added; pick the deepest ones.
            depth = np.array([
                _shed_cut_slack(master, s, consts[s], shed_cuts[s], x_arr)
                for s in range(len(weights))
            ])
            order = np.argsort(-depth, kind="stable")
            for s in order[:MAX_SHED_CUTS_PER_ITER]:
                if depth[s] > 1e-9:
                    added |= master.add_shed_cut(int(s), consts[s], shed_cuts[s])
        if not added:
            # nothing violated: the master already proves x_hat's value
            status = "optimal"
            lb = max(lb, min(master_val, incumbent))
            break

    if best_x is None:  # pragma: no cover - defensive
        raise RuntimeError("no incumbent produced")
    return Solution(
        x=best_x,
        build_cost=instance.build_cost(best_x.build),
        exp_cost=best_eval.exp_cost,
        cvar_shed=best_eval.cvar_shed,
        scalarized=best_eval.scalarized,
        lower_bound=min(lb, best_eval.scalarized),
        iters=iters,
        cuts_added=master.n_cuts,
        status=status,
        bound_trace=tuple(trace),
    )


def _shed_cut_slack(master, scenario, const, coeffs, x_arr):
    """How far the proposed cut rises above the ones already stored."""
    proposed = const + float(coeffs @ x_arr)
    existing = master.shed_cuts.get(scenario, ())
    if not existing:
        return proposed  # implied value so far is e_s = 0, eta >= 0
    implied = max(c.constant + float(np.array(c.coeffs) @ x_arr)
                  for c in existing)
    return proposed - implied
