"""Risk-weight sweeps, out-of-sample scoring, and Pareto filtering.

A frontier run trains siting decisions on a sampled scenario set (i.i.d.
or tail-stratified, under the true spatial model or an independence
ablation), then scores every decision against one common out-of-sample
draw from the dependent ground-truth model: average total cost, and the
average shed over the worst ``tau`` fraction of scenarios.  Common random
numbers across all evaluated decisions keep the comparisons tight.
"""

from __future__ import annotations

import collections
import logging
from dataclasses import dataclass, replace

import numpy as np

from .dispatch import DispatchEngine, SitingDecision
from .grid import GridInstance, realize_availability, realize_demands
from .saa import SolveConfig, solve_enumeration, solve_lshaped
from .weather import (
    SpatialModel,
    StratificationPlan,
    build_covariance,
    cholesky,
    sample_iid,
    sample_stratified,
)

__all__ = [
    "EvalConfig",
    "FrontierPoint",
    "TrainingSampler",
    "evaluate_oos",
    "frontier_csv_header",
    "frontier_to_csv",
    "pareto_filter",
    "sweep",
    "tail_average",
]

log = logging.getLogger(__name__)

LABELS = ("base", "bo_cvar", "bo_cvar_cond")
SAMPLER_KINDS = ("iid", "stratified")
SOLVERS = ("auto", "enumeration", "lshaped")

CSV_HEADER = ("label,dependence,beta,x_bits,in_exp_cost,in_cvar_shed,"
              "oos_avg_cost,oos_tail_shed,status")


@dataclass(frozen=True)
class EvalConfig:
    m: int = 100_000
    tau: float = 0.01
    seed: int = 987_001

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be at least 1")
        if not 0.0 < self.tau <= 1.0:
            raise ValueError("tau must lie in (0, 1]")


@dataclass(frozen=True)
class TrainingSampler:
    """How to draw the training scenario set for one sweep."""

    kind: str = "iid"
    model: SpatialModel = SpatialModel(5.0, 100.0)
    n: int = 300
    seed: int = 1
    plan: StratificationPlan | None = None

    def __post_init__(self):
        if self.kind not in SAMPLER_KINDS:
            raise ValueError(f"kind must be one of {SAMPLER_KINDS}")
        if self.kind == "stratified" and self.plan is None:
            raise ValueError("stratified sampling needs a plan")
        if self.kind == "iid" and self.n < 1:
            raise ValueError("n must be at least 1")

    @property
    def dependence(self) -> str:
        return ("independent" if self.model.kernel == "independent"
                else "dependent")

    def sample(self, instance: GridInstance):
        if self.kind == "stratified":
            return sample_stratified(instance, self.model, self.plan, self.seed)
        return sample_iid(instance, self.model, self.n, self.seed)


@dataclass
class FrontierPoint:
    beta: float
    x: SitingDecision | None
    in_sample: tuple | None  # (exp_cost, cvar_shed)
    oos: tuple | None        # (avg_cost, tail_shed)
    label: str
    dependence: str
    status: str = "ok"


def tail_average(values, tau: float) -> float:
    """Mean of the top ceil(tau * n) values."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("tail_average of an empty sample is undefined")
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must lie in (0, 1]")
    k = int(np.ceil(tau * arr.size))
    return float(np.sort(arr)[arr.size - k:].mean())


class _EvalSet:
    """One out-of-sample draw plus engines and per-decision memo."""

    def __init__(self, instance: GridInstance, model: SpatialModel,
                 cfg: EvalConfig):
        self.instance = instance
        rng = np.random.Generator(np.random.Philox(cfg.seed))
        low = cholesky(build_covariance(instance.buses, model))
        z = rng.standard_normal((cfg.m, instance.n_buses))
        temps = instance.mean_temps() + z @ low.T
        self.demands = realize_demands(instance, temps)
        self.avail = realize_availability(instance, temps)
        self.cost_engine = DispatchEngine(instance, "cost")
        self.shed_engine = DispatchEngine(instance, "min_shed")
        self._memo = {}

    def metrics(self, x: SitingDecision, threads: int):
        """(mean cost, cost standard error, sorted sheds) for one decision."""
        hit = self._memo.get(x.build)
        if hit is None:
            costs, _, _ = self.cost_engine.solve(
                x, self.demands, self.avail, threads=threads)
            sheds, _, _ = self.shed_engine.solve(
                x, self.demands, self.avail, threads=threads)
            se = (float(costs.std(ddof=1) / np.sqrt(costs.size))
                  if costs.size > 1 else 0.0)
            hit = (float(costs.mean()), se, np.sort(sheds))
            self._memo[x.build] = hit
        return hit


_EVAL_CACHE: collections.OrderedDict = collections.OrderedDict()
_EVAL_CACHE_LIMIT = 4


def _eval_set(instance, model, cfg) -> _EvalSet:
    key = (instance, model, cfg.seed, cfg.m)
    es = _EVAL_CACHE.get(key)
    if es is None:
        es = _EvalSet(instance, model, cfg)
        _EVAL_CACHE[key] = es
        while len(_EVAL_CACHE) > _EVAL_CACHE_LIMIT:
            _EVAL_CACHE.popitem(last=False)
    else:
        _EVAL_CACHE.move_to_end(key)
    return es


def evaluate_oos(x: SitingDecision, instance: GridInstance,
                 model: SpatialModel, cfg: EvalConfig,
                 threads: int = 1) -> tuple:
    """(avg_cost, tail_shed) on m common i.i.d. ground-truth draws."""
    es = _eval_set(instance, model, cfg)
    mean_cost, _, sheds_sorted = es.metrics(x, threads)
    avg_cost = instance.build_cost(x.build) + mean_cost
    k = int(np.ceil(cfg.tau * cfg.m))
    tail_shed = float(sheds_sorted[cfg.m - k:].mean())
    return avg_cost, tail_shed


def _point_label(sampler: TrainingSampler, solve_cfg: SolveConfig) -> str:
    if sampler.kind == "stratified":
        if solve_cfg.variant != "bo_cvar":
            raise ValueError(
                "stratified training pairs with the bo_cvar variant")
        return "bo_cvar_cond"
    return solve_cfg.variant


def sweep(instance: GridInstance, sampler: TrainingSampler, betas,
          solve_cfg: SolveConfig, eval_cfg: EvalConfig,
          truth_model: SpatialModel | None = None,
          solver: str = "auto", threads: int = 1) -> list:
    """One frontier curve: solve per swept value, score out-of-sample.

    For the risk-aware variants the swept value is the risk weight beta;
    the base variant has no risk term, so its trade-off knob is the shed
    penalty and the values are interpreted as penalty overrides.  A
    failed solve records an error-tagged point instead of aborting.
    """
    values = [float(v) for v in betas]
    if not values:
        raise ValueError("need at least one sweep value")
    if any(v < 0 for v in values):
        raise ValueError("sweep values must be nonnegative")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("sweep values must be strictly increasing")
    if solver not in SOLVERS:
        raise ValueError(f"solver must be one of {SOLVERS}")
    label = _point_label(sampler, solve_cfg)
    if truth_model is None:
        truth_model = replace(sampler.model, kernel="exponential")
    if sampler.seed == eval_cfg.seed:
        log.warning("training seed %d equals the evaluation seed; "
                    "out-of-sample scores will be optimistic", sampler.seed)

    training = sampler.sample(instance)
    if solver == "auto":
        solver = "enumeration" if instance.n_sites <= 12 else "lshaped"
    solve = solve_enumeration if solver == "enumeration" else solve_lshaped

    points = []
    for v in values:
        if solve_cfg.variant == "base":
            cfg_v = replace(solve_cfg, shed_penalty=v)
        else:
            cfg_v = replace(solve_cfg, beta=v)
        try:
            sol = solve(instance, training, cfg_v, threads)
        except Exception as exc:  # noqa: BLE001 - sweep must survive
            log.warning("sweep value %g failed: %s", v, exc)
            msg = str(exc) or exc.__class__.__name__
            tag = "error: " + msg.replace(",", ";").splitlines()[0]
            points.append(FrontierPoint(
                beta=v, x=None, in_sample=None, oos=None, label=label,
                dependence=sampler.dependence, status=tag))
            continue
        oos = evaluate_oos(sol.x, instance, truth_model, eval_cfg, threads)
        points.append(FrontierPoint(
            beta=v,
            x=sol.x,
            in_sample=(sol.exp_cost, sol.cvar_shed),
            oos=oos,
            label=label,
            dependence=sampler.dependence,
            status=sol.status if sol.status != "optimal" else "ok",
        ))
    return points


def _coords(point):
    return point.oos if hasattr(point, "oos") else tuple(point)


def pareto_filter(points) -> list:
    """Keep the points no other point beats in both coordinates."""
    items = list(points)
    keys = [_coords(p) for p in items]
    survivors = []
    for i, (p, k) in enumerate(zip(items, keys)):
        dominated = any(
            other[0] <= k[0] and other[1] <= k[1]
            and (other[0] < k[0] or other[1] < k[1])
            for j, other in enumerate(keys) if j != i
        )
        if not dominated:
            survivors.append(p)
    return survivors


def frontier_csv_header() -> str:
    return CSV_HEADER


def frontier_to_csv(points) -> str:
    """Frontier rows in the pinned column order, one line per point."""
    lines = [CSV_HEADER]
    for p in points:
        if p.x is None:
            cells = [p.label, p.dependence, repr(p.beta), "", "", "", "", "",
                     p.status]
        else:
            cells = [
                p.label,
                p.dependence,
                repr(p.beta),
                "".join(str(b) for b in p.x.build),
                repr(p.in_sample[0]),
                repr(p.in_sample[1]),
                repr(p.oos[0]),
                repr(p.oos[1]),
                p.status,
            ]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
