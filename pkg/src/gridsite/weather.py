"""Spatially correlated temperature scenarios with tail-focused stratification.

Per-bus temperature anomalies are jointly Gaussian with an exponential
distance kernel (or an independence ablation of it).  Scenario sets come in
two flavors:

* plain i.i.d. draws with uniform weights, and
* a three-stratum design that conditions on the spatial mean anomaly
  ``A = mean(T - mu)`` landing in its lower tail, middle bulk, or upper
  tail.  ``A`` is itself Gaussian, so the stratum quantiles and the field
  conditional on ``A`` are exact — no rejection sampling.  Weighting each
  scenario by (stratum probability / stratum count) keeps every weighted
  estimate unbiased for the unconditional distribution while spending most
  of the sample budget in the tails that drive risk.

All randomness flows through a counter-based Philox generator seeded once
per scenario set; scenario ``k`` consumes a fixed slice of the stream, so
results are reproducible regardless of how generation is parallelized.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .grid import GridInstance, realize_availability, realize_demands

__all__ = [
    "DegenerateIntervalError",
    "NotPositiveDefiniteError",
    "Scenario",
    "ScenarioSet",
    "SpatialModel",
    "StratificationPlan",
    "build_covariance",
    "cholesky",
    "sample_iid",
    "sample_stratified",
    "sample_truncated_normal",
    "scenarios_to_csv",
]

KERNELS = ("exponential", "independent")
STRATA = ("low", "mid", "high")


class NotPositiveDefiniteError(ValueError):
    """A Cholesky pivot came out nonpositive."""


class DegenerateIntervalError(ValueError):
    """A truncation interval carries no representable probability mass."""


@dataclass(frozen=True)
class SpatialModel:
    """Marginal scale and spatial dependence of the anomaly field."""

    sigma_c: float
    range_km: float
    kernel: str = "exponential"
    nugget: float = 1e-10

    def __post_init__(self):
        if not self.sigma_c > 0:
            raise ValueError("sigma_c must be positive")
        if not self.range_km > 0:
            raise ValueError("range_km must be positive")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}")
        if self.nugget < 0:
            raise ValueError("nugget must be nonnegative")


@dataclass(frozen=True)
class StratificationPlan:
    """Tail mass per extreme stratum and the per-stratum sample counts."""

    tail_prob: float = 0.01
    allocation: tuple = (100, 100, 100)

    def __post_init__(self):
        if not 0.0 < self.tail_prob < 0.5:
            raise ValueError("tail_prob must lie in (0, 0.5)")
        if len(self.allocation) != 3:
            raise ValueError("allocation needs (n_low, n_mid, n_high)")
        if any(int(n) != n or n < 1 for n in self.allocation):
            raise ValueError("allocation counts must be positive integers")
        object.__setattr__(self, "allocation", tuple(int(n) for n in self.allocation))

    @property
    def probabilities(self) -> tuple:
        return (self.tail_prob, 1.0 - 2.0 * self.tail_prob, self.tail_prob)


@dataclass(eq=False)
class Scenario:
    temps_c: np.ndarray
    weight: float
    demands_mw: np.ndarray
    avail_mw: np.ndarray
    stratum: str = "none"


@dataclass(eq=False)
class ScenarioSet:
    scenarios: list
    seed: int
    model: SpatialModel
    plan: StratificationPlan | None = None
    bus_ids: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    def _stacked(self, key, attr):
        if key not in self._cache:
            self._cache[key] = np.array([getattr(s, attr) for s in self.scenarios])
        return self._cache[key]

    @property
    def weights(self) -> np.ndarray:
        return self._stacked("weights", "weight")

    @property
    def temps(self) -> np.ndarray:
        return self._stacked("temps", "temps_c")

    @property
    def demands(self) -> np.ndarray:
        return self._stacked("demands", "demands_mw")

    @property
    def avail(self) -> np.ndarray:
        return self._stacked("avail", "avail_mw")


def build_covariance(buses, model: SpatialModel) -> np.ndarray:
    """Anomaly covariance over buses: exponential-decay or diagonal kernel."""
    xy = np.array([[b.x_km, b.y_km] for b in buses])
    n = len(buses)
    if model.kernel == "independent":
        cov = model.sigma_c**2 * np.eye(n)
    else:
        d = np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2))
        cov = model.sigma_c**2 * np.exp(-d / model.range_km)
    return cov + model.nugget * np.eye(n)


def cholesky(mat: np.ndarray) -> np.ndarray:
    """Lower-triangular L with L @ L.T = mat, or raise if not positive definite."""
    mat = np.asarray(mat, dtype=float)
    n = mat.shape[0]
    if mat.shape != (n, n) or not np.allclose(mat, mat.T, atol=1e-12 * max(1.0, np.abs(mat).max())):
        raise ValueError("matrix must be square and symmetric")
    low = np.zeros_like(mat)
    for j in range(n):
        pivot = mat[j, j] - low[j, :j] @ low[j, :j]
        if pivot <= 0.0:
            raise NotPositiveDefiniteError(
                f"leading minor {j + 1} has nonpositive pivot {pivot:.3e}"
            )
        low[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            low[j + 1:, j] = (mat[j + 1:, j] - low[j + 1:, :j] @ low[j, :j]) / low[j, j]
    return low


def sample_truncated_normal(mu, sigma, lo, hi, rng) -> float:
    """One draw from N(mu, sigma^2) restricted to [lo, hi], by inverse CDF."""
    if not lo < hi:
        raise ValueError("truncation interval must satisfy lo < hi")
    a = ndtr((lo - mu) / sigma) if np.isfinite(lo) else 0.0
    b = ndtr((hi - mu) / sigma) if np.isfinite(hi) else 1.0
    if not b - a > 0.0:
        raise DegenerateIntervalError(
            f"interval [{lo}, {hi}] has zero representable mass"
        )
    u = a + (b - a) * rng.random()
    u = min(max(u, np.nextafter(0.0, 1.0)), np.nextafter(1.0, 0.0))
    return float(mu + sigma * ndtri(u))


def _truncated_normal_batch(mu, sigma, lo, hi, n, rng) -> np.ndarray:
    if not lo < hi:
        raise ValueError("truncation interval must satisfy lo < hi")
    a = ndtr((lo - mu) / sigma) if np.isfinite(lo) else 0.0
    b = ndtr((hi - mu) / sigma) if np.isfinite(hi) else 1.0
    if not b - a > 0.0:
        raise DegenerateIntervalError(
            f"interval [{lo}, {hi}] has zero representable mass"
        )
    u = a + (b - a) * rng.random(n)
    u = np.clip(u, np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))
    return mu + sigma * ndtri(u)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(seed))


def _make_scenarios(instance, temps, weights, strata):
    demands = realize_demands(instance, temps)
    avail = realize_availability(instance, temps)
    return [
        Scenario(
            temps_c=temps[k],
            weight=float(weights[k]),
            demands_mw=demands[k],
            avail_mw=avail[k],
            stratum=strata[k],
        )
        for k in range(temps.shape[0])
    ]


def sample_iid(instance: GridInstance, model: SpatialModel, n: int, seed: int) -> ScenarioSet:
    """n equally weighted scenarios from the unconditional field."""
    if n < 1:
        raise ValueError("need at least one scenario")
    cov = build_covariance(instance.buses, model)
    low = cholesky(cov)
    rng = _rng(seed)
    z = rng.standard_normal((n, instance.n_buses))
    temps = instance.mean_temps() + z @ low.T
    weights = np.full(n, 1.0 / n)
    scen = _make_scenarios(instance, temps, weights, ["none"] * n)
    return ScenarioSet(
        scenarios=scen, seed=seed, model=model, plan=None,
        bus_ids=tuple(b.id for b in instance.buses),
    )


def _conditional_field(low, avg_vec, z, a_star):
    """Project i.i.d. normals z onto {avg anomaly == a_star}, exactly.

    The anomaly is ``low @ z`` and its spatial average is ``v @ z`` with
    ``v = low.T @ avg_vec``.  Replacing the component of z along v by the
    value that yields a_star gives a draw from the conditional Gaussian.
    """
    v = low.T @ avg_vec
    vv = float(v @ v)
    along = (z @ v) / vv
    return z + np.outer(np.asarray(a_star) / vv - along, v)


def sample_stratified(
    instance: GridInstance,
    model: SpatialModel,
    plan: StratificationPlan,
    seed: int,
) -> ScenarioSet:
    """Three-stratum tail-conditioned scenario set.

    Scenario order is low stratum, then mid, then high; each scenario's
    weight is its stratum probability divided by the stratum count, so the
    weighted set estimates unconditional expectations without bias.
    """
    cov = build_covariance(instance.buses, model)
    low = cholesky(cov)
    n_b = instance.n_buses
    avg_vec = np.full(n_b, 1.0 / n_b)
    sigma_a = float(np.sqrt(avg_vec @ cov @ avg_vec))
    q_low = sigma_a * ndtri(plan.tail_prob)
    q_high = sigma_a * ndtri(1.0 - plan.tail_prob)
    intervals = ((-np.inf, q_low), (q_low, q_high), (q_high, np.inf))

    rng = _rng(seed)
    blocks, weights, strata = [], [], []
    for name, prob, count, (lo_a, hi_a) in zip(
        STRATA, plan.probabilities, plan.allocation, intervals
    ):
        z = rng.standard_normal((count, n_b))
        a_star = _truncated_normal_batch(0.0, sigma_a, lo_a, hi_a, count, rng)
        z_cond = _conditional_field(low, avg_vec, z, a_star)
        blocks.append(instance.mean_temps() + z_cond @ low.T)
        weights.extend([prob / count] * count)
        strata.extend([name] * count)
    temps = np.vstack(blocks)
    scen = _make_scenarios(instance, temps, np.array(weights), strata)
    return ScenarioSet(
        scenarios=scen, seed=seed, model=model, plan=plan,
        bus_ids=tuple(b.id for b in instance.buses),
    )


def scenarios_to_csv(sset: ScenarioSet) -> str:
    """One row per (scenario, bus): scenario,stratum,weight,bus_id,temp_c,demand_mw."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["scenario", "stratum", "weight", "bus_id", "temp_c", "demand_mw"])
    for k, s in enumerate(sset.scenarios):
        for b, bus_id in enumerate(sset.bus_ids):
            writer.writerow(
                [k, s.stratum, repr(s.weight), bus_id,
                 repr(float(s.temps_c[b])), repr(float(s.demands_mw[b]))]
            )
    return out.getvalue()
