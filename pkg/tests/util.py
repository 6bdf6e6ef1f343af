"""Shared builders for randomized test instances and scenarios."""

import numpy as np

from gridsite.grid import (
    Bus,
    GeneratorSpec,
    GridInstance,
    Line,
    ResponseParams,
    realize_availability,
    realize_demands,
)
from gridsite.weather import Scenario


def random_grid(rng, n_buses=None, n_sites=2, n_existing=None, tight=False):
    """A small random connected instance.

    ``tight=True`` sizes existing capacity below peak demand so candidate
    sites and shed arcs actually matter.
    """
    n_b = int(rng.integers(2, 7)) if n_buses is None else n_buses
    buses = []
    for i in range(n_b):
        buses.append(Bus(
            id=f"b{i}",
            x_km=float(np.round(rng.uniform(0, 100), 1)),
            y_km=float(np.round(rng.uniform(0, 100), 1)),
            base_demand_mw=float(np.round(rng.uniform(20, 60), 1)),
            mean_temp_c=float(np.round(rng.uniform(18, 23), 1)),
        ))
    total_demand = sum(b.base_demand_mw for b in buses)

    lines = []
    for i in range(1, n_b):  # random tree keeps the network connected
        j = int(rng.integers(0, i))
        lines.append(Line(f"b{j}", f"b{i}",
                          float(np.round(rng.uniform(15, 70), 1))))
    for _ in range(int(rng.integers(0, n_b))):
        i, j = rng.choice(n_b, size=2, replace=False)
        if not any({ln.from_bus, ln.to_bus} == {f"b{i}", f"b{j}"} for ln in lines):
            lines.append(Line(f"b{int(i)}", f"b{int(j)}",
                              float(np.round(rng.uniform(15, 70), 1))))

    gens = []
    n_e = int(rng.integers(1, 4)) if n_existing is None else n_existing
    frac = (0.55, 0.85) if tight else (0.7, 1.3)
    for k in range(n_e):
        gens.append(GeneratorSpec(
            id=f"g{k}",
            bus=f"b{int(rng.integers(0, n_b))}",
            capacity_mw=float(np.round(
                rng.uniform(*frac) * total_demand / n_e, 1)),
            marginal_cost=float(np.round(rng.uniform(1, 8), 2)),
            kind="existing",
        ))
    for k in range(n_sites):
        gens.append(GeneratorSpec(
            id=f"c{k}",
            bus=f"b{int(rng.integers(0, n_b))}",
            capacity_mw=float(np.round(rng.uniform(10, 45), 1)),
            marginal_cost=float(np.round(rng.uniform(1, 10), 2)),
            kind="candidate",
            build_cost=float(np.round(rng.uniform(5, 60), 1)),
        ))

    response = ResponseParams(
        comfort_lo_c=15.0,
        comfort_hi_c=25.0,
        demand_slope_per_c=float(np.round(rng.uniform(0.01, 0.03), 3)),
        derate_start_c=5.0,
        derate_full_c=15.0,
        derate_max_frac=float(np.round(rng.uniform(0.2, 0.5), 2)),
        shed_penalty=float(np.round(rng.uniform(150, 600), 0)),
    )
    return GridInstance(buses=tuple(buses), lines=tuple(lines),
                        generators=tuple(gens), response=response)


def scenario_at(instance, temps):
    """Realize one scenario from explicit per-bus temperatures."""
    temps = np.asarray(temps, dtype=float)
    return Scenario(
        temps_c=temps,
        weight=1.0,
        demands_mw=realize_demands(instance, temps),
        avail_mw=realize_availability(instance, temps),
        stratum="none",
    )


def random_scenario(rng, instance, spread=8.0):
    temps = instance.mean_temps() + rng.normal(0.0, spread, instance.n_buses)
    return scenario_at(instance, temps)


def random_scenario_set(rng, instance, n, spread=8.0, weighted=False):
    """A scenario set with equal or randomized (normalized) weights."""
    from gridsite.weather import ScenarioSet, SpatialModel
    from dataclasses import replace

    scens = [random_scenario(rng, instance, spread) for _ in range(n)]
    if weighted:
        w = rng.uniform(0.2, 1.0, n)
    else:
        w = np.ones(n)
    w = w / w.sum()
    scens = [replace(s, weight=float(wi)) for s, wi in zip(scens, w)]
    model = SpatialModel(sigma_c=spread, range_km=100.0)
    return ScenarioSet(scenarios=scens, seed=0, model=model,
                       bus_ids=tuple(b.id for b in instance.buses))


def solver_disagreements(n_instances, seed, max_buses=8, max_sites=8,
                         max_scenarios=20):
    """Run enumeration vs the L-shaped solver on random instances.

    Returns a list of (relative objective gap, absolute cvar gap,
    lshaped Solution) tuples, one per instance, cycling through plain and
    risk-weighted configurations.
    """
    from gridsite.saa import SolveConfig, solve_enumeration, solve_lshaped

    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_instances):
        inst = random_grid(
            rng,
            n_buses=int(rng.integers(2, max_buses + 1)),
            n_sites=int(rng.integers(1, max_sites + 1)),
            tight=bool(rng.integers(0, 2)),
        )
        sset = random_scenario_set(
            rng, inst, int(rng.integers(2, max_scenarios + 1)),
            weighted=bool(rng.integers(0, 2)))
        if i % 3 == 0:
            cfg = SolveConfig(variant="base")
        else:
            cfg = SolveConfig(
                variant="bo_cvar",
                alpha=float(rng.choice([0.8, 0.9, 0.95])),
                beta=float(np.round(rng.uniform(0.5, 40.0), 2)),
            )
        exact = solve_enumeration(inst, sset, cfg)
        iterative = solve_lshaped(inst, sset, cfg)
        rel = abs(iterative.scalarized - exact.scalarized) / max(
            1.0, abs(exact.scalarized))
        dcvar = abs(iterative.cvar_shed - exact.cvar_shed)
        out.append((rel, dcvar, iterative))
    return out
