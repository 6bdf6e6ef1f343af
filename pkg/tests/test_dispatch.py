"""Dispatch networks, flow optima, sensitivities, and the batch engine."""

import itertools

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gridsite.dispatch import (
    Arc,
    DispatchEngine,
    DispatchError,
    FlowNetwork,
    SitingDecision,
    build_network,
    cut_coefficients,
    dispatch,
    network_to_text,
    solve_min_cost_flow,
)
from gridsite.grid import Bus, GeneratorSpec, GridInstance, Line, ResponseParams
from gridsite.lp import EQ, LpProblem, solve_lp
from tests.util import random_grid, random_scenario, scenario_at

RESPONSE_100 = ResponseParams(
    comfort_lo_c=15.0, comfort_hi_c=25.0, demand_slope_per_c=0.02,
    derate_start_c=5.0, derate_full_c=15.0, derate_max_frac=0.4,
    shed_penalty=100.0,
)


def one_bus_instance(demand=10.0, cap=15.0, marginal=2.0):
    return GridInstance(
        buses=(Bus("b1", 0.0, 0.0, demand, 20.0),),
        lines=(),
        generators=(GeneratorSpec("g1", "b1", cap, marginal, "existing"),),
        response=RESPONSE_100,
    )


def line_bottleneck_instance():
    return GridInstance(
        buses=(Bus("b1", 0.0, 0.0, 0.0, 20.0), Bus("b2", 10.0, 0.0, 5.0, 20.0)),
        lines=(Line("b1", "b2", 3.0),),
        generators=(GeneratorSpec("g1", "b1", 20.0, 1.0, "existing"),),
        response=RESPONSE_100,
    )


def certify_flow(net, sol, tol=1e-9):
    """Conservation, capacity, complementary slackness, strong duality."""
    flows, pots = sol.flows_mw, sol.potentials
    inflow = np.zeros(net.n_nodes)
    outflow = np.zeros(net.n_nodes)
    for a, arc in enumerate(net.arcs):
        assert -tol <= flows[a] <= arc.capacity_mw + tol
        outflow[arc.tail] += flows[a]
        inflow[arc.head] += flows[a]
    for v in range(net.n_nodes):
        if v == net.source:
            continue
        if v == net.sink:
            assert abs(inflow[v] - net.need_mw) <= 1e-6
        else:
            assert abs(inflow[v] - outflow[v]) <= 1e-6
    dual = net.need_mw * (pots[net.sink] - pots[net.source])
    for a, arc in enumerate(net.arcs):
        rc = arc.cost + pots[arc.tail] - pots[arc.head]
        if flows[a] < arc.capacity_mw - 1e-9:
            assert rc >= -1e-9, f"arc {a} unsaturated but rc={rc}"
        if flows[a] > 1e-9:
            assert rc <= 1e-9, f"arc {a} carries flow but rc={rc}"
        dual -= arc.capacity_mw * max(0.0, -rc)
    assert abs(dual - sol.objective) <= 1e-6 * max(1.0, abs(sol.objective))


def lp_objective(net):
    """The same arc-flow problem through the generic simplex."""
    n_arcs = len(net.arcs)
    rows, senses, rhs = [], [], []
    for v in range(net.n_nodes):
        if v == net.source:
            continue
        row = np.zeros(n_arcs)
        for a, arc in enumerate(net.arcs):
            if arc.head == v:
                row[a] += 1.0
            if arc.tail == v:
                row[a] -= 1.0
        rows.append(row)
        senses.append(EQ)
        rhs.append(net.need_mw if v == net.sink else 0.0)
    p = LpProblem(
        c=np.array([a.cost for a in net.arcs]),
        A=np.array(rows),
        senses=senses,
        b=np.array(rhs),
        lo=np.zeros(n_arcs),
        hi=np.array([a.capacity_mw for a in net.arcs]),
    )
    sol = solve_lp(p)
    assert sol.status == "optimal"
    return sol.objective


# ------------------------------------------------------------ construction

def test_network_arc_census_one_bus():
    inst = one_bus_instance()
    net = build_network(inst, SitingDecision(()), scenario_at(inst, [20.0]))
    supply = [a for a in net.arcs if a.role == "supply"]
    shed = [a for a in net.arcs if a.role == "shed"]
    assert len(supply) == 1 and supply[0].capacity_mw == 15.0
    assert len(shed) == 1 and shed[0].capacity_mw == 10.0
    assert net.need_mw == 10.0


def test_unbuilt_candidate_has_zero_capacity_arc():
    rng = np.random.default_rng(0)
    inst = random_grid(rng, n_sites=2)
    s = random_scenario(rng, inst)
    net = build_network(inst, SitingDecision((0, 1)), s)
    cand_arcs = [a for a in net.arcs if a.role == "supply"
                 and inst.generators[a.ref].kind == "candidate"]
    assert cand_arcs[0].capacity_mw == 0.0
    assert cand_arcs[1].capacity_mw > 0.0


def test_min_shed_costs_are_unit_on_shed_arcs_only():
    rng = np.random.default_rng(1)
    inst = random_grid(rng)
    net = build_network(inst, SitingDecision((0,) * inst.n_sites),
                        random_scenario(rng, inst), objective="min_shed")
    for a in net.arcs:
        assert a.cost == (1.0 if a.role == "shed" else 0.0)


def test_decision_length_mismatch_raises():
    inst = one_bus_instance()
    with pytest.raises(DispatchError, match="candidate sites"):
        build_network(inst, SitingDecision((1,)), scenario_at(inst, [20.0]))
    with pytest.raises(DispatchError):
        SitingDecision((0, 2))


def test_network_text_dump_lists_every_arc():
    inst = line_bottleneck_instance()
    net = build_network(inst, SitingDecision(()), scenario_at(inst, [20.0, 20.0]))
    text = network_to_text(net)
    assert text.count("\n") == len(net.arcs) + 1
    assert "line[0] b1 -> b2" in text


# ------------------------------------------------------------- flow solver

def test_single_arc_network():
    net = FlowNetwork(
        n_nodes=2, source=0, sink=1,
        arcs=(Arc(0, 1, 5.0, 2.0, "supply", 0),),
        node_labels=("source", "sink"), need_mw=5.0,
    )
    sol = solve_min_cost_flow(net)
    assert_allclose(sol.flows_mw, [5.0])
    assert_allclose(sol.objective, 10.0)
    certify_flow(net, sol)


def test_parallel_arcs_cheapest_first():
    net = FlowNetwork(
        n_nodes=2, source=0, sink=1,
        arcs=(Arc(0, 1, 4.0, 1.0, "supply", 0), Arc(0, 1, 10.0, 3.0, "supply", 1)),
        node_labels=("source", "sink"), need_mw=6.0,
    )
    sol = solve_min_cost_flow(net)
    assert_allclose(sol.flows_mw, [4.0, 2.0])
    assert_allclose(sol.objective, 10.0)
    certify_flow(net, sol)


def test_flow_matches_simplex_on_random_networks():
    rng = np.random.default_rng(42)
    for t in range(20):
        inst = random_grid(rng, n_sites=int(rng.integers(0, 3)),
                           tight=bool(t % 2))
        x = SitingDecision(tuple(rng.integers(0, 2, inst.n_sites)))
        s = random_scenario(rng, inst)
        objective = "cost" if t % 3 else "min_shed"
        net = build_network(inst, x, s, objective)
        sol = solve_min_cost_flow(net)
        certify_flow(net, sol)
        ref = lp_objective(net)
        assert abs(sol.objective - ref) <= 1e-6 * max(1.0, abs(ref)), f"case {t}"


# --------------------------------------------------------------- dispatch

def test_dispatch_meets_demand_with_slack_capacity():
    inst = one_bus_instance(demand=10.0, cap=15.0, marginal=2.0)
    res = dispatch(inst, SitingDecision(()), scenario_at(inst, [20.0]))
    assert_allclose(res.objective, 20.0)
    assert_allclose(res.total_shed_mw, 0.0)
    assert_allclose(res.gen_mw, [10.0])


def test_dispatch_sheds_when_capacity_short():
    inst = one_bus_instance(demand=10.0, cap=6.0, marginal=2.0)
    res = dispatch(inst, SitingDecision(()), scenario_at(inst, [20.0]))
    assert_allclose(res.objective, 412.0)
    assert_allclose(res.total_shed_mw, 4.0)


def test_dispatch_line_bottleneck():
    inst = line_bottleneck_instance()
    res = dispatch(inst, SitingDecision(()), scenario_at(inst, [20.0, 20.0]))
    assert_allclose(res.objective, 203.0)
    assert_allclose(res.total_shed_mw, 2.0)
    assert_allclose(res.shed_mw, [0.0, 2.0])
    assert_allclose(res.gen_mw, [3.0])


def test_min_shed_equals_shed_and_ignores_marginal_costs():
    rng = np.random.default_rng(3)
    for _ in range(10):
        inst = random_grid(rng, tight=True)
        x = SitingDecision((0,) * inst.n_sites)
        s = random_scenario(rng, inst, spread=12.0)
        res = dispatch(inst, x, s, objective="min_shed")
        assert_allclose(res.objective, res.total_shed_mw, atol=1e-9)
        repriced = GridInstance(
            buses=inst.buses,
            lines=inst.lines,
            generators=tuple(
                GeneratorSpec(g.id, g.bus, g.capacity_mw,
                              g.marginal_cost * 7.5 + 1.0, g.kind, g.build_cost)
                for g in inst.generators
            ),
            response=inst.response,
        )
        res2 = dispatch(repriced, x, s, objective="min_shed")
        assert_allclose(res2.objective, res.objective, atol=1e-9)


def test_dispatch_monotone_in_built_capacity():
    rng = np.random.default_rng(4)
    for _ in range(15):
        inst = random_grid(rng, n_sites=3, tight=True)
        s = random_scenario(rng, inst, spread=10.0)
        for objective in ("cost", "min_shed"):
            vals = {}
            for bits in itertools.product((0, 1), repeat=3):
                vals[bits] = dispatch(inst, SitingDecision(bits), s,
                                      objective).objective
            for a in vals:
                for b in vals:
                    if all(ai <= bi for ai, bi in zip(a, b)):
                        assert vals[b] <= vals[a] + 1e-9


def test_conservation_at_every_bus():
    rng = np.random.default_rng(5)
    inst = random_grid(rng, n_buses=6, n_sites=2, tight=True)
    x = SitingDecision((1, 0))
    s = random_scenario(rng, inst, spread=11.0)
    res = dispatch(inst, x, s)
    net = res.network
    certify_flow(net, type("S", (), {"flows_mw": res.flows_mw,
                                     "potentials": res.potentials,
                                     "objective": res.objective})())
    # explicit per-bus balance: generation in + shed + line in = demand + line out
    for i, bus in enumerate(inst.buses):
        node = 1 + i
        into = sum(res.flows_mw[a] for a, arc in enumerate(net.arcs)
                   if arc.head == node)
        out = sum(res.flows_mw[a] for a, arc in enumerate(net.arcs)
                  if arc.tail == node)
        assert abs(into - out) <= 1e-6


# ------------------------------------------------------------------- cuts

def test_unsaturated_candidates_give_zero_coefficients():
    # huge existing capacity: the candidate arc never binds at x=1
    inst = GridInstance(
        buses=(Bus("b1", 0.0, 0.0, 10.0, 20.0),),
        lines=(),
        generators=(
            GeneratorSpec("g1", "b1", 50.0, 1.0, "existing"),
            GeneratorSpec("c1", "b1", 30.0, 2.0, "candidate", build_cost=5.0),
        ),
        response=RESPONSE_100,
    )
    x = SitingDecision((1,))
    res = dispatch(inst, x, scenario_at(inst, [20.0]))
    assert_allclose(res.sensitivities, [0.0])
    const, coeffs = cut_coefficients(res, inst, x)
    assert_allclose(coeffs, [0.0])
    assert_allclose(const, res.objective)


def test_single_site_cut_bounds_both_corners():
    rng = np.random.default_rng(6)
    for _ in range(20):
        inst = random_grid(rng, n_sites=1, tight=True)
        s = random_scenario(rng, inst, spread=10.0)
        for objective in ("cost", "min_shed"):
            for anchor in ((0,), (1,)):
                x = SitingDecision(anchor)
                res = dispatch(inst, x, s, objective)
                const, coeffs = cut_coefficients(res, inst, x)
                assert res.sensitivities[0] <= 1e-12
                for probe in ((0,), (1,)):
                    q = dispatch(inst, SitingDecision(probe), s, objective).objective
                    bound = const + coeffs[0] * probe[0]
                    assert q >= bound - 1e-7, (anchor, probe, q, bound)
                anchored = const + coeffs @ x.as_array()
                assert abs(anchored - res.objective) <= 1e-9


def test_cut_validity_exhaustive_small_lattices():
    rng = np.random.default_rng(7)
    for t in range(40):
        n_sites = int(rng.integers(1, 5))
        inst = random_grid(rng, n_sites=n_sites, tight=True)
        s = random_scenario(rng, inst, spread=9.0)
        objective = "cost" if t % 2 else "min_shed"
        corners = {
            bits: dispatch(inst, SitingDecision(bits), s, objective).objective
            for bits in itertools.product((0, 1), repeat=n_sites)
        }
        anchor = tuple(int(v) for v in rng.integers(0, 2, n_sites))
        res = dispatch(inst, SitingDecision(anchor), s, objective)
        const, coeffs = cut_coefficients(res, inst, SitingDecision(anchor))
        for bits, q in corners.items():
            bound = const + float(coeffs @ np.array(bits, dtype=float))
            assert q >= bound - 1e-7, (t, anchor, bits, q, bound)
        assert abs(corners[anchor] - (const + coeffs @ np.array(anchor, float))) \
            <= 1e-9


# ------------------------------------------------------------------ engine

def test_engine_matches_single_dispatch():
    rng = np.random.default_rng(8)
    inst = random_grid(rng, n_buses=6, n_sites=3, tight=True)
    temps = inst.mean_temps() + rng.normal(0, 9, size=(40, inst.n_buses))
    scenarios = [scenario_at(inst, t) for t in temps]
    demands = np.array([s.demands_mw for s in scenarios])
    avail = np.array([s.avail_mw for s in scenarios])
    x = SitingDecision((1, 0, 1))
    for objective in ("cost", "min_shed"):
        engine = DispatchEngine(inst, objective)
        objs, sheds, coeffs = engine.solve(x, demands, avail, want_cuts=True)
        for k, s in enumerate(scenarios):
            res = dispatch(inst, x, s, objective)
            assert_allclose(objs[k], res.objective, atol=1e-9)
            assert_allclose(sheds[k], res.total_shed_mw, atol=1e-9)
            assert_allclose(coeffs[k], res.sensitivities, atol=1e-9)


def test_engine_threaded_results_are_identical():
    rng = np.random.default_rng(9)
    inst = random_grid(rng, n_buses=5, n_sites=2, tight=True)
    temps = inst.mean_temps() + rng.normal(0, 8, size=(64, inst.n_buses))
    demands = np.vstack([scenario_at(inst, t).demands_mw for t in temps])
    avail = np.vstack([scenario_at(inst, t).avail_mw for t in temps])
    x = SitingDecision((1, 1))
    engine = DispatchEngine(inst, "cost")
    a = engine.solve(x, demands, avail, want_cuts=True, threads=1)
    b = engine.solve(x, demands, avail, want_cuts=True, threads=4)
    for left, right in zip(a, b):
        assert np.array_equal(left, right)


def test_engine_respects_shed_penalty_override():
    inst = one_bus_instance(demand=10.0, cap=6.0, marginal=2.0)
    s = scenario_at(inst, [20.0])
    engine = DispatchEngine(inst, "cost", shed_penalty=1000.0)
    objs, sheds, _ = engine.solve(SitingDecision(()), s.demands_mw, s.avail_mw)
    assert_allclose(objs[0], 6 * 2 + 4 * 1000.0)
    assert_allclose(sheds[0], 4.0)
    res = dispatch(inst, SitingDecision(()), s, "cost", shed_penalty=1000.0)
    assert_allclose(res.objective, objs[0])
