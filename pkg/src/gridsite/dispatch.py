"""Second-stage dispatch: min-cost flow with load shedding.

For one temperature scenario and one siting decision, generation is routed
from a virtual source through generators onto buses and across lines to a
virtual sink that absorbs each bus demand.  "Shed" arcs run straight from
the source to each bus at penalty cost, so every network is feasible for
every siting decision; their flow is the unserved load.

Two objective modes share the topology: ``cost`` prices generation at
marginal cost and shed at the penalty, ``min_shed`` prices shed at 1 and
everything else at 0 so the optimum is the minimal total shed in MW.

All MW quantities are rounded to a 1e-3 MW grid before solving; flows are
integral on that grid, which makes results exactly reproducible and lets
the sensitivity formula below be exact LP duality rather than heuristics.
Per-candidate-site sensitivities (d objective / d x_j) come from the reduced
cost of the candidate's source arc times the capacity it would add, and they
assemble into globally valid optimality cuts for the siting master.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _flow
from .grid import GridInstance

__all__ = [
    "Arc",
    "DispatchEngine",
    "DispatchError",
    "DispatchResult",
    "FlowNetwork",
    "FlowSolution",
    "InfeasibleNetworkError",
    "OBJECTIVES",
    "QUANTUM_MW",
    "SitingDecision",
    "build_network",
    "cut_coefficients",
    "dispatch",
    "network_to_text",
    "solve_min_cost_flow",
]

QUANTUM_MW = 1e-3
OBJECTIVES = ("cost", "min_shed")


class DispatchError(ValueError):
    """Malformed dispatch request (wrong decision length, bad objective)."""


class InfeasibleNetworkError(RuntimeError):
    """The flow solver could not route the demand (cannot occur for
    networks built by build_network, which always carry shed arcs)."""


def _units(mw) -> np.ndarray:
    """MW quantities to integer milli-MW, rounding to nearest."""
    return np.rint(np.asarray(mw, dtype=float) / QUANTUM_MW).astype(np.int64)


@dataclass(frozen=True)
class SitingDecision:
    """Binary build indicator per candidate site, in instance order."""

    build: tuple

    def __post_init__(self):
        vals = tuple(int(v) for v in self.build)
        if any(v not in (0, 1) for v in vals):
            raise DispatchError("build indicators must be 0 or 1")
        object.__setattr__(self, "build", vals)

    def __len__(self):
        return len(self.build)

    def as_array(self) -> np.ndarray:
        return np.array(self.build, dtype=float)


@dataclass(frozen=True)
class Arc:
    tail: int
    head: int
    capacity_mw: float
    cost: float
    role: str  # supply | inject | line | shed | demand
    ref: int   # generator / line / bus index the arc belongs to


@dataclass(eq=False)
class FlowNetwork:
    n_nodes: int
    source: int
    sink: int
    arcs: tuple
    node_labels: tuple
    need_mw: float


@dataclass(eq=False)
class FlowSolution:
    flows_mw: np.ndarray
    potentials: np.ndarray
    objective: float


@dataclass(eq=False)
class DispatchResult:
    objective: float
    gen_mw: np.ndarray
    shed_mw: np.ndarray
    total_shed_mw: float
    sensitivities: np.ndarray
    flows_mw: np.ndarray = field(repr=False, default=None)
    potentials: np.ndarray = field(repr=False, default=None)
    network: FlowNetwork = field(repr=False, default=None)


def _check_request(instance: GridInstance, x: SitingDecision, objective: str):
    if len(x) != instance.n_sites:
        raise DispatchError(
            f"decision has {len(x)} entries for {instance.n_sites} candidate sites"
        )
    if objective not in OBJECTIVES:
        raise DispatchError(f"objective must be one of {OBJECTIVES}")


def build_network(
    instance: GridInstance,
    x: SitingDecision,
    scenario,
    objective: str = "cost",
    shed_penalty: float | None = None,
) -> FlowNetwork:
    """Assemble the scenario's transportation network for a siting decision.

    Node order: source, buses (instance order), generators (instance
    order), sink.  Arc order: one supply arc per generator, one inject arc
    per generator, two directed arcs per line, one shed arc per bus, one
    demand arc per bus.  This order is part of the determinism contract.
    """
    _check_request(instance, x, objective)
    penalty = instance.response.shed_penalty if shed_penalty is None else shed_penalty
    n_b = instance.n_buses
    gens = instance.generators
    demands = _units(scenario.demands_mw) * QUANTUM_MW
    avail = _units(scenario.avail_mw) * QUANTUM_MW
    if len(demands) != n_b or len(avail) != len(gens):
        raise DispatchError("scenario was realized against a different instance")

    source = 0
    bus_node = {b.id: 1 + i for i, b in enumerate(instance.buses)}
    gen_node = {g.id: 1 + n_b + j for j, g in enumerate(gens)}
    sink = 1 + n_b + len(gens)
    labels = (
        ("source",)
        + tuple(b.id for b in instance.buses)
        + tuple(g.id for g in gens)
        + ("sink",)
    )

    arcs = []
    site = 0
    for j, g in enumerate(gens):
        if g.kind == "candidate":
            cap = avail[j] * x.build[site]
            site += 1
        else:
            cap = avail[j]
        cost = 0.0 if objective == "min_shed" else g.marginal_cost
        arcs.append(Arc(source, gen_node[g.id], float(cap), cost, "supply", j))
    for j, g in enumerate(gens):
        # effectively uncapacitated: inflow is already limited by the supply arc
        arcs.append(Arc(gen_node[g.id], bus_node[g.bus], float(avail[j]), 0.0,
                        "inject", j))
    for k, line in enumerate(instance.lines):
        cap = float(_units(line.capacity_mw) * QUANTUM_MW)
        u, v = bus_node[line.from_bus], bus_node[line.to_bus]
        arcs.append(Arc(u, v, cap, 0.0, "line", k))
        arcs.append(Arc(v, u, cap, 0.0, "line", k))
    shed_cost = 1.0 if objective == "min_shed" else penalty
    for i in range(n_b):
        arcs.append(Arc(source, 1 + i, float(demands[i]), shed_cost, "shed", i))
    for i in range(n_b):
        arcs.append(Arc(1 + i, sink, float(demands[i]), 0.0, "demand", i))

    return FlowNetwork(
        n_nodes=sink + 1,
        source=source,
        sink=sink,
        arcs=tuple(arcs),
        node_labels=labels,
        need_mw=float(np.sum(demands)),
    )


def _net_arrays(net: FlowNetwork):
    tail = np.array([a.tail for a in net.arcs], dtype=np.int64)
    head = np.array([a.head for a in net.arcs], dtype=np.int64)
    cost = np.array([a.cost for a in net.arcs], dtype=np.float64)
    cap = _units([a.capacity_mw for a in net.arcs])
    return tail, head, cost, cap


def solve_min_cost_flow(net: FlowNetwork) -> FlowSolution:
    """Exact optimum; reduced costs from the returned potentials certify it."""
    tail, head, cost, cap = _net_arrays(net)
    need = np.int64(round(net.need_mw / QUANTUM_MW))
    flows = np.zeros((1, len(net.arcs)), dtype=np.int64)
    pots = np.zeros((1, net.n_nodes), dtype=np.float64)
    status = np.zeros(1, dtype=np.int8)
    _flow.solve_slice(tail, head, cost, np.expand_dims(cap, 0),
                      np.array([need]), net.n_nodes, net.source, net.sink,
                      flows, pots, status, 0, 1)
    if status[0] == _flow.INFEASIBLE:
        raise InfeasibleNetworkError("demand cannot be routed")
    if status[0] != _flow.OK:
        raise RuntimeError("flow solver stalled; network data is suspect")
    flows_mw = flows[0] * QUANTUM_MW
    objective = float((flows[0] * cost).sum() * QUANTUM_MW)
    return FlowSolution(flows_mw=flows_mw, potentials=pots[0], objective=objective)


def dispatch(
    instance: GridInstance,
    x: SitingDecision,
    scenario,
    objective: str = "cost",
    shed_penalty: float | None = None,
) -> DispatchResult:
    """Solve one scenario's dispatch and derive per-site sensitivities."""
    net = build_network(instance, x, scenario, objective, shed_penalty)
    sol = solve_min_cost_flow(net)
    gens = instance.generators
    n_g = len(gens)
    n_b = instance.n_buses
    gen_mw = sol.flows_mw[:n_g].copy()
    shed_lo = 2 * n_g + 2 * len(instance.lines)
    shed_mw = sol.flows_mw[shed_lo:shed_lo + n_b].copy()

    avail = _units(scenario.avail_mw) * QUANTUM_MW
    sens = []
    for j, g in enumerate(gens):
        if g.kind != "candidate":
            continue
        arc = net.arcs[j]
        rc = arc.cost + sol.potentials[arc.tail] - sol.potentials[arc.head]
        sens.append(min(0.0, rc) * avail[j])
    return DispatchResult(
        objective=sol.objective,
        gen_mw=gen_mw,
        shed_mw=shed_mw,
        total_shed_mw=float(shed_mw.sum()),
        sensitivities=np.array(sens),
        flows_mw=sol.flows_mw,
        potentials=sol.potentials,
        network=net,
    )


def cut_coefficients(result: DispatchResult, instance: GridInstance,
                     x: SitingDecision):
    """(constant, coefficients) of a valid lower bound on the scenario value.

    For every decision x': Q(x') >= constant + coefficients @ x', with
    equality at the decision that produced ``result``.
    """
    coeffs = result.sensitivities
    constant = result.objective - float(coeffs @ x.as_array())
    return constant, coeffs.copy()


def network_to_text(net: FlowNetwork) -> str:
    """Plain-text arc list (debug dump)."""
    lines = [f"nodes {net.n_nodes} source {net.source} sink {net.sink} "
             f"need_mw {net.need_mw!r}"]
    for a in net.arcs:
        lines.append(
            f"{a.role}[{a.ref}] {net.node_labels[a.tail]} -> "
            f"{net.node_labels[a.head]} cap {a.capacity_mw!r} cost {a.cost!r}"
        )
    return "\n".join(lines) + "\n"


class DispatchEngine:
    """Vectorized dispatch of many scenarios under one objective mode.

    The network topology and cost vector depend only on (instance,
    objective), so they are assembled once; per-scenario capacities are
    filled into a matrix and handed to the flow kernel slice by slice.
    Threading splits the scenario range; every scenario writes its own
    rows, so results are byte-identical for any thread count.
    """

    def __init__(self, instance: GridInstance, objective: str = "cost",
                 shed_penalty: float | None = None):
        if objective not in OBJECTIVES:
            raise DispatchError(f"objective must be one of {OBJECTIVES}")
        self.instance = instance
        self.objective = objective
        self.penalty = (instance.response.shed_penalty
                        if shed_penalty is None else float(shed_penalty))
        gens = instance.generators
        n_b, n_g, n_l = instance.n_buses, len(gens), len(instance.lines)
        self.n_gens = n_g
        self.source = 0
        self.sink = 1 + n_b + n_g
        self.n_nodes = self.sink + 1
        bus_of = {b.id: 1 + i for i, b in enumerate(instance.buses)}
        self.gen_nodes = np.arange(1 + n_b, 1 + n_b + n_g)
        self.is_candidate = np.array([g.kind == "candidate" for g in gens])
        self.site_of_gen = np.cumsum(self.is_candidate) - 1  # valid where mask

        tail, head, cost = [], [], []
        for j, g in enumerate(gens):
            tail.append(self.source)
            head.append(self.gen_nodes[j])
            cost.append(0.0 if objective == "min_shed" else g.marginal_cost)
        for j, g in enumerate(gens):
            tail.append(self.gen_nodes[j])
            head.append(bus_of[g.bus])
            cost.append(0.0)
        for line in instance.lines:
            u, v = bus_of[line.from_bus], bus_of[line.to_bus]
            tail.extend([u, v])
            head.extend([v, u])
            cost.extend([0.0, 0.0])
        for i in range(n_b):
            tail.append(self.source)
            head.append(1 + i)
            cost.append(1.0 if objective == "min_shed" else self.penalty)
        for i in range(n_b):
            tail.append(1 + i)
            head.append(self.sink)
            cost.append(0.0)
        self.tail = np.array(tail, dtype=np.int64)
        self.head = np.array(head, dtype=np.int64)
        self.cost = np.array(cost, dtype=np.float64)
        self.line_units = np.repeat(
            _units([ln.capacity_mw for ln in instance.lines]), 2)
        self.n_arcs = len(self.tail)
        self._shed_lo = 2 * n_g + 2 * n_l
        self._n_b = n_b

    def capacities(self, x: SitingDecision, demands_mw, avail_mw):
        """Per-scenario integer capacity rows for the arc layout."""
        if len(x) != self.instance.n_sites:
            raise DispatchError(
                f"decision has {len(x)} entries for "
                f"{self.instance.n_sites} candidate sites"
            )
        demands_mw = np.atleast_2d(demands_mw)
        avail_mw = np.atleast_2d(avail_mw)
        n_s = demands_mw.shape[0]
        avail_u = _units(avail_mw)
        scale = np.ones(self.n_gens, dtype=np.int64)
        scale[self.is_candidate] = np.array(x.build, dtype=np.int64)
        demand_u = _units(demands_mw)
        caps = np.empty((n_s, self.n_arcs), dtype=np.int64)
        caps[:, : self.n_gens] = avail_u * scale
        caps[:, self.n_gens : 2 * self.n_gens] = avail_u
        caps[:, 2 * self.n_gens : self._shed_lo] = self.line_units
        caps[:, self._shed_lo : self._shed_lo + self._n_b] = demand_u
        caps[:, self._shed_lo + self._n_b :] = demand_u
        return caps, demand_u.sum(axis=1)

    def solve(self, x: SitingDecision, demands_mw, avail_mw,
              want_cuts: bool = False, threads: int = 1):
        """Returns (objectives, total_sheds) and, when asked, per-scenario
        cut coefficient rows (one column per candidate site)."""
        caps, needs = self.capacities(x, demands_mw, avail_mw)
        n_s = caps.shape[0]
        flows = np.zeros((n_s, self.n_arcs), dtype=np.int64)
        pots = np.zeros((n_s, self.n_nodes), dtype=np.float64)
        status = np.zeros(n_s, dtype=np.int8)
        if threads <= 1 or n_s < 2 * threads:
            _flow.solve_slice(self.tail, self.head, self.cost, caps, needs,
                              self.n_nodes, self.source, self.sink,
                              flows, pots, status, 0, n_s)
        else:
            bounds = np.linspace(0, n_s, threads + 1).astype(int)
            def run(lo, hi):
                _flow.solve_slice(self.tail, self.head, self.cost, caps, needs,
                                  self.n_nodes, self.source, self.sink,
                                  flows, pots, status, lo, hi)
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futs = [pool.submit(run, int(lo), int(hi))
                        for lo, hi in zip(bounds[:-1], bounds[1:])]
                for f in futs:
                    f.result()
        if np.any(status == _flow.INFEASIBLE):
            raise InfeasibleNetworkError("demand cannot be routed")
        if np.any(status != _flow.OK):
            raise RuntimeError("flow solver stalled; network data is suspect")

        objectives = (flows * self.cost).sum(axis=1) * QUANTUM_MW
        sheds = flows[:, self._shed_lo : self._shed_lo + self._n_b].sum(axis=1) \
            * QUANTUM_MW
        if not want_cuts:
            return objectives, sheds, None
        cand = np.flatnonzero(self.is_candidate)
        rc = (self.cost[cand][None, :]
              + pots[:, self.source][:, None]
              - pots[:, self.gen_nodes[cand]])
        avail_u = _units(np.atleast_2d(avail_mw))[:, cand]
        coeffs = np.minimum(rc, 0.0) * (avail_u * QUANTUM_MW)
        return objectives, sheds, coeffs

    def solve_set(self, x: SitingDecision, sset, want_cuts: bool = False,
                  threads: int = 1):
        return self.solve(x, sset.demands, sset.avail, want_cuts, threads)
