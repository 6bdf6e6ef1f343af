"""Command-line front end: demo instances, sampling, solves, sweeps, plots.

Every command writes its primary output plus a ``<output>.manifest.json``
sidecar recording the resolved parameters, seeds, artifact paths, tool
version, and wall time — enough to reproduce the output byte-for-byte
(the manifest itself differs only in the wall-time field across runs).

Exit codes: 0 success; 1 malformed input or usage error; 2 solver hit its
iteration limit (on all points, for sweeps); 3 partial sweep failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .dispatch import SitingDecision, build_network, network_to_text
from .frontier import (
    EvalConfig,
    TrainingSampler,
    evaluate_oos,
    frontier_to_csv,
    pareto_filter,
    sweep,
)
from .grid import GridInstance, InstanceError, load_instance, serialize
from .saa import SolveConfig, solve_enumeration, solve_lshaped
from .weather import (
    SpatialModel,
    StratificationPlan,
    sample_iid,
    scenarios_to_csv,
)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_ITER_LIMIT = 2
EXIT_PARTIAL = 3

PALETTE = {
    "base": "#1f77b4",
    "bo_cvar": "#d62728",
    "bo_cvar_cond": "#2ca02c",
}

FRONTIER_COLUMNS = ["label", "dependence", "beta", "x_bits", "in_exp_cost",
                    "in_cvar_shed", "oos_avg_cost", "oos_tail_shed", "status"]


class CliError(Exception):
    """Bad input that should exit with code 1 and a one-line message."""


class _Parser(argparse.ArgumentParser):
    # usage problems are "malformed input" in the documented exit table
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        raise SystemExit(EXIT_BAD_INPUT)


# ------------------------------------------------------------- helpers

def _write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _write_manifest(output: Path, command: str, params: dict, seeds: dict,
                    artifacts, started: float):
    manifest = {
        "command": command,
        "parameters": params,
        "seeds": seeds,
        "artifacts": [str(a) for a in artifacts],
        "tool_version": __version__,
        "wall_time_s": round(time.time() - started, 3),
    }
    path = Path(str(output) + ".manifest.json")
    _write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _load(path: str) -> GridInstance:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read instance file: {exc}") from exc
    return load_instance(text)


def _model_from(args) -> SpatialModel:
    return SpatialModel(
        sigma_c=args.sigma,
        range_km=args.range_km,
        kernel=args.kernel,
        nugget=args.nugget,
    )


def _plan_from(args) -> StratificationPlan:
    counts = tuple(int(c) for c in args.allocation.split(","))
    if len(counts) != 3:
        raise CliError("--allocation needs three comma-separated counts")
    return StratificationPlan(tail_prob=args.tail_prob, allocation=counts)


def _add_model_flags(p):
    p.add_argument("--sigma", type=float, default=6.0,
                   help="anomaly std dev, deg C (default 6)")
    p.add_argument("--range-km", type=float, default=120.0,
                   help="correlation range, km (default 120)")
    p.add_argument("--kernel", choices=["exponential", "independent"],
                   default="exponential")
    p.add_argument("--nugget", type=float, default=1e-10)


def _add_plan_flags(p):
    p.add_argument("--tail-prob", type=float, default=0.01,
                   help="tail mass per stratum (default 0.01)")
    p.add_argument("--allocation", default="100,100,100",
                   help="low,mid,high stratum sample counts")


def _add_solve_flags(p):
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--penalty", type=float, default=None,
                   help="override the instance's shed penalty")
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int, default=200)
    p.add_argument("--solver", choices=["auto", "enumeration", "lshaped"],
                   default="auto")
    p.add_argument("--n", type=int, default=300,
                   help="training sample size (i.i.d. sampling)")


def _add_eval_flags(p):
    p.add_argument("--m", type=int, default=100_000,
                   help="out-of-sample draw count (default 1e5)")
    p.add_argument("--tau", type=float, default=0.01,
                   help="tail fraction for the resilience metric")
    p.add_argument("--eval-seed", type=int, default=987_001)


# ----------------------------------------------------------------- demo

DEMO_SIZES = {
    # size: (columns, rows, existing units, candidate sites)
    "small": (4, 2, 3, 6),
    "medium": (5, 5, 6, 12),
}
DEMO_PITCH_KM = 60.0

# documented sampling ranges for demo instances (uniform draws)
DEMO_RANGES = {
    "base_demand_mw": (26.0, 50.0),
    "mean_temp_c": (17.5, 20.5),
    "line_capacity_mw": (35.0, 60.0),
    "existing_fraction": (1.00, 1.08),   # of total base demand
    "existing_marginal": (2.0, 4.0),
    "candidate_capacity_mw": (20.0, 34.0),
    "candidate_marginal": (4.0, 9.0),
    "candidate_build_cost": (40.0, 110.0),
    "shed_penalty": 300.0,
}


def build_demo(size: str, seed: int) -> GridInstance:
    """A deterministic lattice instance with tight existing capacity.

    Buses sit on a rectangular grid (60 km pitch) so the spatial
    correlation range is comparable to a few hops.  Existing units cover
    roughly three quarters of base demand; candidate sites differ in
    build cost and marginal cost so risk attitudes pick different sets.
    All randomized parameters are drawn from the documented ranges below
    using a counter-based generator keyed by the seed alone.
    """
    from .grid import Bus, GeneratorSpec, Line, ResponseParams

    if size not in DEMO_SIZES:
        raise CliError(f"unknown demo size {size!r}")
    cols, rows, n_existing, n_candidates = DEMO_SIZES[size]
    rng = np.random.Generator(np.random.Philox(seed))
    R = DEMO_RANGES

    buses = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            buses.append(Bus(
                id=f"b{i:02d}",
                x_km=c * DEMO_PITCH_KM,
                y_km=r * DEMO_PITCH_KM,
                base_demand_mw=float(np.round(
                    rng.uniform(*R["base_demand_mw"]), 1)),
                mean_temp_c=float(np.round(rng.uniform(*R["mean_temp_c"]), 1)),
            ))
    n_b = len(buses)
    total_demand = sum(b.base_demand_mw for b in buses)

    lines = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                lines.append(Line(buses[i].id, buses[i + 1].id, float(
                    np.round(rng.uniform(*R["line_capacity_mw"]), 1))))
            if r + 1 < rows:
                lines.append(Line(buses[i].id, buses[i + cols].id, float(
                    np.round(rng.uniform(*R["line_capacity_mw"]), 1))))

    gens = []
    exist_buses = rng.choice(n_b, size=n_existing, replace=False)
    exist_frac = rng.uniform(*R["existing_fraction"])
    shares = rng.uniform(0.8, 1.2, n_existing)
    shares = shares / shares.sum() * exist_frac * total_demand
    for k, (bi, cap) in enumerate(zip(exist_buses, shares)):
        gens.append(GeneratorSpec(
            id=f"g{k}",
            bus=buses[int(bi)].id,
            capacity_mw=float(np.round(cap, 1)),
            marginal_cost=float(np.round(
                rng.uniform(*R["existing_marginal"]), 2)),
            kind="existing",
        ))
    cand_buses = rng.choice(n_b, size=n_candidates, replace=False)
    for k, bi in enumerate(cand_buses):
        gens.append(GeneratorSpec(
            id=f"c{k}",
            bus=buses[int(bi)].id,
            capacity_mw=float(np.round(
                rng.uniform(*R["candidate_capacity_mw"]), 1)),
            marginal_cost=float(np.round(
                rng.uniform(*R["candidate_marginal"]), 2)),
            kind="candidate",
            build_cost=float(np.round(
                rng.uniform(*R["candidate_build_cost"]), 1)),
        ))

    response = ResponseParams(
        comfort_lo_c=15.0,
        comfort_hi_c=25.0,
        demand_slope_per_c=0.02,
        derate_start_c=5.0,
        derate_full_c=15.0,
        derate_max_frac=0.4,
        shed_penalty=R["shed_penalty"],
    )
    return GridInstance(buses=tuple(buses), lines=tuple(lines),
                        generators=tuple(gens), response=response)


def cmd_demo(args) -> int:
    started = time.time()
    instance = build_demo(args.size, args.seed)
    out = Path(args.output)
    _write_text(out, serialize(instance))
    _write_manifest(out, "demo",
                    {"size": args.size, "output": str(out)},
                    {"seed": args.seed}, [out], started)
    return EXIT_OK


# ------------------------------------------------------------------ gen

def cmd_gen(args) -> int:
    started = time.time()
    instance = _load(args.instance)
    model = _model_from(args)
    if args.stratified:
        from .weather import sample_stratified
        plan = _plan_from(args)
        sset = sample_stratified(instance, model, plan, args.seed)
        plan_params = {"tail_prob": plan.tail_prob,
                       "allocation": list(plan.allocation)}
    else:
        sset = sample_iid(instance, model, args.n, args.seed)
        plan_params = None
    out = Path(args.output)
    _write_text(out, scenarios_to_csv(sset))
    _write_manifest(out, "gen", {
        "instance": args.instance,
        "n": args.n,
        "stratified": args.stratified,
        "plan": plan_params,
        "model": {"sigma": args.sigma, "range_km": args.range_km,
                  "kernel": args.kernel, "nugget": args.nugget},
        "output": str(out),
    }, {"seed": args.seed}, [out], started)
    return EXIT_OK


# ---------------------------------------------------------------- solve

def _training_sampler(args, variant: str) -> TrainingSampler:
    model = _model_from(args)
    if variant == "bo_cvar_cond":
        return TrainingSampler(kind="stratified", model=model,
                               seed=args.seed, plan=_plan_from(args))
    return TrainingSampler(kind="iid", model=model, n=args.n, seed=args.seed)


def cmd_solve(args) -> int:
    started = time.time()
    instance = _load(args.instance)
    variant = args.variant
    cfg = SolveConfig(
        variant="bo_cvar" if variant == "bo_cvar_cond" else variant,
        alpha=args.alpha,
        beta=args.beta if variant != "base" else 0.0,
        shed_penalty=args.penalty,
        gap_tol=args.gap_tol,
        max_iters=args.max_iters,
        verbose=args.verbose,
    )
    sampler = _training_sampler(args, variant)
    training = sampler.sample(instance)

    if args.dump_network:
        scen = training.scenarios[0]
        x0 = SitingDecision((0,) * instance.n_sites)
        net = build_network(instance, x0, scen, "cost", args.penalty)
        print(network_to_text(net), file=sys.stderr)

    solver = args.solver
    if solver == "auto":
        solver = "enumeration" if instance.n_sites <= 12 else "lshaped"
    solve = solve_enumeration if solver == "enumeration" else solve_lshaped
    sol = solve(instance, training, cfg, args.threads)

    out = Path(args.output)
    payload = {
        "variant": variant,
        "x_bits": "".join(str(b) for b in sol.x.build),
        "build_cost": sol.build_cost,
        "exp_cost": sol.exp_cost,
        "cvar_shed": sol.cvar_shed,
        "scalarized": sol.scalarized,
        "lower_bound": sol.lower_bound,
        "iters": sol.iters,
        "cuts_added": sol.cuts_added,
        "status": sol.status,
        "solver": solver,
    }
    _write_text(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, "solve", {
        "instance": args.instance,
        "variant": variant,
        "alpha": args.alpha,
        "beta": args.beta,
        "penalty": args.penalty,
        "gap_tol": args.gap_tol,
        "max_iters": args.max_iters,
        "solver": solver,
        "n": args.n,
        "threads": args.threads,
        "model": {"sigma": args.sigma, "range_km": args.range_km,
                  "kernel": args.kernel, "nugget": args.nugget},
        "output": str(out),
    }, {"seed": args.seed}, [out], started)
    return EXIT_ITER_LIMIT if sol.status == "iteration_limit" else EXIT_OK


# ---------------------------------------------------------------- sweep

def cmd_sweep(args) -> int:
    started = time.time()
    instance = _load(args.instance)
    variant = args.variant
    betas = [float(v) for v in args.betas.split(",") if v != ""]
    model = _model_from(args)
    if args.dependence == "independent":
        model = replace(model, kernel="independent")
    truth = replace(model, kernel="exponential")

    cfg = SolveConfig(
        variant="bo_cvar" if variant == "bo_cvar_cond" else variant,
        alpha=args.alpha,
        beta=0.0,
        shed_penalty=args.penalty,
        gap_tol=args.gap_tol,
        max_iters=args.max_iters,
        verbose=args.verbose,
    )
    plan = None
    if variant == "bo_cvar_cond":
        plan = _plan_from(args)
        sampler = TrainingSampler(kind="stratified", model=model,
                                  seed=args.seed, plan=plan)
    else:
        sampler = TrainingSampler(kind="iid", model=model, n=args.n,
                                  seed=args.seed)
    eval_cfg = EvalConfig(m=args.m, tau=args.tau, seed=args.eval_seed)

    points = sweep(instance, sampler, betas, cfg, eval_cfg,
                   truth_model=truth, solver=args.solver,
                   threads=args.threads)

    out = Path(args.output)
    _write_text(out, frontier_to_csv(points))
    _write_manifest(out, "sweep", {
        "instance": args.instance,
        "variant": variant,
        "dependence": args.dependence,
        "betas": betas,
        "alpha": args.alpha,
        "penalty": args.penalty,
        "gap_tol": args.gap_tol,
        "max_iters": args.max_iters,
        "solver": args.solver,
        "n": args.n,
        "plan": None if plan is None else {
            "tail_prob": plan.tail_prob, "allocation": list(plan.allocation)},
        "m": args.m,
        "tau": args.tau,
        "threads": args.threads,
        "model": {"sigma": args.sigma, "range_km": args.range_km,
                  "kernel": model.kernel, "nugget": args.nugget},
        "output": str(out),
    }, {"seed": args.seed, "eval_seed": args.eval_seed}, [out], started)

    statuses = [p.status for p in points]
    if any(s.startswith("error") for s in statuses):
        return EXIT_PARTIAL
    if statuses and all(s == "iteration_limit" for s in statuses):
        return EXIT_ITER_LIMIT
    return EXIT_OK


# ----------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    started = time.time()
    instance = _load(args.instance)
    bits = args.x.strip()
    if not bits or set(bits) - {"0", "1"}:
        raise CliError("--x must be a 0/1 string, one digit per site")
    if len(bits) != instance.n_sites:
        raise CliError(
            f"--x has {len(bits)} digits for {instance.n_sites} sites")
    x = SitingDecision(tuple(int(b) for b in bits))
    model = _model_from(args)
    cfg = EvalConfig(m=args.m, tau=args.tau, seed=args.eval_seed)
    avg_cost, tail_shed = evaluate_oos(x, instance, model, cfg,
                                       threads=args.threads)

    # standard errors from the same common draws
    from .frontier import _eval_set
    es = _eval_set(instance, model, cfg)
    _, avg_cost_se, sheds_sorted = es.metrics(x, args.threads)
    k = int(np.ceil(args.tau * args.m))
    tail = sheds_sorted[args.m - k:]
    out = Path(args.output)
    payload = {
        "x_bits": bits,
        "m": args.m,
        "tau": args.tau,
        "avg_cost": avg_cost,
        "avg_cost_se": avg_cost_se,
        "tail_shed": tail_shed,
        "tail_count": int(k),
        "tail_shed_se": float(tail.std(ddof=1) / np.sqrt(k)) if k > 1 else 0.0,
    }
    _write_text(out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest(out, "eval", {
        "instance": args.instance,
        "x": bits,
        "m": args.m,
        "tau": args.tau,
        "threads": args.threads,
        "model": {"sigma": args.sigma, "range_km": args.range_km,
                  "kernel": args.kernel, "nugget": args.nugget},
        "output": str(out),
    }, {"eval_seed": args.eval_seed}, [out], started)
    return EXIT_OK


# ----------------------------------------------------------------- plot

def _read_frontier_csv(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read frontier file: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise CliError(f"{path}: no data rows")
    header = lines[0].split(",")
    for want, got in zip(FRONTIER_COLUMNS, header + [""] * 9):
        if want != got:
            raise CliError(f"{path}: expected column '{want}', found '{got}'")
    if len(header) != len(FRONTIER_COLUMNS):
        raise CliError(f"{path}: expected column '<none>', "
                       f"found '{header[len(FRONTIER_COLUMNS)]}'")
    rows = []
    for ln in lines[1:]:
        cells = ln.split(",")
        rec = dict(zip(FRONTIER_COLUMNS, cells))
        if rec.get("oos_avg_cost") and rec.get("oos_tail_shed"):
            rows.append(rec)
    if not rows:
        raise CliError(f"{path}: no data rows")
    return rows


def _svg_frontier(rows) -> str:
    width, height = 720, 500
    ml, mr, mt, mb = 80, 190, 30, 60
    pw, ph = width - ml - mr, height - mt - mb

    series = {}
    for rec in rows:
        key = (rec["label"], rec["dependence"])
        series.setdefault(key, []).append(
            (float(rec["oos_avg_cost"]), float(rec["oos_tail_shed"])))
    series = {k: pareto_filter(v) for k, v in sorted(series.items())}

    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xspan = (x1 - x0) or max(abs(x1), 1.0) * 0.1
    yspan = (y1 - y0) or max(abs(y1), 1.0) * 0.1
    x0 -= 0.05 * xspan
    x1 += 0.05 * xspan
    y0 -= 0.05 * yspan
    y1 += 0.05 * yspan

    def sx(v):
        return round(ml + (v - x0) / (x1 - x0) * pw, 2)

    def sy(v):
        return round(mt + ph - (v - y0) / (y1 - y0) * ph, 2)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<line x1="{ml}" y1="{mt + ph}" x2="{ml + pw}" y2="{mt + ph}" '
        'stroke="black"/>',
        f'<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{mt + ph}" stroke="black"/>',
    ]
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        px, py = sx(fx), sy(fy)
        parts.append(f'<line x1="{px}" y1="{mt + ph}" x2="{px}" '
                     f'y2="{mt + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{px}" y="{mt + ph + 20}" font-size="11" '
                     f'text-anchor="middle">{fx:.4g}</text>')
        parts.append(f'<line x1="{ml - 5}" y1="{py}" x2="{ml}" y2="{py}" '
                     'stroke="black"/>')
        parts.append(f'<text x="{ml - 8}" y="{py + 4}" font-size="11" '
                     f'text-anchor="end">{fy:.4g}</text>')
    parts.append(
        f'<text x="{ml + pw / 2:.0f}" y="{height - 15}" font-size="13" '
        'text-anchor="middle">out-of-sample average cost ($/h)</text>')
    parts.append(
        f'<text x="18" y="{mt + ph / 2:.0f}" font-size="13" '
        f'text-anchor="middle" transform="rotate(-90 18 {mt + ph / 2:.0f})">'
        'out-of-sample tail average shed (MW)</text>')

    legend_y = mt + 10
    for (label, dependence), pts in series.items():
        color = PALETTE.get(label, "#7f7f7f")
        dash = ' stroke-dasharray="6,4"' if dependence == "independent" else ""
        pts_sorted = sorted(pts)
        coords = " ".join(f"{sx(x)},{sy(y)}" for x, y in pts_sorted)
        if len(pts_sorted) > 1:
            parts.append(f'<polyline points="{coords}" fill="none" '
                         f'stroke="{color}" stroke-width="1.5"{dash}/>')
        for x, y in pts_sorted:
            parts.append(f'<circle class="pt" cx="{sx(x)}" cy="{sy(y)}" '
                         f'r="3.5" fill="{color}"/>')
        name = label if dependence == "dependent" else f"{label} (independent)"
        lx = ml + pw + 14
        parts.append(f'<line x1="{lx}" y1="{legend_y}" x2="{lx + 22}" '
                     f'y2="{legend_y}" stroke="{color}" stroke-width="1.5"'
                     f'{dash}/>')
        parts.append(f'<text class="legend" x="{lx + 28}" y="{legend_y + 4}" '
                     f'font-size="12">{name}</text>')
        legend_y += 18
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(args) -> int:
    started = time.time()
    rows = []
    for path in args.csvs:
        rows.extend(_read_frontier_csv(path))
    out = Path(args.output)
    _write_text(out, _svg_frontier(rows))
    _write_manifest(out, "plot", {
        "csvs": list(args.csvs),
        "output": str(out),
    }, {}, [out], started)
    return EXIT_OK


# ----------------------------------------------------------------- main

def make_parser() -> _Parser:
    parser = _Parser(prog="gridsite",
                     description="Temperature-aware generator siting under "
                                 "spatially correlated heat stress")
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0,
                        help="primary random seed (default 0)")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("demo", parents=[common],
                       help="write a bundled demo instance")
    p.add_argument("--size", choices=sorted(DEMO_SIZES), default="small")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("gen", parents=[common],
                       help="sample scenarios to CSV")
    p.add_argument("--instance", required=True)
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--stratified", action="store_true")
    _add_model_flags(p)
    _add_plan_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", parents=[common],
                       help="solve the siting problem on one sample")
    p.add_argument("--instance", required=True)
    p.add_argument("--variant", choices=["base", "bo_cvar", "bo_cvar_cond"],
                   default="base")
    p.add_argument("--beta", type=float, default=0.0)
    _add_solve_flags(p)
    _add_model_flags(p)
    _add_plan_flags(p)
    p.add_argument("--dump-network", action="store_true",
                   help="print the first scenario's flow network to stderr")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", parents=[common],
                       help="trace one frontier curve to CSV")
    p.add_argument("--instance", required=True)
    p.add_argument("--variant", choices=["base", "bo_cvar", "bo_cvar_cond"],
                   default="bo_cvar")
    p.add_argument("--dependence", choices=["dependent", "independent"],
                   default="dependent")
    p.add_argument("--betas", required=True,
                   help="comma-separated sweep values, strictly increasing")
    _add_solve_flags(p)
    _add_model_flags(p)
    _add_plan_flags(p)
    _add_eval_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", parents=[common],
                       help="score a siting decision out-of-sample")
    p.add_argument("--instance", required=True)
    p.add_argument("--x", required=True, help="siting vector as 0/1 digits")
    _add_model_flags(p)
    _add_eval_flags(p)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plot", parents=[common],
                       help="render frontier CSVs to an SVG chart")
    p.add_argument("csvs", nargs="+", metavar="frontier.csv")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    if getattr(args, "verbose", False):
        logging.basicConfig(level=logging.INFO, stream=sys.stderr)
    try:
        return args.func(args)
    except (CliError, InstanceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
