"""Cost/tail-risk frontier comparison on the bundled demo grid.

This script walks the whole pipeline end to end:

1. Write the small demo instance: an 8-bus grid with 3 existing units
   and 6 candidate sites, sized so the existing fleet barely covers
   nominal demand and shortfalls appear only under hot-weather stress.
2. Sweep the plain expected-cost policy.  It has no explicit risk term,
   so the only lever that trades cost against resilience is the price
   put on unserved load - the sweep values below are shed penalties.
3. Sweep the risk-weighted policy (expected cost + beta * tail shed)
   trained on a plain i.i.d. weather sample.
4. Sweep the same risk-weighted policy trained on a stratified sample
   that deliberately over-draws the joint hot tail, then reweights.
5. Score every decision on one shared pool of out-of-sample weather
   draws and render all three frontiers into a single SVG.

Every artifact gets a .manifest.json sidecar recording the command,
resolved parameters, and seeds, so any point on the chart can be
reproduced exactly.

Output (written to demos/out/):
    demo.json, base.csv, bo_cvar.csv, bo_cvar_cond.csv, frontiers.svg

Usage:
    python demos/frontier_comparison.py

Runs in roughly a minute.  Raise M_EVAL to 100000 for tighter tail
estimates at the cost of a longer wait.
"""

import csv
import sys
import time
from pathlib import Path

from gridsite.cli import main

OUT = Path(__file__).resolve().parent / "out"

SEED = "7"
N_TRAIN = "300"          # training scenarios per solve, all three arms
M_EVAL = "20000"         # common out-of-sample draws for scoring
BETAS = "0,50,200,1000"  # weight on tail shed in the risk-aware objective
PENALTIES = "150,300,600,1200"  # $/MWh shed prices for the plain policy


def step(title, argv):
    print(f"\n== {title}")
    print("   $ gridsite " + " ".join(argv))
    t0 = time.time()
    code = main(argv)
    if code != 0:
        sys.exit(f"command exited with code {code}")
    print(f"   ok ({time.time() - t0:.1f}s)")


def best_point(path):
    """(tail shed, avg cost, bits) of the lowest-tail decision in a CSV."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["oos_tail_shed"]]
    row = min(rows, key=lambda r: float(r["oos_tail_shed"]))
    return (float(row["oos_tail_shed"]), float(row["oos_avg_cost"]),
            row["x_bits"])


def run():
    OUT.mkdir(parents=True, exist_ok=True)
    inst = str(OUT / "demo.json")

    step("write the demo instance",
         ["demo", "--size", "small", "--seed", SEED, "-o", inst])

    step("plain policy, swept over the shed penalty",
         ["sweep", "--instance", inst, "--variant", "base",
          "--betas", PENALTIES, "--n", N_TRAIN, "--m", M_EVAL,
          "--seed", SEED, "-o", str(OUT / "base.csv")])

    step("risk-weighted policy, i.i.d. training sample",
         ["sweep", "--instance", inst, "--variant", "bo_cvar",
          "--betas", BETAS, "--n", N_TRAIN, "--m", M_EVAL,
          "--seed", SEED, "-o", str(OUT / "bo_cvar.csv")])

    step("risk-weighted policy, tail-conditioned training sample",
         ["sweep", "--instance", inst, "--variant", "bo_cvar_cond",
          "--betas", BETAS, "--m", M_EVAL,
          "--seed", SEED, "-o", str(OUT / "bo_cvar_cond.csv")])

    step("render all three frontiers",
         ["plot", str(OUT / "base.csv"), str(OUT / "bo_cvar.csv"),
          str(OUT / "bo_cvar_cond.csv"), "-o", str(OUT / "frontiers.svg")])

    print("\nLowest out-of-sample tail shed reached by each policy")
    print(f"  {'policy':<14} {'tail shed (MW)':>14} {'avg cost ($/h)':>15}"
          f"   decision")
    for name in ("base", "bo_cvar", "bo_cvar_cond"):
        tail, cost, bits = best_point(OUT / f"{name}.csv")
        print(f"  {name:<14} {tail:>14.2f} {cost:>15.2f}   {bits}")

    print(f"""
Reading the chart ({OUT / 'frontiers.svg'}):
the plain policy only reduces tail shed by pricing unserved load ever
higher, which drags its average cost up fast.  The risk-weighted policy
targets the tail directly and dominates it.  The tail-conditioned arm
sees the rare joint-hot scenarios that a 300-draw i.i.d. sample mostly
misses, so its high-beta points sit at or below the i.i.d. curve.""")


if __name__ == "__main__":
    run()
