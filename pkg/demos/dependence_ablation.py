"""What planning under an independence assumption costs you.

Heat waves are spatially correlated: when one bus runs hot, its
neighbors usually do too, so demand spikes and generator derates land
together.  A planner who models each bus's temperature as independent
noise with the right marginals sees the same per-bus statistics but
almost never draws a system-wide stress event, and underbuilds.

The experiment:

1. Write the small demo instance (8 buses, 6 candidate sites).
2. Sweep the risk-weighted policy with training scenarios drawn from
   the true spatially correlated weather model.
3. Sweep it again with training scenarios drawn from an
   independent-kernel model - same marginal variance at every bus,
   zero cross-bus correlation.
4. Score both sets of decisions against the *correlated* ground truth
   on a shared pool of out-of-sample draws, and chart them (the
   independent arm is drawn dashed).

Output (written to demos/out/):
    demo.json, dependent.csv, independent.csv, ablation.svg

Usage:
    python demos/dependence_ablation.py

Runs in under a minute.
"""

import csv
import sys
import time
from pathlib import Path

from gridsite.cli import main

OUT = Path(__file__).resolve().parent / "out"

SEED = "7"
N_TRAIN = "300"
M_EVAL = "20000"
BETAS = "0,50,200,1000"


def step(title, argv):
    print(f"\n== {title}")
    print("   $ gridsite " + " ".join(argv))
    t0 = time.time()
    code = main(argv)
    if code != 0:
        sys.exit(f"command exited with code {code}")
    print(f"   ok ({time.time() - t0:.1f}s)")


def rows_of(path):
    with open(path, newline="") as fh:
        return [r for r in csv.DictReader(fh) if r["oos_tail_shed"]]


def run():
    OUT.mkdir(parents=True, exist_ok=True)
    inst = str(OUT / "demo.json")

    step("write the demo instance",
         ["demo", "--size", "small", "--seed", SEED, "-o", inst])

    step("train on the correlated weather model",
         ["sweep", "--instance", inst, "--variant", "bo_cvar",
          "--betas", BETAS, "--n", N_TRAIN, "--m", M_EVAL,
          "--seed", SEED, "-o", str(OUT / "dependent.csv")])

    step("train as if buses heated up independently",
         ["sweep", "--instance", inst, "--variant", "bo_cvar",
          "--dependence", "independent",
          "--betas", BETAS, "--n", N_TRAIN, "--m", M_EVAL,
          "--seed", SEED, "-o", str(OUT / "independent.csv")])

    step("chart both arms (independent drawn dashed)",
         ["plot", str(OUT / "dependent.csv"), str(OUT / "independent.csv"),
          "-o", str(OUT / "ablation.svg")])

    dep = rows_of(OUT / "dependent.csv")
    ind = rows_of(OUT / "independent.csv")

    print("\nOut-of-sample tail shed (MW) by risk weight beta")
    print(f"  {'beta':>6} {'correlated':>12} {'independent':>12}   built")
    for d, i in zip(dep, ind):
        beta = float(d["beta"])
        print(f"  {beta:>6g} {float(d['oos_tail_shed']):>12.2f}"
              f" {float(i['oos_tail_shed']):>12.2f}"
              f"   {d['x_bits']} vs {i['x_bits']}")

    best_dep = min(float(r["oos_tail_shed"]) for r in dep)
    best_ind = min(float(r["oos_tail_shed"]) for r in ind)
    print(f"""
Best tail shed: {best_dep:.2f} MW trained on the correlated model,
{best_ind:.2f} MW trained under independence ({OUT / 'ablation.svg'}).
The independence-trained planner's own sample told it everything was
fine - each bus alone rarely crosses the derate threshold - so no risk
weight makes it pay for capacity it never saw a reason to build.""")


if __name__ == "__main__":
    run()
