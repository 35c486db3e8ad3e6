#!/usr/bin/env python3
"""Plaquette antiferromagnet: pumped AF populations, the B/J inset and the triangle.

Each part is optional so the expensive trajectory ensembles can be run one
at a time.  Results land in --out-dir as CSV plus JSON sidecars.
"""
import argparse
from pathlib import Path

from rydpump.config import load_config
from rydpump.experiments import run_fig3, run_fig3_inset, run_triangle

PARTS = ("trace", "inset", "triangle")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("parts", nargs="*", choices=PARTS, default=list(PARTS))
    ap.add_argument("--out-dir", type=Path, default=Path("results"))
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()

    if "trace" in args.parts:
        t = run_fig3(load_config("fig3"), jobs=args.jobs, seed=args.seed)
        t.write(args.out_dir / "fig3.csv")
        ss = t.metadata["steady_state"]
        print(f"steady AF population {ss['af_total']:.4f} +- {ss['af_total_se']:.4f} "
              f"(P1212 {ss['p_1212']:.3f}, P2121 {ss['p_2121']:.3f}) from t = {ss['t_start_us']:.0f} us")

    if "inset" in args.parts:
        t = run_fig3_inset(load_config("fig3_inset"), jobs=args.jobs, seed=args.seed)
        t.write(args.out_dir / "fig3_inset.csv")
        print(f"{'B/J':>7} {'MCWF':>7} {'+-':>6} {'diag':>7}")
        for bj, _, af, se, diag, _ in t.rows:
            print(f"{bj:7.2f} {af:7.3f} {se:6.3f} {diag:7.3f}")

    if "triangle" in args.parts:
        t = run_triangle(load_config("triangle"), jobs=args.jobs, seed=args.seed)
        t.write(args.out_dir / "triangle.csv")
        for state, m, pop, se, _ in t.rows:
            print(f"|{state}>  M={m:+.1f}  {pop:.3f} +- {se:.3f}")


if __name__ == "__main__":
    main()
