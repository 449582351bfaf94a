"""|eps(t)| for an ideal mirror at several mirror phases, MPS next to the delay-equation oracle.

Writes one CSV with columns phi,t,abs_eps_mps,abs_eps_dde.
"""
import argparse
import csv
from pathlib import Path

from pointcouple import DdeParams, FeedbackConfig, run, solve_dde


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--phis", default="0,0.5,1,1.5,2,2.5,3.14159265358979",
                        help="comma-separated mirror phases")
    parser.add_argument("--dt", type=float, default=0.05)
    parser.add_argument("--t-end", type=float, default=10.0)
    parser.add_argument("--out", type=Path, default=Path("phase_sweep.csv"))
    args = parser.parse_args()

    with args.out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["phi", "t", "abs_eps_mps", "abs_eps_dde"])
        for phi in (float(p) for p in args.phis.split(",")):
            config = FeedbackConfig(phi=phi, dt=args.dt, t_end=args.t_end)
            result = run(config)
            oracle = solve_dde(DdeParams.from_feedback(config)).abs_at(result.t)
            for t, a, b in zip(result.t, result.abs_eps, oracle):
                writer.writerow([f"{phi:.17g}", f"{t:.17g}", f"{a:.17g}", f"{b:.17g}"])
            print(f"phi = {phi:.3f}: |eps({args.t_end:g})| = {result.abs_eps[-1]:.4f} "
                  f"(oracle {oracle[-1]:.4f})")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
