"""|eps(t)| for partially reflecting mirrors, undriven and excited or driven from the ground state.

Writes one CSV with columns theta,t,abs_eps.
"""
import argparse
import csv
import math
from pathlib import Path

from pointcouple import ExponentialDrive, FeedbackConfig, run


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--thetas", default=f"{math.pi / 8},{math.pi / 4},{3 * math.pi / 8},{math.pi / 2}")
    parser.add_argument("--phi", type=float, default=0.0)
    parser.add_argument("--drive", type=float, nargs=2, metavar=("OMEGA0", "ALPHA"),
                        help="start in the ground state under an exponential drive")
    parser.add_argument("--t-end", type=float, default=10.0)
    parser.add_argument("--out", type=Path, default=Path("partial_mirror.csv"))
    args = parser.parse_args()

    extra = {}
    if args.drive:
        extra = {"drive": ExponentialDrive(*args.drive), "initial": "ground"}
    with args.out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theta", "t", "abs_eps"])
        for theta in (float(x) for x in args.thetas.split(",")):
            result = run(FeedbackConfig(theta=theta, phi=args.phi, t_end=args.t_end, **extra))
            for t, a in zip(result.t, result.abs_eps):
                writer.writerow([f"{theta:.17g}", f"{t:.17g}", f"{a:.17g}"])
            print(f"theta = {theta:.3f}: |eps({args.t_end:g})| = {result.abs_eps[-1]:.4f}, "
                  f"max bond {result.max_bond.max()}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
