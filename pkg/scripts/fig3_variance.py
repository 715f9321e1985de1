"""Gradient variance against register count for GHZ and Heisenberg targets."""
import argparse
from pathlib import Path

from qssm.baseline import VarianceExperimentConfig, log2_slope, run_variance_experiment, write_variance_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=500)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default="results/fig3")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for family, w_max in (("ghz", 2), ("heisenberg_xxx", 4)):
        cfg = VarianceExperimentConfig(family=family, n_values=(4, 6, 8, 10), samples=args.samples, w_max=w_max)
        points = run_variance_experiment(cfg, threads=args.threads)
        write_variance_csv(points, out / f"variance_{family}.csv")
        for p in points:
            print(family, p.n, p.step, f"{p.variance:.4g}", flush=True)
        print(family, "global log2 slope", round(log2_slope(points, "global"), 3))


if __name__ == "__main__":
    main()
