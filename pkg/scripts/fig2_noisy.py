"""Noisy GHZ_4 training over several seeds, plus the noiseless output counts of each result."""
import argparse
import csv
import json
from pathlib import Path

from qssm.noisy import NoiseModel, ShotEstimator, noiseless_distribution, train_qssm_noisy
from qssm.optim import NelderMeadConfig
from qssm.rng import child_rng
from qssm.sequential import TrainConfig
from qssm.targets import ghz


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--restarts", type=int, default=20)
    parser.add_argument("--shots", type=int, default=8192)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default="results/fig2")
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in range(args.seeds):
        run = train_qssm_noisy(ghz(4), TrainConfig(depth=1, w_max=2, seed=seed), NoiseModel(),
                               ShotEstimator(args.shots, seed=seed), args.restarts,
                               NelderMeadConfig(max_evals=400), args.threads)
        run.write_traces(out / f"traces_seed{seed}.csv")
        counts = noiseless_distribution(run.model, 8192, child_rng(seed, "counts"))
        (out / f"counts_seed{seed}.json").write_text(
            json.dumps({format(i, "04b"): int(c) for i, c in enumerate(counts) if c}, indent=2))
        rows.append((seed, run.model.fidelity))
        print(seed, round(run.model.fidelity, 4), flush=True)
    with open(out / "fidelities.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["seed", "fidelity"])
        writer.writerows(rows)


if __name__ == "__main__":
    main()
