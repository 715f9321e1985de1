"""Command-line runner: ``qssm run --config exp.toml`` and ``qssm compare a b``.

Every run writes ``summary.json`` into the output directory plus per-command
CSV files. Failures print a JSON error object on stderr (and to
``error.json`` when the output directory is known) and exit nonzero: 2 for
configuration problems, 1 for anything raised while running.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import baseline, haar, noisy
from .config import ExperimentConfig, load_config
from .errors import ArgumentError, ConfigError, QSSMError
from .optim import NelderMeadConfig
from .qstate import rank_sequence
from .rng import child_rng
from .sequential import run_qssm
from .targets import make_target

# fidelity 0.99 corresponds to a full-state cost of 2 - 2 * 0.99
FIDELITY_THRESHOLD = 0.99
COST_THRESHOLD = 2.0 - 2.0 * FIDELITY_THRESHOLD


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, default=_jsonable))


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _write_trace(path: Path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "cost"])
        writer.writerows((i, repr(float(c))) for i, c in enumerate(trace))


def iterations_to_threshold(traces, threshold: float = COST_THRESHOLD):
    """Total iterations until every trace first reaches ``threshold``; None if one never does."""
    total = 0
    for trace in traces:
        hit = next((i for i, c in enumerate(trace) if c <= threshold), None)
        if hit is None:
            return None
        total += hit + 1
    return total


def _base_summary(cfg: ExperimentConfig) -> dict:
    return {"command": cfg.command, "seed": cfg.seed, "config": cfg.to_json()}


def cmd_learn(cfg: ExperimentConfig, out: Path) -> dict:
    target = make_target(cfg.target)
    model = run_qssm(target, cfg.train)
    traces = [layer.trace for layer in model.layers]
    for layer in model.layers:
        _write_trace(out / f"trace_layer_{layer.k}.csv", layer.trace)
    model.save(out / "model.json")
    return {
        "model": "qssm",
        "fidelity": model.fidelity,
        "widths": model.widths,
        "iterations": model.iterations,
        "final_costs": [t[-1] for t in traces],
        "iterations_to_threshold": iterations_to_threshold(traces),
        "wall_time": model.wall_time,
    }


def cmd_learn_global(cfg: ExperimentConfig, out: Path) -> dict:
    target = make_target(cfg.target)
    res = baseline.train_global_qnn(target, cfg.train)
    _write_trace(out / "trace_layer_1.csv", res.trace)
    _write_json(out / "model.json", res.to_json())
    return {
        "model": "global",
        "fidelity": res.fidelity,
        "widths": [cfg.target.n],
        "iterations": [len(res.trace)],
        "final_costs": [res.trace[-1]],
        "iterations_to_threshold": iterations_to_threshold([res.trace]),
        "wall_time": res.wall_time,
    }


def cmd_variance(cfg: ExperimentConfig, out: Path) -> dict:
    points = baseline.run_variance_experiment(cfg.variance, threads=cfg.threads)
    baseline.write_variance_csv(points, out / "variance.csv")
    baseline.write_variance_json(points, out / "variance.json")
    summary = {"points": [p.row() for p in points]}
    if len(cfg.variance.n_values) > 1:
        summary["log2_slopes"] = {s: baseline.log2_slope(points, s) for s in cfg.variance.steps}
    return summary


def cmd_noisy(cfg: ExperimentConfig, out: Path) -> dict:
    target = make_target(cfg.target)
    opts = NelderMeadConfig(max_evals=cfg.noisy.max_evals, initial_step=cfg.noisy.initial_step)
    run = noisy.train_qssm_noisy(target, cfg.train, cfg.noise, cfg.estimator, cfg.noisy.restarts, opts, cfg.threads)
    run.write_traces(out / "noisy_traces.csv")
    for layer in run.model.layers:
        _write_trace(out / f"trace_layer_{layer.k}.csv", layer.trace)
    run.model.save(out / "model.json")
    counts = noisy.noiseless_distribution(run.model, 8192, child_rng(cfg.seed, "counts"))
    return {
        "model": "qssm-noisy",
        "fidelity": run.model.fidelity,
        "widths": run.model.widths,
        "iterations": run.model.iterations,
        "chosen_restarts": run.chosen,
        "noiseless_counts": {format(i, f"0{cfg.target.n}b"): int(c) for i, c in enumerate(counts) if c},
        "wall_time": run.model.wall_time,
    }


def cmd_rank_seq(cfg: ExperimentConfig, out: Path) -> dict:
    ranks = rank_sequence(make_target(cfg.target), cfg.train.rank_tol).as_list()
    print("{" + ",".join(map(str, ranks)) + "}")
    return {"ranks": ranks}


def cmd_haar_check(cfg: ExperimentConfig, out: Path) -> dict:
    results = []
    for d in cfg.haar.dims:
        ops = haar.moment_operators(d, child_rng(cfg.seed, "haar-ops", d))
        est = haar.estimate_moments(*ops, cfg.haar.samples, child_rng(cfg.seed, "haar", d))
        exact = haar.closed_forms(*ops)
        for name in exact:
            rel = abs(est[name] - exact[name]) / abs(exact[name])
            results.append({"dim": d, "moment": name, "estimate": complex(est[name]).real,
                            "exact": complex(exact[name]).real, "relative_error": float(rel)})
    return {"samples": cfg.haar.samples, "moments": results}


COMMANDS = {
    "learn": cmd_learn,
    "learn-global": cmd_learn_global,
    "variance": cmd_variance,
    "noisy": cmd_noisy,
    "rank-seq": cmd_rank_seq,
    "haar-check": cmd_haar_check,
}


def run(config_path, seed=None, out=None, threads=None) -> int:
    out_dir = Path(out) if out else None
    try:
        cfg = load_config(config_path, {"seed": seed, "out": out, "threads": threads})
        out_dir = Path(cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        summary = _base_summary(cfg)
        summary.update(COMMANDS[cfg.command](cfg, out_dir))
        _write_json(out_dir / "summary.json", summary)
        return 0
    except ConfigError as exc:
        return _fail(exc, "config", out_dir, 2, exc.errors)
    except (QSSMError, OSError, ValueError) as exc:
        return _fail(exc, type(exc).__name__, out_dir, 1)


def _fail(exc, kind, out_dir, code, fields=None) -> int:
    err = {"error": kind, "message": str(exc)}
    if fields is not None:
        err["fields"] = fields
    print(json.dumps(err), file=sys.stderr)
    if out_dir is not None:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            _write_json(out_dir / "error.json", err)
        except OSError:
            pass
    return code


def compare(a_path, b_path) -> dict:
    """Fidelity and iterations-to-threshold deltas (first minus second)."""
    a = json.loads(Path(a_path).read_text())
    b = json.loads(Path(b_path).read_text())
    ta, tb = a["config"]["target"], b["config"]["target"]
    if ta != tb:
        raise ArgumentError(f"results target different states: {ta} vs {tb}")
    budget = ("max_iters", "depth", "lr")
    if any(a["config"]["train"][k] != b["config"]["train"][k] for k in budget):
        raise ArgumentError("results use different iteration budgets")
    ia, ib = a.get("iterations_to_threshold"), b.get("iterations_to_threshold")
    return {
        "target": ta,
        "models": [a.get("model"), b.get("model")],
        "fidelity": [a["fidelity"], b["fidelity"]],
        "fidelity_delta": a["fidelity"] - b["fidelity"],
        "iterations_to_threshold": [ia, ib],
        "iterations_to_threshold_delta": None if ia is None or ib is None else ia - ib,
        "fidelity_threshold": FIDELITY_THRESHOLD,
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qssm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="cmd", required=True)
    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--out")
    p_run.add_argument("--threads", type=int)
    p_cmp = sub.add_parser("compare", help="compare two learn summaries")
    p_cmp.add_argument("first")
    p_cmp.add_argument("second")
    p_cmp.add_argument("--out")
    args = parser.parse_args(argv)
    if args.cmd == "run":
        return run(args.config, args.seed, args.out, args.threads)
    out_dir = Path(args.out) if args.out else None
    try:
        result = compare(args.first, args.second)
    except (QSSMError, OSError, ValueError, KeyError) as exc:
        return _fail(exc, type(exc).__name__, out_dir, 1)
    text = json.dumps(result, indent=2)
    print(text)
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "comparison.json").write_text(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
