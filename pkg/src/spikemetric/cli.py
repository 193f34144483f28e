"""Command-line entry point: train | predict | report | bench | synth.

A flat ``key = value`` config file can supply any long-flag default; explicit
command-line flags win.  Exit codes: 0 success, 1 non-convergence (results
still written), 2 usage or validation error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .errors import (
    BothInfeasible,
    ConvergenceFailure,
    NumericalBreakdown,
    SingularSystem,
    SpikeMetricError,
)
from .figures import plot_bench_curves, plot_metric_diagonal, plot_metric_heatmap
from .gdpa import GdpaConfig
from .glmnn import GlmnnConfig
from .glr import GlrConfig
from .graph import MetricMatrix
from .ingest import (
    FeatureTable,
    GroupLabels,
    SynthSpec,
    load_features,
    load_labels,
    save_features,
    save_labels,
    split_balanced,
    synth_generate,
)
from .interpret import SiftIndexMap, diag_importance, emit_report


def save_metric(metric: MetricMatrix, path):
    with open(path, "w") as fh:
        for row in metric.entries:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_metric(path) -> MetricMatrix:
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rows.append([float(v) for v in line.split(",")])
    return MetricMatrix(np.array(rows))


def _read_config_file(path):
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _apply_config_file(args):
    if not getattr(args, "config", None):
        return
    overrides = _read_config_file(args.config)
    defaults = args._defaults  # filled by _parse: flag name -> parser default
    for key, raw in overrides.items():
        if key not in defaults:
            raise ValueError(f"unknown config key {key!r}")
        # a flag left at its parser default is eligible for the file value
        if getattr(args, key) == defaults[key]:
            current = defaults[key]
            caster = type(current) if current is not None else str
            setattr(args, key, raw if caster is str else caster(raw))


def _add_common(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=".", help="output directory")


def _add_model_flags(parser):
    parser.add_argument("--objective", default="glr",
                        choices=["glr", "glmnn-oracle", "glmnn-gdpa"])
    parser.add_argument("--topology", default="sparse", choices=["sparse", "complete"])
    parser.add_argument("--dt", type=int, default=5)
    parser.add_argument("--dv", type=int, default=5)
    parser.add_argument("--dvt", type=int, default=4)
    parser.add_argument("--mu", type=float, default=0.1)
    parser.add_argument("--rho", type=float, default=1.0)
    parser.add_argument("--gamma", type=float, default=1.0)
    parser.add_argument("--eps-trace", type=float, default=1e-3)
    parser.add_argument("--rel-tol", type=float, default=1e-4)
    parser.add_argument("--max-iters", type=int, default=500)


def _parse(argv):
    parser = argparse.ArgumentParser(prog="spikemetric")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="learn a metric matrix")
    p_train.add_argument("--features", required=True)
    p_train.add_argument("--labels", required=True)
    p_train.add_argument("--n-train", type=int, default=0,
                         help="balanced training subset size (0 = all bins)")
    _add_model_flags(p_train)
    _add_common(p_train)

    p_pred = sub.add_parser("predict", help="harmonic inference for validation bins")
    p_pred.add_argument("--metric", required=True)
    p_pred.add_argument("--features", required=True)
    p_pred.add_argument("--labels", required=True)
    p_pred.add_argument("--n-train", type=int, default=0)
    p_pred.add_argument("--n-val", type=int, default=0)
    _add_model_flags(p_pred)
    _add_common(p_pred)

    p_rep = sub.add_parser("report", help="interpretability report for a metric")
    p_rep.add_argument("--metric", required=True)
    p_rep.add_argument("--threshold", type=float, default=0.3)
    p_rep.add_argument("--top-pairs", type=int, default=10)
    p_rep.add_argument("--sift-map", action="store_true",
                       help="decode feature indices as 3D-SIFT (subregion, direction)")
    p_rep.add_argument("--sift-directions", type=int, default=12)
    _add_common(p_rep)

    p_bench = sub.add_parser("bench", help="randomized P_t x P_v trial harness")
    p_bench.add_argument("--features")
    p_bench.add_argument("--labels")
    p_bench.add_argument("--synth-k", type=int, default=20)
    p_bench.add_argument("--synth-n", type=int, default=400)
    p_bench.add_argument("--synth-informative", type=int, default=4)
    p_bench.add_argument("--synth-noise", type=float, default=0.0)
    p_bench.add_argument("--objectives", default="glr",
                         help="comma list from glr,glmnn-oracle,glmnn-gdpa,knn")
    p_bench.add_argument("--n-train", default="20", help="comma list of sizes")
    p_bench.add_argument("--n-val", type=int, default=20)
    p_bench.add_argument("--topologies", default="sparse",
                         help="comma list from sparse,complete")
    p_bench.add_argument("--pt", type=int, default=5)
    p_bench.add_argument("--pv", type=int, default=5)
    p_bench.add_argument("--baseline", choices=["knn"], default=None)
    p_bench.add_argument("--k", type=int, default=5, help="kNN baseline neighbors")
    _add_model_flags(p_bench)
    _add_common(p_bench)

    p_synth = sub.add_parser("synth", help="write a synthetic planted-rule dataset")
    p_synth.add_argument("--k", type=int, default=20)
    p_synth.add_argument("--n-points", type=int, default=400)
    p_synth.add_argument("--n-informative", type=int, default=4)
    p_synth.add_argument("--noise-rate", type=float, default=0.0)
    _add_common(p_synth)

    args = parser.parse_args(argv)
    args._defaults = {
        action.dest: action.default
        for action in sub.choices[args.command]._actions
        if action.dest != "help"
    }
    _apply_config_file(args)
    return args


def _run_config(args, n_train=None, topology=None, objective=None) -> bench_mod.RunConfig:
    glmnn = GlmnnConfig(rho=args.rho, gamma=args.gamma, eps_trace=args.eps_trace)
    return bench_mod.RunConfig(
        objective=objective or getattr(args, "objective", "glr"),
        topology_mode=topology or getattr(args, "topology", "sparse"),
        d_t=args.dt, d_v=args.dv, d_vt=args.dvt,
        n_train=n_train or getattr(args, "n_train", 20) or 20,
        n_val=getattr(args, "n_val", 20) or 20,
        p_t=getattr(args, "pt", 5), p_v=getattr(args, "pv", 5),
        seed=args.seed, knn_k=getattr(args, "k", 5),
        glr=GlrConfig(mu=args.mu, max_iters=args.max_iters, rel_tol=min(args.rel_tol, 1e-5)),
        gdpa=GdpaConfig(rel_tol=args.rel_tol, glmnn=glmnn),
    )


def _load_dataset(args):
    table = load_features(args.features)
    bins, y = load_labels(args.labels)
    if len(bins) != table.n_bins:
        order = np.argsort(bins)
        bins, y = bins[order], y[order]
    return table, bins, y


def cmd_train(args):
    table = load_features(args.features)
    _bins, y = load_labels(args.labels)
    labels = GroupLabels(y)
    config = _run_config(args)
    if args.n_train:
        train_ids, _ = split_balanced(labels, args.n_train, 0, args.seed)
    else:
        train_ids = np.arange(table.n_bins)
    metric, lp_count, final_obj, converged = bench_mod.train_metric(
        table.vectors[train_ids], labels.labels[train_ids], config
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_metric(metric, out / "M.csv")
    with open(out / "diagnostics.json", "w") as fh:
        json.dump({"objective": config.objective, "final_objective": final_obj,
                   "lp_count": lp_count, "converged": converged,
                   "n_train": int(len(train_ids))}, fh, indent=2)
        fh.write("\n")
    print(f"wrote {out / 'M.csv'} (objective={config.objective}, "
          f"final={final_obj:.6g}, converged={converged})")
    return 0 if converged else 1


def cmd_predict(args):
    metric = load_metric(args.metric)
    table = load_features(args.features)
    bins_l, y_l = load_labels(args.labels)
    all_bins = set(range(table.n_bins))
    labeled = set(int(b) for b in bins_l)
    config = _run_config(args)

    if labeled == all_bins:
        if not (args.n_train and args.n_val):
            raise ValueError("--n-train and --n-val required when every bin is labeled")
        order = np.argsort(bins_l)
        labels = GroupLabels(y_l[order])
        train_ids, val_ids = split_balanced(labels, args.n_train, args.n_val, args.seed)
        y_train = labels.labels[train_ids]
        y_true_val = labels.labels[val_ids]
    else:
        train_ids = np.sort(bins_l)
        val_ids = np.array(sorted(all_bins - labeled), dtype=int)
        lookup = dict(zip(bins_l.tolist(), y_l.tolist()))
        y_train = np.array([lookup[int(b)] for b in train_ids])
        y_true_val = None
    config = replace(config, n_train=len(train_ids), n_val=len(val_ids))

    result = bench_mod.predict_validation(
        metric, table.vectors[train_ids], y_train, table.vectors[val_ids],
        config, y_true_val,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_labels(GroupLabels(result.y_hat), out / "predictions.csv", bins=val_ids)
    if result.accuracy is not None:
        print(f"accuracy: {result.accuracy:.4f}")
    print(f"wrote {out / 'predictions.csv'}")
    return 0


def cmd_report(args):
    metric = load_metric(args.metric)
    index_map = None
    if args.sift_map:
        index_map = SiftIndexMap(n_directions=args.sift_directions)
    report = diag_importance(metric, args.threshold, n_pairs=args.top_pairs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    emit_report(report, out / "report.json", index_map)
    plot_metric_diagonal(metric, args.threshold, out / "metric_diagonal.png")
    plot_metric_heatmap(metric, args.threshold, out / "metric_heatmap.png")
    print(f"wrote {out / 'report.json'} and figures "
          f"({len(report.dominant)} dominant features)")
    return 0


def cmd_bench(args):
    if args.features:
        if not args.labels:
            raise ValueError("--labels required with --features")
        table, _bins, y = _load_dataset(args)
        features, labels = table.vectors, GroupLabels(y)
    else:
        dataset, _truth = synth_generate(SynthSpec(
            K=args.synth_k, n_points=args.synth_n,
            n_informative=args.synth_informative,
            noise_rate=args.synth_noise, seed=args.seed,
        ))
        features, labels = dataset.features.vectors, dataset.labels

    objectives = [o.strip() for o in args.objectives.split(",") if o.strip()]
    if args.baseline == "knn" and "knn" not in objectives:
        objectives.append("knn")
    n_train_values = [int(v) for v in str(args.n_train).split(",")]
    modes = [m.strip() for m in args.topologies.split(",") if m.strip()]
    base = _run_config(args, n_train=n_train_values[0])

    trial_rows, summaries = bench_mod.sweep(features, labels, base, objectives,
                                            n_train_values, modes)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    bench_mod.write_bench_csv(out / "bench.csv", trial_rows, summaries)
    plot_bench_curves(summaries, out / "bench_accuracy.png")
    plot_bench_curves(summaries, out / "bench_runtime.png",
                      y_key="wall_ms_mean", y_label="training + inference wall ms")
    for s in summaries:
        print(f"{s['setting']}: accuracy {s['accuracy_mean']:.3f} "
              f"+/- {s['accuracy_std']:.3f}, {s['wall_ms_mean']:.0f} ms")
    print(f"wrote {out / 'bench.csv'} and figures")
    return 0


def cmd_synth(args):
    spec = SynthSpec(K=args.k, n_points=args.n_points,
                     n_informative=args.n_informative,
                     noise_rate=args.noise_rate, seed=args.seed)
    dataset, truth = synth_generate(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_features(dataset.features, out / "features.csv")
    save_labels(dataset.labels, out / "labels.csv")
    with open(out / "truth.json", "w") as fh:
        json.dump({
            "informative_dims": list(truth.informative_dims),
            "weights": [float(w) for w in truth.weights],
            "flipped": list(truth.flipped),
            "spec": {"K": spec.K, "n_points": spec.n_points,
                     "n_informative": spec.n_informative,
                     "noise_rate": spec.noise_rate, "seed": spec.seed},
        }, fh, indent=2)
        fh.write("\n")
    print(f"wrote features.csv, labels.csv, truth.json to {out}")
    return 0


_COMMANDS = {
    "train": cmd_train,
    "predict": cmd_predict,
    "report": cmd_report,
    "bench": cmd_bench,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    try:
        args = _parse(argv if argv is not None else sys.argv[1:])
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (NumericalBreakdown, ConvergenceFailure, SingularSystem, BothInfeasible) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (SpikeMetricError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
