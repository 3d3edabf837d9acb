"""Command-line interface wiring the library into an experiment pipeline.

Subcommands: synth, train, predict, sweep-threshold, sweep-size. Every
command is deterministic given its flags and seeds; replaying a command
produces byte-identical output files.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import data as datamod
from . import ensemble, harness, persist
from .learners import GradientParams, LearnerConfig, TreeParams

UNCERTAIN = "uncertain"


def _learner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--learner", choices=("tree", "logistic", "linear_svm"),
                        default="tree")
    parser.add_argument("--max-depth", type=int, default=None)
    parser.add_argument("--min-samples-split", type=int, default=2)
    parser.add_argument("--feature-subsample", choices=("all", "sqrt"),
                        default="sqrt")
    parser.add_argument("--learning-rate", type=float, default=0.1)
    parser.add_argument("--max-iters", type=int, default=1000)
    parser.add_argument("--tolerance", type=float, default=1e-6)
    parser.add_argument("--l2", type=float, default=1e-4)


def _ensemble_flags(parser: argparse.ArgumentParser) -> None:
    _learner_flags(parser)
    parser.add_argument("--m", type=int, default=25,
                        help="number of base classifiers")
    parser.add_argument("--master-seed", type=int, default=0)
    parser.add_argument("--posterior-mode",
                        choices=(ensemble.HARD_VOTE, ensemble.SOFT_AVERAGE),
                        default=ensemble.HARD_VOTE)
    parser.add_argument("--log-base", choices=("2", "e"), default="2")
    parser.add_argument("--workers", type=int, default=1)


def _ensemble_config(args, m=None) -> ensemble.EnsembleConfig:
    base = LearnerConfig(
        kind=args.learner,
        tree=TreeParams(max_depth=args.max_depth,
                        min_samples_split=args.min_samples_split,
                        feature_subsample=args.feature_subsample),
        gradient=GradientParams(learning_rate=args.learning_rate,
                                max_iters=args.max_iters,
                                tolerance=args.tolerance, l2=args.l2),
    )
    return ensemble.EnsembleConfig(
        base=base,
        m=args.m if m is None else m,
        master_seed=args.master_seed,
        posterior_mode=args.posterior_mode,
        entropy_log_base=2.0 if args.log_base == "2" else math.e,
    )


def _load(args, attr="data"):
    schema, _ = datamod.load_manifest(args.manifest)
    return datamod.load_csv(getattr(args, attr), schema)


def _cmd_synth(args) -> int:
    spec = datamod.SyntheticSpec(
        regime=args.regime, n_train=args.n_train, n_test=args.n_test,
        n_unknown=args.n_unknown, d=args.d,
        class_separation=args.class_separation,
        ood_distance=args.ood_distance, seed=args.seed)
    taxonomy = datamod.generate_synthetic(spec)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    schema = datamod.CsvSchema(
        label_column="label", app_id_column="app_id",
        feature_columns=tuple(f"f{i}" for i in range(spec.d)),
        class_names=("benign", "malware"))
    datamod.write_csv(taxonomy.train, out / "train.csv", schema)
    datamod.write_csv(taxonomy.test_known, out / "test_known.csv", schema)
    manifest = {
        "classes": list(schema.class_names),
        "label_column": schema.label_column,
        "app_id_column": schema.app_id_column,
        "feature_columns": list(schema.feature_columns),
        "unknown_app_ids": [],
    }
    if taxonomy.unknown is not None:
        datamod.write_csv(taxonomy.unknown, out / "unknown.csv", schema)
        manifest["unknown_app_ids"] = [datamod.UNKNOWN_APP_ID]
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.regime} datasets to {out}")
    return 0


def _cmd_train(args) -> int:
    train_data = _load(args)
    config = _ensemble_config(args)
    model = ensemble.fit(config, train_data, n_workers=args.workers)
    persist.save_model(model, args.out)
    summary = model.summary()
    print(f"trained m={summary['m']} {args.learner} ensemble "
          f"on {len(train_data)} samples -> {args.out}")
    if summary["n_not_converged"]:
        print(f"warning: {summary['n_not_converged']} base classifiers "
              f"did not converge", file=sys.stderr)
    return 0


def _cmd_predict(args) -> int:
    model = persist.load_model(args.model)
    eval_data = _load(args)
    names = model.class_names or tuple(
        str(i) for i in range(model.n_classes))
    print("index\tapp_id\tverdict\tentropy")
    for i in range(len(eval_data)):
        verdict = ensemble.gate(model, eval_data.x[i], args.threshold)
        name = (UNCERTAIN if verdict.label is None else names[verdict.label])
        print(f"{i}\t{eval_data.app_ids[i]}\t{name}\t"
              f"{verdict.prediction.entropy:.6f}")
    return 0


def _cmd_sweep_threshold(args) -> int:
    model = persist.load_model(args.model)
    test_known = _load(args, "test_known")
    unknown = None
    if args.unknown is not None:
        unknown = _load(args, "unknown")
    taxonomy = datamod.DatasetTaxonomy(train=test_known, test_known=test_known,
                                       unknown=unknown)
    grid = harness.default_threshold_grid(model.n_classes,
                                          model.config.entropy_log_base,
                                          points=args.grid_points)
    report = harness.run_threshold_sweep(model, taxonomy, grid,
                                         positive_class=args.positive_class)
    harness.emit_report(report, args.out, fmt=args.format)
    print(f"wrote threshold sweep ({len(grid)} points) -> {args.out}")
    return 0


def _cmd_sweep_size(args) -> int:
    train_data = _load(args)
    schema, _ = datamod.load_manifest(args.manifest)
    eval_data = datamod.load_csv(args.eval, schema)
    m_grid = [int(v) for v in args.m_grid.split(",") if v.strip()]
    config = _ensemble_config(args, m=max(m_grid))
    report = harness.run_stability_sweep(config, train_data, eval_data, m_grid,
                                         n_workers=args.workers)
    harness.emit_report(report, args.out, fmt=args.format)
    print(f"wrote stability sweep over M={m_grid} -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voteguard",
        description="Bagging ensembles with vote-entropy rejection of "
                    "uncertain and unknown workloads.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--regime", choices=("ood", "overlap"), required=True)
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--n-unknown", type=int, default=500)
    p.add_argument("--d", type=int, default=8)
    p.add_argument("--class-separation", type=float, default=6.0)
    p.add_argument("--ood-distance", type=float, default=20.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("train", help="fit an ensemble and save it")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    _ensemble_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="per-sample verdicts with entropy")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--threshold", type=float, required=True,
                   help="reject predictions whose entropy exceeds this")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("sweep-threshold",
                       help="rejection rates and metrics vs entropy threshold")
    p.add_argument("--model", required=True)
    p.add_argument("--test-known", required=True, dest="test_known")
    p.add_argument("--unknown", default=None)
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid-points", type=int,
                   default=harness.DEFAULT_GRID_POINTS)
    p.add_argument("--positive-class", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=_cmd_sweep_threshold)

    p = sub.add_parser("sweep-size",
                       help="entropy statistics vs ensemble size")
    p.add_argument("--data", required=True, help="training CSV")
    p.add_argument("--eval", required=True, help="evaluation CSV")
    p.add_argument("--manifest", required=True)
    p.add_argument("--m-grid", required=True,
                   help="comma-separated ensemble sizes, e.g. 2,4,8,16")
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    _ensemble_flags(p)
    p.set_defaults(func=_cmd_sweep_size)
    return parser


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    raise SystemExit(cli_main())


if __name__ == "__main__":
    main()
