"""Command-line orchestration: synth | clean | train | eval | explain | report."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import plots
from .data import Dataset, Schema, encode, labels_array, load_csv, save_csv
from .errors import ComputationError, DemandScopeError, InvalidConfig, MissingArtifact, ValidationError
from .explain import (
    BackgroundSet,
    class_summary,
    explain_instance,
    global_summary,
    instance_report,
    waterfall,
)
from .metrics import roc_curve
from .pipeline import PipelineConfig, cross_validate_with_probs, fit_pipeline, parse_config_file
from .preprocess import filter_outliers
from .spacenet import load_checkpoint, save_checkpoint
from .synth import GeneratorConfig, default_schema, generate

CLASS_NAMES = ("no_travel", "moon", "suborbital", "orbital")


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig()
    if args.config:
        config.apply_overrides(parse_config_file(args.config))
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise InvalidConfig(f"--set expects key=value, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if overrides:
        config.apply_overrides(overrides)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    return config


def _out(config: PipelineConfig, name: str) -> str:
    os.makedirs(config.out_dir, exist_ok=True)
    return os.path.join(config.out_dir, name)


def _resolve_input(config: PipelineConfig, prefer_cleaned: bool = True) -> str:
    if prefer_cleaned:
        cleaned = os.path.join(config.out_dir, "cleaned.csv")
        if os.path.exists(cleaned):
            return cleaned
    if os.path.exists(config.input_csv):
        return config.input_csv
    candidate = os.path.join(config.out_dir, config.input_csv)
    if os.path.exists(candidate):
        return candidate
    raise MissingArtifact(f"input CSV not found: {config.input_csv}")


def _load_schema(config: PipelineConfig) -> Schema:
    path = os.path.join(config.out_dir, "schema.json")
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return Schema.from_dict(json.load(fh))
    return default_schema()


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)


def cmd_synth(config: PipelineConfig) -> None:
    gen = GeneratorConfig(
        n=config.synth_n,
        seed=config.seed,
        noise_scale=config.synth_noise_scale,
        outlier_rate=config.synth_outlier_rate,
    )
    result = generate(gen)
    save_csv(result.dataset, _out(config, "dataset.csv"))
    with open(_out(config, "truth.json"), "w", encoding="utf-8") as fh:
        fh.write(result.truth.to_json())
    _write_json(_out(config, "schema.json"), result.dataset.schema.to_dict())
    print(f"wrote {result.dataset.n} rows to {config.out_dir}/dataset.csv")


def cmd_clean(config: PipelineConfig) -> None:
    schema = _load_schema(config)
    dataset = load_csv(_resolve_input(config, prefer_cleaned=False), schema)
    columns = None
    if config.clean_columns != "all":
        columns = [c.strip() for c in config.clean_columns.split(",") if c.strip()]
    cleaned, report = filter_outliers(dataset, columns)
    save_csv(cleaned, _out(config, "cleaned.csv"))
    payload = report.to_dict()
    payload["config_digest"] = config.digest()
    _write_json(_out(config, "cleaning_report.json"), payload)
    print(f"kept {report.kept} rows, dropped {len(report.dropped_row_indices)}")


def cmd_train(config: PipelineConfig) -> None:
    schema = _load_schema(config)
    dataset = load_csv(_resolve_input(config), schema)
    matrix = encode(dataset)
    labels = labels_array(dataset)
    fitted = fit_pipeline(matrix, labels, config, config.seed, use_top_k=True)
    save_checkpoint(
        _out(config, "checkpoint.json"),
        fitted.model_params,
        fitted.model_config,
        column_names=fitted.transform(matrix).column_names,
    )
    _write_json(
        _out(config, "preprocess.json"),
        {
            "mean": fitted.standardizer.mean.tolist(),
            "std": fitted.standardizer.std.tolist(),
            "column_names": list(fitted.standardizer.column_names),
            "selected_features": list(fitted.selected_features or ()),
            "config_digest": config.digest(),
        },
    )
    _write_json(
        _out(config, "history.json"),
        {
            "train_loss": fitted.history.train_loss,
            "config_digest": config.digest(),
        },
    )
    with open(_out(config, "importance.csv"), "w", encoding="utf-8") as fh:
        fh.write(fitted.importance.to_csv())
    print(f"final training loss {fitted.history.train_loss[-1]:.4f}")


def cmd_eval(config: PipelineConfig) -> None:
    schema = _load_schema(config)
    dataset = load_csv(_resolve_input(config), schema)
    summary_all, folds_all = cross_validate_with_probs(dataset, config, use_top_k=False)
    summary_top, folds_top = cross_validate_with_probs(dataset, config, use_top_k=True)
    payload = {
        "all_features": summary_all.to_dict(),
        "top_k": summary_top.to_dict(),
        "k_features": config.select_top_k,
        "formatted": {
            "all_features": summary_all.format(),
            "top_k": summary_top.format(),
        },
        "config_digest": config.digest(),
    }
    _write_json(_out(config, "eval.json"), payload)
    for fold, (fold_labels, probs) in enumerate(folds_top):
        lines = ["class,threshold,fpr,tpr"]
        for c in range(probs.shape[1]):
            curve = roc_curve(probs[:, c], (fold_labels == c).astype(int))
            for i in range(curve.thresholds.size):
                lines.append(f"{c},{curve.thresholds[i]!r},{curve.fpr[i]!r},{curve.tpr[i]!r}")
        with open(_out(config, f"roc_fold{fold}.csv"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    print(f"all features: {summary_all.format()}  top-{config.select_top_k}: {summary_top.format()}")


def cmd_explain(config: PipelineConfig, checkpoint: str | None = None) -> None:
    schema = _load_schema(config)
    dataset = load_csv(_resolve_input(config), schema)
    checkpoint = checkpoint or os.path.join(config.out_dir, "checkpoint.json")
    meta_path = os.path.join(config.out_dir, "preprocess.json")
    if not os.path.exists(checkpoint) or not os.path.exists(meta_path):
        raise MissingArtifact("run `train` first: checkpoint.json / preprocess.json missing")
    params, model_config, _ = load_checkpoint(checkpoint)
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)

    from .preprocess import Standardizer, apply_standardizer

    matrix = encode(dataset)
    standardizer = Standardizer(
        np.array(meta["mean"]),
        np.array(meta["std"]),
        matrix.continuous_mask,
        tuple(meta["column_names"]),
        dataset.n,
    )
    transformed = apply_standardizer(standardizer, matrix)
    if meta["selected_features"]:
        transformed = transformed.select_features(meta["selected_features"])
    groups = transformed.feature_groups()

    from .spacenet import predict_proba

    def model_fn(rows):
        return predict_proba(params, model_config, rows)

    rng = np.random.default_rng(config.seed)
    background = BackgroundSet.sample(transformed.values, config.explain_background, config.seed)
    n_explain = min(config.explain_instances, dataset.n)
    instance_idx = np.sort(rng.choice(dataset.n, size=n_explain, replace=False))
    feature_order = [name for name, _ in groups]
    explanations = []
    for i in instance_idx:
        raw = tuple(
            dataset.rows[int(i)][dataset.schema.index_of(name)] for name in feature_order
        )
        explanations.append(
            explain_instance(
                model_fn,
                transformed.values[int(i)],
                background,
                groups,
                index=int(i),
                raw_values=raw,
                mode=config.explain_mode,
                n_permutations=config.explain_n_permutations,
                seed=config.seed,
            )
        )

    # family 1: global summary
    summary = global_summary(explanations)
    ordered = summary.ranked_features()
    _write_json(
        _out(config, "global_summary.json"),
        {
            "features": ordered,
            "mean_abs_phi": {
                summary.feature_names[i]: summary.mean_abs[i].tolist() for i in summary.order
            },
            "config_digest": config.digest(),
        },
    )
    with open(_out(config, "global_summary.csv"), "w", encoding="utf-8") as fh:
        fh.write("feature," + ",".join(CLASS_NAMES) + "\n")
        for i in summary.order:
            row = ",".join(repr(v) for v in summary.mean_abs[i])
            fh.write(f"{summary.feature_names[i]},{row}\n")
    with open(_out(config, "global_summary.svg"), "w", encoding="utf-8") as fh:
        fh.write(
            plots.stacked_bar_svg(
                ordered,
                summary.mean_abs[list(summary.order)],
                CLASS_NAMES,
                "mean |attribution| per feature",
            )
        )

    # family 2: per-class local summaries
    for c, cname in enumerate(CLASS_NAMES):
        cs = class_summary(explanations, c)
        with open(_out(config, f"class_summary_{cname}.csv"), "w", encoding="utf-8") as fh:
            fh.write("feature,instance,phi,value\n")
            for fi, fname in enumerate(cs.feature_names):
                for j in range(cs.phi.shape[1]):
                    fh.write(f"{fname},{j},{cs.phi[fi, j]!r},{cs.values[fi, j]!r}\n")
        with open(_out(config, f"class_summary_{cname}.svg"), "w", encoding="utf-8") as fh:
            fh.write(
                plots.beeswarm_svg(
                    list(cs.feature_names),
                    list(cs.phi),
                    list(cs.values),
                    f"per-instance attribution, class {cname}",
                )
            )

    # family 3: instance explanation (first explained instance)
    first = explanations[0]
    record = waterfall(first)
    payload = instance_report(first, record)
    payload["config_digest"] = config.digest()
    _write_json(_out(config, "instance.json"), payload)
    with open(_out(config, "instance.svg"), "w", encoding="utf-8") as fh:
        fh.write(
            plots.waterfall_svg(
                record,
                f"instance {first.index}, class {CLASS_NAMES[record.class_index]} "
                f"p={first.class_probs[record.class_index]:.2f}",
            )
        )
    print(f"explained {len(explanations)} instances; top feature: {ordered[0]}")


def cmd_report(config: PipelineConfig) -> None:
    eval_path = os.path.join(config.out_dir, "eval.json")
    if not os.path.exists(eval_path):
        raise MissingArtifact("eval.json missing: run `eval` first")
    with open(eval_path, encoding="utf-8") as fh:
        evaluation = json.load(fh)
    lines = [
        "# Demand forecasting report",
        "",
        f"Config digest: `{evaluation['config_digest']}`",
        "",
        "## Cross-validated macro one-vs-rest ROC-AUC",
        "",
        "| feature set | mean ± std | per fold |",
        "|---|---|---|",
    ]
    for key, label in (("all_features", "all features"), ("top_k", f"top {evaluation['k_features']}")):
        d = evaluation[key]
        folds = ", ".join(f"{x:.3f}" for x in d["per_fold"])
        lines.append(f"| {label} | {evaluation['formatted'][key]} | {folds} |")
    lines.append("")
    importance_path = os.path.join(config.out_dir, "importance.csv")
    if os.path.exists(importance_path):
        lines.append("## Forest feature importance (top list)")
        lines.append("")
        with open(importance_path, encoding="utf-8") as fh:
            rows = [line.strip().split(",") for line in fh.readlines()[1:] if line.strip()]
        rows.sort(key=lambda r: int(r[2]))
        lines.append("| rank | feature | score |")
        lines.append("|---|---|---|")
        for name, score, rank in rows[: config.select_top_k]:
            lines.append(f"| {int(rank) + 1} | {name} | {float(score):.4f} |")
        lines.append("")
    global_path = os.path.join(config.out_dir, "global_summary.json")
    if os.path.exists(global_path):
        with open(global_path, encoding="utf-8") as fh:
            gs = json.load(fh)
        lines.append("## Attribution summary")
        lines.append("")
        lines.append(
            "Features by mean absolute attribution (rank order can shift by a few "
            "places across training initializations): "
            + ", ".join(gs["features"][:10])
        )
        lines.append("")
    with open(_out(config, "report.md"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    print(f"wrote {config.out_dir}/report.md")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demandscope")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("synth", "clean", "train", "eval", "explain", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--set", action="append", metavar="K=V", help="override a config key")
        if name == "explain":
            p.add_argument("--checkpoint", default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if args.command == "synth":
            cmd_synth(config)
        elif args.command == "clean":
            cmd_clean(config)
        elif args.command == "train":
            cmd_train(config)
        elif args.command == "eval":
            cmd_eval(config)
        elif args.command == "explain":
            cmd_explain(config, args.checkpoint)
        elif args.command == "report":
            cmd_report(config)
    except ValidationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ComputationError, DemandScopeError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
