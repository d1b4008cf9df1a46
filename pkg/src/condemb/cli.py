"""Command-line entry points.

Subcommands: synth, compose, train, eval, isotropy, inspect, run. Reports
are JSON, tabular dumps are CSV, vector files use the store format. Every
subcommand is deterministic given its inputs and seeds; nothing here writes
timestamps or machine-specific fields into outputs.

Exit codes: 0 success, 2 validation error, 3 missing data, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from . import compose as compose_mod
from . import dataset as dataset_mod
from . import embstore, isotropy, metrics, projection, synth
from .compose import CompositionVariant
from .embstore import RowKey
from .errors import CondembError, ConfigInvalid, MissingRow, ZeroVector


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _write_history_csv(path: str | Path, history: list[dict]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_spearman"])
        for row in history:
            writer.writerow([row["epoch"], repr(row["train_loss"]), repr(row["val_spearman"])])


def _best_entry(history: list[dict]) -> dict:
    """Earliest history entry achieving the maximum validation Spearman."""
    best = history[0]
    for row in history[1:]:
        if row["val_spearman"] > best["val_spearman"]:
            best = row
    return best


# --- synth -------------------------------------------------------------------


def cmd_synth(args: argparse.Namespace) -> int:
    config = synth.SynthConfig(
        n_records=args.n,
        d=args.d,
        latent=args.latent,
        noise_sigma=args.noise,
        n_conditions=args.n_conditions,
        seed=args.seed,
        bias_scale=args.bias_scale,
        quantize_ratings=not args.no_quantize,
    )
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records, store, ground_truth = synth.generate(config)
    dataset_mod.write_dataset(records, out_dir / "dataset.jsonl")
    embstore.write_store(store, out_dir / "store.cemb")
    truth_model = projection.ProjectionModel(
        "linear", [ground_truth], dropout_rate=0.0, seed=config.seed
    )
    projection.save_model(truth_model, out_dir / "ground_truth.ckpt")
    _write_json(
        out_dir / "synth.json",
        {
            "n_records": config.n_records,
            "d": config.d,
            "latent": config.latent,
            "noise_sigma": config.noise_sigma,
            "n_conditions": config.n_conditions,
            "seed": config.seed,
            "bias_scale": config.bias_scale,
            "quantize_ratings": config.quantize_ratings,
            "store_rows": store.count,
        },
    )
    print(f"wrote {config.n_records} records and {store.count} store rows to {out_dir}")
    return 0


# --- compose -----------------------------------------------------------------


def cmd_compose(args: argparse.Namespace) -> int:
    records = dataset_mod.load_dataset(args.dataset)
    store = embstore.read_store(args.store)
    variant = CompositionVariant(base=args.variant, subtract_condition=args.subtract_c)
    pairs = compose_mod.compose_dataset(records, store, variant)
    compose_mod.write_pairs(pairs, args.out)
    print(f"composed {len(pairs)} pairs ({variant.name}) -> {args.out}.*")
    return 0


# --- train -------------------------------------------------------------------


def _train_config_from_args(args: argparse.Namespace) -> projection.TrainConfig:
    return projection.TrainConfig(
        k=args.k,
        lr=args.lr,
        batch_size=args.batch_size,
        dropout_rate=args.dropout,
        max_epochs=args.max_epochs,
        seed=args.seed,
        early_stop_patience=args.patience,
        hidden=args.hidden,
        leaky_slope=args.leaky_slope,
    )


def cmd_train(args: argparse.Namespace) -> int:
    pairs = compose_mod.read_pairs(args.pairs)
    if args.val_pairs:
        train_pairs = pairs
        val_pairs = compose_mod.read_pairs(args.val_pairs)
    else:
        split = dataset_mod.split_dataset(pairs, 1.0 - args.val_frac, args.seed)
        train_pairs, val_pairs = split.validation, split.test
    config = _train_config_from_args(args)
    model, history = projection.train(train_pairs, val_pairs, config, kind=args.kind)
    best = _best_entry(history) if history else {"epoch": 0, "val_spearman": None}
    projection.save_model(
        model, args.checkpoint, epoch=best["epoch"], val_spearman=best["val_spearman"]
    )
    _write_json(
        str(args.checkpoint) + ".split.json",
        {
            "train_ids": [p.record_id for p in train_pairs],
            "val_ids": [p.record_id for p in val_pairs],
            "seed": args.seed,
        },
    )
    if args.history_csv:
        _write_history_csv(args.history_csv, history)
    if args.report:
        _write_json(
            args.report,
            {
                "kind": args.kind,
                "k": args.k,
                "n_train": len(train_pairs),
                "n_val": len(val_pairs),
                "epochs_run": len(history),
                "best_epoch": best["epoch"],
                "best_val_spearman": best["val_spearman"],
            },
        )
    spearman_txt = (
        "n/a" if best["val_spearman"] is None else f"{best['val_spearman']:.4f}"
    )
    print(
        f"trained {args.kind} head (k={args.k}) for {len(history)} epochs; "
        f"best val spearman {spearman_txt} at epoch {best['epoch']}"
    )
    return 0


# --- eval --------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    pairs = compose_mod.read_pairs(args.pairs)
    model = None
    if args.model:
        model, _ = projection.load_model(args.model)
    report = metrics.evaluate(pairs, model)
    _write_json(args.report, report.to_dict())
    if args.scores_csv:
        scores = metrics.score_pairs(pairs, model)
        with Path(args.scores_csv).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["record_id", "score", "rating"])
            for pair, score in zip(pairs, scores):
                writer.writerow([pair.record_id, repr(float(score)), repr(pair.rating)])
    print(
        f"{report.model_id} on {report.n} pairs ({report.variant.name}): "
        f"spearman {report.spearman:.4f} ({100.0 * report.spearman:.2f} x100)"
    )
    return 0


# --- isotropy ----------------------------------------------------------------


def _store_matrix(path: str, roles: Optional[str]) -> np.ndarray:
    store = embstore.read_store(path)
    if not roles or roles == "all":
        return store.data.astype(np.float64)
    wanted = set(roles.split(","))
    unknown = wanted.difference(embstore.ROLES)
    if unknown:
        raise ConfigInvalid(f"unknown roles: {sorted(unknown)}")
    mask = [key.role in wanted for key in store.manifest]
    return store.data[np.asarray(mask, dtype=bool)].astype(np.float64)


def cmd_isotropy(args: argparse.Namespace) -> int:
    E_a = _store_matrix(args.store, args.roles)
    if args.store_b:
        E_b = _store_matrix(args.store_b, args.roles)
        result = isotropy.compare_subtraction(E_a, E_b, k=args.k, seed=args.seed)
        payload = {
            "delta_i_iso": result["delta_i_iso"],
            "report_with": result["report_with"].to_dict(),
            "report_without": result["report_without"].to_dict(),
        }
        summary = (
            f"i_iso {result['report_with'].i_iso:.4f} vs "
            f"{result['report_without'].i_iso:.4f} "
            f"(delta {result['delta_i_iso']:+.4f})"
        )
    else:
        rep = isotropy.report(E_a, k=args.k, seed=args.seed)
        payload = rep.to_dict()
        summary = (
            f"i_iso {rep.i_iso:.4f}, cos-to-mean {rep.mean_cos_to_mean:.3f} "
            f"+/- {rep.std_cos_to_mean:.3f} over {rep.n} rows"
        )
    _write_json(args.report, payload)
    if args.hist_csv:
        _, _, per_row = isotropy.cos_to_mean_stats(E_a)
        with Path(args.hist_csv).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "cos_to_mean"])
            for i, value in enumerate(per_row):
                writer.writerow([i, repr(float(value))])
    print(summary)
    return 0


# --- inspect -----------------------------------------------------------------


def inspect_record(
    record_id: str,
    store: embstore.EmbeddingStore,
    model: Optional[projection.ProjectionModel] = None,
) -> str:
    """Per-variant raw and projected cosine for one record, as text.

    Works from the store manifest alone; variants whose rows are absent are
    skipped. Read-only.
    """
    role_index = {
        key.role: i for i, key in enumerate(store.manifest) if key.record_id == record_id
    }
    if not role_index:
        raise MissingRow(f"record_id={record_id!r}")
    some_row = next(iter(role_index.values()))
    chash = store.manifest[some_row].condition_hash
    condition = store.conditions[some_row]
    uncond_key = RowKey("", "cond_unconditional", chash)
    has_uncond = store.has(uncond_key)
    uncond = embstore.lookup(store, uncond_key) if has_uncond else None

    lines = [f"record {record_id}  condition: {condition!r}"]
    header = f"  {'variant':<8} {'raw':>10}"
    if model is not None:
        header += f" {'projected':>10}"
    lines.append(header)
    role_pairs = {
        "cond": ("cond_given_s1", "cond_given_s2"),
        "sent": ("sent1_given_c", "sent2_given_c"),
    }
    for base, (r1, r2) in role_pairs.items():
        if r1 not in role_index or r2 not in role_index:
            continue
        e1 = store.data[role_index[r1]].astype(np.float64)
        e2 = store.data[role_index[r2]].astype(np.float64)
        for subtract in (False, True):
            if subtract and not has_uncond:
                continue
            v1 = e1 - uncond if subtract else e1
            v2 = e2 - uncond if subtract else e2
            try:
                raw = metrics.cosine(v1, v2)
                raw_txt = f"{raw:10.4f}"
            except ZeroVector:
                raw_txt = f"{'zero':>10}"
            name = base + ("-c" if subtract else "")
            line = f"  {name:<8} {raw_txt}"
            if model is not None:
                z1 = model.forward(v1, mode="eval")
                z2 = model.forward(v2, mode="eval")
                line += f" {metrics._cosine_eps(z1, z2):10.4f}"
            lines.append(line)
    return "\n".join(lines)


def cmd_inspect(args: argparse.Namespace) -> int:
    store = embstore.read_store(args.store)
    model = None
    if args.model:
        model, _ = projection.load_model(args.model)
    text = inspect_record(args.record_id, store, model)
    if args.dataset:
        for record in dataset_mod.load_dataset(args.dataset):
            if record.id == args.record_id:
                text += f"\n  rating: {record.rating}"
                break
    print(text)
    return 0


# --- run (full pipeline) -------------------------------------------------------


def _load_config(path: str | Path) -> dict:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    if path.suffix == ".json":
        return json.loads(raw.decode("utf-8"))
    try:
        return tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigInvalid(f"config {path} is not valid TOML: {exc}") from exc


def run_pipeline(
    config: dict, out_dir: Optional[str] = None, seed: Optional[int] = None
) -> int:
    """synth (optional) -> compose -> split -> train -> eval -> report.

    Identical config (including seeds) produces byte-identical checkpoints
    and reports across runs.
    """
    stage = "config"
    try:
        out = Path(out_dir if out_dir is not None else config.get("output", {}).get("dir", "."))
        out.mkdir(parents=True, exist_ok=True)

        if "synth" in config:
            stage = "synth"
            synth_cfg = dict(config["synth"])
            if seed is not None:
                synth_cfg["seed"] = seed
            scfg = synth.SynthConfig(**synth_cfg)
            records, store, ground_truth = synth.generate(scfg)
            dataset_mod.write_dataset(records, out / "dataset.jsonl")
            embstore.write_store(store, out / "store.cemb")
            projection.save_model(
                projection.ProjectionModel(
                    "linear", [ground_truth], dropout_rate=0.0, seed=scfg.seed
                ),
                out / "ground_truth.ckpt",
            )
        elif "data" in config:
            stage = "load"
            records = dataset_mod.load_dataset(config["data"]["dataset"])
            store = embstore.read_store(config["data"]["store"])
        else:
            raise ConfigInvalid("config needs a [synth] or [data] section")

        stage = "compose"
        compose_cfg = config.get("compose", {})
        variant = CompositionVariant(
            base=compose_cfg.get("variant", "cond"),
            subtract_condition=bool(compose_cfg.get("subtract_condition", True)),
        )
        pairs = compose_mod.compose_dataset(records, store, variant)
        compose_mod.write_pairs(pairs, out / "pairs")

        stage = "split"
        split_cfg = config.get("split", {})
        split_seed = split_cfg.get("seed", 0) if seed is None else seed
        train_pairs, val_pairs, test_pairs = dataset_mod.split_three_way(
            pairs,
            float(split_cfg.get("train_frac", 0.7)),
            float(split_cfg.get("val_ratio", 0.7)),
            split_seed,
        )

        stage = "train"
        train_cfg = dict(config.get("train", {}))
        kind = train_cfg.pop("kind", "nonlinear")
        if seed is not None:
            train_cfg["seed"] = seed
        tconfig = projection.TrainConfig(**train_cfg)
        model, history = projection.train(train_pairs, val_pairs, tconfig, kind=kind)
        best = _best_entry(history) if history else {"epoch": 0, "val_spearman": None}
        projection.save_model(
            model,
            out / "checkpoint.ckpt",
            epoch=best["epoch"],
            val_spearman=best["val_spearman"],
        )
        _write_history_csv(out / "history.csv", history)

        stage = "eval"
        test_report = metrics.evaluate(test_pairs, model)
        unsupervised = metrics.evaluate(test_pairs, None)
        _write_json(
            out / "report.json",
            {
                "variant": variant.name,
                "kind": kind,
                "n_pairs": len(pairs),
                "n_train": len(train_pairs),
                "n_val": len(val_pairs),
                "n_test": len(test_pairs),
                "epochs_run": len(history),
                "best_epoch": best["epoch"],
                "best_val_spearman": best["val_spearman"],
                "test_spearman": test_report.spearman,
                "test_spearman_unsupervised": unsupervised.spearman,
            },
        )
        print(
            f"pipeline done: test spearman {test_report.spearman:.4f} "
            f"(unsupervised {unsupervised.spearman:.4f}) -> {out}"
        )
        return 0
    except CondembError as exc:
        print(f"stage {stage}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (TypeError, ValueError) as exc:
        print(f"stage {stage}: invalid config: {exc}", file=sys.stderr)
        return 2


def cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    return run_pipeline(config, out_dir=args.out_dir, seed=args.seed)


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condemb",
        description="Condition-aware sentence embedding toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a seeded synthetic benchmark")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=600, help="number of records")
    p.add_argument("--d", type=int, default=32, help="embedding dimension")
    p.add_argument("--latent", type=int, default=8, help="latent answer dimension")
    p.add_argument("--noise", type=float, default=0.05, help="noise sigma")
    p.add_argument("--n-conditions", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bias-scale", type=float, default=3.0)
    p.add_argument("--no-quantize", action="store_true", help="keep ratings continuous")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("compose", help="build condition-aware pair vectors")
    p.add_argument("--dataset", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--variant", choices=["cond", "sent"], default="cond")
    p.add_argument("--subtract-c", action="store_true")
    p.add_argument("--out", required=True, help="output prefix for pair files")
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("train", help="train a projection head")
    p.add_argument("--pairs", required=True, help="pair-file prefix from compose")
    p.add_argument("--val-pairs", help="separate validation pair prefix")
    p.add_argument("--val-frac", type=float, default=0.3,
                   help="validation fraction when --val-pairs is absent")
    p.add_argument("--kind", choices=list(projection.KINDS), default="nonlinear")
    p.add_argument("--k", type=int, required=True, help="projection output dim")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--dropout", type=float, default=0.15)
    p.add_argument("--max-epochs", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--patience", type=int, default=20)
    p.add_argument("--hidden", type=int, default=1024)
    p.add_argument("--leaky-slope", type=float, default=0.01)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--history-csv")
    p.add_argument("--report")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score pairs and report Spearman")
    p.add_argument("--pairs", required=True)
    p.add_argument("--model", help="checkpoint; omit for unsupervised scoring")
    p.add_argument("--report", required=True)
    p.add_argument("--scores-csv")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("isotropy", help="isotropy diagnostics over a vector file")
    p.add_argument("--store", required=True)
    p.add_argument("--store-b", help="second store for before/after comparison")
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--roles", default="all",
                   help="comma-separated manifest roles to include (default all)")
    p.add_argument("--report", required=True)
    p.add_argument("--hist-csv")
    p.set_defaults(func=cmd_isotropy)

    p = sub.add_parser("inspect", help="per-variant cosines for one record")
    p.add_argument("--record-id", required=True)
    p.add_argument("--store", required=True)
    p.add_argument("--dataset", help="optional dataset for the rating")
    p.add_argument("--model", help="optional checkpoint for projected scores")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("run", help="full pipeline from a TOML/JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="override the configured output dir")
    p.add_argument("--seed", type=int, help="override every configured seed")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        # run_pipeline reports stage-tagged errors itself; only config
        # loading can raise out of cmd_run.
        return args.func(args)
    except CondembError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
