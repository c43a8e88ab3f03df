"""Command-line entry point: ingest, stats, train, eval, ablate, predict.

Settings come from a JSON config file plus flag overrides (flags win).
Every source of randomness flows from the configured seed; APSL_LOG only
changes logging verbosity, never results.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

from .analysis import full_report
from .dataset import PLATFORMS, load_corpus_with_report, save_corpus
from .embedding import EncoderBundle, HashingEmbedder, load_precomputed
from .errors import ApslError, ConfigError
from .model import AblationFlags, featurize, load_checkpoint, save_checkpoint
from .reporting import (
    render_ablation_figure,
    render_history_figure,
    render_stats_figures,
    write_ablation_csv,
    write_stats_csv,
)
from .training import (
    TrainConfig,
    ablate,
    evaluate_features,
    predict_label,
    predict_probability,
    prepare_splits,
    train,
)

logger = logging.getLogger("apsl")


@dataclasses.dataclass
class RunConfig:
    claims: str | None = None
    engagements: str | None = None
    embeddings: str | None = None
    out: str = "out"
    encoder: str = "hashing"
    dim: int = 768
    encoder_seed: int = 0
    gamma: float = 0.3
    tau: float = 0.1
    lr: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 300
    patience: int = 10
    seed: int = 0
    platforms: tuple[str, ...] = PLATFORMS
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    gcn_hidden: tuple[int, ...] = (64,)
    gcn_out: int = 64
    head_hidden: tuple[int, ...] = ()
    contrastive_on: str = "attended"
    no_adapter: bool = False
    no_attention: bool = False
    content_only: bool = False
    format: str = "json"

    def flags(self) -> AblationFlags:
        return AblationFlags(
            no_adapter=self.no_adapter,
            no_attention=self.no_attention,
            content_only=self.content_only,
        )

    def train_config(self) -> TrainConfig:
        return TrainConfig(
            gamma=self.gamma,
            tau=self.tau,
            lr=self.lr,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
            platforms=tuple(self.platforms),
            flags=self.flags(),
            gcn_hidden=tuple(self.gcn_hidden),
            gcn_out=self.gcn_out,
            head_hidden=tuple(self.head_hidden),
            contrastive_on=self.contrastive_on,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        for key in ("platforms", "ratios", "gcn_hidden", "head_hidden"):
            d[key] = list(d[key])
        return d


_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config-file values, then explicitly passed flags."""
    merged = dataclasses.asdict(RunConfig())
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as handle:
                file_values = json.load(handle)
        except json.JSONDecodeError as err:
            raise ConfigError(f"{args.config}: invalid JSON: {err.msg}") from err
        if not isinstance(file_values, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
        unknown = set(file_values) - _CONFIG_FIELDS
        if unknown:
            raise ConfigError(f"{args.config}: unknown config keys {sorted(unknown)}")
        merged.update(file_values)
    for name in _CONFIG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            merged[name] = value
    for key in ("platforms", "ratios", "gcn_hidden", "head_hidden"):
        merged[key] = tuple(merged[key])
    config = RunConfig(**merged)
    unknown_platforms = [p for p in config.platforms if p not in PLATFORMS]
    if unknown_platforms:
        raise ConfigError(f"unknown platforms {unknown_platforms}")
    if config.encoder not in ("hashing", "precomputed"):
        raise ConfigError(f"unknown encoder {config.encoder!r}")
    if config.format not in ("json", "csv"):
        raise ConfigError(f"unknown format {config.format!r}")
    return config


def make_encoders(config: RunConfig) -> EncoderBundle:
    if config.encoder == "precomputed":
        if not config.embeddings:
            raise ConfigError("precomputed encoder requires an embeddings path")
        store = load_precomputed(config.embeddings)
        if store.dim != config.dim:
            raise ConfigError(
                f"configured dim {config.dim} != embeddings file dim {store.dim}"
            )
        return EncoderBundle(store)
    return EncoderBundle(HashingEmbedder(dim=config.dim, seed=config.encoder_seed))


def _load_corpus(config: RunConfig):
    if not config.claims or not config.engagements:
        raise ConfigError("claims and engagements paths are required")
    samples, report = load_corpus_with_report(config.claims, config.engagements)
    if report.unknown_key_warnings:
        logger.warning("ignored %d unknown keys", report.unknown_key_warnings)
    return samples, report


def _write_json(payload: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def cmd_ingest(args) -> int:
    config = resolve_config(args)
    config.claims = args.claims_file
    config.engagements = args.engagements_file
    samples, report = _load_corpus(config)
    if not samples:
        raise ConfigError(f"no claims found in {config.claims}")
    os.makedirs(config.out, exist_ok=True)
    save_corpus(
        samples,
        os.path.join(config.out, "claims.jsonl"),
        os.path.join(config.out, "engagements.jsonl"),
    )
    _write_json(
        {
            "claims": report.claim_count,
            "engagements": report.engagement_count,
            "unknown_key_warnings": report.unknown_key_warnings,
            "label_counts": report.label_counts,
            "platform_engagements": report.platform_counts,
        },
        os.path.join(config.out, "ingest_report.json"),
    )
    print(
        f"ingested {report.claim_count} claims, {report.engagement_count} engagements "
        f"({report.unknown_key_warnings} unknown-key warnings) -> {config.out}"
    )
    return 0


def cmd_stats(args) -> int:
    config = resolve_config(args)
    samples, _ = _load_corpus(config)
    encoders = make_encoders(config)
    report = full_report(samples, encoders)
    os.makedirs(config.out, exist_ok=True)
    stats_path = os.path.join(config.out, "stats.json")
    _write_json(report, stats_path)
    written = [stats_path]
    if config.format == "csv":
        csv_path = os.path.join(config.out, "stats.csv")
        write_stats_csv(report, csv_path)
        written.append(csv_path)
    written += render_stats_figures(report, os.path.join(config.out, "figures"))
    print("wrote " + ", ".join(written))
    return 0


def _write_history(history, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for record in history:
            handle.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")


def cmd_train(args) -> int:
    config = resolve_config(args)
    samples, _ = _load_corpus(config)
    encoders = make_encoders(config)
    train_set, val_set, test_set = prepare_splits(samples, config.seed, config.ratios)
    logger.info(
        "training on %d / validating on %d / testing on %d samples",
        len(train_set),
        len(val_set),
        len(test_set),
    )
    train_config = config.train_config()
    state, history = train(train_set, val_set, encoders, train_config)
    test_feats = [featurize(s, encoders, train_config.platforms) for s in test_set]
    metrics = evaluate_features(state, test_feats, train_config.flags)

    os.makedirs(config.out, exist_ok=True)
    save_checkpoint(state, config.out, extra=config.to_dict())
    _write_history(history, os.path.join(config.out, "history.jsonl"))
    _write_json(
        {
            "split_sizes": {
                "train": len(train_set),
                "val": len(val_set),
                "test": len(test_set),
            },
            "epochs_run": len(history),
            "test": metrics.to_dict(),
        },
        os.path.join(config.out, "metrics.json"),
    )
    figures_dir = os.path.join(config.out, "figures")
    os.makedirs(figures_dir, exist_ok=True)
    render_history_figure(history, os.path.join(figures_dir, "history.png"))
    print(
        f"trained {len(history)} epochs; test accuracy={metrics.accuracy:.4f} "
        f"f1={metrics.f1:.4f} -> {config.out}"
    )
    return 0


def cmd_eval(args) -> int:
    config = resolve_config(args)
    state, run = load_checkpoint(args.checkpoint)
    saved = RunConfig(**{k: v for k, v in run.items() if k in _CONFIG_FIELDS})
    config.claims = config.claims or saved.claims
    config.engagements = config.engagements or saved.engagements
    samples, _ = _load_corpus(config)

    # Data preparation must mirror the training run exactly.
    encoder_config = dataclasses.replace(
        config,
        encoder=saved.encoder,
        dim=saved.dim,
        encoder_seed=saved.encoder_seed,
        embeddings=config.embeddings or saved.embeddings,
    )
    encoders = make_encoders(encoder_config)
    train_set, val_set, test_set = prepare_splits(
        samples, saved.seed, tuple(saved.ratios)
    )
    chosen = {
        "train": train_set,
        "val": val_set,
        "test": test_set,
        "all": train_set + val_set + test_set,
    }[args.split]

    eval_platforms = tuple(state.config.platforms)
    if getattr(args, "platforms", None):
        requested = set(args.platforms)
        eval_platforms = tuple(p for p in eval_platforms if p in requested)
    flags = AblationFlags.from_dict(
        {
            "no_adapter": saved.no_adapter,
            "no_attention": saved.no_attention,
            "content_only": saved.content_only,
        }
    )
    feats = [featurize(s, encoders, eval_platforms) for s in chosen]
    metrics = evaluate_features(state, feats, flags)
    payload = {"split": args.split, "n": len(chosen), "metrics": metrics.to_dict()}
    print(json.dumps(payload, indent=2, sort_keys=True))
    if getattr(args, "out", None):
        os.makedirs(config.out, exist_ok=True)
        _write_json(payload, os.path.join(config.out, "eval_metrics.json"))
    return 0


def cmd_ablate(args) -> int:
    config = resolve_config(args)
    samples, _ = _load_corpus(config)
    encoders = make_encoders(config)
    rows = ablate(samples, encoders, config.train_config(), ratios=config.ratios)
    os.makedirs(config.out, exist_ok=True)
    csv_path = os.path.join(config.out, "ablation.csv")
    write_ablation_csv(rows, csv_path)
    figures_dir = os.path.join(config.out, "figures")
    os.makedirs(figures_dir, exist_ok=True)
    render_ablation_figure(rows, os.path.join(figures_dir, "ablation.png"))
    for row in rows:
        print(
            f"{row.variant:<18} acc={row.metrics.accuracy:.4f} "
            f"f1={row.metrics.f1:.4f}"
        )
    print(f"wrote {csv_path}")
    return 0


def cmd_predict(args) -> int:
    config = resolve_config(args)
    state, run = load_checkpoint(args.checkpoint)
    saved = RunConfig(**{k: v for k, v in run.items() if k in _CONFIG_FIELDS})
    samples, _ = _load_corpus(config)
    encoder_config = dataclasses.replace(
        config,
        encoder=saved.encoder,
        dim=saved.dim,
        encoder_seed=saved.encoder_seed,
        embeddings=config.embeddings or saved.embeddings,
    )
    encoders = make_encoders(encoder_config)
    flags = AblationFlags(
        no_adapter=saved.no_adapter,
        no_attention=saved.no_attention,
        content_only=saved.content_only,
    )
    for sample in samples:
        feats = featurize(sample, encoders, state.config.platforms)
        if not feats.platform_adj:
            print(
                f"warning: claim {sample.claim.id} has no engagements; "
                "using the content-only path",
                file=sys.stderr,
            )
        prob = predict_probability(state, feats, flags)
        verdict = "FAKE" if predict_label(prob).value == "fake" else "TRUE"
        if config.format == "json":
            print(
                json.dumps(
                    {"id": sample.claim.id, "prob": prob, "verdict": verdict},
                    sort_keys=True,
                )
            )
        else:
            print(f"{sample.claim.id},{prob:.6f},{verdict}")
    return 0


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override it")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument(
        "--platforms",
        type=lambda s: tuple(p.strip() for p in s.split(",") if p.strip()),
        default=None,
        help="comma-separated platform subset",
    )
    parser.add_argument("--encoder", choices=["hashing", "precomputed"], default=None)
    parser.add_argument("--dim", type=int, default=None)
    parser.add_argument("--gamma", type=float, default=None)
    parser.add_argument("--tau", type=float, default=None)
    parser.add_argument("--lr", type=float, default=None)
    parser.add_argument("--batch-size", dest="batch_size", type=int, default=None)
    parser.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    parser.add_argument("--patience", type=int, default=None)
    parser.add_argument(
        "--no-adapter", dest="no_adapter", action="store_true", default=None
    )
    parser.add_argument(
        "--no-attention", dest="no_attention", action="store_true", default=None
    )
    parser.add_argument(
        "--content-only", dest="content_only", action="store_true", default=None
    )
    parser.add_argument("--format", choices=["json", "csv"], default=None)
    parser.add_argument("--claims", default=None, help="claims JSONL path")
    parser.add_argument("--engagements", default=None, help="engagements JSONL path")
    parser.add_argument("--embeddings", default=None, help="precomputed embeddings path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="apsl", description="Multi-platform fake news detection"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate and normalize a corpus")
    p_ingest.add_argument("claims_file")
    p_ingest.add_argument("engagements_file")
    _add_common_flags(p_ingest)
    p_ingest.set_defaults(func=cmd_ingest)

    p_stats = sub.add_parser("stats", help="corpus statistics report + figures")
    _add_common_flags(p_stats)
    p_stats.set_defaults(func=cmd_stats)

    p_train = sub.add_parser("train", help="train a model")
    _add_common_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="evaluate a checkpoint on a split")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument(
        "--split", choices=["train", "val", "test", "all"], default="test"
    )
    _add_common_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_ablate = sub.add_parser("ablate", help="run the ablation variant grid")
    _add_common_flags(p_ablate)
    p_ablate.set_defaults(func=cmd_ablate)

    p_predict = sub.add_parser("predict", help="score claims with a checkpoint")
    p_predict.add_argument("--checkpoint", required=True)
    _add_common_flags(p_predict)
    p_predict.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("APSL_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ApslError as err:
        message = " ".join(str(err).split())
        print(f"error: {type(err).__name__}: {message}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
