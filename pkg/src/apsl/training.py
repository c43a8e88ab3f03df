"""Training loop, evaluation metrics, and the ablation harness."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .dataset import PLATFORMS, Label, SplitConfig, balance, split
from .embedding import EncoderBundle
from .errors import ConfigError, ContractError, TrainingError
from .losses import bce_loss, pcl_loss, total_loss
from .model import (
    AblationFlags,
    ModelConfig,
    ModelState,
    SampleFeatures,
    featurize,
    forward,
)
from .optim import Adam
from .tensor import Tape, Tensor, stack_rows


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.3
    tau: float = 0.1
    lr: float = 1e-3
    batch_size: int = 16
    max_epochs: int = 300
    patience: int = 10
    seed: int = 0
    platforms: tuple[str, ...] = PLATFORMS
    flags: AblationFlags = AblationFlags()
    gcn_hidden: tuple[int, ...] = (64,)
    gcn_out: int = 64
    head_hidden: tuple[int, ...] = ()
    contrastive_on: str = "attended"  # or "pooled"

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.gamma < 0:
            raise ConfigError(f"gamma must be non-negative, got {self.gamma}")
        if self.gamma > 0 and self.batch_size < 2:
            raise ConfigError("batch_size must be at least 2 when gamma > 0")
        if self.contrastive_on not in ("attended", "pooled"):
            raise ConfigError(f"unknown contrastive_on {self.contrastive_on!r}")

    def model_config(self, dim: int) -> ModelConfig:
        return ModelConfig(
            dim=dim,
            platforms=self.platforms,
            gcn_hidden=self.gcn_hidden,
            gcn_out=self.gcn_out,
            head_hidden=self.head_hidden,
        )


@dataclass(frozen=True)
class ClassCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def _precision(c: ClassCounts) -> float:
    return c.tp / (c.tp + c.fp) if c.tp + c.fp else 0.0


def _recall(c: ClassCounts) -> float:
    return c.tp / (c.tp + c.fn) if c.tp + c.fn else 0.0


def _f1(c: ClassCounts) -> float:
    p, r = _precision(c), _recall(c)
    return 2.0 * p * r / (p + r) if p + r else 0.0


@dataclass(frozen=True)
class Metrics:
    """Accuracy plus macro-averaged precision/recall/F1 over the two classes."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    counts: dict[str, ClassCounts]

    @classmethod
    def from_counts(cls, counts: dict[str, ClassCounts]) -> "Metrics":
        fake = counts[Label.FAKE.value]
        total = fake.tp + fake.fp + fake.tn + fake.fn
        accuracy = (fake.tp + fake.tn) / total if total else 0.0
        both = list(counts.values())
        return cls(
            accuracy=accuracy,
            precision=sum(_precision(c) for c in both) / len(both),
            recall=sum(_recall(c) for c in both) / len(both),
            f1=sum(_f1(c) for c in both) / len(both),
            counts=counts,
        )

    @classmethod
    def from_predictions(
        cls, truths: Sequence[Label], predictions: Sequence[Label]
    ) -> "Metrics":
        if len(truths) != len(predictions) or not truths:
            raise ContractError("metrics need matching, non-empty label sequences")
        counts = {}
        for positive in (Label.FAKE, Label.TRUE):
            tp = fp = tn = fn = 0
            for truth, pred in zip(truths, predictions):
                if pred is positive:
                    if truth is positive:
                        tp += 1
                    else:
                        fp += 1
                elif truth is positive:
                    fn += 1
                else:
                    tn += 1
            counts[positive.value] = ClassCounts(tp=tp, fp=fp, tn=tn, fn=fn)
        return cls.from_counts(counts)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "counts": {k: c.to_dict() for k, c in sorted(self.counts.items())},
        }


@dataclass
class EpochRecord:
    epoch: int
    l_pred: float
    l_pcl: float
    l_final: float
    val_metrics: Metrics

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "l_pred": self.l_pred,
            "l_pcl": self.l_pcl,
            "l_final": self.l_final,
            "val": self.val_metrics.to_dict(),
        }


DECISION_THRESHOLD = 0.5


def predict_label(prob: float) -> Label:
    """Fake is the positive class: probabilities at or above 0.5 read Fake."""
    return Label.FAKE if prob >= DECISION_THRESHOLD else Label.TRUE


def predict_probability(
    state: ModelState, features: SampleFeatures, flags: AblationFlags = AblationFlags()
) -> float:
    return forward(state, features, flags).prob.item()


def evaluate_features(
    state: ModelState,
    features: Sequence[SampleFeatures],
    flags: AblationFlags = AblationFlags(),
) -> Metrics:
    if not features:
        raise ContractError("evaluate: empty sample set")
    truths, preds = [], []
    for feat in features:
        if feat.label is None:
            raise ContractError(f"sample {feat.sample_id} has no label")
        truths.append(feat.label)
        preds.append(predict_label(predict_probability(state, feat, flags)))
    return Metrics.from_predictions(truths, preds)


def evaluate(
    state: ModelState,
    samples,
    encoders: EncoderBundle,
    flags: AblationFlags = AblationFlags(),
) -> Metrics:
    feats = [featurize(s, encoders, state.config.platforms) for s in samples]
    return evaluate_features(state, feats, flags)


def _pcl_inputs(
    outputs, config: TrainConfig
) -> dict[str, list[Optional[Tensor]]]:
    per_platform: dict[str, list[Optional[Tensor]]] = {}
    for platform in config.platforms:
        slots: list[Optional[Tensor]] = []
        for out in outputs:
            source = out.attended if config.contrastive_on == "attended" else out.pooled
            vec = source.get(platform)
            if vec is not None and float(np.linalg.norm(vec.data)) == 0.0:
                vec = None
            slots.append(vec)
        per_platform[platform] = slots
    return per_platform


def train(
    train_samples,
    val_samples,
    encoders: EncoderBundle,
    config: TrainConfig,
) -> tuple[ModelState, list[EpochRecord]]:
    """Fit the model with Adam; early-stop on validation F1.

    The best-validation parameters are restored before returning. Every
    random choice (init, batch order) flows from ``config.seed``, so a
    fixed config reproduces the run exactly.
    """
    if not train_samples or not val_samples:
        raise ContractError("train: empty train or validation set")
    train_feats = [featurize(s, encoders, config.platforms) for s in train_samples]
    val_feats = [featurize(s, encoders, config.platforms) for s in val_samples]

    state = ModelState(config.model_config(encoders.dim), seed=config.seed)
    optimizer = Adam(state.parameters(), lr=config.lr)
    shuffle_rng = random.Random(config.seed)

    history: list[EpochRecord] = []
    best_f1 = -1.0
    best_params: Optional[list[np.ndarray]] = None
    stale_epochs = 0

    for epoch in range(1, config.max_epochs + 1):
        order = list(range(len(train_feats)))
        shuffle_rng.shuffle(order)
        sums = {"l_pred": 0.0, "l_pcl": 0.0, "l_final": 0.0}
        batch_count = 0
        for start in range(0, len(order), config.batch_size):
            batch = [train_feats[i] for i in order[start : start + config.batch_size]]
            labels = [1 if f.label is Label.FAKE else 0 for f in batch]
            optimizer.zero_grad()
            with Tape() as tape:
                outputs = [forward(state, f, config.flags) for f in batch]
                preds = stack_rows([o.prob for o in outputs])
                l_pred = bce_loss(preds, labels)
                if config.gamma > 0 and len(batch) >= 2:
                    l_pcl = pcl_loss(_pcl_inputs(outputs, config), labels, config.tau)
                else:
                    l_pcl = Tensor(np.zeros((1, 1)))
                l_final = total_loss(l_pred, l_pcl, config.gamma)
            if not math.isfinite(l_final.item()):
                raise TrainingError(f"non-finite loss at epoch {epoch}")
            tape.backward(l_final)
            optimizer.step()
            sums["l_pred"] += l_pred.item()
            sums["l_pcl"] += l_pcl.item()
            sums["l_final"] += l_final.item()
            batch_count += 1

        val_metrics = evaluate_features(state, val_feats, config.flags)
        history.append(
            EpochRecord(
                epoch=epoch,
                l_pred=sums["l_pred"] / batch_count,
                l_pcl=sums["l_pcl"] / batch_count,
                l_final=sums["l_final"] / batch_count,
                val_metrics=val_metrics,
            )
        )
        if val_metrics.f1 > best_f1:
            best_f1 = val_metrics.f1
            best_params = state.copy_parameter_data()
            stale_epochs = 0
        else:
            stale_epochs += 1
            if stale_epochs > config.patience:
                break

    if best_params is not None:
        state.load_parameter_data(best_params)
    return state, history


def prepare_splits(samples, seed: int, ratios=(0.7, 0.1, 0.2)):
    """Balance classes, then cut deterministic train/val/test splits."""
    balanced = balance(samples, seed)
    return split(balanced, SplitConfig(ratios=tuple(ratios), seed=seed))


@dataclass(frozen=True)
class AblationRow:
    variant: str
    metrics: Metrics


def ablation_variants(base: TrainConfig) -> list[tuple[str, TrainConfig]]:
    """Component rows on all platforms, then platform-subset rows.

    Every variant keeps the base seed so comparisons share init, batch
    order, and split membership.
    """
    rows = [
        ("full", base),
        ("no_pcl", replace(base, gamma=0.0)),
        ("no_adapter", replace(base, flags=replace(base.flags, no_adapter=True))),
        ("no_attention", replace(base, flags=replace(base.flags, no_attention=True))),
    ]
    for platform in base.platforms:
        rows.append((f"platform_{platform}", replace(base, platforms=(platform,))))
    if len(base.platforms) > 2:
        for platform in base.platforms:
            kept = tuple(p for p in base.platforms if p != platform)
            rows.append((f"no_{platform}", replace(base, platforms=kept)))
    rows.append(
        ("content_only", replace(base, flags=replace(base.flags, content_only=True)))
    )
    return rows


def ablate(
    samples,
    encoders: EncoderBundle,
    base: TrainConfig,
    ratios=(0.7, 0.1, 0.2),
) -> list[AblationRow]:
    """Train and score every ablation variant on identical splits."""
    train_set, val_set, test_set = prepare_splits(samples, base.seed, ratios)
    rows = []
    for name, config in ablation_variants(base):
        state, _ = train(train_set, val_set, encoders, config)
        test_feats = [featurize(s, encoders, config.platforms) for s in test_set]
        rows.append(
            AblationRow(
                variant=name,
                metrics=evaluate_features(state, test_feats, config.flags),
            )
        )
    return rows
