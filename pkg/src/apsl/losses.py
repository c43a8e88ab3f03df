"""Training objectives: binary cross-entropy, the platform-aware
contrastive loss, and their weighted combination."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from . import tensor as T
from .errors import ConfigError, ContractError
from .tensor import Tensor

PROB_EPS = 1e-12


def bce_loss(preds: Tensor, targets: Sequence[float]) -> Tensor:
    """Mean binary cross-entropy; predictions clamped away from {0, 1}.

    ``preds`` is a (B, 1) column of probabilities, ``targets`` the matching
    0/1 labels.
    """
    y = np.asarray(targets, dtype=np.float64).reshape(-1, 1)
    if y.shape[0] < 1:
        raise ContractError("bce_loss: empty batch")
    if preds.shape != y.shape:
        raise ContractError(f"bce_loss: preds {preds.shape} vs targets {y.shape}")
    y_t = Tensor(y)
    one = Tensor(np.ones_like(y))
    p = T.clamp(preds, PROB_EPS, 1.0 - PROB_EPS)
    ll = T.add(T.mul(y_t, T.log(p)), T.mul(T.sub(one, y_t), T.log(T.sub(one, p))))
    return T.scale(T.sum_all(ll), -1.0 / y.shape[0])


def pcl_loss(
    per_platform: dict[str, list[Optional[Tensor]]],
    labels: Sequence[int],
    tau: float,
) -> Tensor:
    """Supervised contrastive objective over per-platform batch vectors.

    For each platform, anchors are batch members that have a vector there;
    positives share the anchor's label. Each positive pair (i, j) adds
    log( exp(cos(h_i,h_j)/tau) / sum_{m != i} exp(cos(h_i,h_m)/tau) );
    per-platform sums are scaled by -1/B and added. Samples without the
    platform are excluded from its term; anchors with no positives
    contribute zero.
    """
    if tau <= 0:
        raise ConfigError(f"contrastive temperature must be positive, got {tau}")
    batch = len(labels)
    if batch < 2:
        raise ContractError("pcl_loss: need a batch of at least 2")

    total: Optional[Tensor] = None
    for platform in sorted(per_platform):
        vecs = per_platform[platform]
        if len(vecs) != batch:
            raise ContractError(
                f"pcl_loss: platform {platform!r} has {len(vecs)} slots for "
                f"batch of {batch}"
            )
        entries = [(i, v) for i, v in enumerate(vecs) if v is not None]
        if len(entries) < 2:
            continue
        for _, vec in entries:
            if float(np.linalg.norm(vec.data)) == 0.0:
                raise ContractError("pcl_loss: zero vector has no cosine similarity")

        n = len(entries)
        group_labels = np.array([labels[i] for i, _ in entries])
        pos_mask = (group_labels[:, None] == group_labels[None, :]).astype(np.float64)
        np.fill_diagonal(pos_mask, 0.0)
        if pos_mask.sum() == 0:
            continue
        off_diag = 1.0 - np.eye(n)
        n_pos = pos_mask.sum(axis=1, keepdims=True)

        stacked = T.stack_rows([v for _, v in entries])
        dim = stacked.shape[1]
        col_ones = Tensor(np.ones((dim, 1)))
        norms = T.sqrt(T.matmul(T.mul(stacked, stacked), col_ones))
        unit = T.div(stacked, norms)
        sims = T.scale(T.matmul(unit, T.transpose(unit)), 1.0 / tau)

        # Row-max shift (treated as constant) keeps the exponentials tame.
        row_max = Tensor(sims.data.max(axis=1, keepdims=True))
        exp_shifted = T.mul(T.exp(T.sub(sims, row_max)), Tensor(off_diag))
        denom = T.matmul(exp_shifted, Tensor(np.ones((n, 1))))
        log_denom = T.add(T.log(denom), row_max)

        pos_sum = T.matmul(T.mul(sims, Tensor(pos_mask)), Tensor(np.ones((n, 1))))
        terms = T.sub(pos_sum, T.mul(Tensor(n_pos), log_denom))
        contribution = T.scale(T.sum_all(terms), -1.0 / batch)
        total = contribution if total is None else T.add(total, contribution)

    if total is None:
        return Tensor(np.zeros((1, 1)))
    return total


def total_loss(l_pred: Tensor, l_pcl: Tensor, gamma: float) -> Tensor:
    """Joint objective: prediction loss plus gamma times the contrastive loss."""
    if gamma < 0:
        raise ConfigError(f"gamma must be non-negative, got {gamma}")
    return T.add(l_pred, T.scale(l_pcl, gamma))
