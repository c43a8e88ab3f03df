"""Shared test helpers: finite-difference gradient checking and fixtures."""

import numpy as np
import pytest

from apsl.dataset import Claim, EngagementNode, Label, MultiPlatformSample, map_label
from apsl.graphs import build_tree


def finite_difference_gradients(f, params, h=1e-5):
    """Central-difference gradients of the scalar ``f()`` wrt each parameter.

    ``f`` must read the parameters' current data on every call.
    """
    grads = []
    for p in params:
        grad = np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        flat_grad = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            f_plus = f()
            flat[i] = original - h
            f_minus = f()
            flat[i] = original
            flat_grad[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(grad)
    return grads


def max_relative_error(analytic, numeric, floor=1e-3):
    """Worst elementwise |a - n| / max(|a|, |n|, floor) across tensors.

    The floor turns the comparison absolute for near-zero gradients, where
    central differences are dominated by roundoff.
    """
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(floor, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


def make_claim(cid="c1", text="a claim about things", raw_label="true", source="politifact"):
    return Claim(
        id=cid,
        text=text,
        source=source,
        raw_label=raw_label,
        label=map_label(source, raw_label),
    )


def make_engagement(eid, claim_id, platform, parent_id="root", text="a comment",
                    kind="comment", timestamp=None):
    return EngagementNode(
        id=eid,
        claim_id=claim_id,
        platform=platform,
        parent_id=parent_id,
        text=text,
        kind=kind,
        timestamp=timestamp,
    )


def make_sample(claim, engagements_by_platform):
    sample = MultiPlatformSample(claim=claim)
    for platform, engagements in engagements_by_platform.items():
        tree = build_tree(claim, engagements, platform=platform)
        by_id = {n.id: n for n in engagements}
        sample.trees[platform] = tree
        sample.engagements[platform] = [by_id[nid] for nid in tree.node_ids[1:]]
    return sample


@pytest.fixture
def tiny_corpus_files(tmp_path):
    """Two claims, three engagements on distinct platforms."""
    claims = tmp_path / "claims.jsonl"
    engagements = tmp_path / "engagements.jsonl"
    claims.write_text(
        '{"id": "c1", "text": "first claim", "source": "politifact", "raw_label": "true"}\n'
        '{"id": "c2", "text": "second claim", "source": "snopes", "raw_label": "false"}\n',
        encoding="utf-8",
    )
    engagements.write_text(
        '{"id": "e1", "claim_id": "c1", "platform": "youtube", "parent_id": "root", '
        '"text": "yt comment", "kind": "comment"}\n'
        '{"id": "e2", "claim_id": "c1", "platform": "x", "parent_id": "root", '
        '"text": "x comment", "kind": "comment"}\n'
        '{"id": "e3", "claim_id": "c2", "platform": "reddit", "parent_id": "root", '
        '"text": "reddit comment", "kind": "repost"}\n',
        encoding="utf-8",
    )
    return claims, engagements
