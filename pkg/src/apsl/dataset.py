"""Corpus loading, label mapping, class balancing, and splits.

Claims come from fact-checking sites with many-valued verdict scales;
``map_label`` collapses them to a binary True/Fake label. Engagements are
comments/reposts forming one propagation tree per platform.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .errors import (
    BalanceError,
    ConfigError,
    ParseError,
    ReferentialError,
)
from .graphs import PropagationTree, build_tree

PLATFORMS = ("youtube", "x", "reddit")
ENGAGEMENT_KINDS = ("comment", "repost")


class Label(str, Enum):
    TRUE = "true"
    FAKE = "fake"


# Verdict scales recognized per source (lowercased, hyphenated). Only the
# True-side membership is load-bearing; any raw label outside the full set
# fails loudly instead of silently defaulting to Fake.
POLITIFACT_TRUE = frozenset({"true", "mostly-true", "half-true"})
POLITIFACT_FAKE = frozenset(
    {"barely-true", "mostly-false", "false", "pants-on-fire", "full-flop"}
)
SNOPES_TRUE = frozenset({"true", "mostly-true"})
SNOPES_FAKE = frozenset(
    {
        "half-true",
        "mixture",
        "mostly-false",
        "false",
        "unproven",
        "outdated",
        "miscaptioned",
        "misattributed",
        "scam",
        "labeled-satire",
    }
)

_LABEL_TABLES = {
    "politifact": (POLITIFACT_TRUE, POLITIFACT_FAKE),
    "snopes": (SNOPES_TRUE, SNOPES_FAKE),
}


def map_label(source: str, raw_label: str) -> Label:
    """Collapse a source-specific verdict to the binary label."""
    tables = _LABEL_TABLES.get(source)
    if tables is None:
        raise ConfigError(f"unrecognized source {source!r}")
    true_side, fake_side = tables
    if raw_label in true_side:
        return Label.TRUE
    if raw_label in fake_side:
        return Label.FAKE
    raise ConfigError(f"unrecognized raw label {raw_label!r} for source {source!r}")


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    source: str
    raw_label: str
    label: Label


@dataclass(frozen=True)
class EngagementNode:
    id: str
    claim_id: str
    platform: str
    parent_id: str
    text: str
    kind: str
    like_count: Optional[int] = None
    timestamp: Optional[float] = None


@dataclass
class MultiPlatformSample:
    """A claim plus its propagation tree on each platform it appeared on.

    ``engagements[platform]`` holds the node payloads in tree order
    (root excluded), aligned with ``trees[platform].node_ids[1:]``.
    """

    claim: Claim
    trees: dict[str, PropagationTree] = field(default_factory=dict)
    engagements: dict[str, list[EngagementNode]] = field(default_factory=dict)

    @property
    def platforms(self) -> tuple[str, ...]:
        return tuple(p for p in PLATFORMS if p in self.trees)


@dataclass(frozen=True)
class SplitConfig:
    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)
    seed: int = 0


@dataclass
class IngestReport:
    claim_count: int = 0
    engagement_count: int = 0
    unknown_key_warnings: int = 0
    label_counts: dict[str, int] = field(default_factory=dict)
    platform_counts: dict[str, int] = field(default_factory=dict)


_CLAIM_KEYS = {"id", "text", "source", "raw_label"}
_ENGAGEMENT_KEYS = {
    "id",
    "claim_id",
    "platform",
    "parent_id",
    "text",
    "kind",
    "like_count",
    "timestamp",
}


def _read_jsonl(path):
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise ParseError(path, line_no, f"invalid JSON: {err.msg}") from err
            if not isinstance(obj, dict):
                raise ParseError(path, line_no, "line is not a JSON object")
            yield line_no, obj


def load_corpus(claims_path, engagements_path) -> list[MultiPlatformSample]:
    samples, _ = load_corpus_with_report(claims_path, engagements_path)
    return samples


def load_corpus_with_report(
    claims_path, engagements_path
) -> tuple[list[MultiPlatformSample], IngestReport]:
    """Load and validate the corpus, attaching engagements to their trees.

    Claims with zero engagements are retained with an empty trees map.
    """
    report = IngestReport()
    claims: dict[str, Claim] = {}
    for line_no, obj in _read_jsonl(claims_path):
        missing = _CLAIM_KEYS - obj.keys()
        if missing:
            raise ParseError(claims_path, line_no, f"missing keys {sorted(missing)}")
        report.unknown_key_warnings += len(obj.keys() - _CLAIM_KEYS)
        cid = str(obj["id"])
        if cid in claims:
            raise ParseError(claims_path, line_no, f"duplicate claim id {cid!r}")
        source = str(obj["source"])
        raw_label = str(obj["raw_label"])
        try:
            label = map_label(source, raw_label)
        except ConfigError as err:
            raise ParseError(claims_path, line_no, str(err)) from err
        claims[cid] = Claim(
            id=cid, text=str(obj["text"]), source=source, raw_label=raw_label, label=label
        )

    nodes: dict[str, EngagementNode] = {}
    grouped: dict[tuple[str, str], list[EngagementNode]] = {}
    for line_no, obj in _read_jsonl(engagements_path):
        required = _ENGAGEMENT_KEYS - {"like_count", "timestamp"}
        missing = required - obj.keys()
        if missing:
            raise ParseError(engagements_path, line_no, f"missing keys {sorted(missing)}")
        report.unknown_key_warnings += len(obj.keys() - _ENGAGEMENT_KEYS)
        nid = str(obj["id"])
        if nid in nodes:
            raise ParseError(engagements_path, line_no, f"duplicate engagement id {nid!r}")
        platform = str(obj["platform"])
        if platform not in PLATFORMS:
            raise ParseError(engagements_path, line_no, f"unknown platform {platform!r}")
        kind = str(obj["kind"])
        if kind not in ENGAGEMENT_KINDS:
            raise ParseError(engagements_path, line_no, f"unknown kind {kind!r}")
        claim_id = str(obj["claim_id"])
        if claim_id not in claims:
            raise ReferentialError(
                f"{engagements_path}:{line_no}: engagement {nid!r} references "
                f"unknown claim {claim_id!r}"
            )
        like_count = obj.get("like_count")
        if like_count is not None:
            like_count = int(like_count)
            if like_count < 0:
                raise ParseError(engagements_path, line_no, "negative like_count")
        timestamp = obj.get("timestamp")
        node = EngagementNode(
            id=nid,
            claim_id=claim_id,
            platform=platform,
            parent_id=str(obj["parent_id"]),
            text=str(obj["text"]),
            kind=kind,
            like_count=like_count,
            timestamp=None if timestamp is None else float(timestamp),
        )
        nodes[nid] = node
        grouped.setdefault((claim_id, platform), []).append(node)

    for node in nodes.values():
        if node.parent_id == "root":
            continue
        parent = nodes.get(node.parent_id)
        if parent is not None and (
            parent.claim_id != node.claim_id or parent.platform != node.platform
        ):
            raise ReferentialError(
                f"engagement {node.id!r} has parent {node.parent_id!r} belonging to "
                f"a different claim or platform"
            )

    samples = []
    for claim in claims.values():
        sample = MultiPlatformSample(claim=claim)
        for platform in PLATFORMS:
            group = grouped.get((claim.id, platform))
            if not group:
                continue
            tree = build_tree(claim, group, platform=platform)
            by_id = {n.id: n for n in group}
            sample.trees[platform] = tree
            sample.engagements[platform] = [by_id[nid] for nid in tree.node_ids[1:]]
        samples.append(sample)

    report.claim_count = len(claims)
    report.engagement_count = len(nodes)
    for sample in samples:
        report.label_counts[sample.claim.label.value] = (
            report.label_counts.get(sample.claim.label.value, 0) + 1
        )
        for platform in sample.platforms:
            report.platform_counts[platform] = (
                report.platform_counts.get(platform, 0)
                + len(sample.engagements[platform])
            )
    return samples, report


def save_corpus(samples, claims_path, engagements_path) -> None:
    """Serialize back to the two JSON-Lines files (LF endings, UTF-8)."""
    with open(claims_path, "w", encoding="utf-8", newline="\n") as handle:
        for sample in samples:
            claim = sample.claim
            handle.write(
                json.dumps(
                    {
                        "id": claim.id,
                        "text": claim.text,
                        "source": claim.source,
                        "raw_label": claim.raw_label,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    with open(engagements_path, "w", encoding="utf-8", newline="\n") as handle:
        for sample in samples:
            for platform in sample.platforms:
                for node in sample.engagements[platform]:
                    record = {
                        "id": node.id,
                        "claim_id": node.claim_id,
                        "platform": node.platform,
                        "parent_id": node.parent_id,
                        "text": node.text,
                        "kind": node.kind,
                    }
                    if node.like_count is not None:
                        record["like_count"] = node.like_count
                    if node.timestamp is not None:
                        record["timestamp"] = node.timestamp
                    handle.write(json.dumps(record, sort_keys=True) + "\n")


def balance(samples, seed: int) -> list[MultiPlatformSample]:
    """Downsample the majority class to the minority count, then reshuffle.

    Selection and final order are fully determined by ``seed``.
    """
    fake = [s for s in samples if s.claim.label is Label.FAKE]
    true = [s for s in samples if s.claim.label is Label.TRUE]
    if not fake or not true:
        raise BalanceError(
            f"both classes required: {len(fake)} fake vs {len(true)} true"
        )
    rng = random.Random(seed)
    if len(fake) > len(true):
        fake = rng.sample(fake, len(true))
    elif len(true) > len(fake):
        true = rng.sample(true, len(fake))
    combined = fake + true
    rng.shuffle(combined)
    return combined


def split(samples, config: SplitConfig):
    """Seeded shuffle then contiguous cut into (train, val, test)."""
    r_train, r_val, r_test = config.ratios
    if min(config.ratios) <= 0 or abs(sum(config.ratios) - 1.0) > 1e-9:
        raise ConfigError(f"split ratios must be positive and sum to 1: {config.ratios}")
    pool = list(samples)
    random.Random(config.seed).shuffle(pool)
    n = len(pool)
    n_train = int(n * r_train)
    n_val = int(n * r_val)
    if n_train < 1 or n_val < 1 or n - n_train - n_val < 1:
        raise ConfigError(f"corpus of {n} samples too small for ratios {config.ratios}")
    return pool[:n_train], pool[n_train : n_train + n_val], pool[n_train + n_val :]
