"""Corpus-level descriptive statistics: per-platform propagation sizes,
cross-platform overlap, comment lengths, and comment-claim similarity."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import PLATFORMS, Label, MultiPlatformSample
from .embedding import EncoderBundle
from .errors import SelectionError
from .graphs import tree_stats

LABEL_FILTERS = ("all", "fake", "true")


def _matches(sample: MultiPlatformSample, label_filter: str) -> bool:
    if label_filter == "all":
        return True
    if label_filter not in LABEL_FILTERS:
        raise SelectionError(f"unknown label filter {label_filter!r}")
    return sample.claim.label.value == label_filter


@dataclass(frozen=True)
class PlatformStats:
    platform: str
    label_filter: str
    graph_count: int
    total_nodes: int
    max_tree_width: int
    avg_nodes_per_graph: float

    def to_dict(self) -> dict:
        return {
            "graph_count": self.graph_count,
            "total_nodes": self.total_nodes,
            "max_tree_width": self.max_tree_width,
            "avg_nodes_per_graph": self.avg_nodes_per_graph,
        }


def corpus_stats(samples, platform: str, label_filter: str = "all") -> PlatformStats:
    """Aggregate tree statistics over one platform; roots count as nodes."""
    stats = [
        tree_stats(s.trees[platform])
        for s in samples
        if platform in s.trees and _matches(s, label_filter)
    ]
    if not stats:
        raise SelectionError(
            f"no {label_filter} samples with trees on platform {platform!r}"
        )
    total = sum(s.node_count for s in stats)
    return PlatformStats(
        platform=platform,
        label_filter=label_filter,
        graph_count=len(stats),
        total_nodes=total,
        max_tree_width=max(s.width for s in stats),
        avg_nodes_per_graph=total / len(stats),
    )


@dataclass(frozen=True)
class OverlapReport:
    """How many claims appear on exactly 1, 2, or 3 platforms, per label.

    Claims with no propagation anywhere are not counted.
    """

    counts: dict[str, dict[int, int]]
    proportions: dict[str, dict[int, float]]

    def to_dict(self) -> dict:
        return {
            label: {
                "counts": {str(k): v for k, v in self.counts[label].items()},
                "proportions": {str(k): v for k, v in self.proportions[label].items()},
            }
            for label in sorted(self.counts)
        }


def platform_overlap(samples) -> OverlapReport:
    if not samples:
        raise SelectionError("platform_overlap: empty corpus")
    counts = {
        label.value: {k: 0 for k in range(1, len(PLATFORMS) + 1)} for label in Label
    }
    for sample in samples:
        n = len(sample.platforms)
        if n:
            counts[sample.claim.label.value][n] += 1
    proportions = {}
    for label, hist in counts.items():
        total = sum(hist.values())
        proportions[label] = {
            k: (v / total if total else 0.0) for k, v in hist.items()
        }
    return OverlapReport(counts=counts, proportions=proportions)


@dataclass(frozen=True)
class LengthStats:
    comment_count: int
    mean: float
    median: int
    p90: int

    def to_dict(self) -> dict:
        return {
            "comment_count": self.comment_count,
            "mean": self.mean,
            "median": self.median,
            "p90": self.p90,
        }


def _nearest_rank(sorted_values, q: float):
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


def comment_length_stats(
    samples, platform: str, label_filter: str = "all"
) -> LengthStats:
    """Whitespace token counts of comments; percentiles are nearest-rank."""
    lengths = [
        len(node.text.split())
        for s in samples
        if _matches(s, label_filter)
        for node in s.engagements.get(platform, [])
        if node.kind == "comment"
    ]
    if not lengths:
        raise SelectionError(
            f"no {label_filter} comments on platform {platform!r}"
        )
    ordered = sorted(lengths)
    return LengthStats(
        comment_count=len(lengths),
        mean=sum(lengths) / len(lengths),
        median=_nearest_rank(ordered, 0.5),
        p90=_nearest_rank(ordered, 0.9),
    )


@dataclass(frozen=True)
class SimilarityStats:
    mean: float
    used: int
    skipped: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "used": self.used, "skipped": self.skipped}


def comment_claim_similarity(
    samples,
    encoders: EncoderBundle,
    platform: str,
    label_filter: str = "all",
) -> SimilarityStats:
    """Mean cosine similarity between each comment and its claim.

    Comments whose embedding is the zero vector (or whose claim embeds to
    zero) are skipped and reported in the skip count.
    """
    cosines: list[float] = []
    skipped = 0
    for sample in samples:
        if not _matches(sample, label_filter):
            continue
        comments = [
            n for n in sample.engagements.get(platform, []) if n.kind == "comment"
        ]
        if not comments:
            continue
        claim_vec = encoders.claim_vector(sample.claim)
        claim_norm = np.linalg.norm(claim_vec)
        if claim_norm == 0:
            skipped += len(comments)
            continue
        for node in comments:
            vec = encoders.comment_vector(node)
            norm = np.linalg.norm(vec)
            if norm == 0:
                skipped += 1
                continue
            cosines.append(float(claim_vec @ vec) / (claim_norm * norm))
    if not cosines:
        raise SelectionError(
            f"no usable {label_filter} comments on platform {platform!r} "
            f"({skipped} skipped)"
        )
    # Summing in sorted order makes the mean independent of sample order.
    mean = sum(sorted(cosines)) / len(cosines)
    return SimilarityStats(mean=mean, used=len(cosines), skipped=skipped)


def full_report(samples, encoders: EncoderBundle | None = None) -> dict:
    """All analysis sections in one JSON-ready mapping.

    Empty platform/label selections are reported as null rather than
    erroring, so sparse corpora still produce a report.
    """
    platforms_section: dict[str, dict] = {}
    lengths_section: dict[str, dict] = {}
    similarity_section: dict[str, dict] = {}
    for platform in PLATFORMS:
        platforms_section[platform] = {}
        lengths_section[platform] = {}
        similarity_section[platform] = {}
        for label_filter in LABEL_FILTERS:
            try:
                stats = corpus_stats(samples, platform, label_filter).to_dict()
            except SelectionError:
                stats = None
            platforms_section[platform][label_filter] = stats
            try:
                lengths = comment_length_stats(samples, platform, label_filter).to_dict()
            except SelectionError:
                lengths = None
            lengths_section[platform][label_filter] = lengths
            if encoders is not None:
                try:
                    sim = comment_claim_similarity(
                        samples, encoders, platform, label_filter
                    ).to_dict()
                except SelectionError:
                    sim = None
                similarity_section[platform][label_filter] = sim

    report = {
        "platforms": platforms_section,
        "overlap": platform_overlap(samples).to_dict(),
        "comment_length": lengths_section,
    }
    if encoders is not None:
        report["similarity"] = similarity_section
    return report
