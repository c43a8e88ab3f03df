"""Synthetic corpora with a planted lexical signal.

Fake claims receive a marker token inside their comments; claim texts and
tree shapes are label-neutral, so a detector has to read the propagation
content to separate the classes. In split-signal mode the marker for half
of the fake claims appears only on the first platform and for the other
half only on the second, making any single platform strictly less
informative than the pair.

Run as a module to write the corpus as the two JSONL files:
    python -m apsl.synthetic --out data/ --claims 80 --seed 7
"""

from __future__ import annotations

import random

from .dataset import (
    PLATFORMS,
    Claim,
    EngagementNode,
    MultiPlatformSample,
    map_label,
    save_corpus,
)
from .graphs import build_tree

_FILLERS = (
    "report update city market local people story source detail question "
    "answer number video link today weather press office street claim photo "
    "member group event plan note week budget road water school board race "
    "game coach music film travel garden kitchen paper signal window"
).split()

# Claim texts cycle through a small label-independent pool so the claim
# embedding carries no class signal and cannot be memorized per claim; the
# only informative path is the planted marker inside comments.
_CLAIM_TEMPLATES = (
    "city council announces new local budget plan",
    "report says weather patterns shifted this week",
    "video shows street market event downtown",
    "officials answer questions about road project",
    "school board reviews travel budget update",
    "press office posts note about water supply",
)

# A multi-token marker spreads the planted signal over several hash
# buckets, so a single unlucky collision with a filler token cannot mask it.
FAKE_MARKER = "zorblat vexent quorlim"


def _words(rng: random.Random, low: int, high: int) -> list[str]:
    return [rng.choice(_FILLERS) for _ in range(rng.randint(low, high))]


def _make_sample(claim, engagements_by_platform) -> MultiPlatformSample:
    sample = MultiPlatformSample(claim=claim)
    for platform, engagements in engagements_by_platform.items():
        if not engagements:
            continue
        tree = build_tree(claim, engagements, platform=platform)
        by_id = {n.id: n for n in engagements}
        sample.trees[platform] = tree
        sample.engagements[platform] = [by_id[nid] for nid in tree.node_ids[1:]]
    return sample


def planted_corpus(
    n_claims: int = 80,
    seed: int = 0,
    platforms: tuple[str, ...] = PLATFORMS,
    comments_range: tuple[int, int] = (2, 6),
    marker_rate: float = 1.0,
    split_signal: bool = False,
    all_platforms_present: bool = False,
) -> list[MultiPlatformSample]:
    """Generate a balanced corpus of claims with per-platform reply trees.

    With ``split_signal`` every claim appears on exactly the first two
    platforms; otherwise each claim lands on a random non-empty subset,
    or on every platform when ``all_platforms_present`` is set.
    """
    if split_signal and len(platforms) < 2:
        raise ValueError("split_signal needs at least two platforms")
    rng = random.Random(seed)
    samples = []
    for i in range(n_claims):
        is_fake = i % 2 == 0
        raw_label = "pants-on-fire" if is_fake else "true"
        claim = Claim(
            id=f"c{i:04d}",
            text=_CLAIM_TEMPLATES[(i // 2) % len(_CLAIM_TEMPLATES)],
            source="politifact",
            raw_label=raw_label,
            label=map_label("politifact", raw_label),
        )
        if split_signal:
            claim_platforms = list(platforms[:2])
            signal_platform = platforms[(i // 2) % 2] if is_fake else None
        elif all_platforms_present:
            claim_platforms = list(platforms)
            signal_platform = None
        else:
            count = rng.randint(1, len(platforms))
            claim_platforms = sorted(
                rng.sample(platforms, count), key=platforms.index
            )
            signal_platform = None

        engagements_by_platform = {}
        for platform in claim_platforms:
            n_comments = rng.randint(*comments_range)
            nodes = []
            for j in range(n_comments):
                text_words = _words(rng, 3, 8)
                # Draw unconditionally so fake/true claims consume the RNG
                # identically and tree shapes stay label-independent.
                plant_draw = rng.random() < marker_rate
                plant = is_fake and plant_draw
                if split_signal:
                    plant = plant and platform == signal_platform
                if plant:
                    position = rng.randrange(len(text_words) + 1)
                    text_words[position:position] = FAKE_MARKER.split()
                parent = "root"
                if j > 0 and rng.random() > 0.6:
                    parent = nodes[rng.randrange(j)].id
                nodes.append(
                    EngagementNode(
                        id=f"e{i:04d}-{platform}-{j}",
                        claim_id=claim.id,
                        platform=platform,
                        parent_id=parent,
                        text=" ".join(text_words),
                        kind="comment" if rng.random() < 0.8 else "repost",
                        like_count=rng.randint(0, 50),
                        timestamp=float(j),
                    )
                )
            engagements_by_platform[platform] = nodes
        samples.append(_make_sample(claim, engagements_by_platform))
    return samples


def main(argv=None) -> int:
    import argparse
    import os

    parser = argparse.ArgumentParser(description="Write a synthetic planted-signal corpus")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--claims", type=int, default=80)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--split-signal", action="store_true")
    args = parser.parse_args(argv)

    samples = planted_corpus(
        n_claims=args.claims, seed=args.seed, split_signal=args.split_signal
    )
    os.makedirs(args.out, exist_ok=True)
    claims_path = os.path.join(args.out, "claims.jsonl")
    engagements_path = os.path.join(args.out, "engagements.jsonl")
    save_corpus(samples, claims_path, engagements_path)
    print(f"wrote {len(samples)} claims to {claims_path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
