"""Label mapping, corpus loading, balancing, and splits."""

import json

import pytest

from apsl.dataset import (
    POLITIFACT_FAKE,
    POLITIFACT_TRUE,
    SNOPES_FAKE,
    SNOPES_TRUE,
    Label,
    SplitConfig,
    balance,
    load_corpus,
    load_corpus_with_report,
    map_label,
    save_corpus,
    split,
)
from apsl.errors import (
    BalanceError,
    ConfigError,
    CycleError,
    ParseError,
    ReferentialError,
)
from apsl.synthetic import planted_corpus

from conftest import make_claim, make_engagement, make_sample


def test_map_label_politifact_half_true_is_true():
    assert map_label("politifact", "half-true") is Label.TRUE


def test_map_label_snopes_half_true_is_fake():
    assert map_label("snopes", "half-true") is Label.FAKE


def test_map_label_pants_on_fire_is_fake():
    assert map_label("politifact", "pants-on-fire") is Label.FAKE


def test_map_label_exhaustive_tables():
    assert len(POLITIFACT_TRUE | POLITIFACT_FAKE) == 8
    assert len(SNOPES_TRUE | SNOPES_FAKE) == 12
    for raw in POLITIFACT_TRUE:
        assert map_label("politifact", raw) is Label.TRUE
    for raw in POLITIFACT_FAKE:
        assert map_label("politifact", raw) is Label.FAKE
    for raw in SNOPES_TRUE:
        assert map_label("snopes", raw) is Label.TRUE
    for raw in SNOPES_FAKE:
        assert map_label("snopes", raw) is Label.FAKE


def test_map_label_rejects_unknown_source_and_label():
    with pytest.raises(ConfigError):
        map_label("factcheckorg", "true")
    with pytest.raises(ConfigError, match="made-up-label"):
        map_label("politifact", "made-up-label")


def test_load_corpus_fixture(tiny_corpus_files):
    claims_path, engagements_path = tiny_corpus_files
    samples = load_corpus(claims_path, engagements_path)
    assert len(samples) == 2
    by_id = {s.claim.id: s for s in samples}
    assert by_id["c1"].platforms == ("youtube", "x")
    assert by_id["c2"].platforms == ("reddit",)
    assert by_id["c1"].claim.label is Label.TRUE
    assert by_id["c2"].claim.label is Label.FAKE


def test_load_corpus_empty_engagements(tmp_path, tiny_corpus_files):
    claims_path, _ = tiny_corpus_files
    empty = tmp_path / "none.jsonl"
    empty.write_text("", encoding="utf-8")
    samples = load_corpus(claims_path, empty)
    assert all(s.trees == {} for s in samples)


def test_load_corpus_malformed_line_reports_number(tmp_path, tiny_corpus_files):
    _, engagements_path = tiny_corpus_files
    bad = tmp_path / "bad_claims.jsonl"
    bad.write_text(
        '{"id": "c1", "text": "ok", "source": "politifact", "raw_label": "true"}\n'
        "{not json}\n",
        encoding="utf-8",
    )
    with pytest.raises(ParseError, match="2"):
        load_corpus(bad, engagements_path)


def test_load_corpus_unknown_claim_reference(tmp_path, tiny_corpus_files):
    claims_path, _ = tiny_corpus_files
    stray = tmp_path / "stray.jsonl"
    stray.write_text(
        '{"id": "e9", "claim_id": "ghost", "platform": "x", "parent_id": "root", '
        '"text": "hi", "kind": "comment"}\n',
        encoding="utf-8",
    )
    with pytest.raises(ReferentialError, match="ghost"):
        load_corpus(claims_path, stray)


def test_load_corpus_cross_claim_parent(tmp_path, tiny_corpus_files):
    claims_path, _ = tiny_corpus_files
    crossed = tmp_path / "crossed.jsonl"
    crossed.write_text(
        '{"id": "e1", "claim_id": "c1", "platform": "x", "parent_id": "root", '
        '"text": "a", "kind": "comment"}\n'
        '{"id": "e2", "claim_id": "c2", "platform": "x", "parent_id": "e1", '
        '"text": "b", "kind": "comment"}\n',
        encoding="utf-8",
    )
    with pytest.raises(ReferentialError, match="e2"):
        load_corpus(claims_path, crossed)


def test_load_corpus_cycle(tmp_path, tiny_corpus_files):
    claims_path, _ = tiny_corpus_files
    looped = tmp_path / "looped.jsonl"
    looped.write_text(
        '{"id": "e1", "claim_id": "c1", "platform": "x", "parent_id": "e2", '
        '"text": "a", "kind": "comment"}\n'
        '{"id": "e2", "claim_id": "c1", "platform": "x", "parent_id": "e1", '
        '"text": "b", "kind": "comment"}\n',
        encoding="utf-8",
    )
    with pytest.raises(CycleError):
        load_corpus(claims_path, looped)


def test_load_counts_unknown_keys(tmp_path, tiny_corpus_files):
    _, engagements_path = tiny_corpus_files
    extra = tmp_path / "extra.jsonl"
    extra.write_text(
        '{"id": "c1", "text": "ok", "source": "politifact", "raw_label": "true", '
        '"mystery": 1}\n',
        encoding="utf-8",
    )
    empty = tmp_path / "none.jsonl"
    empty.write_text("", encoding="utf-8")
    _, report = load_corpus_with_report(extra, empty)
    assert report.unknown_key_warnings == 1


def test_label_revalidated_on_load(tiny_corpus_files):
    claims_path, engagements_path = tiny_corpus_files
    for sample in load_corpus(claims_path, engagements_path):
        assert sample.claim.label is map_label(
            sample.claim.source, sample.claim.raw_label
        )


def test_round_trip(tmp_path):
    samples = planted_corpus(n_claims=12, seed=3)
    claims_path = tmp_path / "claims.jsonl"
    engagements_path = tmp_path / "engagements.jsonl"
    save_corpus(samples, claims_path, engagements_path)
    reloaded = load_corpus(claims_path, engagements_path)
    assert [s.claim for s in reloaded] == [s.claim for s in samples]
    assert [s.engagements for s in reloaded] == [s.engagements for s in samples]
    assert [
        {p: (t.node_ids, t.edges) for p, t in s.trees.items()} for s in reloaded
    ] == [{p: (t.node_ids, t.edges) for p, t in s.trees.items()} for s in samples]


def _labelled_samples(n_fake, n_true):
    samples = []
    for i in range(n_fake):
        samples.append(make_sample(make_claim(f"f{i}", raw_label="false"), {}))
    for i in range(n_true):
        samples.append(make_sample(make_claim(f"t{i}", raw_label="true"), {}))
    return samples


def test_balance_downsamples_majority():
    balanced = balance(_labelled_samples(60, 40), seed=1)
    labels = [s.claim.label for s in balanced]
    assert labels.count(Label.FAKE) == 40
    assert labels.count(Label.TRUE) == 40


def test_balance_already_balanced_keeps_multiset():
    samples = _labelled_samples(40, 40)
    balanced = balance(samples, seed=9)
    assert sorted(s.claim.id for s in balanced) == sorted(s.claim.id for s in samples)


def test_balance_seed_determinism_and_sensitivity():
    samples = _labelled_samples(60, 40)
    first = [s.claim.id for s in balance(samples, seed=5)]
    second = [s.claim.id for s in balance(samples, seed=5)]
    assert first == second
    different = [s.claim.id for s in balance(samples, seed=6)]
    assert set(first) != set(different) or first != different


def test_balance_requires_both_classes():
    with pytest.raises(BalanceError):
        balance(_labelled_samples(10, 0), seed=0)


def test_split_sizes_and_partition():
    samples = _labelled_samples(5, 5)
    train, val, test = split(samples, SplitConfig(seed=2))
    assert (len(train), len(val), len(test)) == (7, 1, 2)
    ids = sorted(s.claim.id for s in train + val + test)
    assert ids == sorted(s.claim.id for s in samples)


def test_split_deterministic():
    samples = _labelled_samples(8, 8)
    a = split(samples, SplitConfig(seed=11))
    b = split(samples, SplitConfig(seed=11))
    assert [[s.claim.id for s in part] for part in a] == [
        [s.claim.id for s in part] for part in b
    ]


def test_split_partition_property_random_corpora():
    import random

    rng = random.Random(0)
    for _ in range(25):
        n = rng.randint(10, 60)
        n_fake = rng.randint(1, n - 1)
        samples = _labelled_samples(n_fake, n - n_fake)
        train, val, test = split(samples, SplitConfig(seed=rng.randint(0, 10**6)))
        combined = sorted(s.claim.id for s in train + val + test)
        assert combined == sorted(s.claim.id for s in samples)
        assert len(train) + len(val) + len(test) == n


def test_split_rejects_bad_ratios():
    samples = _labelled_samples(6, 6)
    with pytest.raises(ConfigError):
        split(samples, SplitConfig(ratios=(0.5, 0.2, 0.2), seed=0))


def test_balance_class_counts_property():
    import random

    rng = random.Random(42)
    for _ in range(20):
        n_fake = rng.randint(1, 30)
        n_true = rng.randint(1, 30)
        balanced = balance(_labelled_samples(n_fake, n_true), seed=rng.randint(0, 99))
        labels = [s.claim.label for s in balanced]
        assert labels.count(Label.FAKE) == labels.count(Label.TRUE) == min(n_fake, n_true)
