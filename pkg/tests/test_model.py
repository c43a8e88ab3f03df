"""Network components against hand/numpy oracles, plus the end-to-end
finite-difference gradient check."""

import numpy as np
import pytest

import apsl.tensor as T
from apsl.errors import ConfigError, ContractError
from apsl.losses import bce_loss, pcl_loss, total_loss
from apsl.model import (
    AblationFlags,
    ModelConfig,
    ModelState,
    classify,
    encode_platform,
    featurize,
    forward,
    fuse,
    load_checkpoint,
    platform_adapt,
    save_checkpoint,
)
from apsl.embedding import EncoderBundle, HashingEmbedder
from apsl.tensor import Tape, Tensor, stack_rows
from apsl.synthetic import planted_corpus

from conftest import finite_difference_gradients, max_relative_error


def small_state(dim=3, platforms=("youtube", "x"), gcn_hidden=(), gcn_out=None,
                head_hidden=(), seed=0):
    config = ModelConfig(
        dim=dim,
        platforms=platforms,
        gcn_hidden=gcn_hidden,
        gcn_out=gcn_out if gcn_out is not None else dim,
        head_hidden=head_hidden,
    )
    return ModelState(config, seed=seed)


def test_adapter_symmetric_input():
    state = small_state(dim=3)
    state.adapter_gate["x"].data = np.ones((1, 3))
    state.adapter_weight["x"].data = np.eye(3)
    state.adapter_bias["x"].data = np.zeros((1, 3))
    out = platform_adapt(Tensor([[0.0, 0.0, 0.0]]), "x", state)
    np.testing.assert_allclose(out.data, [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)


def test_adapter_output_on_simplex():
    rng = np.random.default_rng(0)
    state = small_state(dim=6)
    for _ in range(10):
        out = platform_adapt(Tensor(rng.normal(size=(1, 6))), "x", state)
        assert abs(out.data.sum() - 1.0) < 1e-12
        assert (out.data >= 0).all()


def test_adapter_batched_rows_equal_per_row_application():
    from apsl.model import adapt_rows

    rng = np.random.default_rng(12)
    state = small_state(dim=4, platforms=("x",))
    rows = rng.normal(size=(5, 4))
    batched = adapt_rows(Tensor(rows), "x", state).data
    for i in range(5):
        single = platform_adapt(Tensor(rows[i : i + 1]), "x", state).data
        # batched and single-row matmuls take different BLAS paths
        np.testing.assert_allclose(batched[i : i + 1], single, atol=1e-14)


def test_adapter_unregistered_platform():
    state = small_state(platforms=("youtube",))
    with pytest.raises(ConfigError):
        platform_adapt(Tensor([[0.0, 0.0, 0.0]]), "reddit", state)


def test_adapter_gradcheck():
    rng = np.random.default_rng(1)
    state = small_state(dim=5, platforms=("x",))
    s_in = Tensor(rng.normal(size=(1, 5)), requires_grad=True)
    weights = Tensor(rng.normal(size=(1, 5)))
    params = [
        state.adapter_gate["x"],
        state.adapter_weight["x"],
        state.adapter_bias["x"],
        s_in,
    ]

    def build():
        return T.sum_all(T.mul(platform_adapt(s_in, "x", state), weights))

    for p in params:
        p.zero_grad()
    with Tape() as tape:
        loss = build()
    tape.backward(loss)
    numeric = finite_difference_gradients(lambda: build().item(), params)
    assert max_relative_error([p.grad for p in params], numeric) < 1e-4


def test_encode_single_node_identity():
    state = small_state(dim=3, platforms=("x",), gcn_hidden=(), gcn_out=3)
    state.gcn_layers["x"][0].data = np.eye(3)
    c = Tensor([[0.3, -1.2, 0.5]])
    out = encode_platform(state, "x", Tensor([[1.0]]), c)
    np.testing.assert_allclose(out.data, c.data, atol=1e-15)


def test_encode_permutation_invariance():
    rng = np.random.default_rng(2)
    state = small_state(dim=4, platforms=("x",), gcn_hidden=(3,), gcn_out=2)
    nodes = rng.normal(size=(5, 4))
    adj = rng.uniform(0.0, 1.0, size=(5, 5))
    adj = (adj + adj.T) / 2
    out = encode_platform(state, "x", Tensor(adj), Tensor(nodes)).data
    # permute non-root rows consistently in features and adjacency
    perm = np.array([0, 3, 1, 4, 2])
    out_perm = encode_platform(
        state, "x", Tensor(adj[np.ix_(perm, perm)]), Tensor(nodes[perm])
    ).data
    assert np.abs(out - out_perm).max() < 1e-12


def test_encode_path_fixture_matches_numpy():
    state = small_state(dim=2, platforms=("x",), gcn_hidden=(2,), gcn_out=2)
    w0 = np.array([[0.2, -0.1], [0.05, 0.3]])
    w1 = np.array([[0.4, 0.0], [-0.2, 0.1]])
    state.gcn_layers["x"][0].data = w0.copy()
    state.gcn_layers["x"][1].data = w1.copy()
    nodes = np.array([[1.0, 0.5], [-0.3, 0.8], [0.6, -0.4]])
    s = 1.0 / np.sqrt(6.0)
    adj = np.array(
        [[1 / 3, s, 0.0], [s, 1 / 3, s], [0.0, s, 1 / 3]]
    )
    expected = np.maximum(adj @ nodes @ w0, 0.0)
    expected = (adj @ expected @ w1).sum(axis=0, keepdims=True)
    out = encode_platform(state, "x", Tensor(adj), Tensor(nodes))
    assert np.abs(out.data - expected).max() < 1e-12


def test_encode_dim_mismatch():
    state = small_state(dim=3, platforms=("x",))
    with pytest.raises(ConfigError):
        encode_platform(state, "x", Tensor([[1.0]]), Tensor([[1.0, 2.0]]))


def test_fuse_single_platform_weight_is_one():
    state = small_state(dim=2, platforms=("youtube", "x"), gcn_out=2)
    pooled = {"x": Tensor([[0.4, -0.2]])}
    result = fuse(state, Tensor([[1.0, 0.0]]), pooled)
    assert result.weights == {"x": 1.0}
    np.testing.assert_array_equal(result.attended["x"].data, pooled["x"].data)


def test_fuse_identical_pooled_uniform_weights():
    state = small_state(dim=2, platforms=("youtube", "x", "reddit"), gcn_out=2)
    vec = [[0.7, 0.1]]
    pooled = {p: Tensor(vec) for p in ("youtube", "x", "reddit")}
    result = fuse(state, Tensor([[0.3, -0.9]]), pooled)
    for w in result.weights.values():
        assert abs(w - 1 / 3) < 1e-12


def test_fuse_closed_form_fixture():
    state = small_state(dim=2, platforms=("youtube", "x", "reddit"), gcn_out=2)
    claim = Tensor([[1.0, 0.0]])
    pooled = {"youtube": Tensor([[1.0, 0.0]]), "x": Tensor([[0.0, 1.0]])}
    result = fuse(state, claim, pooled)
    scores = np.array([1.0 / np.sqrt(2.0), 0.0])
    expected_alpha = np.exp(scores) / np.exp(scores).sum()
    assert abs(result.weights["youtube"] - expected_alpha[0]) < 1e-12
    assert abs(result.weights["x"] - expected_alpha[1]) < 1e-12
    expected_fused = np.concatenate(
        [expected_alpha[0] * np.array([1.0, 0.0]),
         expected_alpha[1] * np.array([0.0, 1.0]),
         np.zeros(2)]
    ).reshape(1, -1)
    assert np.abs(result.fused.data - expected_fused).max() < 1e-12
    # absent platform block is exactly zero
    assert (result.fused.data[0, 4:] == 0.0).all()


def test_fuse_weight_sum_randomized():
    rng = np.random.default_rng(3)
    state = small_state(dim=4, platforms=("youtube", "x", "reddit"), gcn_out=4)
    for _ in range(25):
        present = rng.choice(["youtube", "x", "reddit"],
                             size=rng.integers(1, 4), replace=False)
        pooled = {p: Tensor(rng.normal(size=(1, 4))) for p in present}
        result = fuse(state, Tensor(rng.normal(size=(1, 4))), pooled)
        assert abs(sum(result.weights.values()) - 1.0) < 1e-12


def test_fuse_no_platforms_errors():
    state = small_state()
    with pytest.raises(ContractError):
        fuse(state, Tensor([[0.0, 0.0, 0.0]]), {})


def test_classify_zero_head_gives_half():
    state = small_state(dim=2, platforms=("x",), gcn_out=2)
    state.head[0][0].data = np.zeros_like(state.head[0][0].data)
    state.head[0][1].data = np.zeros((1, 1))
    out = classify(state, Tensor([[0.4, 0.6]]), Tensor([[1.0, -1.0]]))
    assert out.item() == 0.5


def test_classify_monotone_in_bias():
    state = small_state(dim=2, platforms=("x",), gcn_out=2)
    claim, fused = Tensor([[0.4, 0.6]]), Tensor([[1.0, -1.0]])
    values = []
    for bias in (-1.0, 0.0, 1.0):
        state.head[0][1].data = np.array([[bias]])
        values.append(classify(state, claim, fused).item())
    assert values[0] < values[1] < values[2]


def test_classify_matches_scalar_arithmetic():
    rng = np.random.default_rng(4)
    state = small_state(dim=3, platforms=("x",), gcn_out=2)
    claim = rng.normal(size=(1, 3))
    fused = rng.normal(size=(1, 2))
    w = state.head[0][0].data
    b = state.head[0][1].data
    logit = np.concatenate([claim, fused], axis=1) @ w + b
    expected = 1.0 / (1.0 + np.exp(-logit[0, 0]))
    got = classify(state, Tensor(claim), Tensor(fused)).item()
    assert abs(got - expected) < 1e-12


def _fixture_features(dim=4, seed=5, platforms=("youtube", "x")):
    corpus = planted_corpus(n_claims=4, seed=seed, platforms=platforms,
                            comments_range=(2, 4), split_signal=True)
    encoders = EncoderBundle(HashingEmbedder(dim=dim, seed=0))
    return [featurize(s, encoders, platforms) for s in corpus], corpus


def test_forward_content_only_equals_zero_propagation():
    feats, _ = _fixture_features()
    state = small_state(dim=4, platforms=("youtube", "x"), gcn_hidden=(3,), gcn_out=2)
    out = forward(state, feats[0], AblationFlags(content_only=True))
    direct = classify(
        state, Tensor(feats[0].claim_vec), Tensor(np.zeros((1, state.config.fused_dim)))
    )
    assert out.prob.item() == direct.item()
    assert out.weights == {}


def test_forward_no_attention_halves_pooled():
    feats, _ = _fixture_features()
    state = small_state(dim=4, platforms=("youtube", "x"), gcn_hidden=(3,), gcn_out=2)
    out = forward(state, feats[0], AblationFlags(no_attention=True))
    for platform, attended in out.attended.items():
        np.testing.assert_allclose(
            attended.data, 0.5 * out.pooled[platform].data, atol=1e-15
        )


def test_forward_no_adapter_uses_raw_embeddings():
    feats, _ = _fixture_features()
    state = small_state(dim=4, platforms=("youtube", "x"), gcn_hidden=(3,), gcn_out=2)
    a = forward(state, feats[0], AblationFlags(no_adapter=True)).prob.item()
    b = forward(state, feats[0], AblationFlags()).prob.item()
    assert a != b


def test_forward_deterministic_bitwise():
    feats, _ = _fixture_features()
    state = small_state(dim=4, platforms=("youtube", "x"), gcn_hidden=(3,), gcn_out=2)
    a = forward(state, feats[1]).prob.data.tobytes()
    b = forward(state, feats[1]).prob.data.tobytes()
    assert a == b


def numpy_reference_forward(state, feats):
    """Independent composition of the component formulas in plain numpy."""
    config = state.config
    claim = feats.claim_vec
    pooled = {}
    for platform in config.platforms:
        if platform not in feats.platform_adj:
            continue
        comments = feats.platform_nodes[platform]
        if comments.shape[0]:
            z = (comments * state.adapter_gate[platform].data) @ \
                state.adapter_weight[platform].data + state.adapter_bias[platform].data
            z = z - z.max(axis=1, keepdims=True)
            e = np.exp(z)
            adapted = e / e.sum(axis=1, keepdims=True)
            h = np.concatenate([claim, adapted], axis=0)
        else:
            h = claim
        adj = feats.platform_adj[platform]
        layers = state.gcn_layers[platform]
        for i, w in enumerate(layers):
            h = adj @ h @ w.data
            if i < len(layers) - 1:
                h = np.maximum(h, 0.0)
        pooled[platform] = h.sum(axis=0, keepdims=True)

    present = [p for p in config.platforms if p in pooled]
    key = claim if state.claim_proj is None else claim @ state.claim_proj.data
    scores = np.array(
        [float((key @ pooled[p].T)[0, 0]) / np.sqrt(config.gcn_out) for p in present]
    )
    e = np.exp(scores - scores.max())
    alpha = e / e.sum()
    blocks = []
    for platform in config.platforms:
        if platform in pooled:
            blocks.append(alpha[present.index(platform)] * pooled[platform])
        else:
            blocks.append(np.zeros((1, config.gcn_out)))
    fused = np.concatenate(blocks, axis=1)
    x = np.concatenate([claim, fused], axis=1)
    for i, (w, b) in enumerate(state.head):
        x = x @ w.data + b.data
        if i < len(state.head) - 1:
            x = np.maximum(x, 0.0)
    return 1.0 / (1.0 + np.exp(-x[0, 0]))


def test_full_forward_matches_numpy_reference():
    feats, _ = _fixture_features(dim=5, seed=8)
    state = small_state(dim=5, platforms=("youtube", "x"), gcn_hidden=(4,),
                        gcn_out=3, seed=2)
    for feat in feats:
        got = forward(state, feat).prob.item()
        expected = numpy_reference_forward(state, feat)
        assert abs(got - expected) < 1e-10


def test_end_to_end_gradcheck():
    feats, _ = _fixture_features(dim=6, seed=9, platforms=("youtube", "x", "reddit"))
    batch = feats[:2]
    state = small_state(dim=6, platforms=("youtube", "x", "reddit"),
                        gcn_hidden=(5,), gcn_out=4, seed=3)
    params = state.parameters()
    labels = [1, 0]

    def build():
        outputs = [forward(state, f) for f in batch]
        preds = stack_rows([o.prob for o in outputs])
        per_platform = {
            p: [o.attended.get(p) for o in outputs]
            for p in state.config.platforms
        }
        return total_loss(
            bce_loss(preds, labels), pcl_loss(per_platform, labels, tau=0.1), 0.3
        )

    state.zero_grad()
    with Tape() as tape:
        loss = build()
    tape.backward(loss)
    numeric = finite_difference_gradients(lambda: build().item(), params)
    assert max_relative_error([p.grad for p in params], numeric) < 1e-4


def test_checkpoint_round_trip(tmp_path):
    state = small_state(dim=5, platforms=("youtube", "reddit"), gcn_hidden=(4,),
                        gcn_out=3, head_hidden=(6,), seed=11)
    save_checkpoint(state, tmp_path, extra={"note": "fixture"})
    loaded, run = load_checkpoint(tmp_path)
    assert run == {"note": "fixture"}
    assert loaded.config == state.config
    for a, b in zip(state.parameters(), loaded.parameters()):
        assert a.name == b.name
        np.testing.assert_array_equal(a.data, b.data)
    feats, _ = _fixture_features(dim=5, seed=1, platforms=("youtube", "reddit"))
    assert (
        forward(state, feats[0]).prob.item() == forward(loaded, feats[0]).prob.item()
    )
