"""The multi-platform detection network.

Pipeline per sample: platform-specific node enhancement of comment
embeddings, one graph-convolution stack per platform with global add
pooling, claim-guided attention over the per-platform pooled vectors, and
a sigmoid head on the concatenated claim + propagation features.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import tensor as T
from .dataset import PLATFORMS, Label, MultiPlatformSample
from .embedding import EncoderBundle
from .errors import ConfigError, ContractError, FormatError
from .graphs import normalized_adjacency
from .tensor import Tensor


@dataclass(frozen=True)
class AblationFlags:
    no_adapter: bool = False
    no_attention: bool = False
    content_only: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> "AblationFlags":
        return cls(
            no_adapter=bool(d.get("no_adapter", False)),
            no_attention=bool(d.get("no_attention", False)),
            content_only=bool(d.get("content_only", False)),
        )

    def to_dict(self) -> dict:
        return {
            "no_adapter": self.no_adapter,
            "no_attention": self.no_attention,
            "content_only": self.content_only,
        }


@dataclass(frozen=True)
class ModelConfig:
    """Shapes and wiring of the network.

    ``platforms`` is the registered subset, kept in canonical order; the
    fused propagation feature always has one block per registered platform.
    """

    dim: int
    platforms: tuple[str, ...] = PLATFORMS
    gcn_hidden: tuple[int, ...] = (64,)
    gcn_out: int = 64
    head_hidden: tuple[int, ...] = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        if not self.platforms:
            raise ConfigError("at least one platform must be registered")
        unknown = [p for p in self.platforms if p not in PLATFORMS]
        if unknown:
            raise ConfigError(f"unknown platforms {unknown}")
        ordered = tuple(p for p in PLATFORMS if p in self.platforms)
        object.__setattr__(self, "platforms", ordered)

    @property
    def gcn_dims(self) -> tuple[int, ...]:
        return (self.dim, *self.gcn_hidden, self.gcn_out)

    @property
    def fused_dim(self) -> int:
        return self.gcn_out * len(self.platforms)

    @property
    def head_in_dim(self) -> int:
        return self.dim + self.fused_dim


class ModelState:
    """All learnable parameters, created from a seed.

    Initialization is uniform in +-1/sqrt(fan_in) per tensor, drawn in a
    fixed order so the same seed always yields the same state.
    """

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        self.seed = seed
        rng = np.random.default_rng(seed)

        def make(name: str, rows: int, cols: int, fan_in: int) -> Tensor:
            bound = 1.0 / math.sqrt(fan_in)
            data = rng.uniform(-bound, bound, size=(rows, cols))
            return Tensor(data, requires_grad=True, name=name)

        d = config.dim
        self.adapter_gate: dict[str, Tensor] = {}
        self.adapter_weight: dict[str, Tensor] = {}
        self.adapter_bias: dict[str, Tensor] = {}
        self.gcn_layers: dict[str, list[Tensor]] = {}
        for platform in config.platforms:
            self.adapter_gate[platform] = make(f"adapter/{platform}/gate", 1, d, d)
            self.adapter_weight[platform] = make(f"adapter/{platform}/weight", d, d, d)
            self.adapter_bias[platform] = make(f"adapter/{platform}/bias", 1, d, d)
            dims = config.gcn_dims
            self.gcn_layers[platform] = [
                make(f"gcn/{platform}/layer{i}", dims[i], dims[i + 1], dims[i])
                for i in range(len(dims) - 1)
            ]
        self.claim_proj: Optional[Tensor] = None
        if d != config.gcn_out:
            self.claim_proj = make("claim_proj", d, config.gcn_out, d)
        self.head: list[tuple[Tensor, Tensor]] = []
        in_dim = config.head_in_dim
        for i, hidden in enumerate((*config.head_hidden, 1)):
            self.head.append(
                (
                    make(f"head/{i}/weight", in_dim, hidden, in_dim),
                    make(f"head/{i}/bias", 1, hidden, in_dim),
                )
            )
            in_dim = hidden

    def parameters(self) -> list[Tensor]:
        params: list[Tensor] = []
        for platform in self.config.platforms:
            params += [
                self.adapter_gate[platform],
                self.adapter_weight[platform],
                self.adapter_bias[platform],
            ]
            params += self.gcn_layers[platform]
        if self.claim_proj is not None:
            params.append(self.claim_proj)
        for weight, bias in self.head:
            params += [weight, bias]
        return params

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def copy_parameter_data(self) -> list[np.ndarray]:
        return [p.data.copy() for p in self.parameters()]

    def load_parameter_data(self, blobs: list[np.ndarray]) -> None:
        params = self.parameters()
        if len(blobs) != len(params):
            raise FormatError(f"expected {len(params)} tensors, got {len(blobs)}")
        for p, blob in zip(params, blobs):
            if blob.shape != p.data.shape:
                raise FormatError(
                    f"shape mismatch for {p.name}: {blob.shape} vs {p.data.shape}"
                )
            p.data = blob.copy()
            p.zero_grad()


def platform_adapt(vec: Tensor, platform: str, state: ModelState) -> Tensor:
    """Enhance one comment embedding for its platform.

    Output is a softmax over the feature entries of gate*vec run through
    the platform's linear map, so every row sums to 1.
    """
    return adapt_rows(vec, platform, state)


def adapt_rows(rows: Tensor, platform: str, state: ModelState) -> Tensor:
    if platform not in state.config.platforms:
        raise ConfigError(f"platform {platform!r} not registered with the model")
    gated = T.mul(rows, state.adapter_gate[platform])
    projected = T.add(T.matmul(gated, state.adapter_weight[platform]),
                      state.adapter_bias[platform])
    return T.softmax(projected, axis=1)


def encode_platform(
    state: ModelState, platform: str, adjacency: Tensor, nodes: Tensor
) -> Tensor:
    """Run the platform's GCN stack and pool all node representations."""
    if platform not in state.config.platforms:
        raise ConfigError(f"platform {platform!r} not registered with the model")
    if nodes.shape[1] != state.config.dim:
        raise ConfigError(
            f"node feature dim {nodes.shape[1]} != model dim {state.config.dim}"
        )
    layers = state.gcn_layers[platform]
    h = nodes
    for i, weight in enumerate(layers):
        h = T.matmul(T.matmul(adjacency, h), weight)
        if i < len(layers) - 1:
            h = T.relu(h)
    return T.global_add_pool(h)


@dataclass
class FusionResult:
    weights: dict[str, float]
    attended: dict[str, Tensor] = field(repr=False)
    fused: Tensor = field(repr=False)


def fuse(
    state: ModelState,
    claim_vec: Tensor,
    pooled: dict[str, Tensor],
    flags: AblationFlags = AblationFlags(),
) -> FusionResult:
    """Claim-guided attention over per-platform pooled vectors.

    Attention weights are a softmax over the scaled claim/pooled dot
    products of the platforms present in this sample; absent platforms
    contribute exact zero blocks to the fused feature.
    """
    config = state.config
    present = [p for p in config.platforms if p in pooled]
    if not present:
        raise ContractError("fuse: no platform features present")

    attended: dict[str, Tensor] = {}
    weight_values: dict[str, float] = {}
    if flags.no_attention:
        uniform = 1.0 / len(present)
        for platform in present:
            attended[platform] = T.scale(pooled[platform], uniform)
            weight_values[platform] = uniform
    else:
        claim_key = claim_vec
        if state.claim_proj is not None:
            claim_key = T.matmul(claim_vec, state.claim_proj)
        inv_scale = 1.0 / math.sqrt(config.gcn_out)
        scores = [
            T.scale(T.matmul(claim_key, T.transpose(pooled[p])), inv_scale)
            for p in present
        ]
        score_row = scores[0]
        for s in scores[1:]:
            score_row = T.concat(score_row, s, axis=1)
        alpha = T.softmax(score_row, axis=1)
        for i, platform in enumerate(present):
            w = T.slice_cols(alpha, i, i + 1)
            attended[platform] = T.mul(pooled[platform], w)
            weight_values[platform] = float(alpha.data[0, i])

    blocks = []
    for platform in config.platforms:
        if platform in attended:
            blocks.append(attended[platform])
        else:
            blocks.append(Tensor(np.zeros((1, config.gcn_out))))
    fused = blocks[0]
    for block in blocks[1:]:
        fused = T.concat(fused, block, axis=1)
    return FusionResult(weights=weight_values, attended=attended, fused=fused)


def classify(state: ModelState, claim_vec: Tensor, fused: Tensor) -> Tensor:
    """Sigmoid head on concat(claim, fused); output strictly in (0, 1)."""
    x = T.concat(claim_vec, fused, axis=1)
    for i, (weight, bias) in enumerate(state.head):
        x = T.add(T.matmul(x, weight), bias)
        if i < len(state.head) - 1:
            x = T.relu(x)
    return T.sigmoid(x)


@dataclass
class SampleFeatures:
    """Constant per-sample inputs: embeddings and normalized adjacencies."""

    sample_id: str
    label: Optional[Label]
    claim_vec: np.ndarray
    platform_nodes: dict[str, np.ndarray]  # (M, dim) comment embeddings, root excluded
    platform_adj: dict[str, np.ndarray]  # (M+1, M+1)

    @property
    def platforms(self) -> tuple[str, ...]:
        return tuple(p for p in PLATFORMS if p in self.platform_adj)


def featurize(
    sample: MultiPlatformSample,
    encoders: EncoderBundle,
    platforms: tuple[str, ...] = PLATFORMS,
) -> SampleFeatures:
    """Embed a sample once; reused across epochs since embeddings are fixed."""
    claim_vec = np.asarray(encoders.claim_vector(sample.claim)).reshape(1, -1)
    nodes: dict[str, np.ndarray] = {}
    adj: dict[str, np.ndarray] = {}
    for platform in platforms:
        tree = sample.trees.get(platform)
        if tree is None:
            continue
        comments = sample.engagements[platform]
        if comments:
            nodes[platform] = np.stack([encoders.comment_vector(n) for n in comments])
        else:
            nodes[platform] = np.zeros((0, encoders.dim))
        adj[platform] = normalized_adjacency(tree)
    return SampleFeatures(
        sample_id=sample.claim.id,
        label=sample.claim.label,
        claim_vec=claim_vec,
        platform_nodes=nodes,
        platform_adj=adj,
    )


@dataclass
class ForwardOutput:
    prob: Tensor
    pooled: dict[str, Tensor]
    attended: dict[str, Tensor]
    weights: dict[str, float]
    fused: Tensor


def forward(
    state: ModelState,
    features: SampleFeatures,
    flags: AblationFlags = AblationFlags(),
) -> ForwardOutput:
    """Full pass: adapt -> encode -> fuse -> classify.

    The claim row bypasses the adapter. With ``content_only`` (or when a
    sample has no tree on any registered platform) the propagation feature
    is all zeros and only the claim text drives the prediction.
    """
    config = state.config
    claim_row = Tensor(features.claim_vec)
    if claim_row.shape[1] != config.dim:
        raise ConfigError(
            f"claim embedding dim {claim_row.shape[1]} != model dim {config.dim}"
        )
    present = [p for p in config.platforms if p in features.platform_adj]
    if flags.content_only or not present:
        fused = Tensor(np.zeros((1, config.fused_dim)))
        return ForwardOutput(
            prob=classify(state, claim_row, fused),
            pooled={},
            attended={},
            weights={},
            fused=fused,
        )

    pooled: dict[str, Tensor] = {}
    for platform in present:
        comment_rows = features.platform_nodes[platform]
        if comment_rows.shape[0] > 0:
            comments = Tensor(comment_rows)
            if not flags.no_adapter:
                comments = adapt_rows(comments, platform, state)
            node_matrix = T.concat(claim_row, comments, axis=0)
        else:
            node_matrix = claim_row
        adjacency = Tensor(features.platform_adj[platform])
        pooled[platform] = encode_platform(state, platform, adjacency, node_matrix)

    fusion = fuse(state, claim_row, pooled, flags)
    prob = classify(state, claim_row, fusion.fused)
    return ForwardOutput(
        prob=prob,
        pooled=pooled,
        attended=fusion.attended,
        weights=fusion.weights,
        fused=fusion.fused,
    )


CHECKPOINT_BIN = "checkpoint.bin"
CHECKPOINT_MANIFEST = "manifest.json"


def save_checkpoint(state: ModelState, directory, extra: dict | None = None) -> None:
    """Write manifest.json + a little-endian f64 blob with per-tensor offsets."""
    os.makedirs(directory, exist_ok=True)
    tensors = []
    offset = 0
    chunks = []
    for p in state.parameters():
        rows, cols = p.data.shape
        tensors.append({"name": p.name, "rows": rows, "cols": cols, "offset": offset})
        raw = np.ascontiguousarray(p.data, dtype="<f8").tobytes()
        chunks.append(raw)
        offset += len(raw)
    manifest = {
        "format_version": 1,
        "dim": state.config.dim,
        "platforms": list(state.config.platforms),
        "gcn_hidden": list(state.config.gcn_hidden),
        "gcn_out": state.config.gcn_out,
        "head_hidden": list(state.config.head_hidden),
        "seed": state.seed,
        "tensors": tensors,
        "run": extra or {},
    }
    with open(os.path.join(directory, CHECKPOINT_MANIFEST), "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    with open(os.path.join(directory, CHECKPOINT_BIN), "wb") as f:
        for raw in chunks:
            f.write(raw)


def load_checkpoint(directory) -> tuple[ModelState, dict]:
    """Rebuild a ModelState from a checkpoint directory; returns (state, run)."""
    manifest_path = os.path.join(directory, CHECKPOINT_MANIFEST)
    try:
        with open(manifest_path, encoding="utf-8") as f:
            manifest = json.load(f)
    except FileNotFoundError:
        raise FormatError(f"missing checkpoint manifest {manifest_path}")
    except json.JSONDecodeError as err:
        raise FormatError(f"{manifest_path}: invalid JSON: {err.msg}") from err
    config = ModelConfig(
        dim=int(manifest["dim"]),
        platforms=tuple(manifest["platforms"]),
        gcn_hidden=tuple(manifest["gcn_hidden"]),
        gcn_out=int(manifest["gcn_out"]),
        head_hidden=tuple(manifest["head_hidden"]),
    )
    state = ModelState(config, seed=int(manifest.get("seed", 0)))
    with open(os.path.join(directory, CHECKPOINT_BIN), "rb") as f:
        blob = f.read()
    blobs = []
    for entry in manifest["tensors"]:
        rows, cols, offset = int(entry["rows"]), int(entry["cols"]), int(entry["offset"])
        count = rows * cols
        raw = blob[offset : offset + count * 8]
        if len(raw) != count * 8:
            raise FormatError(f"checkpoint blob truncated at tensor {entry['name']!r}")
        blobs.append(np.frombuffer(raw, dtype="<f8").reshape(rows, cols))
    state.load_parameter_data(blobs)
    return state, manifest.get("run", {})
