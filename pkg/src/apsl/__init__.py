"""Multi-platform fake news detection from propagation trees."""

from .dataset import (
    PLATFORMS,
    Claim,
    EngagementNode,
    Label,
    MultiPlatformSample,
    SplitConfig,
    balance,
    load_corpus,
    map_label,
    save_corpus,
    split,
)
from .embedding import EncoderBundle, HashingEmbedder, PrecomputedStore, load_precomputed
from .graphs import PropagationTree, build_tree, normalized_adjacency, tree_stats, tree_width
from .model import (
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
from .losses import bce_loss, pcl_loss, total_loss
from .optim import Adam
from .tensor import Tape, Tensor
from .training import (
    Metrics,
    TrainConfig,
    ablate,
    evaluate,
    prepare_splits,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "PLATFORMS",
    "Claim",
    "EngagementNode",
    "Label",
    "MultiPlatformSample",
    "SplitConfig",
    "balance",
    "load_corpus",
    "map_label",
    "save_corpus",
    "split",
    "EncoderBundle",
    "HashingEmbedder",
    "PrecomputedStore",
    "load_precomputed",
    "PropagationTree",
    "build_tree",
    "normalized_adjacency",
    "tree_stats",
    "tree_width",
    "AblationFlags",
    "ModelConfig",
    "ModelState",
    "classify",
    "encode_platform",
    "featurize",
    "forward",
    "fuse",
    "load_checkpoint",
    "platform_adapt",
    "save_checkpoint",
    "bce_loss",
    "pcl_loss",
    "total_loss",
    "Adam",
    "Tape",
    "Tensor",
    "Metrics",
    "TrainConfig",
    "ablate",
    "evaluate",
    "prepare_splits",
    "train",
    "__version__",
]
