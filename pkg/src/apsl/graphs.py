"""Claim-rooted propagation trees and their structural statistics."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .errors import CycleError, StructureError

if TYPE_CHECKING:
    from .dataset import Claim, EngagementNode


@dataclass
class PropagationTree:
    """One platform's reply/repost tree; node 0 is always the claim.

    Edges are (parent_index, child_index) pairs into ``node_ids``. The tree
    is connected and acyclic, so edge_count == node_count - 1.
    """

    platform: str
    node_ids: list[str]
    edges: list[tuple[int, int]]
    depths: list[int] = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class TreeStats:
    node_count: int
    edge_count: int
    depth: int
    width: int


def build_tree(
    claim: "Claim",
    engagements: Sequence["EngagementNode"],
    platform: str | None = None,
) -> PropagationTree:
    """Attach engagements under the claim by their parent references.

    Node order is a stable sort by (timestamp, id); a missing timestamp
    sorts as 0. parent_id "root" attaches directly to the claim.
    """
    if not engagements:
        return PropagationTree(
            platform=platform or "", node_ids=[claim.id], edges=[], depths=[0]
        )
    platform = platform or engagements[0].platform
    for node in engagements:
        if node.claim_id != claim.id or node.platform != platform:
            raise StructureError(
                f"engagement {node.id} does not belong to claim {claim.id} on {platform}"
            )
    ordered = sorted(engagements, key=lambda n: (n.timestamp or 0.0, n.id))
    node_ids = [claim.id] + [n.id for n in ordered]
    index = {nid: i for i, nid in enumerate(node_ids)}

    children: dict[int, list[int]] = {i: [] for i in range(len(node_ids))}
    edges: list[tuple[int, int]] = []
    for child_pos, node in enumerate(ordered, start=1):
        if node.parent_id == "root":
            parent_pos = 0
        else:
            parent_pos = index.get(node.parent_id)
            if parent_pos is None:
                raise StructureError(
                    f"engagement {node.id} has unresolvable parent {node.parent_id!r}"
                )
        edges.append((parent_pos, child_pos))
        children[parent_pos].append(child_pos)

    depths = [-1] * len(node_ids)
    depths[0] = 0
    queue = deque([0])
    while queue:
        here = queue.popleft()
        for child in children[here]:
            depths[child] = depths[here] + 1
            queue.append(child)
    for i, depth in enumerate(depths):
        if depth < 0:
            raise CycleError(f"engagement {node_ids[i]} is trapped in a parent cycle")

    tree = PropagationTree(platform=platform, node_ids=node_ids, edges=edges, depths=depths)
    return tree


def normalized_adjacency(tree: PropagationTree) -> np.ndarray:
    """Symmetric GCN propagation operator D^-1/2 (A+I) D^-1/2.

    A is the undirected 0/1 adjacency of the tree; the result is symmetric
    with entries in [0, 1].
    """
    n = tree.node_count
    a_hat = np.eye(n)
    for parent, child in tree.edges:
        a_hat[parent, child] = 1.0
        a_hat[child, parent] = 1.0
    inv_sqrt_deg = 1.0 / np.sqrt(a_hat.sum(axis=1))
    # The outer product is bitwise symmetric, so the result is too.
    return a_hat * np.outer(inv_sqrt_deg, inv_sqrt_deg)


def tree_width(tree: PropagationTree) -> int:
    """Maximum number of nodes found at any single depth (root is depth 0)."""
    counts = np.bincount(tree.depths)
    return int(counts.max())


def tree_depth(tree: PropagationTree) -> int:
    return int(max(tree.depths))


def tree_stats(tree: PropagationTree) -> TreeStats:
    return TreeStats(
        node_count=tree.node_count,
        edge_count=tree.edge_count,
        depth=tree_depth(tree),
        width=tree_width(tree),
    )
