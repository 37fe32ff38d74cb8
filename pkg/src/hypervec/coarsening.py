"""Similarity-driven coarsening: assign nodes to hyperedges, merge, rebuild.

Each level assigns every node to one of its hyperedges (by feature cosine,
hyperedge weight, or hyperedge degree), merges all nodes assigned to the
same hyperedge into one coarse node, and keeps a hyperedge only when its
merged pin set still has at least two distinct members.

All bulk phases are vectorized sweeps over the compressed incidence
arrays; results are deterministic for a fixed tie-break seed regardless of
how the sweeps are scheduled.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace

import numpy as np

from .core import (DataError, EmptyHypergraphError, Hypergraph,
                   _offsets_from_counts)

logger = logging.getLogger(__name__)

REMOVED = -1

# candidates within this distance of the per-node maximum count as tied
TIE_TOLERANCE = 1e-12

POLICY_KINDS = ("cosine-features", "max-weight", "max-degree")


@dataclass(frozen=True)
class AssignPolicy:
    """How nodes pick the hyperedge they merge into.

    ``cosine-features`` ranks a node's hyperedges by cosine similarity
    between the node's feature vector and the hyperedge's mean feature
    vector; ``max-weight`` and ``max-degree`` are the featureless
    fallbacks. Ties are broken by a deterministic seeded hash.
    """

    kind: str = "max-degree"
    tie_break_seed: int = 0

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy {self.kind!r}; choose from {POLICY_KINDS}")


@dataclass(frozen=True)
class MergeMap:
    """Per-level record linking a fine hypergraph to its coarse successor.

    ``node_rep[v]`` is the coarse node standing for fine node ``v``;
    ``hedge_rep[e]`` is the coarse hyperedge id or ``REMOVED``;
    ``assignment[v]`` is the fine hyperedge ``v`` was assigned to
    (-1 for nodes with no memberships, which carry over unmerged).
    """

    node_rep: np.ndarray
    hedge_rep: np.ndarray
    assignment: np.ndarray
    num_coarse_nodes: int
    num_coarse_hyperedges: int


def _mix64(x):
    """splitmix64 finalizer; element-wise on uint64 arrays or scalars."""
    with np.errstate(over="ignore"):  # uint64 wrap-around is intended
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(0xBF58476D1CE4E5B9)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(0x94D049BB133111EB)
        return x ^ (x >> np.uint64(31))


def _tie_keys(seed, nodes, hedges):
    """Uniform 64-bit key per (node, hyperedge) pair for seeded tie-breaks."""
    with np.errstate(over="ignore"):
        base = _mix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
                      ^ np.uint64(0x9E3779B97F4A7C15))
        x = np.asarray(nodes).astype(np.uint64) * np.uint64(0xD1342543DE82EF95)
        x = _mix64(x ^ base)
        x = x ^ np.asarray(hedges).astype(np.uint64) * np.uint64(0xAF251AF3B0F025B5)
        return _mix64(x)


def derive_level_seed(seed, level) -> int:
    """Fold a hierarchy level index into a tie-break seed."""
    with np.errstate(over="ignore"):
        return int(_mix64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF)
                          + np.uint64(level) * np.uint64(0x9E3779B97F4A7C15)))


def _adjusted_keys(keys, eligible):
    # eligible keys become odd (always > 0), ineligible collapse to 0
    odd = (keys >> np.uint64(1)) * np.uint64(2) + np.uint64(1)
    return np.where(eligible, odd, np.uint64(0))


def _segment_reduce(values, offsets, ufunc, empty):
    """Per-segment reduce that tolerates empty segments."""
    n = len(offsets) - 1
    counts = np.diff(offsets)
    if len(values) == 0:
        return np.full(n, empty, dtype=values.dtype)
    starts = np.minimum(offsets[:-1], len(values) - 1)
    out = ufunc.reduceat(values, starts)
    out[counts == 0] = empty
    return out


def compute_hyperedge_features(h: Hypergraph) -> np.ndarray:
    """Mean of member-node feature vectors, one row per hyperedge."""
    if h.node_features is None:
        raise DataError("policy requires features")
    X = h.node_features
    if h.num_hyperedges == 0:
        return np.zeros((0, X.shape[1]))
    sums = np.add.reduceat(X[h.pin_nodes], h.pin_offsets[:-1], axis=0)
    return sums / h.pin_counts[:, None]


def assign_hyperedge(v, h: Hypergraph, edge_features, policy: AssignPolicy) -> int:
    """Pick the hyperedge node ``v`` merges into under ``policy``.

    Returns the argmax hyperedge among ``v``'s memberships; exact ties
    (within ``TIE_TOLERANCE``) are broken by a seeded hash of the pair, so
    reruns with the same seed pick the same hyperedge. Zero-norm feature
    vectors score minus infinity; if every candidate does, the choice
    falls back to max-degree.
    """
    mems = h.memberships(v)
    if len(mems) == 0:
        raise DataError(f"node {v} has no memberships")
    if policy.kind == "cosine-features":
        if edge_features is None:
            edge_features = compute_hyperedge_features(h)
        fv = h.node_features[v]
        fe = edge_features[mems]
        dots = fe @ fv
        denom = np.sqrt(np.einsum("ij,ij->i", fe, fe)) * np.sqrt(fv @ fv)
        sims = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), -np.inf)
        if np.all(sims == -np.inf):
            logger.debug("node %d: all cosine candidates degenerate, "
                         "falling back to max-degree", v)
            sims = h.pin_counts[mems].astype(np.float64)
    elif policy.kind == "max-weight":
        sims = h.hyperedge_weights[mems]
    else:
        sims = h.pin_counts[mems].astype(np.float64)

    eligible = sims >= sims.max() - TIE_TOLERANCE
    keys = _adjusted_keys(
        _tie_keys(policy.tie_break_seed, np.full(len(mems), v, dtype=np.int64), mems),
        eligible)
    return int(mems[np.argmax(keys)])


def _assign_all(h: Hypergraph, policy: AssignPolicy) -> np.ndarray:
    """Vectorized assignment for every node; -1 for membership-less nodes."""
    counts = h.membership_counts
    assignment = np.full(h.num_nodes, -1, dtype=np.int64)
    if len(h.mem_hedges) == 0:
        return assignment

    v_idx = np.repeat(np.arange(h.num_nodes, dtype=np.int64), counts)
    e_idx = h.mem_hedges

    if policy.kind == "cosine-features":
        Fe = compute_hyperedge_features(h)
        X = h.node_features
        dots = np.einsum("ij,ij->i", Fe[e_idx], X[v_idx])
        ne = np.sqrt(np.einsum("ij,ij->i", Fe, Fe))
        nv = np.sqrt(np.einsum("ij,ij->i", X, X))
        denom = ne[e_idx] * nv[v_idx]
        sims = np.where(denom > 0, dots / np.where(denom > 0, denom, 1.0), -np.inf)
    elif policy.kind == "max-weight":
        sims = h.hyperedge_weights[e_idx]
    else:
        sims = h.pin_counts[e_idx].astype(np.float64)

    best = _segment_reduce(sims, h.mem_offsets, np.maximum, -np.inf)

    degenerate = (best == -np.inf) & (counts > 0)
    if np.any(degenerate):
        logger.debug("%d nodes with degenerate cosine candidates fall back "
                     "to max-degree", int(degenerate.sum()))
        degree_sims = h.pin_counts[e_idx].astype(np.float64)
        sims = np.where(degenerate[v_idx], degree_sims, sims)
        best = _segment_reduce(sims, h.mem_offsets, np.maximum, -np.inf)

    eligible = sims >= best[v_idx] - TIE_TOLERANCE
    keys = _adjusted_keys(_tie_keys(policy.tie_break_seed, v_idx, e_idx), eligible)
    key_max = _segment_reduce(keys, h.mem_offsets, np.maximum, np.uint64(0))

    npairs = len(e_idx)
    pos = np.where(keys == key_max[v_idx], np.arange(npairs), npairs)
    first = _segment_reduce(pos, h.mem_offsets, np.minimum, npairs)
    chosen = counts > 0
    assignment[chosen] = e_idx[np.minimum(first[chosen], npairs - 1)]
    return assignment


def coarsen_level(h: Hypergraph, policy: AssignPolicy):
    """One coarsening step; returns ``(coarse_hypergraph, merge_map)``.

    Coarse node ids are ordered by the fine hyperedge each group was
    assigned to (ascending), with membership-less fine nodes appended in
    fine-id order. Surviving hyperedges keep their relative order and
    their weights; a hyperedge survives only if its merged pin set has at
    least two distinct coarse nodes. Coarse node features are the mean of
    the merged members' features.

    Raises :class:`EmptyHypergraphError` when no hyperedge survives,
    which ends a hierarchy.
    """
    if h.num_hyperedges == 0:
        raise EmptyHypergraphError()
    if policy.kind == "cosine-features" and h.node_features is None:
        raise DataError("policy requires features")

    assignment = _assign_all(h, policy)

    assigned = assignment >= 0
    chosen = np.unique(assignment[assigned])
    node_rep = np.empty(h.num_nodes, dtype=np.int64)
    node_rep[assigned] = np.searchsorted(chosen, assignment[assigned])
    isolated = np.flatnonzero(~assigned)
    node_rep[isolated] = len(chosen) + np.arange(len(isolated), dtype=np.int64)
    num_coarse_nodes = len(chosen) + len(isolated)

    # deduplicate merged pins inside each hyperedge, keeping first occurrence
    reps = node_rep[h.pin_nodes]
    seg = np.repeat(np.arange(h.num_hyperedges, dtype=np.int64), h.pin_counts)
    pos = np.arange(len(reps), dtype=np.int64)
    order = np.lexsort((pos, reps, seg))
    seg_o, reps_o = seg[order], reps[order]
    first_sorted = np.empty(len(reps), dtype=bool)
    first_sorted[0] = True
    first_sorted[1:] = (seg_o[1:] != seg_o[:-1]) | (reps_o[1:] != reps_o[:-1])
    first = np.empty(len(reps), dtype=bool)
    first[order] = first_sorted

    distinct = np.bincount(seg[first], minlength=h.num_hyperedges)
    survives = distinct >= 2
    num_coarse_hedges = int(survives.sum())

    hedge_rep = np.full(h.num_hyperedges, REMOVED, dtype=np.int64)
    hedge_rep[survives] = np.arange(num_coarse_hedges, dtype=np.int64)

    merge_map = MergeMap(node_rep, hedge_rep, assignment,
                         num_coarse_nodes, num_coarse_hedges)

    if num_coarse_hedges == 0:
        raise EmptyHypergraphError()

    keep = first & survives[seg]
    coarse_offsets = _offsets_from_counts(distinct[survives])
    coarse_weights = h.hyperedge_weights[survives]

    coarse_features = None
    if h.node_features is not None:
        sums = np.zeros((num_coarse_nodes, h.node_features.shape[1]))
        np.add.at(sums, node_rep, h.node_features)
        group_sizes = np.bincount(node_rep, minlength=num_coarse_nodes)
        coarse_features = sums / group_sizes[:, None]

    coarse = Hypergraph(num_coarse_nodes, coarse_offsets, reps[keep],
                        weights=coarse_weights, features=coarse_features)
    return coarse, merge_map


@dataclass
class Hierarchy:
    """Coarsening levels finest-to-coarsest with the maps linking them.

    ``maps[i]`` links ``levels[i]`` (fine) to ``levels[i+1]`` (coarse);
    ``coarsen_times[i]`` is the wall-clock cost of producing level i+1.
    """

    levels: list
    maps: list
    coarsen_times: list

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    @property
    def coarsest(self) -> Hypergraph:
        return self.levels[-1]


def coarsen_hierarchy(h: Hypergraph, depth, min_size=0, policy=None) -> Hierarchy:
    """Apply up to ``depth`` coarsening levels, finest first in the result.

    Stops early when the current coarsest level has fewer than
    ``min_size`` nodes, when a level makes no progress (nothing merged),
    or when coarsening would empty the hypergraph. The tie-break seed is
    re-derived per level so repeated ties do not correlate across levels.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if policy is None:
        kind = "cosine-features" if h.node_features is not None else "max-degree"
        policy = AssignPolicy(kind)

    levels = [h]
    maps = []
    times = []
    for level in range(depth):
        current = levels[-1]
        if current.num_nodes < min_size:
            break
        level_policy = replace(
            policy, tie_break_seed=derive_level_seed(policy.tie_break_seed, level))
        started = time.perf_counter()
        try:
            coarse, merge_map = coarsen_level(current, level_policy)
        except EmptyHypergraphError:
            logger.info("level %d would be empty; stopping hierarchy", level + 1)
            break
        elapsed = time.perf_counter() - started
        if (coarse.num_nodes == current.num_nodes
                and coarse.num_hyperedges == current.num_hyperedges):
            logger.info("level %d made no progress; stopping hierarchy", level + 1)
            break
        levels.append(coarse)
        maps.append(merge_map)
        times.append(elapsed)
    return Hierarchy(levels, maps, times)
