"""Hypergraph and bipartite star-expansion data structures.

Incidence is kept in compressed form (offset array + value array) so that
whole-level sweeps are plain vectorized numpy passes over contiguous
memory. Both structures are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp


class HypervecError(Exception):
    """Base class for all errors raised by this package."""


class DataError(HypervecError):
    """Invalid input data: malformed files, broken invariants, empty results."""


class EmptyHypergraphError(DataError):
    """Nothing left after cleanup (or after a coarsening step)."""

    def __init__(self, message="empty after cleanup"):
        super().__init__(message)


class ParseError(DataError):
    """Malformed text input; carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _int_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    return np.ascontiguousarray(arr)


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def _offsets_from_counts(counts: np.ndarray) -> np.ndarray:
    offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    return offsets


class Hypergraph:
    """Immutable incidence structure with optional node features and weights.

    ``pin_offsets``/``pin_nodes`` give, for each hyperedge, its member node
    ids in input order. ``mem_offsets``/``mem_hedges`` is the exact
    transpose (for each node, the hyperedges containing it, ascending).
    Hyperedge weights default to 1.0 when the input carries none.

    Loaded hypergraphs have no isolated nodes and no hyperedge smaller
    than two pins (see :func:`build_hypergraph`). Internally produced
    levels (coarse hypergraphs, holdout views) may contain isolated nodes;
    the two-pin minimum per hyperedge always holds.
    """

    def __init__(self, num_nodes, pin_offsets, pin_nodes,
                 weights=None, features=None, validate=True):
        self.num_nodes = int(num_nodes)
        self.pin_offsets = _freeze(_int_array(pin_offsets))
        self.pin_nodes = _freeze(_int_array(pin_nodes))
        self.num_hyperedges = len(self.pin_offsets) - 1

        if weights is None:
            weights = np.ones(self.num_hyperedges)
        self.hyperedge_weights = _freeze(
            np.ascontiguousarray(np.asarray(weights, dtype=np.float64)))

        if features is not None:
            features = np.ascontiguousarray(np.asarray(features, dtype=np.float64))
        self.node_features = _freeze(features) if features is not None else None

        if validate:
            self._check_invariants()

        # transpose: stable sort keeps hyperedge ids ascending per node
        hedge_per_pin = np.repeat(np.arange(self.num_hyperedges, dtype=np.int64),
                                  self.pin_counts)
        order = np.argsort(self.pin_nodes, kind="stable")
        self.mem_offsets = _freeze(_offsets_from_counts(
            np.bincount(self.pin_nodes, minlength=self.num_nodes)))
        self.mem_hedges = _freeze(hedge_per_pin[order])

    @classmethod
    def from_pin_lists(cls, pins, weights=None, features=None, num_nodes=None):
        """Exact constructor from per-hyperedge node-id lists (no cleanup)."""
        pin_arrays = [_int_array(p) for p in pins]
        counts = np.array([len(p) for p in pin_arrays], dtype=np.int64)
        flat = np.concatenate(pin_arrays) if pin_arrays else np.empty(0, dtype=np.int64)
        if num_nodes is None:
            num_nodes = int(flat.max()) + 1 if flat.size else 0
        return cls(num_nodes, _offsets_from_counts(counts), flat,
                   weights=weights, features=features)

    def _check_invariants(self):
        if self.pin_offsets[0] != 0 or self.pin_offsets[-1] != len(self.pin_nodes):
            raise DataError("pin offsets inconsistent with pin array")
        if np.any(np.diff(self.pin_offsets) < 2):
            raise DataError("hyperedge with fewer than two pins")
        if self.pin_nodes.size:
            if self.pin_nodes.min() < 0 or self.pin_nodes.max() >= self.num_nodes:
                raise DataError("pin node id out of range")
            seg = np.repeat(np.arange(self.num_hyperedges, dtype=np.int64),
                            self.pin_counts)
            order = np.lexsort((self.pin_nodes, seg))
            same = (np.diff(seg[order]) == 0) & (np.diff(self.pin_nodes[order]) == 0)
            if np.any(same):
                raise DataError("duplicate node id within a hyperedge")
        if len(self.hyperedge_weights) != self.num_hyperedges:
            raise DataError("weight count does not match hyperedge count")
        if np.any(self.hyperedge_weights < 0) or not np.all(np.isfinite(self.hyperedge_weights)):
            raise DataError("hyperedge weights must be finite and nonnegative")
        if self.node_features is not None:
            if self.node_features.ndim != 2 or self.node_features.shape[0] != self.num_nodes:
                raise DataError(
                    f"feature shape mismatch: {self.node_features.shape[0]} rows "
                    f"for {self.num_nodes} nodes")
            if not np.all(np.isfinite(self.node_features)):
                raise DataError("node features must be finite")

    @property
    def pin_counts(self) -> np.ndarray:
        return np.diff(self.pin_offsets)

    @property
    def membership_counts(self) -> np.ndarray:
        return np.diff(self.mem_offsets)

    @property
    def num_pins(self) -> int:
        return len(self.pin_nodes)

    def pins(self, e) -> np.ndarray:
        return self.pin_nodes[self.pin_offsets[e]:self.pin_offsets[e + 1]]

    def memberships(self, v) -> np.ndarray:
        return self.mem_hedges[self.mem_offsets[v]:self.mem_offsets[v + 1]]

    def pin_lists(self) -> list:
        return [self.pins(e).tolist() for e in range(self.num_hyperedges)]

    def has_isolated_nodes(self) -> bool:
        return bool(np.any(self.membership_counts == 0))

    def __repr__(self):
        return (f"Hypergraph(nodes={self.num_nodes}, hyperedges={self.num_hyperedges}, "
                f"pins={self.num_pins})")


def build_hypergraph(raw_pins, weights=None, features=None):
    """Construct a cleaned hypergraph from raw per-hyperedge node-id lists.

    Cleanup, in order: duplicate pins inside a hyperedge are dropped (first
    occurrence kept), hyperedges left with fewer than two pins are removed,
    and nodes that end up in no hyperedge are removed. Node ids are
    compacted to ``0..n-1``.

    Returns ``(hypergraph, original_ids)`` where ``original_ids[i]`` is the
    input id of compacted node ``i``. When ``features`` is given it must
    cover every pinned node id (extra trailing rows describe isolated
    nodes, which are dropped); rows of dropped nodes are dropped with them.

    Raises :class:`DataError` with message "empty after cleanup" when
    nothing survives, or "feature shape mismatch" on a bad feature matrix.
    """
    if raw_pins is None or len(raw_pins) == 0:
        raise DataError("no hyperedges given")
    if weights is not None and len(weights) != len(raw_pins):
        raise DataError("weight count does not match hyperedge count")

    universe = 0
    kept_pins = []
    kept_weights = [] if weights is not None else None
    for idx, pin_list in enumerate(raw_pins):
        arr = _int_array(pin_list)
        if arr.ndim != 1:
            raise DataError(f"hyperedge {idx}: pin list must be one-dimensional")
        if arr.size:
            if arr.min() < 0:
                raise DataError(f"hyperedge {idx}: negative node id")
            universe = max(universe, int(arr.max()) + 1)
            _, first = np.unique(arr, return_index=True)
            arr = arr[np.sort(first)]
        if arr.size >= 2:
            kept_pins.append(arr)
            if kept_weights is not None:
                kept_weights.append(weights[idx])

    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] < universe:
            rows = features.shape[0] if features.ndim == 2 else -1
            raise DataError(f"feature shape mismatch: {rows} rows for {universe} nodes")
        universe = max(universe, features.shape[0])

    if not kept_pins:
        raise EmptyHypergraphError()

    flat = np.concatenate(kept_pins)
    original_ids = np.unique(flat)
    lookup = np.full(universe, -1, dtype=np.int64)
    lookup[original_ids] = np.arange(len(original_ids), dtype=np.int64)

    counts = np.array([len(p) for p in kept_pins], dtype=np.int64)
    h = Hypergraph(
        len(original_ids), _offsets_from_counts(counts), lookup[flat],
        weights=np.asarray(kept_weights, dtype=np.float64) if kept_weights is not None else None,
        features=features[original_ids] if features is not None else None)
    return h, original_ids


NODE_SIDE = 0
HYPEREDGE_SIDE = 1


class StarGraph:
    """Bipartite expansion of a hypergraph.

    Vertices ``0..num_nodes-1`` are the hypergraph nodes; vertices
    ``num_nodes..num_nodes+num_hyperedges-1`` stand for hyperedges. Every
    membership (node v in hyperedge e) contributes the symmetric edge
    ``(v, num_nodes + e)`` weighted by the weight of e. Neighbor lists are
    sorted by target id.
    """

    def __init__(self, num_nodes, num_hyperedges, offsets, targets, weights):
        self.num_nodes = int(num_nodes)
        self.num_hyperedges = int(num_hyperedges)
        self.offsets = _freeze(_int_array(offsets))
        self.targets = _freeze(_int_array(targets))
        self.weights = _freeze(np.ascontiguousarray(np.asarray(weights, dtype=np.float64)))
        self._weighted_degrees = None

    @property
    def num_vertices(self) -> int:
        return self.num_nodes + self.num_hyperedges

    @property
    def num_edges(self) -> int:
        """Undirected edge count (half of the stored directed arcs)."""
        return len(self.targets) // 2

    def vertex_kind(self, v):
        """NODE_SIDE or HYPEREDGE_SIDE; works element-wise on arrays."""
        return np.where(np.asarray(v) >= self.num_nodes, HYPEREDGE_SIDE, NODE_SIDE)

    def origin(self, v):
        """Map a star vertex back to ("node", id) or ("hyperedge", id)."""
        if v >= self.num_nodes:
            return "hyperedge", int(v) - self.num_nodes
        return "node", int(v)

    def neighbors(self, v):
        lo, hi = self.offsets[v], self.offsets[v + 1]
        return self.targets[lo:hi], self.weights[lo:hi]

    def weighted_degrees(self) -> np.ndarray:
        if self._weighted_degrees is None:
            deg = np.zeros(self.num_vertices)
            rows = np.repeat(np.arange(self.num_vertices, dtype=np.int64),
                             np.diff(self.offsets))
            np.add.at(deg, rows, self.weights)
            self._weighted_degrees = _freeze(deg)
        return self._weighted_degrees

    def to_scipy(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.weights, self.targets, self.offsets),
            shape=(self.num_vertices, self.num_vertices))

    def __repr__(self):
        return (f"StarGraph(vertices={self.num_vertices}, edges={self.num_edges}, "
                f"nodes={self.num_nodes}, hyperedges={self.num_hyperedges})")


def build_star_expansion(h: Hypergraph) -> StarGraph:
    """Expand a hypergraph into its bipartite star graph.

    ``|V*| = |V| + |E|`` and the undirected edge count equals the total pin
    count; every edge carries the weight of its hyperedge.
    """
    nv = h.num_nodes + h.num_hyperedges
    counts = np.concatenate([h.membership_counts, h.pin_counts])
    offsets = _offsets_from_counts(counts)

    node_targets = h.num_nodes + h.mem_hedges
    node_weights = h.hyperedge_weights[h.mem_hedges]
    hedge_targets = h.pin_nodes
    hedge_weights = np.repeat(h.hyperedge_weights, h.pin_counts)

    targets = np.concatenate([node_targets, hedge_targets])
    weights = np.concatenate([node_weights, hedge_weights])

    # sort each neighbor list by target id (binary-searchable rows)
    rows = np.repeat(np.arange(nv, dtype=np.int64), counts)
    order = np.lexsort((targets, rows))
    return StarGraph(h.num_nodes, h.num_hyperedges, offsets,
                     targets[order], weights[order])


def validate_embedding(emb, rows=None, dim=None) -> np.ndarray:
    """Check an embedding matrix: 2-D, float, finite; returns float64 view."""
    arr = np.asarray(emb, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"embedding must be a 2-D matrix, got ndim={arr.ndim}")
    if rows is not None and arr.shape[0] != rows:
        raise DataError(f"embedding has {arr.shape[0]} rows, expected {rows}")
    if dim is not None and arr.shape[1] != dim:
        raise DataError(f"embedding dimension {arr.shape[1]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise DataError("embedding contains non-finite values")
    return arr
