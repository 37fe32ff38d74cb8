"""Embedding refinement: projection between levels and damped smoothing.

Refinement repeatedly replaces each star-graph vertex's vector with a
blend of itself and the weighted mean of its neighbors,

    z_u  <-  (1 - omega) * z_u + omega * sum_v w_uv z_v / sum_v w_uv,

reading only the previous iteration's values (double-buffered), so output
does not depend on update order. Run to convergence this would solve the
graph Laplacian system exactly and wash out all structure; a bounded
iteration count keeps the useful mid-frequency signal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coarsening import MergeMap
from .core import Hypergraph, StarGraph, validate_embedding


@dataclass(frozen=True)
class RefineConfig:
    """Smoothing knobs: blend factor, iteration cap, optional early stop."""

    omega: float = 0.5
    max_iterations: int = 80
    epsilon: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be nonnegative")
        if self.epsilon is not None and self.epsilon <= 0:
            raise ValueError("epsilon must be positive when set")


def project(coarse_emb, merge_map: MergeMap, fine_h: Hypergraph) -> np.ndarray:
    """Spread a coarse star embedding onto the fine star vertex space.

    Fine nodes copy their representative's vector; fine hyperedges with a
    surviving representative copy its vector; removed hyperedges start
    from the mean of their (projected) member nodes.
    """
    coarse_rows = merge_map.num_coarse_nodes + merge_map.num_coarse_hyperedges
    coarse_emb = validate_embedding(coarse_emb, rows=coarse_rows)
    dim = coarse_emb.shape[1]

    nv = fine_h.num_nodes + fine_h.num_hyperedges
    out = np.empty((nv, dim))

    coarse_nodes = coarse_emb[:merge_map.num_coarse_nodes]
    out[:fine_h.num_nodes] = coarse_nodes[merge_map.node_rep]

    coarse_hedges = coarse_emb[merge_map.num_coarse_nodes:]
    surviving = merge_map.hedge_rep >= 0
    out[fine_h.num_nodes + np.flatnonzero(surviving)] = \
        coarse_hedges[merge_map.hedge_rep[surviving]]

    removed = np.flatnonzero(~surviving)
    if len(removed):
        pin_emb = out[fine_h.pin_nodes]
        sums = np.add.reduceat(pin_emb, fine_h.pin_offsets[:-1], axis=0)
        means = sums / fine_h.pin_counts[:, None]
        out[fine_h.num_nodes + removed] = means[removed]
    return out


def refine(g: StarGraph, z0, cfg: RefineConfig) -> np.ndarray:
    """Run the damped neighbor-averaging iteration on a star graph.

    Performs ``cfg.max_iterations`` sweeps, or stops earlier once the
    largest per-vertex update norm drops below ``cfg.epsilon`` (when set).
    Vertices without neighbors pass through unchanged. ``omega == 0`` or a
    zero iteration cap returns the input bit-for-bit.
    """
    z = validate_embedding(z0, rows=g.num_vertices).copy()
    if cfg.omega == 0.0 or cfg.max_iterations == 0:
        return z

    adjacency = g.to_scipy()
    degrees = g.weighted_degrees()
    isolated = degrees == 0.0
    inv_degrees = 1.0 / np.where(isolated, 1.0, degrees)

    for _ in range(cfg.max_iterations):
        z_tilde = adjacency @ z
        z_tilde *= inv_degrees[:, None]
        if isolated.any():
            z_tilde[isolated] = z[isolated]
        z_new = (1.0 - cfg.omega) * z + cfg.omega * z_tilde
        if cfg.epsilon is not None:
            step = np.sqrt(((z_new - z) ** 2).sum(axis=1)).max()
            z = z_new
            if step < cfg.epsilon:
                break
        else:
            z = z_new
    return validate_embedding(z, rows=g.num_vertices)
