"""Initial embedding of a star graph.

Built-in embedder: biased second-order random walks over the bipartite
graph feed a skip-gram model trained with negative sampling, entirely
in-process. Alternatively, hand the star graph to an external program as
an edgelist file and read its embedding file back.
"""

from __future__ import annotations

import logging
import os
import subprocess
import tempfile
from dataclasses import dataclass

import numba
import numpy as np

from . import _kernels
from .core import DataError, StarGraph, validate_embedding
from .io import read_embeddings, write_edgelist

logger = logging.getLogger(__name__)


def set_thread_count(n) -> int:
    """Cap kernel parallelism; returns the effective (clamped) count."""
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


@dataclass(frozen=True)
class WalkConfig:
    """Hyperparameters of the built-in walk + skip-gram embedder.

    Defaults follow the usual well-performing settings for citation-style
    graphs: 10 walks of length 80 per vertex, window 10, return parameter
    4, in-out parameter 1.
    """

    walks_per_vertex: int = 10
    walk_length: int = 80
    window: int = 10
    return_param: float = 4.0
    inout_param: float = 1.0
    negative_samples: int = 5
    epochs: int = 1
    learning_rate: float = 0.025
    dim: int = 128
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ("walks_per_vertex", "walk_length", "window",
                     "negative_samples", "epochs", "dim", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.return_param <= 0 or self.inout_param <= 0:
            raise ValueError("return_param and inout_param must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


def generate_walks(g: StarGraph, cfg: WalkConfig) -> np.ndarray:
    """Generate ``walks_per_vertex`` biased walks from every vertex.

    Returns an int64 array of shape (num_vertices * walks_per_vertex,
    walk_length); rows are padded with -1 after a dead end (only vertices
    without neighbors dead-end). Output is identical at any thread count.
    """
    if g.num_vertices == 0:
        raise DataError("empty star graph")
    total = g.num_vertices * cfg.walks_per_vertex
    out = np.full((total, cfg.walk_length), -1, dtype=np.int64)
    max_degree = int(np.diff(g.offsets).max(initial=1))
    _kernels.walk_kernel(
        g.offsets, g.targets, g.weights,
        cfg.walks_per_vertex, cfg.walk_length,
        float(cfg.return_param), float(cfg.inout_param),
        np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF), max(max_degree, 1), out)
    return out


def _noise_cdf(g: StarGraph) -> np.ndarray:
    """Cumulative noise distribution proportional to degree^(3/4)."""
    w = g.weighted_degrees() ** 0.75
    total = w.sum()
    if total == 0.0:
        return np.zeros(0)
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


def train_skipgram(walks, g: StarGraph, cfg: WalkConfig, return_context=False):
    """Train skip-gram with negative sampling over windowed co-occurrences.

    Vertex vectors start uniform in [-0.5/dim, 0.5/dim] (seeded); the
    noise distribution is proportional to weighted degree^(3/4); the step
    size decays linearly per walk. With ``workers == 1`` the result is
    bit-reproducible for a fixed seed; more workers run the racy parallel
    kernel.
    """
    walks = np.ascontiguousarray(np.asarray(walks, dtype=np.int64))
    if walks.ndim != 2 or walks.shape[0] == 0:
        raise DataError("walks must be a nonempty 2-D array")
    rng = np.random.default_rng(cfg.seed)
    span = 0.5 / cfg.dim
    emb = rng.uniform(-span, span, size=(g.num_vertices, cfg.dim))
    ctx = np.zeros((g.num_vertices, cfg.dim))

    cdf = _noise_cdf(g)
    if len(cdf) == 0:
        # no edges at all: nothing to train on, keep the initialization
        return (emb, ctx) if return_context else emb

    seed = np.uint64(cfg.seed & 0xFFFFFFFFFFFFFFFF)
    if cfg.workers > 1:
        set_thread_count(cfg.workers)
        _kernels.sgns_train_parallel(walks, emb, ctx, cfg.window,
                                     cfg.negative_samples, cdf,
                                     float(cfg.learning_rate), cfg.epochs, seed)
    else:
        _kernels.sgns_train(walks, emb, ctx, cfg.window,
                            cfg.negative_samples, cdf,
                            float(cfg.learning_rate), cfg.epochs, seed)
    validate_embedding(emb, rows=g.num_vertices, dim=cfg.dim)
    return (emb, ctx) if return_context else emb


def embed_star_graph(g: StarGraph, cfg: WalkConfig) -> np.ndarray:
    """Built-in embedder: generate walks, then train skip-gram on them."""
    walks = generate_walks(g, cfg)
    return train_skipgram(walks, g, cfg)


def sgns_loss(emb, ctx, centers, contexts, negatives) -> float:
    """Mean skip-gram loss of fixed (center, context, negatives) triples.

    ``negatives`` has one row of sampled noise vertices per pair. Used to
    check that training actually reduces the objective.
    """

    def log_sigmoid(x):
        return -np.logaddexp(0.0, -x)

    centers = np.asarray(centers)
    pos = np.einsum("ij,ij->i", emb[centers], ctx[np.asarray(contexts)])
    loss = -log_sigmoid(pos)
    for k in range(negatives.shape[1]):
        neg = np.einsum("ij,ij->i", emb[centers], ctx[negatives[:, k]])
        loss -= log_sigmoid(-neg)
    return float(loss.mean())


def external_embed(g: StarGraph, command: str) -> np.ndarray:
    """Embed via an external program.

    Writes the star graph as a ``u v w`` edgelist, substitutes ``{input}``
    and ``{output}`` into the command template, runs it through the shell,
    and reads the embedding file back. The file must cover every star
    vertex exactly once.
    """
    if "{input}" not in command or "{output}" not in command:
        raise ValueError("command template must contain {input} and {output}")
    with tempfile.TemporaryDirectory(prefix="hypervec-") as tmpdir:
        input_path = os.path.join(tmpdir, "star.edgelist")
        output_path = os.path.join(tmpdir, "embeddings.txt")
        with open(input_path, "w") as fh:
            write_edgelist(fh, g)
        cmd = command.format(input=input_path, output=output_path)
        logger.info("running external embedder: %s", cmd)
        proc = subprocess.run(cmd, shell=True, capture_output=True, text=True)
        if proc.returncode != 0:
            detail = proc.stderr.strip() or proc.stdout.strip()
            raise DataError(
                f"external embedder failed (exit {proc.returncode}): {detail}")
        if not os.path.exists(output_path):
            raise DataError("external embedder produced no output file")
        with open(output_path) as fh:
            ids, values = read_embeddings(fh)

    need = g.num_vertices
    if len(ids) and (ids.min() < 0 or ids.max() >= need):
        raise DataError(f"external embedding contains vertex id outside 0..{need - 1}")
    counts = np.bincount(ids, minlength=need)
    if np.any(counts > 1):
        raise DataError("external embedding repeats vertex ids")
    missing = int((counts == 0).sum())
    if missing:
        noun = "vertex" if missing == 1 else "vertices"
        raise DataError(f"missing embeddings for {missing} {noun}")
    out = np.empty_like(values)
    out[ids] = values
    return validate_embedding(out, rows=need)
