"""Text formats: hypergraphs, features, labels, embeddings, edgelists.

All parsers are total: any byte stream yields either a valid structure or
a :class:`ParseError` carrying a line number, never an uncaught crash.
Writers use ``repr`` for floats so write/read round trips are bit exact.
"""

from __future__ import annotations

import os
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .core import DataError, ParseError, StarGraph, validate_embedding


def _data_lines(stream):
    """Yield (line_number, tokens), skipping blanks and '%' comments."""
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        yield lineno, line.split()


def _parse_int(token, lineno, what="integer"):
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected {what}, got {token!r}", line=lineno) from None


def _parse_float(token, lineno, what="number"):
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected {what}, got {token!r}", line=lineno) from None


def parse_hypergraph(stream, format="hmetis"):
    """Parse a hypergraph file into ``(pins, weights)`` raw lists.

    hmetis format: header ``num_hyperedges num_nodes [fmt]`` then one line
    per hyperedge with 1-based node ids; ``fmt=1`` puts a weight in front
    of each pin list. Ids are returned 0-based. edgelist format: one
    ``u v [w]`` pair per line, ids taken as given (0-based).
    """
    if format == "hmetis":
        return _parse_hmetis(stream)
    if format == "edgelist":
        return _parse_edgelist(stream)
    raise ValueError(f"unknown hypergraph format {format!r}")


def _parse_hmetis(stream):
    lines = _data_lines(stream)
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise ParseError("missing header", line=1) from None
    if len(tokens) not in (2, 3):
        raise ParseError(f"header must have 2 or 3 fields, got {len(tokens)}",
                         line=lineno)
    num_hedges = _parse_int(tokens[0], lineno, "hyperedge count")
    num_nodes = _parse_int(tokens[1], lineno, "node count")
    fmt = _parse_int(tokens[2], lineno, "format flag") if len(tokens) == 3 else 0
    if fmt not in (0, 1):
        raise ParseError(f"unsupported format flag {fmt}", line=lineno)
    if num_hedges < 0 or num_nodes < 0:
        raise ParseError("negative count in header", line=lineno)

    pins = []
    weights = [] if fmt == 1 else None
    last_line = lineno
    for lineno, tokens in lines:
        last_line = lineno
        if len(pins) == num_hedges:
            raise ParseError(
                f"extra content after {num_hedges} declared hyperedges", line=lineno)
        if fmt == 1:
            if len(tokens) < 2:
                raise ParseError("weighted hyperedge line needs a weight and pins",
                                 line=lineno)
            weights.append(_parse_float(tokens[0], lineno, "hyperedge weight"))
            tokens = tokens[1:]
        ids = []
        for tok in tokens:
            v = _parse_int(tok, lineno, "node id")
            if v < 1 or v > num_nodes:
                raise ParseError(f"node id {v} exceeds declared {num_nodes}",
                                 line=lineno)
            ids.append(v - 1)
        pins.append(ids)

    if len(pins) != num_hedges:
        raise ParseError(
            f"header declares {num_hedges} hyperedges but body has {len(pins)}",
            line=last_line)
    return pins, weights


def _parse_edgelist(stream):
    pins = []
    weights = None
    arity = None
    for lineno, tokens in _data_lines(stream):
        if len(tokens) not in (2, 3):
            raise ParseError(f"edge line must have 2 or 3 fields, got {len(tokens)}",
                             line=lineno)
        if arity is None:
            arity = len(tokens)
            weights = [] if arity == 3 else None
        elif len(tokens) != arity:
            raise ParseError("inconsistent edge line arity", line=lineno)
        u = _parse_int(tokens[0], lineno, "node id")
        v = _parse_int(tokens[1], lineno, "node id")
        if u < 0 or v < 0:
            raise ParseError("negative node id", line=lineno)
        pins.append([u, v])
        if arity == 3:
            weights.append(_parse_float(tokens[2], lineno, "edge weight"))
    return pins, weights


def parse_features(stream) -> np.ndarray:
    """Parse ``id v1 ... vk`` lines into a dense matrix ordered by id."""
    rows = {}
    width = None
    for lineno, tokens in _data_lines(stream):
        if len(tokens) < 2:
            raise ParseError("feature line needs an id and at least one value",
                             line=lineno)
        node = _parse_int(tokens[0], lineno, "node id")
        if node < 0:
            raise ParseError("negative node id", line=lineno)
        if node in rows:
            raise ParseError(f"duplicate feature row for node {node}", line=lineno)
        if width is None:
            width = len(tokens) - 1
        elif len(tokens) - 1 != width:
            raise ParseError(
                f"ragged feature row: {len(tokens) - 1} values, expected {width}",
                line=lineno)
        rows[node] = [_parse_float(t, lineno, "feature value") for t in tokens[1:]]
    if not rows:
        raise ParseError("no feature rows", line=1)
    n = max(rows) + 1
    missing = [i for i in range(n) if i not in rows]
    if missing:
        shown = ", ".join(map(str, missing[:10]))
        more = "" if len(missing) <= 10 else f" (+{len(missing) - 10} more)"
        raise ParseError(f"missing feature rows for nodes: {shown}{more}")
    out = np.empty((n, width))
    for node, values in rows.items():
        out[node] = values
    return out


@dataclass(frozen=True)
class LabelTable:
    """Class labels for a subset of nodes; labels lie in [0, num_classes)."""

    ids: np.ndarray
    labels: np.ndarray

    @property
    def num_classes(self) -> int:
        return int(self.labels.max()) + 1 if len(self.labels) else 0

    def __len__(self):
        return len(self.ids)

    def to_dense(self, num_nodes) -> np.ndarray:
        """Label per node id, -1 where unlabeled."""
        if len(self.ids) and self.ids.max() >= num_nodes:
            raise DataError(
                f"labeled id {int(self.ids.max())} outside 0..{num_nodes - 1}")
        dense = np.full(num_nodes, -1, dtype=np.int64)
        dense[self.ids] = self.labels
        return dense


def parse_labels(stream) -> LabelTable:
    """Parse whitespace-separated ``id label`` pairs."""
    ids, labels = [], []
    seen = set()
    for lineno, tokens in _data_lines(stream):
        if len(tokens) != 2:
            raise ParseError(f"label line must have 2 fields, got {len(tokens)}",
                             line=lineno)
        node = _parse_int(tokens[0], lineno, "node id")
        label = _parse_int(tokens[1], lineno, "class label")
        if node < 0:
            raise ParseError("negative node id", line=lineno)
        if label < 0:
            raise ParseError("negative class label", line=lineno)
        if node in seen:
            raise ParseError(f"duplicate label for node {node}", line=lineno)
        seen.add(node)
        ids.append(node)
        labels.append(label)
    if not ids:
        raise ParseError("no labels", line=1)
    order = np.argsort(ids)
    return LabelTable(np.asarray(ids, dtype=np.int64)[order],
                      np.asarray(labels, dtype=np.int64)[order])


def write_embeddings(stream, emb, ids=None):
    """Write ``n d`` header then one ``id v1 ... vd`` line per row.

    Values are written with ``repr`` so reading them back is bit exact.
    """
    emb = validate_embedding(emb)
    n, d = emb.shape
    if ids is None:
        ids = range(n)
    stream.write(f"{n} {d}\n")
    for i, row in zip(ids, emb):
        stream.write(f"{int(i)} " + " ".join(repr(float(v)) for v in row) + "\n")


def read_embeddings(stream):
    """Read an embedding file; returns ``(ids, matrix)`` in file order."""
    lines = _data_lines(stream)
    try:
        lineno, tokens = next(lines)
    except StopIteration:
        raise ParseError("missing embedding header", line=1) from None
    if len(tokens) != 2:
        raise ParseError("embedding header must be 'count dim'", line=lineno)
    n = _parse_int(tokens[0], lineno, "row count")
    d = _parse_int(tokens[1], lineno, "dimension")
    if n < 0 or d < 1:
        raise ParseError("bad embedding header", line=lineno)

    ids = np.empty(n, dtype=np.int64)
    values = np.empty((n, d))
    filled = 0
    last_line = lineno
    for lineno, tokens in lines:
        last_line = lineno
        if filled == n:
            raise ParseError(f"more than {n} embedding rows", line=lineno)
        if len(tokens) != d + 1:
            raise ParseError(
                f"embedding row has {len(tokens) - 1} values, header says {d}",
                line=lineno)
        ids[filled] = _parse_int(tokens[0], lineno, "vertex id")
        values[filled] = [_parse_float(t, lineno, "embedding value")
                          for t in tokens[1:]]
        filled += 1
    if filled != n:
        raise ParseError(f"header declares {n} rows but body has {filled}",
                         line=last_line)
    return ids, values


def write_edgelist(stream, g: StarGraph):
    """Write the star graph as ``u v w`` lines, one per undirected edge."""
    for u in range(g.num_vertices):
        targets, weights = g.neighbors(u)
        for v, w in zip(targets, weights):
            if u < v:  # each undirected edge once
                stream.write(f"{u} {int(v)} {repr(float(w))}\n")


def write_hypergraph(stream, h):
    """Write a hypergraph in the hmetis text format (1-based ids)."""
    weighted = not np.all(h.hyperedge_weights == 1.0)
    header = f"{h.num_hyperedges} {h.num_nodes}"
    if weighted:
        header += " 1"
    stream.write(header + "\n")
    for e in range(h.num_hyperedges):
        parts = [str(int(v) + 1) for v in h.pins(e)]
        if weighted:
            parts.insert(0, repr(float(h.hyperedge_weights[e])))
        stream.write(" ".join(parts) + "\n")


@contextmanager
def atomic_output(path):
    """Open a temp file next to ``path`` and rename it over on success.

    Nothing is left behind on error, so consumers never see partial output.
    """
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
