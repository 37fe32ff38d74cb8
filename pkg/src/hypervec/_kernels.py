"""Compiled inner loops for walk generation and skip-gram training.

Every walk and every training stream draws from its own counter-based
random state derived from (seed, slot), so parallel schedules cannot
change which numbers are drawn. Walk output is therefore identical at any
thread count; training is bit-reproducible in the sequential kernel, while
the parallel kernel allows benign update races (standard for this kind of
optimizer) and trades reproducibility for speed.
"""

import numpy as np
from numba import njit, prange

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2^-53


@njit(inline="always", cache=True)
def _mix(x):
    x = (x ^ (x >> np.uint64(30))) * _MIX1
    x = (x ^ (x >> np.uint64(27))) * _MIX2
    return x ^ (x >> np.uint64(31))


@njit(inline="always", cache=True)
def _stream_state(seed, slot):
    return _mix(seed ^ (np.uint64(slot) * np.uint64(0xD1342543DE82EF95) + _GOLDEN))


@njit(inline="always", cache=True)
def _next_uniform(state):
    """Advance a splitmix64 stream; returns (new_state, float in [0, 1))."""
    state = state + _GOLDEN
    z = _mix(state)
    return state, (z >> np.uint64(11)) * _INV53


@njit(inline="always", cache=True)
def _has_edge(offsets, targets, u, v):
    lo = offsets[u]
    hi = offsets[u + 1]
    while lo < hi:  # targets sorted within each row
        mid = (lo + hi) // 2
        t = targets[mid]
        if t == v:
            return True
        if t < v:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True, parallel=True)
def walk_kernel(offsets, targets, weights, walks_per_vertex, walk_length,
                p, q, seed, max_degree, out):
    """Fill ``out[slot]`` with a biased second-order walk per slot.

    Slot ``v * walks_per_vertex + k`` starts at vertex v. Steps weight
    each candidate edge by w * f where f is 1/p to return to the previous
    vertex, 1 to move to a neighbor of the previous vertex, and 1/q
    otherwise. Rows of ``out`` stay -1 past a dead end.
    """
    num_vertices = len(offsets) - 1
    total = num_vertices * walks_per_vertex
    useed = np.uint64(seed)
    for slot in prange(total):
        start = slot // walks_per_vertex
        out[slot, 0] = start
        if offsets[start + 1] == offsets[start]:
            continue
        buf = np.empty(max_degree)
        state = _stream_state(useed, slot)
        prev = np.int64(-1)
        cur = np.int64(start)
        for step in range(1, walk_length):
            lo = offsets[cur]
            hi = offsets[cur + 1]
            deg = hi - lo
            total_w = 0.0
            if prev < 0:
                for i in range(deg):
                    w = weights[lo + i]
                    buf[i] = w
                    total_w += w
            else:
                for i in range(deg):
                    x = targets[lo + i]
                    w = weights[lo + i]
                    if x == prev:
                        w /= p
                    elif _has_edge(offsets, targets, prev, x):
                        pass
                    else:
                        w /= q
                    buf[i] = w
                    total_w += w
            state, u = _next_uniform(state)
            r = u * total_w
            acc = 0.0
            nxt = targets[hi - 1]
            for i in range(deg):
                acc += buf[i]
                if r < acc:
                    nxt = targets[lo + i]
                    break
            out[slot, step] = nxt
            prev = cur
            cur = nxt


@njit(inline="always", cache=True)
def _sigmoid(x):
    if x > 35.0:
        x = 35.0
    elif x < -35.0:
        x = -35.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(inline="always", cache=True)
def _train_pair(emb, ctx, center, context, negatives, noise_cdf,
                alpha, state, acc):
    dim = emb.shape[1]
    for j in range(dim):
        acc[j] = 0.0
    # positive example
    s = 0.0
    for j in range(dim):
        s += emb[center, j] * ctx[context, j]
    g = alpha * (1.0 - _sigmoid(s))
    for j in range(dim):
        acc[j] += g * ctx[context, j]
        ctx[context, j] += g * emb[center, j]
    # negative samples from the noise distribution
    for _ in range(negatives):
        state, u = _next_uniform(state)
        n = np.searchsorted(noise_cdf, u, side="right")
        if n == context:
            continue
        s = 0.0
        for j in range(dim):
            s += emb[center, j] * ctx[n, j]
        g = -alpha * _sigmoid(s)
        for j in range(dim):
            acc[j] += g * ctx[n, j]
            ctx[n, j] += g * emb[center, j]
    for j in range(dim):
        emb[center, j] += acc[j]
    return state


@njit(inline="always", cache=True)
def _train_walk(walks, w, emb, ctx, window, negatives, noise_cdf,
                alpha, state, acc):
    length = walks.shape[1]
    for i in range(length):
        center = walks[w, i]
        if center < 0:
            break
        jlo = i - window
        if jlo < 0:
            jlo = 0
        jhi = i + window + 1
        if jhi > length:
            jhi = length
        for j in range(jlo, jhi):
            if j == i:
                continue
            context = walks[w, j]
            if context < 0:
                break
            state = _train_pair(emb, ctx, center, context, negatives,
                                noise_cdf, alpha, state, acc)
    return state


@njit(cache=True)
def sgns_train(walks, emb, ctx, window, negatives, noise_cdf,
               learning_rate, epochs, seed):
    """Sequential skip-gram training; bit-reproducible for a fixed seed."""
    num_walks = walks.shape[0]
    acc = np.empty(emb.shape[1])
    useed = np.uint64(seed)
    total = epochs * num_walks
    for epoch in range(epochs):
        for w in range(num_walks):
            done = epoch * num_walks + w
            alpha = learning_rate * (1.0 - done / total)
            if alpha < learning_rate * 1e-4:
                alpha = learning_rate * 1e-4
            state = _stream_state(useed, np.int64(done))
            _train_walk(walks, w, emb, ctx, window, negatives, noise_cdf,
                        alpha, state, acc)


@njit(cache=True, parallel=True)
def sgns_train_parallel(walks, emb, ctx, window, negatives, noise_cdf,
                        learning_rate, epochs, seed):
    """Racy parallel variant: same streams and step sizes as the
    sequential kernel, updates applied without locks."""
    num_walks = walks.shape[0]
    useed = np.uint64(seed)
    total = epochs * num_walks
    for epoch in range(epochs):
        for w in prange(num_walks):
            acc = np.empty(emb.shape[1])
            done = epoch * num_walks + w
            alpha = learning_rate * (1.0 - done / total)
            if alpha < learning_rate * 1e-4:
                alpha = learning_rate * 1e-4
            state = _stream_state(useed, np.int64(done))
            _train_walk(walks, w, emb, ctx, window, negatives, noise_cdf,
                        alpha, state, acc)
