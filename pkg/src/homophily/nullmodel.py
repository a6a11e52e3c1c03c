"""Degree-preserving randomization by Markov-chain double edge swaps.

Random numbers come from numpy's PCG64 generator and are drawn in blocks
outside the compiled kernel, so a replicate depends only on its seed.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numba
import numpy as np

from .graph import Network

_EMPTY = -1
_DELETED = -2


@dataclass(frozen=True)
class SwapTrace:
    attempted: int
    accepted: int
    rejected_selfloop: int
    rejected_multiedge: int
    seed: int

    def to_dict(self) -> dict:
        return asdict(self)


def derive_seed(seed: int, *stream: int) -> int:
    """Independent child seed for replicate ``stream`` of a run seeded with ``seed``."""
    ss = np.random.SeedSequence([int(seed), *map(int, stream)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


# -- open-addressing hash set of int64 edge keys ----------------------------


@numba.njit(cache=True, inline="always")
def _hash(key, mask):
    h = np.uint64(key) * np.uint64(0x9E3779B97F4A7C15)
    return np.int64((h >> np.uint64(20)) & np.uint64(mask))


@numba.njit(cache=True)
def _hs_contains(table, key):
    mask = len(table) - 1
    i = _hash(key, mask)
    while True:
        v = table[i]
        if v == key:
            return True
        if v == _EMPTY:
            return False
        i = (i + 1) & mask


@numba.njit(cache=True)
def _hs_insert(table, key):
    mask = len(table) - 1
    i = _hash(key, mask)
    while True:
        v = table[i]
        if v == _EMPTY or v == _DELETED:
            table[i] = key
            return
        i = (i + 1) & mask


@numba.njit(cache=True)
def _hs_remove(table, key):
    mask = len(table) - 1
    i = _hash(key, mask)
    while True:
        v = table[i]
        if v == key:
            table[i] = _DELETED
            return
        if v == _EMPTY:
            return
        i = (i + 1) & mask


@numba.njit(cache=True)
def _hs_build(keys, capacity):
    table = np.full(capacity, _EMPTY, dtype=np.int64)
    for k in keys:
        _hs_insert(table, k)
    return table


@numba.njit(cache=True)
def _swap_block(src, dst, n, table, picks_a, picks_b, counts, undirected, flips):
    """Run one block of proposals in place; ``counts`` = [accepted, selfloop, multiedge]."""
    for t in range(len(picks_a)):
        i = picks_a[t]
        j = picks_b[t]
        a = src[i]
        b = dst[i]
        c = src[j]
        d = dst[j]
        if undirected and flips[t]:
            c, d = d, c
        if a == d or c == b:
            counts[1] += 1
            continue
        if undirected:
            k1 = min(a, d) * n + max(a, d)
            k2 = min(c, b) * n + max(c, b)
        else:
            k1 = a * n + d
            k2 = c * n + b
        if k1 == k2 or _hs_contains(table, k1) or _hs_contains(table, k2):
            counts[2] += 1
            continue
        if undirected:
            _hs_remove(table, min(a, b) * n + max(a, b))
            _hs_remove(table, min(c, d) * n + max(c, d))
        else:
            _hs_remove(table, a * n + b)
            _hs_remove(table, c * n + d)
        _hs_insert(table, k1)
        _hs_insert(table, k2)
        dst[i] = d
        src[j] = c
        dst[j] = b
        counts[0] += 1
    # tombstones accumulate; the caller rebuilds the table after at most m proposals


def _capacity(m: int) -> int:
    # a block of m proposals leaves at most 3m non-empty slots
    return 1 << max(4, math.ceil(math.log2(8 * m + 1)))


def _swap_chain(network: Network, swaps_per_edge: float, seed: int, undirected: bool):
    m = network.n_edges
    n = network.n
    attempts = math.ceil(swaps_per_edge * m) if m >= 2 else 0
    src = network.src.copy()
    dst = network.dst.copy()
    if undirected:
        lo, hi = np.minimum(src, dst), np.maximum(src, dst)
        src, dst = lo, hi
    counts = np.zeros(3, dtype=np.int64)
    rng = np.random.Generator(np.random.PCG64(seed))
    cap = _capacity(m)
    done = 0
    while done < attempts:
        size = min(m, attempts - done)
        a = rng.integers(0, m, size=size)
        # second pick uniform over the other m-1 edges
        b = rng.integers(0, m - 1, size=size)
        b += b >= a
        flips = rng.integers(0, 2, size=size).astype(np.bool_) if undirected else np.zeros(0, np.bool_)
        if undirected:
            keys = np.minimum(src, dst) * n + np.maximum(src, dst)
        else:
            keys = src * n + dst
        table = _hs_build(keys, cap)
        _swap_block(src, dst, n, table, a, b, counts, undirected, flips)
        done += size
    trace = SwapTrace(attempts, int(counts[0]), int(counts[1]), int(counts[2]), int(seed))
    return src, dst, trace


def randomize_degree_preserving(network: Network, swaps_per_edge: float = 10.0,
                                seed: int = 0) -> tuple[Network, SwapTrace]:
    """Directed double edge swaps preserving every node's in- and out-degree.

    Each of ``ceil(swaps_per_edge * m)`` proposals picks two distinct edges
    ``(a->b), (c->d)`` uniformly and rewires them to ``(a->d), (c->b)``; the
    proposal is rejected if it would create a self-loop or a duplicate edge.
    A network with fewer than two edges is returned unchanged.
    """
    src, dst, trace = _swap_chain(network, swaps_per_edge, seed, undirected=False)
    return network.with_edges(src, dst), trace


def undirected_view(network: Network) -> Network:
    """Simple undirected graph as a Network with each pair stored once, ``src < dst``."""
    lo = np.minimum(network.src, network.dst)
    hi = np.maximum(network.src, network.dst)
    keep = lo != hi
    pairs = np.unique(np.column_stack([lo[keep], hi[keep]]), axis=0).reshape(-1, 2)
    return network.with_edges(pairs[:, 0], pairs[:, 1])


def randomize_undirected(network: Network, swaps_per_edge: float = 10.0,
                         seed: int = 0) -> tuple[Network, SwapTrace]:
    """Undirected double edge swaps on :func:`undirected_view`; preserves undirected degrees.

    Each proposal also picks one of the two orientations of the second edge
    at random, so both rewirings ``{a-d, c-b}`` and ``{a-c, d-b}`` are reachable.
    """
    und = undirected_view(network)
    src, dst, trace = _swap_chain(und, swaps_per_edge, seed, undirected=True)
    lo, hi = np.minimum(src, dst), np.maximum(src, dst)
    return und.with_edges(lo, hi), trace
