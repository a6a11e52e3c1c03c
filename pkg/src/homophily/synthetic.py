"""Seeded synthetic benchmarks with planted structure."""

from __future__ import annotations

import numpy as np

from .graph import Layer, Network


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def erdos_renyi(n: int, p: float, seed: int, directed: bool = True) -> Network:
    """G(n, p) without self-loops; undirected graphs store each pair once."""
    rng = _rng(seed)
    a = rng.random((n, n)) < p
    np.fill_diagonal(a, False)
    if not directed:
        a = np.triu(a, 1)
    s, d = np.nonzero(a)
    return Network(n, s, d)


def random_digraph(n: int, m: int, seed: int) -> Network:
    """Uniform simple digraph with exactly ``m`` edges."""
    if not 0 <= m <= n * (n - 1):
        raise ValueError(f"cannot place {m} edges among {n} nodes")
    rng = _rng(seed)
    keys = rng.choice(n * (n - 1), size=m, replace=False)
    s = keys // (n - 1)
    d = keys % (n - 1)
    d += d >= s
    return Network(n, s, d)


def clustered_points(n_per_cluster: int, n_clusters: int, dim: int, seed: int,
                     spread: float = 3.0, noise: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian clusters; returns (points, labels)."""
    rng = _rng(seed)
    centers = rng.normal(0.0, spread, (n_clusters, dim))
    labels = np.repeat(np.arange(n_clusters), n_per_cluster)
    return centers[labels] + rng.normal(0.0, noise, (len(labels), dim)), labels


def planted_rich_club(n_background: int = 500, n_hubs: int = 10, background_cap: int = 4,
                      hub_fanout: int = 40, seed: int = 0) -> tuple[Network, int]:
    """Hub clique over a sparse background, both edge directions materialized.

    Background nodes get random links while both ends stay below
    ``background_cap`` undirected degree; each hub also links to ``hub_fanout``
    background nodes. Returns the network and the background cap expressed in
    total (in + out) degree.
    """
    rng = _rng(seed)
    n = n_background + n_hubs
    deg = np.zeros(n, dtype=np.int64)
    pairs: set[tuple[int, int]] = set()
    for _ in range(n_background * background_cap * 4):
        u, v = rng.integers(0, n_background, size=2)
        if u == v or deg[u] >= background_cap - 1 or deg[v] >= background_cap - 1:
            continue
        key = (min(u, v), max(u, v))
        if key in pairs:
            continue
        pairs.add(key)
        deg[u] += 1
        deg[v] += 1
    hubs = np.arange(n_background, n)
    for i, h in enumerate(hubs):
        for g in hubs[i + 1:]:
            pairs.add((int(h), int(g)))
        for b in rng.choice(n_background, size=hub_fanout, replace=False):
            pairs.add((int(b), int(h)))
            deg[b] += 1
    # hub contacts can push a background node above the cap; report the true maximum
    und = np.array(sorted(pairs), dtype=np.int64)
    s = np.concatenate([und[:, 0], und[:, 1]])
    d = np.concatenate([und[:, 1], und[:, 0]])
    net = Network(n, s, d)
    tot = np.bincount(s, minlength=n) + np.bincount(d, minlength=n)
    return net, int(tot[:n_background].max())


def planted_homophily(features: np.ndarray, n_edges: int, seed: int, scale: float = 1.0,
                      labels=None, layer: Layer | str = Layer.OTHER) -> Network:
    """Directed edges sampled without replacement with weight exp(-||x_u - x_v|| / scale)."""
    rng = _rng(seed)
    x = np.asarray(features, dtype=float)
    n = len(x)
    if not 0 <= n_edges < n * (n - 1):
        raise ValueError(f"cannot place {n_edges} edges among {n} nodes")
    sq = (x * x).sum(axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * x @ x.T, 0.0)
    logw = -np.sqrt(d2) / scale
    np.fill_diagonal(logw, -np.inf)
    # Gumbel top-k: a weighted sample without replacement
    keys = logw.ravel() + rng.gumbel(size=n * n)
    top = np.argpartition(-keys, n_edges)[:n_edges]
    top.sort()
    s, d = top // n, top % n
    lab = tuple(labels) if labels is not None else ()
    return Network(n, s, d, lab, layer)
