"""SOM-ensemble similarity distances, link-distance histograms, null comparisons and model scores."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import Network
from .nullmodel import SwapTrace, derive_seed, randomize_degree_preserving
from .som.manifold import Manifold
from .som.model import TrainConfig, map_population, train_som
from .stats import KsResult, ks_two_sample

log = logging.getLogger(__name__)

EXHAUSTIVE_PAIR_LIMIT = 10**7


def round_half_away(x):
    """Round to the nearest integer, halves away from zero."""
    x = np.asarray(x, dtype=float)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.int64)


def pair_distance(runs_u, runs_v, manifold: Manifold) -> int:
    """Rounded mean over runs of the hop distance between the neurons of u and v."""
    a = np.asarray(runs_u, dtype=np.int64)
    b = np.asarray(runs_v, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1 or len(a) == 0:
        raise ValueError("need one neuron per run for both users, at least one run")
    return int(round_half_away(manifold.distance[a, b].mean()))


@dataclass(frozen=True)
class DistanceAssignment:
    """Neuron of every user in every SOM run; ``-1`` marks an unassigned user."""

    manifold: Manifold
    assignments: np.ndarray  # (n_users, runs)
    users: tuple[str, ...]

    def __post_init__(self):
        a = np.asarray(self.assignments, dtype=np.int64)
        if a.ndim != 2 or a.shape[0] != len(self.users):
            raise ValueError("assignments must be (n_users, runs) and match users")
        object.__setattr__(self, "assignments", a)

    @property
    def runs(self) -> int:
        return self.assignments.shape[1]

    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.users)}

    def assigned(self) -> np.ndarray:
        return np.all(self.assignments >= 0, axis=1)

    def distances(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Rounded mean hop distance for row-index pairs ``(u[i], v[i])``."""
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        total = np.zeros(len(u), dtype=np.int64)
        d = self.manifold.distance
        for r in range(self.runs):
            total += d[self.assignments[u, r], self.assignments[v, r]]
        # total / runs rounded half away from zero, in integer arithmetic
        return (2 * total + self.runs) // (2 * self.runs)

    def consensus_clusters(self) -> np.ndarray:
        """Most frequent neuron per user across runs (lowest id on ties); -1 if unassigned."""
        out = np.full(len(self.users), -1, dtype=np.int64)
        ok = self.assigned()
        k = self.manifold.neuron_count
        for i in np.flatnonzero(ok):
            out[i] = int(np.argmax(np.bincount(self.assignments[i], minlength=k)))
        return out


@dataclass(frozen=True)
class EuclideanBuckets:
    """Feature-space distances grouped into equal-frequency buckets (the naive baseline)."""

    data: np.ndarray
    users: tuple[str, ...]
    boundaries: np.ndarray  # inner bucket edges, ascending

    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.users)}

    def assigned(self) -> np.ndarray:
        return np.ones(len(self.users), dtype=bool)

    def distances(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.int64)
        v = np.asarray(v, dtype=np.int64)
        out = np.empty(len(u), dtype=np.int64)
        for s in range(0, len(u), 1 << 18):
            diff = self.data[u[s:s + (1 << 18)]] - self.data[v[s:s + (1 << 18)]]
            eu = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            out[s:s + (1 << 18)] = np.searchsorted(self.boundaries, eu, side="right")
        return out


def _train_one(args):
    values, manifold, config, seed = args
    model = train_som(values, manifold, config, seed)
    return map_population(model, values).assignment


def som_ensemble(data, manifold: Manifold, config: TrainConfig | None = None, runs: int = 20,
                 seed: int = 0, workers: int = 1) -> DistanceAssignment:
    """Train ``runs`` independent SOMs and record every user's neuron per run."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    values = np.ascontiguousarray(getattr(data, "values", data), dtype=np.float64)
    users = tuple(getattr(data, "users", tuple(map(str, range(len(values))))))
    config = config or TrainConfig.for_manifold(manifold)
    jobs = [(values, manifold, config, derive_seed(seed, r)) for r in range(runs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cols = list(pool.map(_train_one, jobs))
    else:
        cols = [_train_one(j) for j in jobs]
    return DistanceAssignment(manifold, np.column_stack(cols), users)


def _edge_rows(network: Network, distances) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Map network endpoints to distance rows; returns (u_rows, v_rows, ok_mask)."""
    index = distances.user_index()
    assigned = distances.assigned()
    node_row = np.array([index.get(lab, -1) for lab in network.labels], dtype=np.int64)
    ok_node = node_row >= 0
    ok_node[ok_node] = assigned[node_row[ok_node]]
    u, v = node_row[network.src], node_row[network.dst]
    ok = ok_node[network.src] & ok_node[network.dst]
    return u, v, ok


@dataclass(frozen=True)
class LinkDistanceHistogram:
    counts: dict[int, int]
    layer: str
    total_edges: int
    unassigned_edges: int

    def as_array(self, max_distance: int | None = None) -> np.ndarray:
        top = max(self.counts, default=-1) if max_distance is None else max_distance
        arr = np.zeros(top + 1, dtype=np.int64)
        for d, c in self.counts.items():
            if d <= top:
                arr[d] = c
        return arr


def edge_distances(network: Network, distances) -> tuple[np.ndarray, int]:
    """Distance of every edge with both endpoints assigned, plus the unassigned-edge count."""
    u, v, ok = _edge_rows(network, distances)
    return distances.distances(u[ok], v[ok]), int((~ok).sum())


def link_distance_distribution(network: Network, distances) -> LinkDistanceHistogram:
    d, unassigned = edge_distances(network, distances)
    values, counts = np.unique(d, return_counts=True)
    return LinkDistanceHistogram({int(a): int(b) for a, b in zip(values, counts)},
                                 network.layer.value, network.n_edges, unassigned)


@dataclass(frozen=True)
class NullComparison:
    empirical: LinkDistanceHistogram
    null_histograms: list[LinkDistanceHistogram]
    ks: list[KsResult]
    traces: list[SwapTrace] = field(repr=False)
    alpha: float = 0.05

    @property
    def rejection_fraction(self) -> float:
        return sum(r.p_value < self.alpha for r in self.ks) / len(self.ks)


def null_distribution_comparison(network: Network, distances, n_sims: int = 100, seed: int = 0,
                                 swaps_per_edge: float = 10.0, alpha: float = 0.05) -> NullComparison:
    """KS-compare the empirical edge distances with those of degree-preserving randomizations."""
    if n_sims < 1:
        raise ValueError("n_sims must be >= 1")
    if network.n_edges == 0:
        raise ValueError("no edges to compare")
    emp_d, _ = edge_distances(network, distances)
    if len(emp_d) == 0:
        raise ValueError("no edges to compare: no edge has both endpoints assigned")
    hists, results, traces = [], [], []
    for s in range(n_sims):
        rnd, trace = randomize_degree_preserving(network, swaps_per_edge, derive_seed(seed, s))
        null_d, _ = edge_distances(rnd, distances)
        hists.append(link_distance_distribution(rnd, distances))
        results.append(ks_two_sample(emp_d, null_d))
        traces.append(trace)
    return NullComparison(link_distance_distribution(network, distances), hists, results, traces, alpha)


def naive_euclidean_baseline(data, n_buckets: int = 10, sample_size: int = 100_000,
                             seed: int = 0) -> EuclideanBuckets:
    """Equal-frequency buckets of sampled pairwise Euclidean distances.

    A pair's "distance" is the index of the bucket its Euclidean distance
    falls in. If every sampled distance is zero, all pairs share bucket 0.
    """
    if n_buckets < 2:
        raise ValueError("n_buckets must be >= 2")
    values = np.ascontiguousarray(getattr(data, "values", data), dtype=np.float64)
    users = tuple(getattr(data, "users", tuple(map(str, range(len(values))))))
    n = len(values)
    if n < 2:
        raise ValueError("need at least 2 rows")
    rng = np.random.Generator(np.random.PCG64(seed))
    u = rng.integers(0, n, size=sample_size)
    v = rng.integers(0, n - 1, size=sample_size)
    v += v >= u
    diff = values[u] - values[v]
    eu = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    distinct = np.unique(eu)
    if len(distinct) == 1 and distinct[0] == 0.0:
        return EuclideanBuckets(values, users, np.full(n_buckets - 1, np.inf))
    if len(distinct) < n_buckets:
        raise ValueError(f"only {len(distinct)} distinct pair distances for {n_buckets} buckets")
    # sample quantiles; x falls in bucket i when boundaries[i-1] <= x < boundaries[i]
    boundaries = np.quantile(eu, np.arange(1, n_buckets) / n_buckets, method="inverted_cdf")
    return EuclideanBuckets(values, users, boundaries)


# -- likelihood scores ---------------------------------------------------------


@dataclass(frozen=True)
class ModelScore:
    """Bernoulli log-likelihoods of link presence per distance level (ell_d) and per
    neuron-pair cell (ell_c). AIC/BIC use the clustering likelihood when clusters
    are supplied, the distance likelihood otherwise (``basis``)."""

    ell_d: float
    ell_c: float | None
    aic: float
    bic: float
    k_parameters: int
    n_pairs: int
    k_distance: int
    k_cluster: int | None
    basis: str
    sampled: bool


def bernoulli_loglik(groups: np.ndarray, linked: np.ndarray) -> tuple[float, int]:
    """Sum over groups of the MLE Bernoulli log-likelihood, with 0 ln 0 = 0; returns (ell, groups)."""
    _, inv = np.unique(groups, return_inverse=True)
    inv = inv.ravel()
    pairs = np.bincount(inv)
    links = np.bincount(inv, weights=linked.astype(float)).astype(np.int64)
    ell = 0.0
    for n_g, l_g in zip(pairs.tolist(), links.tolist()):
        if 0 < l_g < n_g:
            p = l_g / n_g
            ell += l_g * math.log(p) + (n_g - l_g) * math.log(1.0 - p)
    return ell, len(pairs)


def _pair_universe(rows: np.ndarray, limit: int, sample_size: int, seed: int):
    m = len(rows)
    total = m * (m - 1) // 2
    if total <= limit:
        iu, ju = np.triu_indices(m, 1)
        return rows[iu], rows[ju], False
    rng = np.random.Generator(np.random.PCG64(seed))
    a = rng.integers(0, m, size=sample_size)
    b = rng.integers(0, m - 1, size=sample_size)
    b += b >= a
    return rows[a], rows[b], True


def score_model(network: Network, distances, cluster_assignments=None, *, limit: int = EXHAUSTIVE_PAIR_LIMIT,
                sample_size: int = 1_000_000, seed: int = 0) -> ModelScore:
    """Score how well distances (and optionally clusters) predict links.

    The pair universe is every unordered pair of assigned users present in
    the network (exhaustive up to ``limit`` pairs, seeded uniform sampling
    beyond). A pair is linked if an edge joins it in either direction.
    """
    index = distances.user_index()
    assigned = distances.assigned()
    node_row = np.array([index.get(lab, -1) for lab in network.labels], dtype=np.int64)
    ok = node_row >= 0
    ok[ok] = assigned[node_row[ok]]
    nodes = np.flatnonzero(ok)
    u_nodes, v_nodes, sampled = _pair_universe(nodes, limit, sample_size, seed)
    n = network.n
    lo, hi = np.minimum(network.src, network.dst), np.maximum(network.src, network.dst)
    edge_keys = np.unique(lo * n + hi)
    pair_keys = np.minimum(u_nodes, v_nodes) * n + np.maximum(u_nodes, v_nodes)
    linked = np.isin(pair_keys, edge_keys, assume_unique=False)
    if len(linked) == 0:
        raise ValueError("no assigned pairs to score")
    if linked.all() or not linked.any():
        log.warning("degenerate pair universe: %s pairs linked", "all" if linked.all() else "no")
    d = distances.distances(node_row[u_nodes], node_row[v_nodes])
    ell_d, k_d = bernoulli_loglik(d, linked)
    n_pairs = len(linked)

    ell_c = k_c = None
    if cluster_assignments is not None:
        clusters = np.asarray(cluster_assignments, dtype=np.int64)
        cu, cv = clusters[node_row[u_nodes]], clusters[node_row[v_nodes]]
        width = int(clusters.max()) + 1
        cells = np.minimum(cu, cv) * width + np.maximum(cu, cv)
        ell_c, k_c = bernoulli_loglik(cells, linked)

    if ell_c is not None:
        ell, k, basis = ell_c, k_c, "cluster"
    else:
        ell, k, basis = ell_d, k_d, "distance"
    aic = 2 * k - 2 * ell
    bic = k * math.log(n_pairs) - 2 * ell
    return ModelScore(ell_d, ell_c, aic, bic, k, n_pairs, k_d, k_c, basis, sampled)
