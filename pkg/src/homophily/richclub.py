"""Rich-club coefficients and their normalization against degree-preserving null networks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import Network, degrees
from .nullmodel import derive_seed, randomize_degree_preserving, randomize_undirected, undirected_view


@dataclass(frozen=True)
class RichClubCurve:
    """phi(k) for every k whose club has at least two nodes.

    ``ks`` is ascending; ``phi``, ``n_nodes`` and ``n_edges`` are aligned with it.
    """

    ks: np.ndarray
    phi: np.ndarray
    n_nodes: np.ndarray
    n_edges: np.ndarray
    degree_mode: str
    directed: bool

    def as_dict(self) -> dict[int, tuple[float, int, int]]:
        return {int(k): (float(p), int(m), int(e))
                for k, p, m, e in zip(self.ks, self.phi, self.n_nodes, self.n_edges)}


@dataclass(frozen=True)
class NormalizedRichClubCurve:
    """rho(k) = phi_empirical(k) / mean phi_random(k).

    ``rho``, ``ci_low`` and ``ci_high`` are NaN-free; levels where the null mean
    is zero are listed in ``absent`` instead of carrying a value.
    """

    empirical: RichClubCurve
    ks: np.ndarray
    rho: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    null_mean: np.ndarray
    absent: tuple[int, ...]
    n_randomizations: int
    traces: list = field(default_factory=list, repr=False)

    def phi_at(self, ks) -> np.ndarray:
        lookup = dict(zip(self.empirical.ks.tolist(), self.empirical.phi.tolist()))
        return np.array([lookup[int(k)] for k in ks])


def _club_counts(network: Network, degree_mode: str, directed: bool):
    """Club sizes and internal edge counts for k = 1..max degree."""
    if directed:
        deg = degrees(network).by_mode(degree_mode)
        src, dst = network.src, network.dst
    else:
        if degree_mode != "total":
            raise ValueError("undirected rich-club uses total degree only")
        und = undirected_view(network)
        src, dst = und.src, und.dst
        deg = np.bincount(src, minlength=network.n) + np.bincount(dst, minlength=network.n)
    kmax = int(deg.max()) if len(deg) else 0
    if kmax < 1:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64)
    # nodes with degree >= k: reverse cumulative histogram
    hist = np.bincount(deg, minlength=kmax + 1)
    n_nodes = np.cumsum(hist[::-1])[::-1][1:]
    # an edge lies inside club k iff k <= min(deg(u), deg(v))
    low = np.minimum(deg[src], deg[dst])
    ehist = np.bincount(low, minlength=kmax + 1)
    n_edges = np.cumsum(ehist[::-1])[::-1][1:]
    ks = np.arange(1, kmax + 1)
    return ks, n_nodes.astype(np.int64), n_edges.astype(np.int64)


def rich_club_coefficient(network: Network, degree_mode: str = "total", directed: bool = True) -> RichClubCurve:
    """phi(k) = E_k / E_max over the club of nodes with degree >= k.

    ``E_max`` is ``m(m-1)`` for directed analysis and ``m(m-1)/2`` otherwise.
    For ``directed=False`` the graph is symmetrized and ``degree_mode`` must
    be ``"total"`` (the undirected degree).
    """
    if network.n == 0:
        raise ValueError("rich-club coefficient of an empty network")
    ks, n_nodes, n_edges = _club_counts(network, degree_mode, directed)
    keep = n_nodes >= 2
    ks, n_nodes, n_edges = ks[keep], n_nodes[keep], n_edges[keep]
    emax = n_nodes * (n_nodes - 1)
    if not directed:
        emax = emax // 2
    phi = n_edges / emax
    return RichClubCurve(ks, phi, n_nodes, n_edges, degree_mode, directed)


def _randomize(network: Network, directed: bool, swaps_per_edge: float, seed: int):
    if directed:
        return randomize_degree_preserving(network, swaps_per_edge, seed)
    return randomize_undirected(network, swaps_per_edge, seed)


def _null_phis(network, degree_mode, directed, n_random, swaps_per_edge, seed, ks):
    phis = np.zeros((n_random, len(ks)))
    traces = []
    for r in range(n_random):
        rnd, trace = _randomize(network, directed, swaps_per_edge, derive_seed(seed, r))
        traces.append(trace)
        curve = rich_club_coefficient(rnd, degree_mode, directed)
        # degrees are preserved, so the null curve is defined on the same ks
        lookup = dict(zip(curve.ks.tolist(), curve.phi.tolist()))
        phis[r] = [lookup[int(k)] for k in ks]
    return phis, traces


def normalized_rich_club(network: Network, degree_mode: str = "total", directed: bool = True,
                         n_random: int = 50, swaps_per_edge: float = 10.0, seed: int = 0,
                         n_boot: int = 1000) -> NormalizedRichClubCurve:
    """rho(k) against ``n_random`` degree-preserving randomizations.

    The 2.5/97.5 percentile interval comes from a bootstrap over the null
    replicates (resampled with replacement ``n_boot`` times). Deterministic
    given ``seed``.
    """
    if n_random < 1:
        raise ValueError("n_random must be >= 1")
    emp = rich_club_coefficient(network, degree_mode, directed)
    phis, traces = _null_phis(network, degree_mode, directed, n_random, swaps_per_edge, seed, emp.ks)
    null_mean = phis.mean(axis=0)
    defined = null_mean > 0
    absent = tuple(int(k) for k in emp.ks[~defined])

    rng = np.random.Generator(np.random.PCG64(derive_seed(seed, 1 << 30)))
    idx = rng.integers(0, n_random, size=(n_boot, n_random))
    boot_means = phis[idx].mean(axis=1)[:, defined]
    phi_emp = emp.phi[defined]
    with np.errstate(divide="ignore"):
        boot_rho = np.where(boot_means > 0, phi_emp / np.where(boot_means > 0, boot_means, 1.0), np.inf)
    if len(phi_emp):
        # "nearest" keeps infinite bootstrap ratios from turning into NaN
        lo, hi = np.percentile(boot_rho, [2.5, 97.5], axis=0, method="nearest")
    else:
        lo, hi = np.zeros(0), np.zeros(0)
    return NormalizedRichClubCurve(
        empirical=emp,
        ks=emp.ks[defined],
        rho=phi_emp / null_mean[defined],
        ci_low=np.asarray(lo, dtype=float),
        ci_high=np.asarray(hi, dtype=float),
        null_mean=null_mean[defined],
        absent=absent,
        n_randomizations=n_random,
        traces=traces,
    )


def swap_convergence_drift(network: Network, degree_mode: str = "total", directed: bool = True,
                           seed: int = 0, short: float = 5.0, long: float = 10.0, n_random: int = 5,
                           min_club: int = 20) -> float:
    """Relative change of the null club edge mass between ``short`` and ``long`` swaps per edge.

    The statistic is sum_k E_max(k) * mean phi_null(k) over levels whose club
    has at least ``min_club`` nodes, i.e. the expected edge count inside the
    clubs. Chains share seeds, so each long chain extends its short one.
    Values below 0.01 indicate the chain has mixed.
    """
    emp = rich_club_coefficient(network, degree_mode, directed)
    sel = emp.n_nodes >= min_club
    if not sel.any():
        return 0.0
    ks = emp.ks[sel]
    emax = (emp.n_nodes * (emp.n_nodes - 1))[sel].astype(float)
    a, _ = _null_phis(network, degree_mode, directed, n_random, short, seed, ks)
    b, _ = _null_phis(network, degree_mode, directed, n_random, long, seed, ks)
    ea = float((a.mean(axis=0) * emax).sum())
    eb = float((b.mean(axis=0) * emax).sum())
    return abs(eb - ea) / eb if eb > 0 else 0.0
