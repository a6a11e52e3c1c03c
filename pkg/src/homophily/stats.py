"""Statistical primitives: correlations, two-sample KS, chi-square, jackknife intervals."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

# Spearman p-values switch from exact enumeration to the t approximation above this n.
EXACT_SPEARMAN_MAX_N = 10


class UndefinedCorrelationError(ValueError):
    """Correlation is undefined because one input has zero variance."""


def significance_stars(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int

    @property
    def stars(self) -> str:
        return significance_stars(self.p_value)


@dataclass(frozen=True)
class KsResult:
    d_statistic: float
    p_value: float
    n1: int
    n2: int


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    dof: int
    p_value: float


def rankdata(x) -> np.ndarray:
    """Ranks starting at 1, ties get the average of the ranks they span."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    # run boundaries of equal values
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], n]
    avg = (starts + ends + 1) / 2.0
    ranks = np.empty(n)
    ranks[order] = np.repeat(avg, ends - starts)
    return ranks


def _pearson_r(x: np.ndarray, y: np.ndarray) -> float:
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(xc @ xc)
    syy = float(yc @ yc)
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("zero variance")
    r = float(xc @ yc) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def _t_pvalue(r: float, n: int) -> float:
    dof = n - 2
    if abs(r) >= 1.0:
        return 0.0
    t = r * math.sqrt(dof / (1.0 - r * r))
    return float(min(1.0, 2.0 * _sps.t.sf(abs(t), dof)))


def _check_pair(x, y, min_n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d vectors of equal length")
    if len(x) < min_n:
        raise ValueError(f"need at least {min_n} observations, got {len(x)}")
    return x, y


def pearson(x, y) -> CorrelationResult:
    x, y = _check_pair(x, y, 3)
    r = _pearson_r(x, y)
    return CorrelationResult(r, _t_pvalue(r, len(x)), len(x))


@functools.lru_cache(maxsize=None)
def _all_permutations(n: int) -> np.ndarray:
    """All n! permutations of ``range(n)`` as an int8 array, built by insertion."""
    perms = np.zeros((1, 1), dtype=np.int8)
    for k in range(1, n):
        m = perms.shape[0]
        out = np.empty((m * (k + 1), k + 1), dtype=np.int8)
        for pos in range(k + 1):
            block = out[pos * m:(pos + 1) * m]
            block[:, :pos] = perms[:, :pos]
            block[:, pos] = k
            block[:, pos + 1:] = perms[:, pos:]
        perms = out
    perms.setflags(write=False)
    return perms


def _exact_spearman_pvalue(rx: np.ndarray, ry: np.ndarray, rho: float) -> float:
    """Two-sided permutation p-value over all n! pairings of the rank vectors."""
    n = len(rx)
    xc = rx - rx.mean()
    yc = ry - ry.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    perms = _all_permutations(n)
    stats_ = (yc[perms] @ xc) / denom
    # tolerance absorbs summation-order differences between identical pairings
    hits = np.count_nonzero(np.abs(stats_) >= abs(rho) - 1e-12)
    return hits / len(perms)


def spearman(x, y) -> CorrelationResult:
    """Spearman rank correlation with average ranks for ties.

    The p-value is exact (permutation enumeration) for n <= 10 and uses the
    t approximation above that.
    """
    x, y = _check_pair(x, y, 3)
    rx, ry = rankdata(x), rankdata(y)
    rho = _pearson_r(rx, ry)
    n = len(x)
    if n <= EXACT_SPEARMAN_MAX_N:
        p = _exact_spearman_pvalue(rx, ry, rho)
    else:
        p = _t_pvalue(rho, n)
    return CorrelationResult(rho, p, n)


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """Survival function of the Kolmogorov distribution, Q(lam) = 2 sum (-1)^(k-1) exp(-2 k^2 lam^2)."""
    if lam <= 0.0:
        return 1.0
    if lam < 0.2:
        # series converges slowly here and Q is 1 to double precision
        return 1.0
    total = 0.0
    for k in range(1, terms + 1):
        term = math.exp(-2.0 * k * k * lam * lam)
        total += term if k % 2 else -term
        if term < 1e-18:
            break
    return float(min(1.0, max(0.0, 2.0 * total)))


def ks_two_sample(a, b) -> KsResult:
    """Two-sample KS: D = sup |F_a - F_b|, asymptotic p with n_eff = n1 n2 / (n1 + n2)."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    n1, n2 = len(a), len(b)
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / n1
    fb = np.searchsorted(b, pooled, side="right") / n2
    d = float(np.max(np.abs(fa - fb)))
    en = n1 * n2 / (n1 + n2)
    return KsResult(d, kolmogorov_sf(math.sqrt(en) * d), n1, n2)


def chi_square_independence(table) -> Chi2Result:
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2:
        raise ValueError("contingency table must be 2-d")
    if np.any(obs < 0):
        raise ValueError("contingency table has negative counts")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise ValueError("contingency table has a zero marginal")
    expected = np.outer(rows, cols) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    p = float(_sps.chi2.sf(stat, dof)) if dof > 0 else 1.0
    return Chi2Result(stat, dof, p)


@dataclass(frozen=True)
class JackknifeInterval:
    mean: np.ndarray
    low: np.ndarray
    high: np.ndarray
    n_replicates: int


def leave_one_out_ci(replicates, level: float = 0.95) -> JackknifeInterval:
    """Per-position jackknife mean and standard-error interval over replicate vectors.

    The interval is ``mean +- t_{(1+level)/2, n-1} * se_jack``.
    """
    reps = np.asarray(replicates, dtype=float)
    if reps.ndim == 1:
        reps = reps[:, None]
    if reps.ndim != 2:
        raise ValueError("replicates must be a list of equal-length vectors")
    n = reps.shape[0]
    if n < 3:
        raise ValueError(f"leave-one-out needs at least 3 replicates, got {n}")
    total = reps.sum(axis=0)
    loo = (total[None, :] - reps) / (n - 1)
    loo_mean = loo.mean(axis=0)
    jack_mean = n * reps.mean(axis=0) - (n - 1) * loo_mean
    se = np.sqrt((n - 1) / n * ((loo - loo_mean) ** 2).sum(axis=0))
    half = _sps.t.ppf(0.5 + level / 2.0, n - 1) * se
    return JackknifeInterval(jack_mean, jack_mean - half, jack_mean + half, n)
