"""Degree assortativity of directed networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Network, degrees
from .stats import UndefinedCorrelationError, _pearson_r, rankdata

MODES = ("total", "in", "out")
KINDS = ("pearson", "spearman")


class UndefinedAssortativityError(ValueError):
    """Assortativity is undefined: too few edges or zero variance on an endpoint coordinate."""


@dataclass(frozen=True)
class AssortativityResult:
    mode: str
    coefficient_kind: str
    value: float | None
    n_edges: int


def endpoint_pairs(network: Network, mode: str) -> tuple[np.ndarray, np.ndarray]:
    """(degree of source, degree of target) for every edge, both in ``mode``."""
    deg = degrees(network).by_mode(mode)
    return deg[network.src], deg[network.dst]


def degree_assortativity(network: Network, mode: str = "total", kind: str = "pearson",
                         log_shift: bool = False) -> AssortativityResult:
    """Correlation of endpoint degrees across directed edges.

    For mode ``in`` the pair is (in-degree of source, in-degree of target),
    likewise for ``out`` and ``total``. ``log_shift`` maps degrees to
    ``ln(d + 1)`` before a Pearson correlation; Spearman is unaffected.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if kind not in KINDS:
        raise ValueError(f"unknown coefficient kind {kind!r}")
    if network.n_edges < 2:
        raise UndefinedAssortativityError("assortativity needs at least 2 edges")
    x, y = endpoint_pairs(network, mode)
    x = x.astype(float)
    y = y.astype(float)
    if kind == "spearman":
        x, y = rankdata(x), rankdata(y)
    elif log_shift:
        x, y = np.log1p(x), np.log1p(y)
    try:
        r = _pearson_r(x, y)
    except UndefinedCorrelationError:
        raise UndefinedAssortativityError(f"undefined assortativity ({mode}): zero degree variance") from None
    return AssortativityResult(mode, kind, r, network.n_edges)


def assortativity_row(network: Network, log_shift: bool = False) -> dict[str, float | None]:
    """The six coefficients r_d, rho_d, r_in, rho_in, r_out, rho_out; undefined ones are None."""
    row: dict[str, float | None] = {}
    for mode, tag in (("total", "d"), ("in", "in"), ("out", "out")):
        for kind, sym in (("pearson", "r"), ("spearman", "rho")):
            try:
                row[f"{sym}_{tag}"] = degree_assortativity(network, mode, kind, log_shift).value
            except UndefinedAssortativityError:
                row[f"{sym}_{tag}"] = None
    return row
