"""Directed interaction networks: ingestion, account unification, degrees, centrality."""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class Layer(str, enum.Enum):
    FOLLOWING = "following"
    STARRING = "starring"
    FORKING = "forking"
    ISSUES = "issues"
    PULLS = "pulls"
    COMMENTS = "comments"
    OTHER = "other"


class EdgeListParseError(ValueError):
    """Raised for a malformed edge-list line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class ConvergenceError(RuntimeError):
    """Power iteration did not converge; ``last_iterate`` holds the final vector."""

    def __init__(self, message: str, last_iterate: np.ndarray):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class Network:
    """Directed simple graph over dense node ids ``0..n-1``.

    ``src`` and ``dst`` are parallel int64 arrays, one entry per edge.
    ``labels[i]`` is the external label of node ``i``.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    labels: tuple[str, ...] = ()
    layer: Layer = Layer.OTHER

    def __post_init__(self):
        src = np.ascontiguousarray(self.src, dtype=np.int64)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64)
        if src.shape != dst.shape or src.ndim != 1:
            raise ValueError("src and dst must be 1-d arrays of equal length")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= self.n):
            raise ValueError("edge endpoint out of range")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(self.n)))
        elif len(self.labels) != self.n:
            raise ValueError("label table length must equal n")
        src.setflags(write=False)
        dst.setflags(write=False)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "layer", Layer(self.layer))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]], labels: Sequence[str] = (),
                   layer: Layer | str = Layer.OTHER) -> "Network":
        arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        return cls(n, arr[:, 0], arr[:, 1], tuple(labels), Layer(layer))

    @property
    def n_edges(self) -> int:
        return len(self.src)

    def edge_set(self) -> set[tuple[int, int]]:
        return set(zip(self.src.tolist(), self.dst.tolist()))

    def sorted_edges(self) -> np.ndarray:
        """Edges as an ``(m, 2)`` array in lexicographic order."""
        order = np.lexsort((self.dst, self.src))
        return np.column_stack([self.src[order], self.dst[order]])

    def reversed(self) -> "Network":
        return Network(self.n, self.dst, self.src, self.labels, self.layer)

    def with_edges(self, src: np.ndarray, dst: np.ndarray) -> "Network":
        return Network(self.n, src, dst, self.labels, self.layer)

    def label_index(self) -> dict[str, int]:
        return {lab: i for i, lab in enumerate(self.labels)}

    def adjacency(self, symmetric: bool = False) -> sp.csr_matrix:
        """Binary sparse adjacency; ``symmetric`` ignores edge direction."""
        m = sp.coo_matrix((np.ones(self.n_edges), (self.src, self.dst)), shape=(self.n, self.n)).tocsr()
        if symmetric:
            m = m + m.T
        m.data[:] = 1.0
        m.eliminate_zeros()
        return m


_HEADER_NAMES = {("src", "dst"), ("source", "target"), ("from", "to"), ("u", "v")}


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def load_edge_list(stream: IO[bytes] | IO[str] | bytes | str, format: str = "csv", dedup: bool = True,
                   drop_self_loops: bool = True, header: bool | None = None,
                   numeric_labels: bool = False, layer: Layer | str = Layer.OTHER) -> Network:
    """Parse a ``src<sep>dst`` edge list into a :class:`Network`.

    Node ids are assigned in order of first appearance. Blank lines and lines
    starting with ``#`` are skipped. With ``header=None`` the first data line is
    treated as a header when it looks like one: a non-numeric first field in
    ``numeric_labels`` mode, or a known column-name pair (``src,dst``,
    ``source,target``, ...) otherwise.

    With ``dedup`` the edge list is returned sorted, so it does not depend on
    line order.
    """
    if format not in ("csv", "tsv"):
        raise ValueError(f"unknown edge-list format {format!r}")
    if isinstance(stream, (bytes, str)):
        raw = stream
    else:
        raw = stream.read()
    text = raw.decode("utf-8") if isinstance(raw, bytes) else raw
    delim = "," if format == "csv" else "\t"

    index: dict[str, int] = {}
    labels: list[str] = []
    pairs: list[tuple[int, int]] = []
    first = True
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = next(csv.reader(io.StringIO(line.rstrip("\r\n")), delimiter=delim))
        if len(fields) != 2:
            raise EdgeListParseError(line_no, f"expected 2 fields, got {len(fields)}")
        a, b = fields[0].strip(), fields[1].strip()
        if not a or not b:
            raise EdgeListParseError(line_no, "empty node label")
        if first:
            first = False
            if header is True:
                continue
            if header is None:
                if numeric_labels and not _is_number(a):
                    continue
                if not numeric_labels and (a.lower(), b.lower()) in _HEADER_NAMES:
                    continue
        if numeric_labels and not (_is_number(a) and _is_number(b)):
            raise EdgeListParseError(line_no, "non-numeric label in numeric mode")
        ids = []
        for lab in (a, b):
            i = index.get(lab)
            if i is None:
                i = index[lab] = len(labels)
                labels.append(lab)
            ids.append(i)
        pairs.append((ids[0], ids[1]))

    arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    if drop_self_loops:
        arr = arr[arr[:, 0] != arr[:, 1]]
    if dedup and len(arr):
        arr = np.unique(arr, axis=0)
    return Network(len(labels), arr[:, 0], arr[:, 1], tuple(labels), Layer(layer))


def write_edge_list(network: Network, path, format: str = "csv") -> None:
    delim = "," if format == "csv" else "\t"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=delim, lineterminator="\n")
        for s, d in zip(network.src.tolist(), network.dst.tolist()):
            w.writerow([network.labels[s], network.labels[d]])


# ---------------------------------------------------------------------------
# account unification


@dataclass(frozen=True)
class AccountRecord:
    record_id: str
    gravatar: str | None = None
    login: str | None = None
    registered: str | None = None


class DisjointSet:
    """Union-find with path halving and union by size."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


def _key(value: str | None) -> str | None:
    if value is None:
        return None
    value = value.strip()
    return value or None


def unify_accounts(records: Sequence[AccountRecord]) -> list[list[str]]:
    """Partition records into entities linked by a shared gravatar or (login, registration date).

    Keys are compared case-sensitively after trimming. The result is canonical:
    each entity's record ids are sorted and entities are ordered by their first id,
    so it does not depend on the input order.
    """
    ds = DisjointSet(len(records))
    seen: dict[tuple, int] = {}
    for i, rec in enumerate(records):
        keys = []
        grav = _key(rec.gravatar)
        if grav is not None:
            keys.append(("gravatar", grav))
        login, reg = _key(rec.login), _key(rec.registered)
        if login is not None and reg is not None:
            keys.append(("login", login, reg))
        for k in keys:
            j = seen.setdefault(k, i)
            if j != i:
                ds.union(i, j)
    groups: dict[int, list[str]] = {}
    for i, rec in enumerate(records):
        groups.setdefault(ds.find(i), []).append(rec.record_id)
    return sorted((sorted(g) for g in groups.values()), key=lambda g: g[0])


def entity_map(partition: Sequence[Sequence[str]]) -> list[tuple[str, int]]:
    """Rows for the ``record_id,entity_id`` CSV, sorted by record id."""
    rows = [(rid, eid) for eid, group in enumerate(partition) for rid in group]
    return sorted(rows)


# ---------------------------------------------------------------------------
# degrees and centrality


@dataclass(frozen=True)
class DegreeVector:
    in_degree: np.ndarray
    out_degree: np.ndarray
    total: np.ndarray = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "total", self.in_degree + self.out_degree)

    def __len__(self) -> int:
        return len(self.in_degree)

    def by_mode(self, mode: str) -> np.ndarray:
        if mode == "in":
            return self.in_degree
        if mode == "out":
            return self.out_degree
        if mode == "total":
            return self.total
        raise ValueError(f"unknown degree mode {mode!r}")


def degrees(network: Network) -> DegreeVector:
    out_deg = np.bincount(network.src, minlength=network.n).astype(np.int64)
    in_deg = np.bincount(network.dst, minlength=network.n).astype(np.int64)
    return DegreeVector(in_deg, out_deg)


def eigenvector_centrality(network: Network, tolerance: float = 1e-10, max_iterations: int = 10_000) -> np.ndarray:
    """Eigenvector centrality of the symmetrized graph, unit Euclidean norm.

    Iterates ``x <- (A + I) x`` so bipartite graphs (stars, even cycles) converge
    instead of oscillating; the shift leaves the eigenvectors unchanged.
    """
    if network.n == 0:
        raise ValueError("eigenvector centrality of an empty network")
    a = network.adjacency(symmetric=True)
    x = np.full(network.n, 1.0 / np.sqrt(network.n))
    for _ in range(max_iterations):
        nxt = a @ x + x
        norm = np.linalg.norm(nxt)
        nxt /= norm
        if np.max(np.abs(nxt - x)) < tolerance:
            return nxt
        x = nxt
    raise ConvergenceError(f"no convergence within {max_iterations} iterations", x)
