"""Finite neuron lattices with a shortest-path hop metric."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path


class ManifoldError(ValueError):
    pass


class ManifoldParseError(ManifoldError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True, eq=False)
class Manifold:
    """Neuron graph plus its hop-distance matrix.

    Construct through :func:`build_manifold` or :meth:`from_edges`; both
    verify connectivity and the metric axioms.
    """

    name: str
    kind: str
    neuron_count: int
    edges: np.ndarray
    distance: np.ndarray

    @classmethod
    def from_edges(cls, name: str, kind: str, n: int, edges) -> "Manifold":
        if n < 1:
            raise ManifoldError("a manifold needs at least one neuron")
        e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64).reshape(-1, 2)
        if len(e) and (e.min() < 0 or e.max() >= n):
            raise ManifoldError("adjacency refers to a neuron outside 0..n-1")
        e = e[e[:, 0] != e[:, 1]]
        e = np.unique(np.sort(e, axis=1), axis=0).reshape(-1, 2)
        adj = sp.coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise ManifoldError(f"neuron graph of {name!r} is disconnected ({ncomp} components)")
        dist = shortest_path(adj, method="D", directed=False, unweighted=True).astype(np.int32)
        dist.setflags(write=False)
        e.setflags(write=False)
        m = cls(name, kind, n, e, dist)
        check_metric_axioms(m.distance)
        return m

    @property
    def diameter(self) -> int:
        return int(self.distance.max())

    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.neuron_count)

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "neurons": self.neuron_count,
                "edges": int(len(self.edges)), "diameter": self.diameter}


def check_metric_axioms(d: np.ndarray) -> None:
    """Raise ManifoldError unless ``d`` is an integer metric (exhaustive triangle check)."""
    d = np.asarray(d)
    n = d.shape[0]
    if d.shape != (n, n):
        raise ManifoldError("distance matrix must be square")
    if np.any(np.diag(d) != 0):
        raise ManifoldError("identity axiom violated: nonzero self-distance")
    off = d[~np.eye(n, dtype=bool)]
    if np.any(off <= 0):
        raise ManifoldError("identity axiom violated: distinct neurons at distance 0")
    if not np.array_equal(d, d.T):
        raise ManifoldError("symmetry axiom violated")
    d64 = d.astype(np.int64)
    for k in range(n):
        if np.any(d64[:, k, None] + d64[None, k, :] < d64):
            raise ManifoldError(f"triangle inequality violated through neuron {k}")


def grid(width: int, height: int) -> Manifold:
    """Rectangular lattice, 4-neighborhood, no wrap. Neuron id = y * width + x."""
    if width < 1 or height < 1:
        raise ManifoldError("grid dimensions must be >= 1")
    edges = []
    for y, x in itertools.product(range(height), range(width)):
        i = y * width + x
        if x + 1 < width:
            edges.append((i, i + 1))
        if y + 1 < height:
            edges.append((i, i + width))
    return Manifold.from_edges(f"grid-{width}x{height}", "grid", width * height, edges)


def torus(width: int, height: int) -> Manifold:
    """Rectangular lattice with wraparound in both directions."""
    if width < 1 or height < 1:
        raise ManifoldError("torus dimensions must be >= 1")
    edges = []
    for y, x in itertools.product(range(height), range(width)):
        i = y * width + x
        edges.append((i, y * width + (x + 1) % width))
        edges.append((i, ((y + 1) % height) * width + x))
    return Manifold.from_edges(f"torus-{width}x{height}", "torus", width * height, edges)


def parse_manifold(text: str, name: str = "file") -> Manifold:
    """Parse ``n <count>`` followed by ``e <i> <j>`` lines; ``#`` starts a comment line."""
    n = None
    edges = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        try:
            if parts[0] == "n" and len(parts) == 2:
                if n is not None:
                    raise ManifoldParseError(line_no, "duplicate neuron count")
                n = int(parts[1])
            elif parts[0] == "e" and len(parts) == 3:
                if n is None:
                    raise ManifoldParseError(line_no, "edge before neuron count")
                i, j = int(parts[1]), int(parts[2])
                if not (0 <= i < n and 0 <= j < n):
                    raise ManifoldParseError(line_no, f"neuron id out of range 0..{n - 1}")
                edges.append((i, j))
            else:
                raise ManifoldParseError(line_no, f"unrecognized line {s!r}")
        except ValueError as exc:
            if isinstance(exc, ManifoldParseError):
                raise
            raise ManifoldParseError(line_no, "expected integer") from None
    if n is None:
        raise ManifoldParseError(0, "missing neuron count line")
    return Manifold.from_edges(name, "file", n, edges)


def format_manifold(m: Manifold, comment: str = "") -> str:
    lines = [f"# {c}" for c in comment.splitlines()] if comment else []
    lines.append(f"n {m.neuron_count}")
    lines += [f"e {i} {j}" for i, j in m.edges.tolist()]
    return "\n".join(lines) + "\n"


def load_manifold(path: str | Path) -> Manifold:
    path = Path(path)
    return parse_manifold(path.read_text(encoding="utf-8"), name=path.stem)


BUNDLED = ("klein-quartic-24", "klein-quartic-56")


def bundled_manifold(name: str) -> Manifold:
    if name not in BUNDLED:
        raise ManifoldError(f"no bundled manifold {name!r}; choose from {', '.join(BUNDLED)}")
    text = resources.files("homophily.data").joinpath(f"{name}.txt").read_text(encoding="utf-8")
    return parse_manifold(text, name=name)


def build_manifold(spec: str) -> Manifold:
    """Build from a short spec: ``grid:WxH``, ``torus:WxH``, ``file:PATH`` or a bundled name."""
    kind, _, arg = spec.partition(":")
    if kind in ("grid", "torus"):
        try:
            w, h = (int(v) for v in arg.lower().split("x"))
        except ValueError:
            raise ManifoldError(f"bad lattice size in {spec!r}; expected WxH") from None
        return grid(w, h) if kind == "grid" else torus(w, h)
    if kind == "file":
        return load_manifold(arg)
    if spec in BUNDLED:
        return bundled_manifold(spec)
    raise ManifoldError(f"unknown manifold spec {spec!r}")


# -- Klein quartic ---------------------------------------------------------
# The {3,7} regular map on the Klein quartic has automorphism group PSL(2,7).
# Darts are group elements; a (order 7) turns around a vertex, b (order 2)
# reverses a dart and a*b (order 3) walks around a triangle.


def _psl27():
    p = 7
    mats = set()
    for a, b, c, d in itertools.product(range(p), repeat=4):
        if (a * d - b * c) % p == 1:
            m = (a, b, c, d)
            neg = tuple((-v) % p for v in m)
            mats.add(min(m, neg))
    elems = sorted(mats)

    def mul(x, y):
        a, b, c, d = x
        e, f, g, h = y
        m = ((a * e + b * g) % p, (a * f + b * h) % p, (c * e + d * g) % p, (c * f + d * h) % p)
        neg = tuple((-v) % p for v in m)
        return min(m, neg)

    return elems, mul


def _order(x, mul, identity):
    k, y = 1, x
    while y != identity:
        y = mul(y, x)
        k += 1
    return k


def klein_quartic_maps() -> tuple[Manifold, Manifold]:
    """Tile adjacency (24 heptagons) and vertex graph (56 vertices) of the {7,3} Klein tiling."""
    elems, mul = _psl27()
    identity = (1, 0, 0, 1)
    order = {g: _order(g, mul, identity) for g in elems}

    def generated(gens):
        seen = {identity}
        frontier = [identity]
        while frontier:
            nxt = []
            for g in frontier:
                for s in gens:
                    h = mul(g, s)
                    if h not in seen:
                        seen.add(h)
                        nxt.append(h)
            frontier = nxt
        return seen

    a = b = None
    for x in elems:
        if order[x] != 7:
            continue
        for y in elems:
            if order[y] == 2 and order[mul(x, y)] == 3 and len(generated((x, y))) == 168:
                a, b = x, y
                break
        if a is not None:
            break

    def cosets(gen):
        label = {}
        count = 0
        for g in elems:
            if g in label:
                continue
            h = g
            while h not in label:
                label[h] = count
                h = mul(h, gen)
            count += 1
        return label, count

    def quotient_graph(gen, name):
        label, count = cosets(gen)
        edges = {tuple(sorted((label[g], label[mul(g, b)]))) for g in elems}
        return Manifold.from_edges(name, "file", count, sorted(edges))

    return quotient_graph(a, "klein-quartic-24"), quotient_graph(mul(a, b), "klein-quartic-56")
