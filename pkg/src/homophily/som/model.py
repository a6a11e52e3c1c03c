"""Online SOM training on a neuron graph, BMU queries and quality metrics."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numba
import numpy as np

from .manifold import Manifold

MODEL_FORMAT = "homophily-som"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Linear schedules over all presentations; sigma is in hop-distance units."""

    epochs: int = 20
    alpha_start: float = 0.5
    alpha_end: float = 0.01
    sigma_start: float = 3.0
    sigma_end: float = 0.5

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if not (0 < self.alpha_end <= self.alpha_start <= 1):
            raise ValueError("need 0 < alpha_end <= alpha_start <= 1")
        if not (0 < self.sigma_end <= self.sigma_start):
            raise ValueError("need 0 < sigma_end <= sigma_start")

    @classmethod
    def for_manifold(cls, manifold: Manifold, epochs: int = 20, **kw) -> "TrainConfig":
        """sigma_start defaults to half the manifold diameter (at least 1)."""
        kw.setdefault("sigma_start", max(1.0, manifold.diameter / 2.0))
        kw.setdefault("sigma_end", min(0.5, kw["sigma_start"]))
        return cls(epochs=epochs, **kw)


@dataclass(eq=False)
class SomModel:
    manifold: Manifold
    codebook: np.ndarray
    config: TrainConfig
    seed: int
    history: dict[int, float] = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.codebook.shape[1]


def _as_matrix(data) -> np.ndarray:
    values = getattr(data, "values", data)
    x = np.ascontiguousarray(values, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("data must be a 2-d matrix")
    return x


def _check_dim(model: SomModel, x: np.ndarray) -> None:
    if x.shape[-1] != model.dim:
        raise ValueError(f"dimension mismatch: data has {x.shape[-1]} features, codebook {model.dim}")


@numba.njit(cache=True)
def _train_segment(data, codebook, dist2, order, t0, total, a0, a1, s0, s1):
    n_neurons, dim = codebook.shape
    denom = max(total - 1, 1)
    h = np.empty(n_neurons)
    for step in range(len(order)):
        x = data[order[step]]
        frac = (t0 + step) / denom
        alpha = a0 + (a1 - a0) * frac
        sigma = s0 + (s1 - s0) * frac
        # competition
        best = 0
        best_d = np.inf
        for j in range(n_neurons):
            acc = 0.0
            for f in range(dim):
                diff = x[f] - codebook[j, f]
                acc += diff * diff
            if acc < best_d:
                best_d = acc
                best = j
        # adaptation
        inv = 1.0 / (2.0 * sigma * sigma)
        for j in range(n_neurons):
            h[j] = alpha * np.exp(-dist2[best, j] * inv)
        for j in range(n_neurons):
            hj = h[j]
            if hj == 0.0:
                continue
            for f in range(dim):
                codebook[j, f] += hj * (x[f] - codebook[j, f])


def initial_codebook(data: np.ndarray, n_neurons: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform noise inside each feature's observed range."""
    lo = data.min(axis=0)
    hi = data.max(axis=0)
    return lo + (hi - lo) * rng.random((n_neurons, data.shape[1]))


def train_som(data, manifold: Manifold, config: TrainConfig | None = None, seed: int = 0,
              checkpoints=(), initial: np.ndarray | None = None) -> SomModel:
    """Online Kohonen training.

    Each presentation picks the best matching unit by Euclidean distance and
    moves every neuron ``n`` by ``alpha * exp(-d(bmu, n)^2 / (2 sigma^2)) * (x - w_n)``.
    Samples are shuffled once per epoch. ``checkpoints`` lists epochs after
    which the quantization error is recorded in ``model.history``.
    ``initial`` overrides the seeded random codebook.
    """
    config = config or TrainConfig.for_manifold(manifold)
    x = _as_matrix(data)
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("training data must be non-empty with at least one feature")
    rng = np.random.Generator(np.random.PCG64(seed))
    if initial is None:
        codebook = initial_codebook(x, manifold.neuron_count, rng)
    else:
        codebook = np.array(initial, dtype=np.float64, copy=True)
        if codebook.shape != (manifold.neuron_count, x.shape[1]):
            raise ValueError("initial codebook shape does not match manifold and data")
    model = SomModel(manifold, codebook, config, int(seed))
    if 0 in checkpoints:
        model.history[0] = quantization_error(model, x)
    n = x.shape[0]
    total = config.epochs * n
    dist2 = manifold.distance.astype(np.float64) ** 2
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        _train_segment(x, codebook, dist2, order, epoch * n, total,
                       config.alpha_start, config.alpha_end, config.sigma_start, config.sigma_end)
        if epoch + 1 in checkpoints:
            model.history[epoch + 1] = quantization_error(model, x)
    return model


def _sq_dists(codebook: np.ndarray, x: np.ndarray, chunk: int = 4096) -> np.ndarray:
    out = np.empty((x.shape[0], codebook.shape[0]))
    for s in range(0, x.shape[0], chunk):
        diff = x[s:s + chunk, None, :] - codebook[None, :, :]
        out[s:s + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def best_matching_unit(model: SomModel, x) -> int:
    """Neuron nearest to ``x``; ties go to the lowest neuron id."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("x must be a vector")
    _check_dim(model, v)
    d = ((model.codebook - v) ** 2).sum(axis=1)
    return int(np.argmin(d))


@dataclass(frozen=True)
class PopulationMap:
    assignment: np.ndarray
    occupancy: np.ndarray


def map_population(model: SomModel, data) -> PopulationMap:
    x = _as_matrix(data) if len(getattr(data, "values", data)) else np.zeros((0, model.dim))
    _check_dim(model, x)
    if x.shape[0] == 0:
        return PopulationMap(np.zeros(0, np.int64), np.zeros(model.manifold.neuron_count, np.int64))
    assign = np.argmin(_sq_dists(model.codebook, x), axis=1).astype(np.int64)
    return PopulationMap(assign, np.bincount(assign, minlength=model.manifold.neuron_count))


def quantization_error(model: SomModel, data) -> float:
    """Mean Euclidean distance from each row to its BMU codebook vector."""
    x = _as_matrix(data)
    _check_dim(model, x)
    if x.shape[0] == 0:
        raise ValueError("quantization error of empty data")
    d = _sq_dists(model.codebook, x).min(axis=1)
    return float(np.sqrt(d).mean())


# -- serialization ---------------------------------------------------------


def model_to_dict(model: SomModel) -> dict:
    m = model.manifold
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "manifold": {"name": m.name, "kind": m.kind, "neurons": m.neuron_count, "edges": m.edges.tolist()},
        "seed": model.seed,
        "config": asdict(model.config),
        "history": {str(k): v for k, v in sorted(model.history.items())},
        "codebook": model.codebook.tolist(),
    }


def model_from_dict(obj: dict) -> SomModel:
    if obj.get("format") != MODEL_FORMAT:
        raise ValueError("not a serialized SOM model")
    if obj.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {obj.get('version')}")
    mf = obj["manifold"]
    manifold = Manifold.from_edges(mf["name"], mf["kind"], mf["neurons"], mf["edges"])
    codebook = np.asarray(obj["codebook"], dtype=np.float64).reshape(manifold.neuron_count, -1)
    history = {int(k): float(v) for k, v in obj.get("history", {}).items()}
    return SomModel(manifold, codebook, TrainConfig(**obj["config"]), int(obj["seed"]), history)


def save_model(model: SomModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path) -> SomModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
