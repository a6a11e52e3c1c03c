"""Declarative pipeline: config parsing, stage orchestration, report bundle and manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .assortativity import assortativity_row
from .features import filter_active_users, read_feature_csv, transform_features
from .graph import Layer, Network, load_edge_list
from .nullmodel import derive_seed
from .richclub import normalized_rich_club
from .simdist import (
    DistanceAssignment,
    link_distance_distribution,
    naive_euclidean_baseline,
    null_distribution_comparison,
    score_model,
    som_ensemble,
)
from .som.manifold import Manifold, build_manifold
from .som.model import TrainConfig
from .stats import UndefinedCorrelationError, chi_square_independence, leave_one_out_ci
from .textmine import (
    POLARITIES,
    UNITS,
    CommentArtifact,
    TokenRules,
    keyword_distance_trend,
    keyword_frequency_by_distance,
    polarity_by_distance,
    preprocess_comment,
    read_corpus,
    read_lexicon,
    tokenize_corpus,
)

log = logging.getLogger(__name__)

STAGES = ("assort", "richclub", "som-train", "distances", "nulls", "modelscore", "text")
EXIT_CODES = {
    "config": 2,
    "ingest": 3,
    "features": 4,
    "assort": 5,
    "richclub": 6,
    "som-train": 7,
    "distances": 8,
    "nulls": 9,
    "modelscore": 10,
    "text": 11,
    "report": 12,
}
_NEEDS = {
    "assort": ("ingest",),
    "richclub": ("ingest",),
    "som-train": ("features",),
    "distances": ("ingest", "som-train"),
    "nulls": ("ingest", "som-train"),
    "modelscore": ("ingest", "som-train"),
    "text": ("som-train",),
}
DEFAULT_KEYWORDS = ("[code-snippet]", "pull-request", "merge", "patch", "error", "problem", "bug",
                    "fail", "help", "not-work", "suggest", "readme")


class ConfigError(ValueError):
    pass


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.stage, 1)


@dataclass(frozen=True)
class PipelineConfig:
    output: Path
    edges: dict[str, Path] = field(default_factory=dict)
    features: Path | None = None
    corpus: Path | None = None
    lexicon: Path | None = None
    manifolds: tuple[str, ...] = ("torus:8x8",)
    seed: int = 0
    workers: int = 1
    runs: int = 200
    epochs: int = 20
    activity_threshold: int = 10
    shift: float = 5.0
    rc_random: int = 50
    rc_modes: tuple[str, ...] = ("total", "in", "out")
    rc_boot: int = 1000
    swaps_per_edge: float = 10.0
    null_sims: int = 100
    alpha: float = 0.05
    baseline_buckets: int | None = None
    baseline_sample: int = 100_000
    pair_limit: int = 10_000_000
    pair_sample: int = 1_000_000
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    known_repos: tuple[str, ...] = ()

    def validate(self) -> "PipelineConfig":
        if self.runs < 1:
            raise ConfigError("som.runs must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not self.manifolds:
            raise ConfigError("at least one manifold is required")
        for rc in self.rc_modes:
            if rc not in ("total", "in", "out"):
                raise ConfigError(f"unknown rich-club degree mode {rc!r}")
        paths = [*self.edges.values(), self.features, self.corpus, self.lexicon]
        paths += [Path(m[5:]) for m in self.manifolds if m.startswith("file:")]
        for p in paths:
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"input file not found: {p}")
        for name in self.edges:
            if name not in Layer._value2member_map_:
                log.info("layer %r is not a standard layer name", name)
        return self

    def input_paths(self) -> dict[str, Path]:
        out = {f"edges.{k}": v for k, v in self.edges.items()}
        for key in ("features", "corpus", "lexicon"):
            if getattr(self, key) is not None:
                out[key] = getattr(self, key)
        for m in self.manifolds:
            if m.startswith("file:"):
                out[f"manifold.{m[5:]}"] = Path(m[5:])
        return out


def _section(raw: dict, key: str) -> dict:
    val = raw.get(key) or {}
    if not isinstance(val, dict):
        raise ConfigError(f"{key} must be a mapping")
    return val


def load_config(path: str | Path, **overrides) -> PipelineConfig:
    """Read a YAML config; relative paths resolve against the config file's directory.

    ``overrides`` (seed, workers, output) take precedence when not None.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping")
    base = path.parent

    def rel(p):
        return None if p is None else (base / p if not Path(p).is_absolute() else Path(p))

    inputs = _section(raw, "inputs")
    edges = inputs.get("edges") or {}
    if not isinstance(edges, dict):
        raise ConfigError("inputs.edges must map layer names to files")
    manifolds = []
    for m in raw.get("manifolds") or ["torus:8x8"]:
        m = str(m)
        manifolds.append(f"file:{rel(m[5:])}" if m.startswith("file:") else m)
    som = _section(raw, "som")
    feats = _section(raw, "features")
    rc = _section(raw, "richclub")
    nulls = _section(raw, "nulls")
    base_cfg = _section(raw, "baseline")
    score = _section(raw, "modelscore")
    text = _section(raw, "text")
    try:
        cfg = PipelineConfig(
            output=rel(raw.get("output", "report")),
            edges={str(k): rel(v) for k, v in edges.items()},
            features=rel(inputs.get("features")),
            corpus=rel(inputs.get("corpus")),
            lexicon=rel(inputs.get("lexicon")),
            manifolds=tuple(manifolds),
            seed=int(raw.get("seed", 0)),
            workers=int(raw.get("workers", os.cpu_count() or 1)),
            runs=int(som.get("runs", 200)),
            epochs=int(som.get("epochs", 20)),
            activity_threshold=int(feats.get("activity_threshold", 10)),
            shift=float(feats.get("shift", 5.0)),
            rc_random=int(rc.get("n_random", 50)),
            rc_modes=tuple(rc.get("modes", ("total", "in", "out"))),
            rc_boot=int(rc.get("n_boot", 1000)),
            swaps_per_edge=float(raw.get("swaps_per_edge", 10.0)),
            null_sims=int(nulls.get("n_sims", 100)),
            alpha=float(nulls.get("alpha", 0.05)),
            baseline_buckets=base_cfg.get("n_buckets"),
            baseline_sample=int(base_cfg.get("sample_size", 100_000)),
            pair_limit=int(score.get("pair_limit", 10_000_000)),
            pair_sample=int(score.get("sample_size", 1_000_000)),
            keywords=tuple(text.get("keywords", DEFAULT_KEYWORDS)),
            known_repos=tuple(text.get("known_repos", ())),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if "output" in overrides:
        overrides["output"] = Path(overrides["output"])
    return replace(cfg, **overrides).validate()


# -- output helpers ------------------------------------------------------------


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return ""
        return repr(v)
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


class Bundle:
    """Collects written artifacts so the manifest can list them."""

    def __init__(self, root: Path):
        self.root = root
        self.artifacts: dict[str, list[str]] = {}

    def _path(self, stage: str, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts.setdefault(stage, []).append(name)
        return p

    def csv(self, stage: str, name: str, header, rows) -> None:
        # csv's default line terminator is CRLF, as RFC 4180 asks
        with open(self._path(stage, name), "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([_cell(v) for v in row])

    def json(self, stage: str, name: str, obj) -> None:
        self._path(stage, name).write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n", encoding="utf-8")


# -- stages --------------------------------------------------------------------


@dataclass
class State:
    config: PipelineConfig
    bundle: Bundle
    networks: dict[str, Network] = field(default_factory=dict)
    matrix: object = None
    manifolds: list[Manifold] = field(default_factory=list)
    assignments: dict[str, DistanceAssignment] = field(default_factory=dict)

    @property
    def primary(self) -> DistanceAssignment:
        return self.assignments[self.manifolds[0].name]


def _ingest(st: State) -> None:
    for name, path in sorted(st.config.edges.items()):
        fmt = "tsv" if path.suffix.lower() in (".tsv", ".tab") else "csv"
        layer = Layer(name) if name in Layer._value2member_map_ else Layer.OTHER
        with open(path, "rb") as fh:
            st.networks[name] = load_edge_list(fh, format=fmt, layer=layer)


def _features(st: State) -> None:
    cfg = st.config
    table = read_feature_csv(cfg.features)
    active = filter_active_users(table, cfg.activity_threshold)
    log.info("features: %d of %d users pass the activity filter", len(active), len(table))
    st.matrix = transform_features(active, cfg.shift)
    st.manifolds = [build_manifold(m) for m in cfg.manifolds]


def _rc_task(args):
    name, net, mode, cfg = args
    seed = derive_seed(cfg.seed, 2, _stable_id(name), ("total", "in", "out").index(mode))
    return normalized_rich_club(net, mode, True, cfg.rc_random, cfg.swaps_per_edge, seed, cfg.rc_boot)


def _stable_id(name: str) -> int:
    return int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "big")


def _map(cfg: PipelineConfig, fn, jobs):
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


def _assort(st: State) -> None:
    cols = ("r_d", "rho_d", "r_in", "rho_in", "r_out", "rho_out")
    rows = []
    for name, net in st.networks.items():
        for shift in (False, True):
            row = assortativity_row(net, log_shift=shift)
            rows.append([name, shift, *(row[c] for c in cols), net.n_edges])
    st.bundle.csv("assort", "assortativity.csv", ["layer", "log_shift", *cols, "n_edges"], rows)


def _richclub(st: State) -> None:
    cfg = st.config
    jobs = [(name, net, mode, cfg) for name, net in st.networks.items() for mode in cfg.rc_modes]
    curves = _map(cfg, _rc_task, jobs)
    rows, traces = [], {}
    for (name, _, mode, _), curve in zip(jobs, curves):
        rho = dict(zip(curve.ks.tolist(), zip(curve.rho, curve.ci_low, curve.ci_high)))
        for k, phi in zip(curve.empirical.ks.tolist(), curve.empirical.phi):
            r, lo, hi = rho.get(k, (None, None, None))
            rows.append([name, k, phi, r, lo, hi, mode, True])
        traces[f"{name}/{mode}"] = {"absent_k": list(curve.absent),
                                    "swaps": [t.to_dict() for t in curve.traces]}
    st.bundle.csv("richclub", "richclub.csv",
                  ["layer", "k", "phi", "rho", "ci_low", "ci_high", "mode", "directed"], rows)
    st.bundle.json("richclub", "richclub_traces.json", traces)


def _som_train(st: State) -> None:
    cfg = st.config
    for i, manifold in enumerate(st.manifolds):
        tc = TrainConfig.for_manifold(manifold, cfg.epochs)
        da = som_ensemble(st.matrix, manifold, tc, cfg.runs, derive_seed(cfg.seed, 3, i), cfg.workers)
        st.assignments[manifold.name] = da
        clusters = da.consensus_clusters()
        rows = ([u, int(c), *a.tolist()] for u, c, a in zip(da.users, clusters, da.assignments))
        st.bundle.csv("som-train", f"som/{_slug(manifold.name)}_assignments.csv",
                      ["user", "consensus", *(f"run_{r}" for r in range(da.runs))], rows)


def _slug(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def _distances(st: State) -> None:
    da = st.primary
    hist_rows, jack_rows = [], []
    dist = da.manifold.distance
    for name, net in st.networks.items():
        h = link_distance_distribution(net, da)
        hist_rows += [[d, int(c), name] for d, c in enumerate(h.as_array(da.manifold.diameter))]
        u, v, ok = _rows(net, da)
        if da.runs >= 3 and ok.any():
            # one histogram per run, as edge fractions, for the leave-one-out interval
            size = da.manifold.diameter + 1
            reps = [np.bincount(dist[da.assignments[u, r], da.assignments[v, r]], minlength=size) / len(u)
                    for r in range(da.runs)]
            ci = leave_one_out_ci(reps)
            jack_rows += [[name, d, ci.mean[d], ci.low[d], ci.high[d]] for d in range(size)]
    st.bundle.csv("distances", "histogram.csv", ["distance", "count", "layer"], hist_rows)
    if jack_rows:
        st.bundle.csv("distances", "histogram_runs.csv",
                      ["layer", "distance", "mean_fraction", "ci_low", "ci_high"], jack_rows)


def _rows(net: Network, da: DistanceAssignment):
    index = da.user_index()
    assigned = da.assigned()
    node_row = np.array([index.get(lab, -1) for lab in net.labels], dtype=np.int64)
    u, v = node_row[net.src], node_row[net.dst]
    ok = (u >= 0) & (v >= 0)
    ok[ok] = assigned[u[ok]] & assigned[v[ok]]
    return u[ok], v[ok], ok


def _null_task(args):
    name, net, da, cfg = args
    seed = derive_seed(cfg.seed, 4, _stable_id(name))
    return null_distribution_comparison(net, da, cfg.null_sims, seed, cfg.swaps_per_edge, cfg.alpha)


def _nulls(st: State) -> None:
    cfg = st.config
    jobs = [(name, net, st.primary, cfg) for name, net in st.networks.items() if net.n_edges]
    results = _map(cfg, _null_task, jobs)
    out = {}
    top = st.primary.manifold.diameter
    for (name, *_), res in zip(jobs, results):
        out[name] = {
            "manifold": st.primary.manifold.name,
            "alpha": res.alpha,
            "rejection_fraction": res.rejection_fraction,
            "empirical_counts": res.empirical.as_array(top).tolist(),
            "simulations": [{"d": k.d_statistic, "p_value": k.p_value, "counts": h.as_array(top).tolist(),
                             "swaps": t.to_dict()}
                            for k, h, t in zip(res.ks, res.null_histograms, res.traces)],
        }
    st.bundle.json("nulls", "nulls.json", out)


def _modelscore(st: State) -> None:
    cfg = st.config
    models = [(name, da, da.consensus_clusters()) for name, da in st.assignments.items()]
    n_buckets = cfg.baseline_buckets or st.manifolds[0].diameter + 1
    naive = naive_euclidean_baseline(st.matrix, int(n_buckets), cfg.baseline_sample, derive_seed(cfg.seed, 5))
    models.append(("naive-euclidean", naive, None))
    rows = []
    for name, net in st.networks.items():
        for mname, dist, clusters in models:
            s = score_model(net, dist, clusters, limit=cfg.pair_limit, sample_size=cfg.pair_sample,
                            seed=derive_seed(cfg.seed, 6, _stable_id(name)))
            rows.append([mname, name, s.ell_d, s.ell_c, s.aic, s.bic, s.k_parameters, s.n_pairs,
                         s.basis, s.sampled])
    st.bundle.csv("modelscore", "model_scores.csv",
                  ["manifold", "layer", "ell_d", "ell_c", "aic", "bic", "k", "n_pairs", "basis", "sampled"], rows)


def _corpus_with_distances(st: State) -> list[CommentArtifact]:
    corpus = read_corpus(st.config.corpus)
    if all(a.distance is not None for a in corpus) or not st.assignments:
        return corpus
    da = st.primary
    index = da.user_index()
    assigned = da.assigned()
    out = []
    for a in corpus:
        if a.distance is None:
            iu, iv = index.get(a.author), index.get(a.owner)
            if iu is not None and iv is not None and assigned[iu] and assigned[iv]:
                d = int(da.distances(np.array([iu]), np.array([iv]))[0])
                a = replace(a, distance=d)
        out.append(a)
    return out


def _text(st: State) -> None:
    cfg = st.config
    rules = TokenRules(known_repos=cfg.known_repos)
    corpus = [a for a in _corpus_with_distances(st) if a.analyzable]
    if not corpus:
        raise ValueError("no analyzable artifacts (author differs from owner and distance known)")
    cleaned = [replace(a, text=preprocess_comment(a.text, rules)) for a in corpus]
    tokens = tokenize_corpus(cleaned, rules, preprocessed=True)
    freq_rows, trend_rows = [], []
    for unit in UNITS:
        table = keyword_frequency_by_distance(cleaned, cfg.keywords, unit, rules, preprocessed=True, tokens=tokens)
        for kw, row in zip(table.keywords, table.values):
            freq_rows += [[unit, kw, d, v] for d, v in zip(table.distances, row)]
            try:
                res = keyword_distance_trend(row, table.distances)
                trend_rows.append([unit, kw, res.rho, res.p_value, res.stars, res.n])
            except (UndefinedCorrelationError, ValueError) as exc:
                log.info("no trend for %s (%s): %s", kw, unit, exc)
                trend_rows.append([unit, kw, None, None, "", len(row)])
    kinds = Counter((int(a.distance), a.kind) for a in cleaned)
    counts = [[d, kinds[d, "comment"], kinds[d, "body"], n_art, n_tok]
              for d, n_art, n_tok in zip(table.distances, table.artifacts_per_distance, table.tokens_per_distance)]
    st.bundle.csv("text", "keyword_frequency.csv", ["unit", "keyword", "distance", "value"], freq_rows)
    st.bundle.csv("text", "keyword_trend.csv", ["unit", "keyword", "rho", "p_value", "stars", "n_bins"], trend_rows)
    st.bundle.csv("text", "corpus_sizes.csv", ["distance", "comments", "bodies", "artifacts", "tokens"], counts)

    lexicon = read_lexicon(cfg.lexicon)
    pol = polarity_by_distance(cleaned, lexicon, rules, preprocessed=True)
    st.bundle.csv("text", "polarity.csv", ["polarity", "distance", "count"],
                  [[p, d, int(pol.counts[i, j])] for i, p in enumerate(POLARITIES)
                   for j, d in enumerate(pol.distances)])
    keep_r = pol.counts.sum(axis=1) > 0
    keep_c = pol.counts.sum(axis=0) > 0
    chi = chi_square_independence(pol.counts[keep_r][:, keep_c])
    st.bundle.csv("text", "polarity_chi2.csv", ["statistic", "dof", "p_value"],
                  [[chi.statistic, chi.dof, chi.p_value]])


_RUNNERS = {
    "ingest": _ingest,
    "features": _features,
    "assort": _assort,
    "richclub": _richclub,
    "som-train": _som_train,
    "distances": _distances,
    "nulls": _nulls,
    "modelscore": _modelscore,
    "text": _text,
}


def _skip_reason(cfg: PipelineConfig, stage: str) -> str | None:
    if stage in ("ingest", "assort", "richclub", "distances", "nulls", "modelscore") and not cfg.edges:
        return "no edge lists configured"
    if stage in ("features", "som-train", "distances", "nulls", "modelscore") and cfg.features is None:
        return "no feature table configured"
    if stage == "text" and cfg.corpus is None:
        return "no corpus configured"
    return None


def plan(stages) -> list[str]:
    """Requested stages plus prerequisites, in execution order."""
    want = set()

    def add(s):
        if s in want:
            return
        want.add(s)
        for dep in _NEEDS.get(s, ()):
            add(dep)

    for s in stages:
        if s not in _RUNNERS:
            raise ConfigError(f"unknown stage {s!r}")
        add(s)
    return [s for s in ("ingest", "features", *STAGES) if s in want]


def run_pipeline(config: PipelineConfig, stages=None) -> dict:
    """Run the requested stages (default: all) and write the manifest.

    Returns the manifest. A failing stage raises :class:`StageError` after the
    manifest has been written with ``complete: false``.
    """
    order = plan(stages or STAGES)
    config.output.mkdir(parents=True, exist_ok=True)
    st = State(config, Bundle(config.output))
    status: dict[str, dict] = {}
    failure = None
    for stage in order:
        reason = _skip_reason(config, stage)
        if reason is not None:
            status[stage] = {"status": "skipped", "reason": reason}
            continue
        blocked = [d for d in _NEEDS.get(stage, ()) if status.get(d, {}).get("status") != "ok"
                   and not (stage == "text" and d == "som-train")]
        if blocked:
            status[stage] = {"status": "skipped", "reason": f"prerequisite {blocked[0]} did not run"}
            continue
        log.info("stage %s", stage)
        try:
            _RUNNERS[stage](st)
        except Exception as exc:  # noqa: BLE001 - reported via manifest and exit code
            status[stage] = {"status": "failed", "error": f"{type(exc).__name__}: {exc}"}
            failure = StageError(stage, exc)
            break
        status[stage] = {"status": "ok"}
    for stage in order:
        status.setdefault(stage, {"status": "incomplete", "reason": "aborted after an earlier failure"})
    for stage, files in st.bundle.artifacts.items():
        key = "outputs" if status[stage]["status"] == "ok" else "incomplete_outputs"
        status[stage][key] = files
    manifest = {
        "format": "homophily-report",
        "version": 1,
        "complete": failure is None,
        "seed": config.seed,
        "inputs": {k: {"path": str(p), "sha256": _sha256(p)} for k, p in sorted(config.input_paths().items())},
        "settings": _settings(config),
        "stages": status,
        "artifacts": {name: _sha256(config.output / name)
                      for files in st.bundle.artifacts.values() for name in files},
    }
    (config.output / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n",
                                                 encoding="utf-8")
    if failure is not None:
        raise failure
    return manifest


def _settings(cfg: PipelineConfig) -> dict:
    # workers and paths do not affect results, so they stay out of the manifest settings
    skip = {"output", "edges", "features", "corpus", "lexicon", "workers"}
    out = {}
    for k, v in cfg.__dict__.items():
        if k in skip:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out
