"""Synthetic demo dataset: users with latent skill profiles, six layers, issue comments."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import pandas as pd
import yaml

from .features import FEATURE_COLUMNS, ID_COLUMN
from .graph import Layer, Network, eigenvector_centrality, write_edge_list
from .synthetic import planted_homophily
from .textmine import CommentArtifact, write_corpus

# (layer, edges at 2000 users, kernel scale; negative scale favors dissimilar pairs)
LAYER_PLAN = (
    (Layer.FOLLOWING, 12000, 0.6),
    (Layer.STARRING, 15000, 1.5),
    (Layer.FORKING, 8000, 0.8),
    (Layer.ISSUES, 8000, -1.0),
    (Layer.PULLS, 6000, 0.5),
    (Layer.COMMENTS, 10000, -1.2),
)

_SIMILAR_PHRASES = (
    "I pushed a fix, can you merge the pull request?",
    "Rebased on master, ready to merge.",
    "Here is a patch for that: `git apply fix.diff`",
    "LGTM, merging now :)",
    "Updated the README as discussed.",
    "@{owner} I refactored the parser like you suggested.",
    "See {owner}/core#12 for the related change.",
    "```python\ndef run():\n    return 1\n```\nThis should cover the edge case.",
)
_DISSIMILAR_PHRASES = (
    "I get an error when I run the install script.",
    "This does not work on Windows, any help?",
    "Build failed with a strange error, I don't know what to do :(",
    "How to configure this? I'm new to GitHub, sorry.",
    "There is a bug: the app crashes on startup.",
    "Can you help me? I want to learn how this works.",
    "I suggest adding a feature request template.",
    "Same problem here, see https://stackoverflow.com/questions/1234 for details.",
    "Thanks for the great project! 👍",
)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def make_demo(out_dir: str | Path, n_users: int = 2000, n_comments: int = 10000, seed: int = 7,
              runs: int = 20) -> Path:
    """Write edge lists, features, corpus and a pipeline config; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = _rng(seed)
    labels = tuple(f"u{i:05d}" for i in range(n_users))

    # latent profile on a curved sheet; observed features are non-linear in it
    t = rng.uniform(1.5 * np.pi, 4.5 * np.pi, n_users)
    h = rng.uniform(0.0, 1.0, n_users)
    latent = np.column_stack([0.5 * t**2 / (4.5 * np.pi) / 3.0, 3.0 * h])

    nets: dict[Layer, Network] = {}
    for i, (layer, m, scale) in enumerate(LAYER_PLAN):
        # edge counts are planned for 2000 users; keep density for other sizes
        m = min(round(m * n_users / 2000), n_users * (n_users - 1) // 4)
        if scale > 0:
            net = planted_homophily(latent, m, seed * 100 + i, scale=scale, labels=labels, layer=layer)
        else:
            # heterophily: weight grows with distance, exp(+d / |scale|)
            net = _planted_heterophily(latent, m, seed * 100 + i, -scale, labels, layer)
        nets[layer] = net
        write_edge_list(net, out / f"{layer.value}.csv")

    def deg(layer, which):
        net = nets[layer]
        arr = net.src if which == "out" else net.dst
        return np.bincount(arr, minlength=n_users)

    skill = np.column_stack([np.cos(t) * t / 14.0, np.sin(t) * t / 14.0, h])
    base = np.exp(skill @ rng.normal(0.0, 0.8, (3, 6)))
    pois = lambda lam: rng.poisson(lam)  # noqa: E731
    spec = rng.dirichlet([1.0, 1.0, 1.0, 1.0], size=n_users)[:, :3]
    table = pd.DataFrame({
        ID_COLUMN: labels,
        "followers": deg(Layer.FOLLOWING, "in"),
        "stars_obtained": deg(Layer.STARRING, "in"),
        "eigenvector_centrality": np.round(eigenvector_centrality(nets[Layer.FOLLOWING]) * 1000.0, 6),
        "forked_by": deg(Layer.FORKING, "in"),
        "followed": deg(Layer.FOLLOWING, "out"),
        "forks_made": deg(Layer.FORKING, "out"),
        "stars_given": deg(Layer.STARRING, "out"),
        "commits_to_others": pois(4.0 * base[:, 0]),
        "comments_written": deg(Layer.COMMENTS, "out") + pois(3.0 * base[:, 1]),
        "issues_opened": deg(Layer.ISSUES, "out") + pois(base[:, 2]),
        "language_count": 1 + pois(2.0 * base[:, 3]),
        "spec_web": np.round(spec[:, 0], 4),
        "spec_functional": np.round(spec[:, 1], 4),
        "spec_scientific": np.round(spec[:, 2], 4),
        "repository_count": pois(5.0 * base[:, 4]),
        "registration_year": np.clip(2014 - np.floor(h * 8.0).astype(int), 2007, 2014),
        "commits_base": pois(20.0 * base[:, 5]),
        "commits_forked": pois(3.0 * base[:, 0]),
    })
    table = table[[ID_COLUMN, *FEATURE_COLUMNS]]
    table.to_csv(out / "features.csv", index=False, lineterminator="\n")

    comments = nets[Layer.COMMENTS]
    pick = rng.integers(0, comments.n_edges, size=n_comments)
    dist = np.linalg.norm(latent[comments.src[pick]] - latent[comments.dst[pick]], axis=1)
    cut = np.median(dist)
    arts = []
    for k, e in enumerate(pick):
        a, o = labels[comments.src[e]], labels[comments.dst[e]]
        near = rng.random() < (0.8 if dist[k] < cut else 0.2)
        pool = _SIMILAR_PHRASES if near else _DISSIMILAR_PHRASES
        n_parts = 1 + int(rng.integers(0, 3))
        text = " ".join(pool[int(j)] for j in rng.integers(0, len(pool), size=n_parts)).format(owner=o)
        arts.append(CommentArtifact(text, a, o, "body" if k % 10 == 0 else "comment", None))
    write_corpus(arts, out / "corpus.jsonl")

    config = {
        "seed": seed,
        "output": "report",
        "inputs": {
            "edges": {layer.value: f"{layer.value}.csv" for layer, _, _ in LAYER_PLAN},
            "features": "features.csv",
            "corpus": "corpus.jsonl",
        },
        "manifolds": ["torus:8x8", "klein-quartic-56", "grid:8x8"],
        "som": {"runs": runs, "epochs": 10},
        "text": {"keywords": ["[code-snippet]", "pull-request", "merge", "patch", "error", "problem",
                              "not-work", "bug", "fail", "help", "not-know", "suggest",
                              "feature-request", "readme", "[user-mention]"]},
    }
    path = out / "config.yaml"
    path.write_text(yaml.safe_dump(config, sort_keys=False), encoding="utf-8")
    return path


def _planted_heterophily(latent, m, seed, scale, labels, layer) -> Network:
    rng = _rng(seed)
    x = np.asarray(latent, dtype=float)
    n = len(x)
    if not 0 <= m < n * (n - 1):
        raise ValueError(f"cannot place {m} edges among {n} nodes")
    d = np.sqrt(np.maximum(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1), 0.0))
    logw = d / scale
    np.fill_diagonal(logw, -np.inf)
    keys = logw.ravel() + rng.gumbel(size=n * n)
    top = np.sort(np.argpartition(-keys, m)[:m])
    return Network(n, top // n, top % n, labels, layer)
