"""Comment normalization, keyword trends by interlocutor distance, lexicon sentence sentiment."""

from __future__ import annotations

import functools
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import snowballstemmer

from .stats import CorrelationResult, spearman

CODE_TOKEN = "[code-snippet]"
AUTOMATED_TOKEN = "[automated-message]"
MENTION_TOKEN = "[user-mention]"
REPO_TOKEN = "[repo-name]"

DEFAULT_AUTOMATED_PATTERNS = (
    r"\bcoverage (?:increased|decreased|remained the same)\b",
    r"\bcodecov\b.*\breport\b",
    r"\bthis (?:issue|pull request|pr) has been automatically marked as stale\b",
    r"\bthanks for your pull request\. it looks like this may be your first contribution\b",
    r"\bi am a bot\b",
)

_URL_TAIL = r"[^\s<>()\[\]{}\"']*[^\s<>()\[\]{}\"'.,;:!?]"
_URL_RULES = (
    ("[github-link]", r"(?:https?://)?(?:[\w-]+\.)*github(?:usercontent)?\.com(?:/" + _URL_TAIL + r"|/|\b)"),
    ("[twitter-link]", r"(?:https?://)?(?:www\.|mobile\.)?twitter\.com(?:/" + _URL_TAIL + r"|/|\b)"),
    ("[stackover-link]", r"(?:https?://)?(?:[\w-]+\.)*stackoverflow\.com(?:/" + _URL_TAIL + r"|/|\b)"),
)

EMOTICONS = {
    ":-)": ":smiling_face:", ":)": ":smiling_face:", "=)": ":smiling_face:", "(:": ":smiling_face:",
    ":-D": ":grinning_face:", ":D": ":grinning_face:",
    ";-)": ":winking_face:", ";)": ":winking_face:",
    ":-(": ":frowning_face:", ":(": ":frowning_face:", "):": ":frowning_face:",
    ":'(": ":crying_face:",
    ":-P": ":face_with_tongue:", ":P": ":face_with_tongue:", ":p": ":face_with_tongue:",
    ":-/": ":confused_face:", ":/": ":confused_face:",
    ":-|": ":neutral_face:", ":|": ":neutral_face:",
    ":O": ":astonished_face:", ":-O": ":astonished_face:",
    "<3": ":heart:",
}

SHORT_FORMS = (
    (r"won't", "will not"), (r"can't", "can not"), (r"cannot", "can not"), (r"shan't", "shall not"),
    (r"ain't", "is not"), (r"let's", "let us"),
    (r"(\w+)n't", r"\1 not"),
    (r"(\w+)'re", r"\1 are"), (r"(\w+)'ve", r"\1 have"), (r"(\w+)'ll", r"\1 will"),
    (r"(i)'m", r"\1 am"), (r"(\w+)'d", r"\1 would"),
    (r"(it|that|what|there|here|he|she|who|where|how)'s", r"\1 is"),
)

_BRACKET_RE = re.compile(r"\[[a-z0-9]+(?:-[a-z0-9]+)*\]")
_COLON_RE = re.compile(r":[a-z0-9_+]+(?:-[a-z0-9_+]+)*:")


@dataclass(frozen=True)
class TokenRules:
    """Configurable parts of comment preprocessing; the rule order itself is fixed."""

    automated_patterns: tuple[str, ...] = DEFAULT_AUTOMATED_PATTERNS
    known_repos: tuple[str, ...] = ()
    emoticons: tuple[tuple[str, str], ...] = tuple(EMOTICONS.items())

    @functools.cached_property
    def _compiled(self):
        auto = [re.compile(r"^.*" + p + r".*$", re.I | re.M) for p in self.automated_patterns]
        # longest emoticons first so ":-)" wins over ":)"
        emo = sorted(self.emoticons, key=lambda kv: -len(kv[0]))
        emo_re = re.compile(r"(?<!\S)(" + "|".join(re.escape(k) for k, _ in emo) + r")(?=\s|$|[.,!?])")
        repos = None
        if self.known_repos:
            names = sorted(self.known_repos, key=len, reverse=True)
            repos = re.compile(r"(?<![\w/.-])(?:" + "|".join(re.escape(r) for r in names) + r")(?![\w/-])")
        return auto, emo_re, dict(emo), repos


DEFAULT_RULES = TokenRules()

_FENCE_RE = re.compile(r"```.*?(?:```|\Z)", re.S)
_HTML_CODE_RE = re.compile(r"<(pre|code)\b[^>]*>.*?(?:</\1>|\Z)", re.S | re.I)
_INLINE_CODE_RE = re.compile(r"`[^`\n]+`")
_MENTION_RE = re.compile(r"(?<![\w@/.\[-])@[A-Za-z0-9](?:[A-Za-z0-9]|-(?=[A-Za-z0-9])){0,38}(?![\w-])")
_REPO_REF_RE = re.compile(r"(?<![\w/.\[-])[A-Za-z0-9][A-Za-z0-9-]*/[A-Za-z0-9_.-]*[A-Za-z0-9_]#\d+\b")
_URL_RES = tuple((tok, re.compile(rx, re.I)) for tok, rx in _URL_RULES)
_SHORT_RES = tuple((re.compile(r"\b" + p + r"\b", re.I), r) for p, r in SHORT_FORMS)


def _emoji_name(ch: str) -> str | None:
    cp = ord(ch)
    if unicodedata.category(ch) != "So":
        return None
    if not (0x1F000 <= cp <= 0x1FAFF or 0x2600 <= cp <= 0x27BF or 0x2B00 <= cp <= 0x2BFF or 0x2300 <= cp <= 0x23FF):
        return None
    name = unicodedata.name(ch, "")
    if not name:
        return None
    return ":" + re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_") + ":"


def _replace_emoji(text: str) -> str:
    out = []
    for ch in text:
        cp = ord(ch)
        if cp in (0xFE0F, 0xFE0E, 0x200D) or 0x1F3FB <= cp <= 0x1F3FF:
            continue
        name = _emoji_name(ch)
        out.append(f" {name} " if name else ch)
    return "".join(out)


def _keep_case(repl: str, matched: str) -> str:
    if matched[:1].isupper():
        return repl[:1].upper() + repl[1:]
    return repl


def _expand_short_forms(text: str) -> str:
    text = text.replace("’", "'")
    for rx, repl in _SHORT_RES:
        text = rx.sub(lambda m, r=repl: _keep_case(m.expand(r), m.group(0)), text)
    return text


def preprocess_comment(text: str, rules: TokenRules = DEFAULT_RULES) -> str:
    """Normalize one comment to a single line of platform-neutral tokens.

    Applied in order: code blocks, automated messages, platform URLs,
    @mentions, repository references, emoji and emoticons, short forms,
    whitespace collapse, and a final "." when the line does not end in
    [.?!]. Idempotent.
    """
    auto, emo_re, emo_map, repos = rules._compiled
    t = text.replace("\r\n", "\n").replace("\r", "\n")
    t = _FENCE_RE.sub(f" {CODE_TOKEN} ", t)
    t = _HTML_CODE_RE.sub(f" {CODE_TOKEN} ", t)
    t = _INLINE_CODE_RE.sub(CODE_TOKEN, t)
    for rx in auto:
        t = rx.sub(AUTOMATED_TOKEN, t)
    for tok, rx in _URL_RES:
        t = rx.sub(tok, t)
    t = _MENTION_RE.sub(MENTION_TOKEN, t)
    t = _REPO_REF_RE.sub(REPO_TOKEN, t)
    if repos is not None:
        t = repos.sub(REPO_TOKEN, t)
    t = _replace_emoji(t)
    t = emo_re.sub(lambda m: emo_map[m.group(1)], t)
    t = _expand_short_forms(t)
    t = " ".join(t.split())
    if t and t[-1] not in ".?!":
        t += "."
    return t


def split_sentences(line: str) -> list[str]:
    """Split a normalized line after runs of [.?!] followed by whitespace."""
    parts = re.split(r"(?<=[.?!])\s+", line.strip())
    return [p for p in parts if p]


# -- mining ---------------------------------------------------------------


def _read_resource(name: str) -> str:
    return resources.files("homophily.data").joinpath(name).read_text(encoding="utf-8")


@functools.lru_cache(maxsize=None)
def default_stopwords() -> frozenset[str]:
    return frozenset(w.strip() for w in _read_resource("stopwords.txt").splitlines()
                     if w.strip() and not w.startswith("#"))


_STEMMER = snowballstemmer.stemmer("english")


@functools.lru_cache(maxsize=65536)
def stem(word: str) -> str:
    """Snowball English stem, 3.x revision (short doubles such as "add" are kept)."""
    return _STEMMER.stemWord(word)


_MINING_TOKEN_RE = re.compile(r"\[[a-z0-9]+(?:-[a-z0-9]+)*\]|:[a-z0-9_+]+(?:-[a-z0-9_+]+)*:|[a-z0-9]+")


def _is_special(tok: str) -> bool:
    return tok[0] in "[:"


def merge_negations(tokens: Sequence[str]) -> list[str]:
    """Fold "not" into the next plain word: ["not", "work"] -> ["not-work"]."""
    out: list[str] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok == "not" and i + 1 < len(tokens) and not _is_special(tokens[i + 1]) and tokens[i + 1] != "not":
            out.append("not-" + tokens[i + 1])
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def mining_normalize(text: str, stopwords: frozenset[str] | None = None) -> list[str]:
    """Tokens for keyword mining.

    Lowercase, drop apostrophes, merge negations, drop numbers and
    punctuation, remove stop words, stem. Bracketed ``[...]`` and
    ``:emoji:`` tokens pass through untouched.
    """
    stop = default_stopwords() if stopwords is None else stopwords
    raw = _MINING_TOKEN_RE.findall(text.lower().replace("'", ""))
    merged = merge_negations(raw)
    out = []
    for tok in merged:
        if _is_special(tok):
            out.append(tok)
        elif tok.startswith("not-"):
            word = tok[4:]
            if not word.isdigit():
                out.append("not-" + stem(word))
        elif tok.isdigit() or tok in stop:
            continue
        else:
            out.append(stem(tok))
    return out


# -- corpus ---------------------------------------------------------------


@dataclass(frozen=True)
class CommentArtifact:
    text: str
    author: str
    owner: str
    kind: str = "comment"
    distance: int | None = None

    @property
    def analyzable(self) -> bool:
        return self.author != self.owner and self.distance is not None


def read_corpus(path: str | Path) -> list[CommentArtifact]:
    """One JSON object per line with keys author, owner, kind, text, distance."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out.append(CommentArtifact(str(rec["text"]), str(rec["author"]), str(rec["owner"]),
                                           str(rec.get("kind", "comment")), rec.get("distance")))
            except (KeyError, json.JSONDecodeError) as exc:
                raise ValueError(f"corpus line {line_no}: {exc}") from None
    return out


def write_corpus(artifacts: Iterable[CommentArtifact], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for a in artifacts:
            fh.write(json.dumps({"author": a.author, "owner": a.owner, "kind": a.kind,
                                 "text": a.text, "distance": a.distance}, ensure_ascii=False) + "\n")


def keyword_tokens(keyword: str) -> tuple[str, ...]:
    """A keyword as the token sequence it matches, e.g. "pull-request" -> ("pull", "request")."""
    toks = tuple(mining_normalize(keyword, stopwords=frozenset()))
    if not toks:
        raise ValueError(f"keyword {keyword!r} normalizes to nothing")
    return toks


def _count_occurrences(tokens: Sequence[str], pattern: tuple[str, ...]) -> int:
    k = len(pattern)
    if k == 1:
        return sum(1 for t in tokens if t == pattern[0])
    return sum(1 for i in range(len(tokens) - k + 1) if tuple(tokens[i:i + k]) == pattern)


@dataclass(frozen=True)
class FrequencyTable:
    distances: tuple[int, ...]
    keywords: tuple[str, ...]
    values: np.ndarray  # (n_keywords, n_distances)
    unit: str
    artifacts_per_distance: tuple[int, ...]
    tokens_per_distance: tuple[int, ...]

    def row(self, keyword: str) -> np.ndarray:
        return self.values[self.keywords.index(keyword)]


UNITS = ("per_100_artifacts", "per_1000_tokens")


def tokenize_corpus(corpus: Sequence[CommentArtifact], rules: TokenRules = DEFAULT_RULES,
                    preprocessed: bool = False) -> list[list[str]]:
    return [mining_normalize(a.text if preprocessed else preprocess_comment(a.text, rules)) for a in corpus]


def keyword_frequency_by_distance(corpus: Sequence[CommentArtifact], keywords: Sequence[str],
                                  unit: str = "per_100_artifacts", rules: TokenRules = DEFAULT_RULES,
                                  preprocessed: bool = False,
                                  tokens: Sequence[Sequence[str]] | None = None) -> FrequencyTable:
    """Keyword usage per distance bin.

    ``per_100_artifacts`` is the percentage of artifacts containing the
    keyword; ``per_1000_tokens`` counts occurrences per thousand tokens.
    ``tokens`` may carry precomputed :func:`mining_normalize` output aligned
    with ``corpus``.
    """
    if unit not in UNITS:
        raise ValueError(f"unknown unit {unit!r}")
    if not corpus:
        raise ValueError("empty corpus")
    if any(a.distance is None for a in corpus):
        raise ValueError("every artifact needs a distance")
    toks = list(tokens) if tokens is not None else tokenize_corpus(corpus, rules, preprocessed)
    patterns = [keyword_tokens(k) for k in keywords]
    dists = tuple(sorted({int(a.distance) for a in corpus}))
    col = {d: j for j, d in enumerate(dists)}
    contains = np.zeros((len(keywords), len(dists)))
    occurs = np.zeros((len(keywords), len(dists)))
    n_art = np.zeros(len(dists), dtype=np.int64)
    n_tok = np.zeros(len(dists), dtype=np.int64)
    for art, tk in zip(corpus, toks):
        j = col[int(art.distance)]
        n_art[j] += 1
        n_tok[j] += len(tk)
        for i, pat in enumerate(patterns):
            c = _count_occurrences(tk, pat)
            if c:
                contains[i, j] += 1
                occurs[i, j] += c
    if unit == "per_100_artifacts":
        values = 100.0 * contains / n_art
    else:
        values = np.divide(1000.0 * occurs, n_tok, out=np.zeros_like(occurs), where=n_tok > 0)
    return FrequencyTable(dists, tuple(keywords), values, unit, tuple(n_art.tolist()), tuple(n_tok.tolist()))


def keyword_distance_trend(row, distances) -> CorrelationResult:
    """Spearman correlation of a frequency row against distance."""
    if len(row) < 3:
        raise ValueError("need at least 3 distance bins")
    return spearman(distances, row)


# -- sentiment ------------------------------------------------------------


@dataclass(frozen=True)
class SentimentLexicon:
    weights: dict[str, float] = field(default_factory=dict)
    negation: bool = True

    def __post_init__(self):
        norm = {}
        for term, w in self.weights.items():
            w = float(w)
            if not -1.0 <= w <= 1.0:
                raise ValueError(f"lexicon weight for {term!r} outside [-1, 1]")
            norm[term.strip().lower()] = w
        object.__setattr__(self, "weights", norm)

    def get(self, term: str) -> float | None:
        return self.weights.get(term.lower())


def read_lexicon(path: str | Path | None = None) -> SentimentLexicon:
    """Parse ``term<TAB>weight`` lines; ``None`` loads the bundled demo lexicon."""
    text = _read_resource("demo_lexicon.tsv") if path is None else Path(path).read_text(encoding="utf-8")
    weights = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2:
            raise ValueError(f"lexicon line {line_no}: expected term<TAB>weight")
        weights[parts[0]] = float(parts[1])
    return SentimentLexicon(weights)


POLARITIES = ("negative", "neutral", "positive")
_SENT_TOKEN_RE = re.compile(r"\[[a-z0-9]+(?:-[a-z0-9]+)*\]|:[a-z0-9_+]+(?:-[a-z0-9_+]+)*:|[a-z0-9]+(?:[-'][a-z0-9]+)*")


@dataclass(frozen=True)
class SentenceSentiment:
    score: float
    polarity: str


def sentence_sentiment(sentence: str, lexicon: SentimentLexicon) -> SentenceSentiment:
    """Sum of lexicon weights over unigrams; a ``not-`` token flips its word's weight."""
    tokens = _SENT_TOKEN_RE.findall(sentence.lower())
    if lexicon.negation:
        tokens = merge_negations(tokens)
    score = 0.0
    for tok in tokens:
        w = lexicon.get(tok)
        if w is not None:
            score += w
        elif lexicon.negation and tok.startswith("not-"):
            w = lexicon.get(tok[4:])
            if w is not None:
                score -= w
    if score > 0:
        pol = "positive"
    elif score < 0:
        pol = "negative"
    else:
        pol = "neutral"
    return SentenceSentiment(score, pol)


@dataclass(frozen=True)
class PolarityTable:
    distances: tuple[int, ...]
    counts: np.ndarray  # (3, n_distances), rows ordered as POLARITIES

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def polarity_by_distance(corpus: Sequence[CommentArtifact], lexicon: SentimentLexicon,
                         rules: TokenRules = DEFAULT_RULES, preprocessed: bool = False) -> PolarityTable:
    dists = tuple(sorted({int(a.distance) for a in corpus if a.distance is not None}))
    col = {d: j for j, d in enumerate(dists)}
    counts = np.zeros((3, len(dists)), dtype=np.int64)
    for art in corpus:
        if art.distance is None:
            continue
        line = art.text if preprocessed else preprocess_comment(art.text, rules)
        for sent in split_sentences(line):
            pol = sentence_sentiment(sent, lexicon).polarity
            counts[POLARITIES.index(pol), col[int(art.distance)]] += 1
    return PolarityTable(dists, counts)


def polarity_class_counts(sentences: Iterable[str], lexicon: SentimentLexicon) -> Counter:
    return Counter(sentence_sentiment(s, lexicon).polarity for s in sentences)
