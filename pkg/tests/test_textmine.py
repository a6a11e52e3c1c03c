import json
import random
from pathlib import Path

import numpy as np
import pytest
from scipy import stats as sps

from homophily.stats import chi_square_independence
from homophily.textmine import (
    CommentArtifact,
    SentimentLexicon,
    TokenRules,
    keyword_distance_trend,
    keyword_frequency_by_distance,
    keyword_tokens,
    mining_normalize,
    polarity_by_distance,
    polarity_class_counts,
    preprocess_comment,
    read_corpus,
    read_lexicon,
    sentence_sentiment,
    split_sentences,
    write_corpus,
)

GOLDEN = Path(__file__).parent / "golden" / "text_corpus.jsonl"
ERROR_ROW = [3.20, 3.77, 4.27, 4.65, 4.85, 5.16, 6.30, 5.99, 6.43, 7.69, 10.04]
MERGE_ROW = [3.73, 3.57, 3.69, 3.67, 3.59, 3.85, 3.24, 2.46, 2.73, 3.27, 1.43]


def golden_records():
    return [json.loads(line) for line in GOLDEN.read_text(encoding="utf-8").splitlines()]


def rules_for(rec):
    return TokenRules(known_repos=tuple(rec.get("known_repos", ())))


@pytest.mark.parametrize("rec", golden_records(), ids=lambda r: str(r["id"]))
def test_golden_preprocess(rec):
    out = preprocess_comment(rec["text"], rules_for(rec))
    assert out.encode("utf-8") == rec["preprocessed"].encode("utf-8")
    assert preprocess_comment(out, rules_for(rec)) == out
    assert "\n" not in out


@pytest.mark.parametrize("rec", golden_records(), ids=lambda r: str(r["id"]))
def test_golden_mining(rec):
    assert mining_normalize(rec["preprocessed"]) == rec["tokens"]


def test_golden_covers_every_token_rule():
    text = " ".join(r["preprocessed"] for r in golden_records())
    for tok in ("[code-snippet]", "[automated-message]", "[github-link]", "[twitter-link]",
                "[stackover-link]", "[user-mention]", "[repo-name]", ":smiling_face:"):
        assert tok in text
    assert len(golden_records()) == 50


def test_bracketed_tokens_survive_stop_list_and_stemmer():
    stop = frozenset({"code", "snippet", "user", "mention"})
    assert mining_normalize("[code-snippet] [user-mention] :thumbs_up_sign:", stop) == [
        "[code-snippet]", "[user-mention]", ":thumbs_up_sign:"]


def test_automated_patterns_configurable():
    rules = TokenRules(automated_patterns=(r"\bdeploy preview ready\b",))
    assert preprocess_comment("Deploy preview ready!\nlooks good", rules) == "[automated-message] looks good."
    assert preprocess_comment("Deploy preview ready!") == "Deploy preview ready!"


def test_short_forms_keep_leading_case():
    assert preprocess_comment("Don't. Isn't it?") == "Do not. Is not it?"


def test_split_sentences():
    assert split_sentences("One. Two?! Three") == ["One.", "Two?!", "Three"]
    assert split_sentences("") == []


def test_keyword_tokens():
    assert keyword_tokens("pull-request") == ("pull", "request")
    assert keyword_tokens("not-work") == ("not-work",)
    assert keyword_tokens("[code-snippet]") == ("[code-snippet]",)
    with pytest.raises(ValueError):
        keyword_tokens("!!")


# -- keyword frequency ------------------------------------------------------------


def art(text, d):
    return CommentArtifact(text, "a", "o", "comment", d)


def test_single_artifact_frequency():
    t = keyword_frequency_by_distance([art("please merge", 0)], ["merge"])
    assert t.distances == (0,) and t.row("merge").tolist() == [100.0]


def test_absent_keyword_all_zero():
    t = keyword_frequency_by_distance([art("hello", 0), art("world", 2)], ["merge"])
    assert t.row("merge").tolist() == [0.0, 0.0]


def test_per_1000_tokens_hand_count():
    corpus = [art("merge merge fix", 1), art("please fix", 1)]
    t = keyword_frequency_by_distance(corpus, ["merge", "pull-request"], unit="per_1000_tokens")
    # tokens: merg merg fix | pleas fix -> 5 tokens, 2 merges
    assert t.tokens_per_distance == (5,)
    assert t.row("merge").tolist() == [400.0]
    assert t.row("pull-request").tolist() == [0.0]


def test_multi_token_keyword_counts_sequences():
    corpus = [art("open a pull request", 0), art("pull the request", 0), art("request pull", 0)]
    t = keyword_frequency_by_distance(corpus, ["pull-request"])
    assert t.row("pull-request")[0] == pytest.approx(100 * 2 / 3)


def test_frequency_errors():
    with pytest.raises(ValueError, match="empty"):
        keyword_frequency_by_distance([], ["merge"])
    with pytest.raises(ValueError, match="distance"):
        keyword_frequency_by_distance([art("x", None)], ["merge"])
    with pytest.raises(ValueError, match="unit"):
        keyword_frequency_by_distance([art("x", 0)], ["merge"], unit="per_tweet")


def planted_gradient(seed, n_dist=8, per=200):
    r = random.Random(seed)
    out = []
    for d in range(n_dist):
        p = 0.05 + 0.1 * d
        for _ in range(per):
            words = ["there is an error" if r.random() < p else "looks fine", "thanks"]
            out.append(art(" ".join(words), d))
    r.shuffle(out)
    return out


def test_planted_gradient_recovered_and_order_invariant():
    corpus = planted_gradient(1)
    t = keyword_frequency_by_distance(corpus, ["error"])
    row = t.row("error")
    assert np.all(np.diff(row) > 0)
    shuffled = list(corpus)
    random.Random(9).shuffle(shuffled)
    assert np.array_equal(keyword_frequency_by_distance(shuffled, ["error"]).values, t.values)


# -- trends -------------------------------------------------------------------------


def test_trend_monotone_rows():
    d = list(range(11))
    up = keyword_distance_trend(np.arange(11.0), d)
    assert up.rho == 1.0 and up.stars == "***"
    assert keyword_distance_trend(-np.arange(11.0), d).rho == -1.0


def test_trend_constant_row_undefined():
    with pytest.raises(ValueError):
        keyword_distance_trend([1.0] * 5, range(5))


def test_trend_needs_three_bins():
    with pytest.raises(ValueError):
        keyword_distance_trend([1.0, 2.0], [0, 1])


@pytest.mark.parametrize("row", [ERROR_ROW, MERGE_ROW], ids=["error", "merge"])
def test_reference_rows_match_rank_oracle(row):
    got = keyword_distance_trend(row, range(11))
    ref = sps.spearmanr(range(11), row).statistic
    assert got.rho == pytest.approx(ref, abs=1e-12)


# -- sentiment ------------------------------------------------------------------


def test_sentiment_examples():
    assert sentence_sentiment("", SentimentLexicon({})).polarity == "neutral"
    s = sentence_sentiment("great work thanks", SentimentLexicon({"great": 1, "thanks": 1}))
    assert (s.score, s.polarity) == (2.0, "positive")
    s = sentence_sentiment("not-good job", SentimentLexicon({"good": 1}))
    assert (s.score, s.polarity) == (-1.0, "negative")


def test_sentiment_negation_from_plain_text_and_case():
    lex = SentimentLexicon({"Good": 0.5})
    assert sentence_sentiment("this is NOT good", lex).score == -0.5
    assert sentence_sentiment("not good", SentimentLexicon({"good": 0.5}, negation=False)).score == 0.5


def test_lexicon_weight_range():
    with pytest.raises(ValueError):
        SentimentLexicon({"x": 2.0})


def test_read_lexicon(tmp_path):
    p = tmp_path / "lex.tsv"
    p.write_text("# c\nok\t0.5\n:smiling_face:\t1\n", encoding="utf-8")
    lex = read_lexicon(p)
    assert lex.get("OK") == 0.5 and lex.get(":smiling_face:") == 1.0
    p.write_text("broken line\n", encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        read_lexicon(p)
    assert read_lexicon().get("great") == 1.0


def test_planted_lexicon_class_counts():
    lex = SentimentLexicon({"good": 1, "bad": -1})
    sentences = ["good"] * 7 + ["bad bad"] * 4 + ["good bad"] * 3 + ["meh"] * 5 + ["not good"] * 2
    counts = polarity_class_counts(sentences, lex)
    assert counts == {"positive": 7, "negative": 6, "neutral": 8}
    assert sum(counts.values()) == len(sentences)


def test_polarity_by_distance_counts_sentences():
    lex = SentimentLexicon({"good": 1, "bad": -1})
    corpus = [art("Good. Bad.", 0), art("good good", 1), art("meh", 1), art("bad", None)]
    t = polarity_by_distance(corpus, lex)
    assert t.distances == (0, 1)
    assert t.counts.tolist() == [[1, 0], [0, 1], [1, 1]]
    assert t.total == 4


def test_chi_square_on_perfect_split():
    r = chi_square_independence([[20, 0], [0, 20]])
    assert r.statistic == pytest.approx(40.0, abs=1e-12) and r.dof == 1


def test_corpus_roundtrip(tmp_path):
    arts = [CommentArtifact("héllo 👍", "a", "b", "body", 3), CommentArtifact("x", "a", "a")]
    write_corpus(arts, tmp_path / "c.jsonl")
    assert read_corpus(tmp_path / "c.jsonl") == arts
    assert arts[0].analyzable and not arts[1].analyzable


def test_corpus_bad_line(tmp_path):
    (tmp_path / "c.jsonl").write_text('{"author": "a"}\n', encoding="utf-8")
    with pytest.raises(ValueError, match="line 1"):
        read_corpus(tmp_path / "c.jsonl")
