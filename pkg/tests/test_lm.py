import math
import random

import pytest

from corpus_select.errors import EmptyCorpusError
from corpus_select.lm import (
    BOS,
    EOS,
    UNK,
    BigramLM,
    cross_entropy,
    cross_entropy_difference,
    dump_lm,
    fit_bigram_lm,
    load_lm,
    perplexity,
    sequence_log_prob,
)
from corpus_select.ngrams import NGramTable

from synth_corpus import word_salad


def oracle_cond_prob(rows, k, word, context, cutoff=0):
    """Recompute add-k conditionals straight from the definition."""
    freq = {}
    for row in rows:
        for tok in row:
            freq[tok] = freq.get(tok, 0) + 1
    kept = {t for t, f in freq.items() if f >= cutoff}

    def map_tok(t):
        return t if t in kept or t in (BOS, EOS) else UNK

    bigrams = {}
    for row in rows:
        wrapped = [BOS, *[map_tok(t) for t in row], EOS]
        for a, b in zip(wrapped, wrapped[1:]):
            bigrams[(a, b)] = bigrams.get((a, b), 0) + 1
    vocab_size = len(kept) + 2  # end sentinel + unknown; begin is never predicted
    context = map_tok(context)
    word = map_tok(word)
    ctx_total = sum(c for (a, _b), c in bigrams.items() if a == context)
    return (bigrams.get((context, word), 0) + k) / (ctx_total + k * vocab_size)


def uniform_lm(vocab, k=1.0):
    """No counts at all: every conditional is exactly 1 / vocab_size."""
    return BigramLM(
        unigram_counts=NGramTable(1, {}, 0, set(vocab)),
        bigram_counts=NGramTable(2, {}, 0, set()),
        smoothing_k=k,
        unk_cutoff=1,
    )


class DegenerateLM:
    """Stub whose every conditional is 1; scoring must yield log-prob 0."""

    def cond_prob(self, word, context):
        return 1.0


class TestFit:
    def test_hand_arithmetic(self, make_corpus):
        model = fit_bigram_lm(make_corpus(["a b"]), smoothing_k=1.0, unk_cutoff=0)
        assert model.vocab_size == 4
        assert model.cond_prob("b", "a") == pytest.approx(0.4, abs=1e-12)
        assert model.cond_prob("b", "a") == pytest.approx(
            oracle_cond_prob([["a", "b"]], 1.0, "b", "a"), abs=1e-12
        )

    def test_rows_sum_to_one(self, make_corpus):
        corpus = make_corpus(word_salad(30, 12, seed=5))
        model = fit_bigram_lm(corpus, smoothing_k=0.7, unk_cutoff=2)
        outcomes = sorted(model.unigram_counts.vocabulary - {UNK}) + [EOS, UNK]
        for context in [BOS, "never-seen-context", *outcomes[:6]]:
            total = sum(model.cond_prob(word, context) for word in outcomes)
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_cutoff_maps_rare_tokens_to_unknown(self, make_corpus):
        corpus = make_corpus(["common common common z", "common common"])
        model = fit_bigram_lm(corpus, smoothing_k=1.0, unk_cutoff=2)
        assert model.map_token("z") == UNK
        assert model.map_token("common") == "common"
        # scoring "z" equals scoring any other unknown token
        assert sequence_log_prob(model, ["z"]) == sequence_log_prob(model, ["q"])

    def test_empty_corpus(self, make_corpus):
        with pytest.raises(EmptyCorpusError):
            fit_bigram_lm(make_corpus([]))

    def test_nonpositive_smoothing_rejected(self, make_corpus):
        with pytest.raises(ValueError):
            fit_bigram_lm(make_corpus(["a b"]), smoothing_k=0.0)

    def test_smoothing_pulls_towards_uniform(self, make_corpus):
        corpus = make_corpus(word_salad(20, 8, seed=9))
        small = fit_bigram_lm(corpus, smoothing_k=0.5)
        large = fit_bigram_lm(corpus, smoothing_k=5.0)
        uniform = 1.0 / small.vocab_size
        rng = random.Random(2)
        outcomes = sorted(small.unigram_counts.vocabulary) + [EOS]
        for _ in range(50):
            w = rng.choice(outcomes)
            c = rng.choice(outcomes)
            drift_small = abs(small.cond_prob(w, c) - uniform)
            drift_large = abs(large.cond_prob(w, c) - uniform)
            assert drift_large <= drift_small + 1e-12


class TestScoring:
    def test_empty_sequence_scores_end_given_begin(self, make_corpus):
        model = fit_bigram_lm(make_corpus(["a b"]), unk_cutoff=0)
        assert sequence_log_prob(model, []) == pytest.approx(
            math.log(model.cond_prob(EOS, BOS)), abs=1e-12
        )

    def test_degenerate_lm_scores_zero(self):
        assert sequence_log_prob(DegenerateLM(), ["x", "y"]) == 0.0
        assert perplexity(DegenerateLM(), ["x", "y", "z"]) == 1.0

    def test_two_token_sequence_matches_oracle(self, make_corpus):
        model = fit_bigram_lm(make_corpus(["a b"]), smoothing_k=1.0, unk_cutoff=0)
        rows = [["a", "b"]]
        expected = (
            math.log(oracle_cond_prob(rows, 1.0, "a", BOS))
            + math.log(oracle_cond_prob(rows, 1.0, "b", "a"))
            + math.log(oracle_cond_prob(rows, 1.0, EOS, "b"))
        )
        assert sequence_log_prob(model, ["a", "b"]) == pytest.approx(expected, abs=1e-12)
        assert math.log(0.4) * 3 == pytest.approx(expected, abs=1e-12)

    def test_log_prob_nonpositive(self, make_corpus):
        model = fit_bigram_lm(make_corpus(word_salad(15, 10, seed=21)))
        for line in word_salad(20, 14, seed=22):
            assert sequence_log_prob(model, line.split()) <= 0.0

    def test_oov_tokens_map_to_unknown(self, make_corpus):
        model = fit_bigram_lm(make_corpus(["a b", "b a"]))
        assert sequence_log_prob(model, ["zzz"]) == sequence_log_prob(model, [UNK])


class TestPerplexity:
    def test_uniform_equals_vocab_size(self):
        model = uniform_lm({"a", "b", "c"})
        assert model.vocab_size == 5
        for tokens in (["a"], ["a", "b"], ["c", "c", "b", "a"]):
            assert perplexity(model, tokens) == pytest.approx(5.0, abs=1e-9)

    def test_at_least_one(self, make_corpus):
        model = fit_bigram_lm(make_corpus(word_salad(10, 6, seed=31)))
        for line in word_salad(25, 9, seed=32):
            assert perplexity(model, line.split()) >= 1.0

    def test_matches_exp_of_mean_neg_logprob(self, make_corpus):
        model = fit_bigram_lm(make_corpus(word_salad(12, 8, seed=41)))
        for line in word_salad(10, 10, seed=42):
            tokens = line.split()
            expected = math.exp(-sequence_log_prob(model, tokens) / (len(tokens) + 1))
            assert perplexity(model, tokens) == pytest.approx(expected, rel=1e-12)


class TestCrossEntropy:
    def test_degenerate_is_zero(self):
        assert cross_entropy(DegenerateLM(), ["x", "y"]) == 0.0

    def test_uniform_is_log_vocab_size(self):
        model = uniform_lm({"a", "b", "c", "d"})
        assert cross_entropy(model, ["a", "b"]) == pytest.approx(
            math.log(model.vocab_size), abs=1e-12
        )

    def test_equals_log_perplexity(self, make_corpus):
        model = fit_bigram_lm(make_corpus(word_salad(30, 15, seed=51)))
        for line in word_salad(100, 20, seed=52):
            tokens = line.split()
            assert cross_entropy(model, tokens) == pytest.approx(
                math.log(perplexity(model, tokens)), abs=1e-12
            )


class TestCrossEntropyDifference:
    def test_identical_models_score_zero(self, make_corpus):
        model = fit_bigram_lm(make_corpus(word_salad(10, 8, seed=61)))
        for line in word_salad(10, 10, seed=62):
            assert cross_entropy_difference(model, model, line.split()) == 0.0

    def test_in_domain_text_scores_negative(self, make_corpus):
        in_corpus = make_corpus(["x y"] * 20)
        out_corpus = make_corpus(word_salad(40, 30, seed=63))
        in_lm = fit_bigram_lm(in_corpus)
        out_lm = fit_bigram_lm(out_corpus)
        diff = cross_entropy_difference(in_lm, out_lm, ["x", "y"])
        oracle = cross_entropy(in_lm, ["x", "y"]) - cross_entropy(out_lm, ["x", "y"])
        assert diff == pytest.approx(oracle, abs=1e-12)
        assert diff < 0.0

    def test_invariant_to_training_line_order(self, make_corpus):
        lines = word_salad(30, 12, seed=64)
        shuffled = list(lines)
        random.Random(65).shuffle(shuffled)
        lm_a = fit_bigram_lm(make_corpus(lines))
        lm_b = fit_bigram_lm(make_corpus(shuffled))
        for line in word_salad(10, 14, seed=66):
            tokens = line.split()
            assert cross_entropy(lm_a, tokens) == cross_entropy(lm_b, tokens)


class TestDumpLoad:
    def test_round_trip(self, tmp_path, make_corpus):
        model = fit_bigram_lm(
            make_corpus(word_salad(25, 10, seed=71)), smoothing_k=0.5, unk_cutoff=2
        )
        path = tmp_path / "model.tsv"
        dump_lm(model, path)
        loaded = load_lm(path)
        assert loaded.vocab_size == model.vocab_size
        assert loaded.bigram_counts.counts == model.bigram_counts.counts
        for line in word_salad(10, 12, seed=72):
            tokens = line.split()
            assert sequence_log_prob(loaded, tokens) == pytest.approx(
                sequence_log_prob(model, tokens), abs=1e-12
            )

    def test_dump_is_sorted_text(self, tmp_path, make_corpus):
        model = fit_bigram_lm(make_corpus(["b a", "a b"]))
        path = tmp_path / "model.tsv"
        dump_lm(model, path)
        lines = path.read_text(encoding="utf-8").splitlines()
        body = [tuple(l.split("\t")[:2]) for l in lines[1:]]
        assert body == sorted(body)
