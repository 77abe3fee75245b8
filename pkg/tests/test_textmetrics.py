import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coopsum.textmetrics import (
    NgramLM,
    RougeScore,
    info_amount,
    lcs_length,
    mrr,
    ndcg_rank,
    rouge_l,
    rouge_n,
    spearman,
    tokenize,
)
from oracles import lcs_oracle, rouge_l_oracle, rouge_n_oracle, spearman_oracle

tokens = st.lists(st.sampled_from("abcdef"), max_size=30)


class TestTokenize:
    @pytest.mark.parametrize(
        "text, expected",
        [
            ("The cat, the CAT!", ["the", "cat", "the", "cat"]),
            ("", []),
            ("it's 5-star", ["it", "s", "5", "star"]),
            ("snake_case  tabs\tand\nlines", ["snake", "case", "tabs", "and", "lines"]),
        ],
    )
    def test_examples(self, text, expected):
        assert tokenize(text) == expected

    @given(st.text())
    def test_no_empty_tokens_and_deterministic(self, text):
        toks = tokenize(text)
        assert all(toks)
        assert toks == tokenize(text)
        assert all(t == t.lower() for t in toks)


class TestRougeN:
    def test_worked_unigram_example(self):
        s = rouge_n(["the", "cat", "sat"], [["the", "cat", "ran"]], 1)
        assert s.precision == pytest.approx(2 / 3, abs=1e-15)
        assert s.recall == pytest.approx(2 / 3, abs=1e-15)
        assert s.f1 == pytest.approx(2 / 3, abs=1e-15)

    def test_identity(self):
        ref = ["a", "b", "c", "a"]
        for n in range(1, 5):
            assert rouge_n(ref, [ref], n).f1 == 1.0

    def test_disjoint(self):
        assert rouge_n(["a", "b"], [["c", "d"]], 1).f1 == 0.0

    def test_clipping(self):
        s = rouge_n(["a", "a", "a"], [["a", "b"]], 1)
        assert s.precision == pytest.approx(1 / 3)
        assert s.recall == pytest.approx(1 / 2)

    def test_empty_hyp_scores_zero(self):
        assert rouge_n([], [["a"]], 1) == RougeScore(0.0, 0.0, 0.0)

    def test_empty_refs_is_an_error(self):
        with pytest.raises(ValueError, match="reference"):
            rouge_n(["a"], [], 1)

    def test_ref_modes(self):
        hyp = ["a", "b"]
        refs = [["a", "b"], ["c"]]
        assert rouge_n(hyp, refs, 1, "average").f1 == pytest.approx(0.5)
        assert rouge_n(hyp, refs, 1, "max").f1 == 1.0
        # concat: 2 matches, |hyp|=2, |ref|=3 -> P=1, R=2/3
        assert rouge_n(hyp, refs, 1, "concat").f1 == pytest.approx(0.8)

    @settings(max_examples=300, deadline=None)
    @given(tokens, tokens, st.integers(1, 3))
    def test_matches_oracle(self, hyp, ref, n):
        s = rouge_n(hyp, [ref], n)
        p, r, f = rouge_n_oracle(hyp, ref, n)
        assert (s.precision, s.recall, s.f1) == pytest.approx((p, r, f), abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(tokens, tokens, st.integers(1, 3))
    def test_swap_symmetry(self, hyp, ref, n):
        a = rouge_n(hyp, [ref], n)
        b = rouge_n(ref, [hyp], n)
        assert a.precision == pytest.approx(b.recall, abs=1e-12)
        assert a.f1 == pytest.approx(b.f1, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(tokens, st.lists(tokens, min_size=1, max_size=4), st.sampled_from(["average", "max", "concat"]))
    def test_bounded(self, hyp, refs, mode):
        s = rouge_n(hyp, refs, 2, mode)
        assert 0.0 <= s.precision <= 1.0 and 0.0 <= s.recall <= 1.0 and 0.0 <= s.f1 <= 1.0

    def test_n_longer_than_both_sequences(self):
        assert rouge_n(["a", "b"], [["a", "b"]], 3).f1 == 0.0


class TestRougeL:
    def test_worked_lcs_example(self):
        assert lcs_length(list("abcd"), list("acbd")) == 3
        s = rouge_l(list("abcd"), [list("acbd")])
        assert (s.precision, s.recall, s.f1) == (0.75, 0.75, 0.75)

    def test_identity_and_disjoint(self):
        assert rouge_l(list("abc"), [list("abc")]).f1 == 1.0
        assert rouge_l(["x"], [["a", "b"]]).f1 == 0.0

    def test_empty_refs_is_an_error(self):
        with pytest.raises(ValueError):
            rouge_l(["a"], [])

    @settings(max_examples=300, deadline=None)
    @given(tokens, tokens)
    def test_lcs_matches_oracle(self, a, b):
        assert lcs_length(a, b) == lcs_oracle(a, b)
        s = rouge_l(a, [b])
        assert s.f1 == pytest.approx(rouge_l_oracle(a, b)[2], abs=1e-12)


class TestNgramLM:
    def test_worked_unigram_example(self):
        lm = NgramLM.fit([["a", "a", "b"]])
        assert lm.vocab_size == 2
        assert lm.prob("a") == pytest.approx(0.6)
        assert lm.prob("b") == pytest.approx(0.4)
        assert info_amount(["a", "b"], lm) == pytest.approx(-math.log(0.6) - math.log(0.4), abs=1e-12)
        assert info_amount(["a", "b"], lm) == pytest.approx(1.4271, abs=1e-4)

    def test_empty_text(self):
        assert info_amount([], NgramLM.fit([["a"]])) == 0.0

    def test_appending_a_token_increases_information(self):
        lm = NgramLM.fit([["a", "b", "c", "a"]], order=2)
        text = ["a", "b"]
        assert info_amount(text + ["c"], lm) > info_amount(text, lm) > 0

    @pytest.mark.parametrize("order", [1, 2, 3])
    def test_distribution_sums_to_one(self, order):
        corpus = [["a", "b", "a", "c"], ["b", "b", "c"]]
        lm = NgramLM.fit(corpus, order=order, smoothing_alpha=0.5)
        for ctx in [(), ("a",), ("b", "b"), ("z", "q")]:
            total = sum(lm.prob(w, ctx) for w in lm.vocab)
            assert total == pytest.approx(1.0, abs=1e-12)
            assert all(0 < lm.prob(w, ctx) < 1 for w in lm.vocab)

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError):
            NgramLM.fit([[]])


class TestSpearman:
    def test_examples(self):
        assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)
        assert spearman([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
        # average ranks x=[1, 2.5, 2.5, 4], y=[1, 3, 2, 4]: 4.5 / sqrt(4.5 * 5)
        assert spearman([1, 2, 2, 4], [1, 3, 2, 4]) == pytest.approx(0.9486832980505138, abs=1e-12)

    def test_errors(self):
        with pytest.raises(ValueError, match="mismatch"):
            spearman([1, 2], [1, 2, 3])
        with pytest.raises(ValueError, match="constant"):
            spearman([1, 1, 1], [1, 2, 3])

    def test_random_matches_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(2, 51))
            x = rng.integers(0, 6, size=n).tolist()
            y = rng.normal(size=n).round(1).tolist()
            if len(set(x)) == 1 or len(set(y)) == 1:
                continue
            assert spearman(x, y) == pytest.approx(spearman_oracle(x, y), abs=1e-12)


class TestRankMetrics:
    def test_mrr(self):
        assert mrr([1, 1, 1]) == 1.0
        assert mrr([1, 2, 4]) == pytest.approx(0.583333333333, abs=1e-9)

    def test_ndcg(self):
        assert ndcg_rank([1]) == 1.0
        assert ndcg_rank([3]) == 0.5
        assert ndcg_rank([1], discount="one_plus_log2_rank") == 1.0
        assert ndcg_rank([4], discount="one_plus_log2_rank") == pytest.approx(1 / 3)

    def test_uniform_rank_expectations(self):
        r = np.arange(1, 256)
        # exact expectations over uniform ranks 1..255
        assert mrr(r) == pytest.approx(0.024002, abs=1e-6)
        assert ndcg_rank(r) == pytest.approx(0.164072, abs=1e-6)
        assert ndcg_rank(r, discount="one_plus_log2_rank") == pytest.approx(0.141676, abs=1e-6)

    @pytest.mark.parametrize("fn", [mrr, ndcg_rank])
    def test_errors(self, fn):
        with pytest.raises(ValueError):
            fn([])
        with pytest.raises(ValueError):
            fn([0, 1])

    @given(st.lists(st.integers(1, 300), min_size=1, max_size=20), st.data())
    def test_monotone_in_rank(self, ranks, data):
        i = data.draw(st.integers(0, len(ranks) - 1))
        worse = list(ranks)
        worse[i] += data.draw(st.integers(1, 50))
        assert mrr(worse) <= mrr(ranks)
        assert ndcg_rank(worse) <= ndcg_rank(ranks)
