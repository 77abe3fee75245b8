"""Text-side metrics: tokenization, ROUGE-N/L, an n-gram LM, rank statistics.

Everything here is a pure function of its arguments.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import rankdata

REF_MODES = ("average", "max", "concat")

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "RougeScore":
        if precision + recall == 0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2 * precision * recall / (precision + recall))

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


ZERO = RougeScore(0.0, 0.0, 0.0)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _ratio(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def _check_refs(refs: Sequence[Sequence[str]], ref_mode: str) -> None:
    if len(refs) == 0:
        raise ValueError("invalid reference set: at least one reference is required")
    if ref_mode not in REF_MODES:
        raise ValueError(f"unknown ref_mode {ref_mode!r}; expected one of {REF_MODES}")


def _combine(scores: list[RougeScore], ref_mode: str) -> RougeScore:
    if ref_mode == "max":
        # first reference wins ties so the result is order-stable
        return max(scores, key=lambda s: s.f1)
    k = len(scores)
    return RougeScore(
        sum(s.precision for s in scores) / k,
        sum(s.recall for s in scores) / k,
        sum(s.f1 for s in scores) / k,
    )


def _rouge_n_single(hyp_counts: Counter, hyp_total: int, ref: Sequence[str], n: int) -> RougeScore:
    ref_counts = ngrams(ref, n)
    overlap = sum((hyp_counts & ref_counts).values())
    return RougeScore.from_pr(
        _ratio(overlap, hyp_total), _ratio(overlap, sum(ref_counts.values()))
    )


def rouge_n(
    hyp: Sequence[str],
    refs: Sequence[Sequence[str]],
    n: int = 1,
    ref_mode: str = "average",
) -> RougeScore:
    """Clipped n-gram overlap between ``hyp`` and one or more references.

    ``ref_mode`` combines multiple references: ``average`` takes the mean of
    the per-reference P/R/F1, ``max`` keeps the reference with the highest
    F1, ``concat`` scores once against the references joined end to end.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    _check_refs(refs, ref_mode)
    if ref_mode == "concat":
        refs = [[tok for ref in refs for tok in ref]]
    hyp_counts = ngrams(hyp, n)
    hyp_total = sum(hyp_counts.values())
    if hyp_total == 0:
        return ZERO
    return _combine([_rouge_n_single(hyp_counts, hyp_total, r, n) for r in refs], ref_mode)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b):
            cur.append(prev[j] + 1 if x == y else max(prev[j + 1], cur[j]))
        prev = cur
    return prev[-1]


def rouge_l(
    hyp: Sequence[str],
    refs: Sequence[Sequence[str]],
    ref_mode: str = "average",
) -> RougeScore:
    _check_refs(refs, ref_mode)
    if ref_mode == "concat":
        refs = [[tok for ref in refs for tok in ref]]
    if len(hyp) == 0:
        return ZERO
    scores = []
    for ref in refs:
        lcs = lcs_length(hyp, ref)
        scores.append(RougeScore.from_pr(_ratio(lcs, len(hyp)), _ratio(lcs, len(ref))))
    return _combine(scores, ref_mode)


def rouge(hyp, refs, metric: str = "rouge1", ref_mode: str = "average") -> RougeScore:
    """Dispatch on a metric name: ``rouge1``, ``rouge2`` or ``rougeL``."""
    if metric == "rougeL":
        return rouge_l(hyp, refs, ref_mode)
    if metric in ("rouge1", "rouge2"):
        return rouge_n(hyp, refs, int(metric[-1]), ref_mode)
    raise ValueError(f"unknown ROUGE metric {metric!r}")


BOS = "<s>"


@dataclass
class NgramLM:
    """Additively smoothed n-gram language model.

    ``p(w | ctx) = (c(ctx, w) + alpha) / (c(ctx) + alpha * V)`` where ``V``
    counts the word types the model knows about. Tokens never seen in
    training are scored as an unseen in-vocabulary type.
    """

    order: int = 1
    smoothing_alpha: float = 1.0
    counts: Counter = field(default_factory=Counter)
    context_counts: Counter = field(default_factory=Counter)
    vocab: frozenset = frozenset()

    @classmethod
    def fit(
        cls,
        corpus: Iterable[Sequence[str]],
        order: int = 1,
        smoothing_alpha: float = 1.0,
        vocab: Iterable[str] | None = None,
    ) -> "NgramLM":
        if order < 1:
            raise ValueError("order must be >= 1")
        if smoothing_alpha <= 0:
            raise ValueError("smoothing_alpha must be positive")
        lm = cls(order=order, smoothing_alpha=smoothing_alpha)
        types = set(vocab or ())
        n_tokens = 0
        for doc in corpus:
            padded = [BOS] * (order - 1) + list(doc)
            for i in range(order - 1, len(padded)):
                ctx = tuple(padded[i - order + 1 : i])
                lm.counts[ctx + (padded[i],)] += 1
                lm.context_counts[ctx] += 1
                types.add(padded[i])
                n_tokens += 1
        if n_tokens == 0:
            raise ValueError("cannot fit a language model on an empty corpus")
        lm.vocab = frozenset(types)
        return lm

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def prob(self, word: str, context: Sequence[str] = ()) -> float:
        ctx = tuple(context)[-(self.order - 1) :] if self.order > 1 else ()
        ctx = (BOS,) * (self.order - 1 - len(ctx)) + ctx
        num = self.counts[ctx + (word,)] + self.smoothing_alpha
        den = self.context_counts[ctx] + self.smoothing_alpha * self.vocab_size
        return num / den

    def logprob(self, tokens: Sequence[str]) -> float:
        return sum(math.log(self.prob(tok, tokens[:i])) for i, tok in enumerate(tokens))


def info_amount(text: Sequence[str], lm: NgramLM) -> float:
    """Negative log probability of ``text`` in nats."""
    return -lm.logprob(text)


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of average ranks."""
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 2:
        raise ValueError("correlation is undefined for fewer than two points")
    rx = rankdata(np.asarray(x, dtype=np.float64))
    ry = rankdata(np.asarray(y, dtype=np.float64))
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    den = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if den == 0:
        raise ValueError("correlation is undefined for a constant series")
    return float(np.clip((dx @ dy) / den, -1.0, 1.0))


def _check_ranks(ranks) -> np.ndarray:
    r = np.asarray(ranks, dtype=np.float64)
    if r.size == 0:
        raise ValueError("ranks must be non-empty")
    if np.any(r < 1):
        raise ValueError("ranks must be >= 1")
    return r


def mrr(ranks: Sequence[int]) -> float:
    return float(np.mean(1.0 / _check_ranks(ranks)))


NDCG_DISCOUNTS = ("log2_rank_plus_1", "one_plus_log2_rank")


def ndcg_rank(ranks: Sequence[int], discount: str = "log2_rank_plus_1") -> float:
    """Mean single-relevant-item gain ``1 / log2(rank + 1)``.

    ``discount="one_plus_log2_rank"`` uses ``1 / (1 + log2(rank))`` instead.
    The two agree at rank 1 and 2 but diverge afterwards; the second form is
    the one whose expectation under uniformly random ranks over 255
    candidates is 0.1417.
    """
    r = _check_ranks(ranks)
    if discount == "log2_rank_plus_1":
        return float(np.mean(1.0 / np.log2(r + 1)))
    if discount == "one_plus_log2_rank":
        return float(np.mean(1.0 / (1.0 + np.log2(r))))
    raise ValueError(f"unknown discount {discount!r}; expected one of {NDCG_DISCOUNTS}")
