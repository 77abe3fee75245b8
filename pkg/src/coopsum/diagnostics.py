"""Latent-space diagnostics: norm shrinkage, norm/quality correlation,
ranking quality of aggregation methods, and overlap-vs-ROUGE correlation."""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .latentspace import MAX_EXACT_N, as_batch, enumerate_subsets, indices_to_mask, l2_norm
from .search import Method, Objective, parse_method, run_method, random_masks, tie_key
from .textmetrics import NgramLM, info_amount, mrr, ndcg_rank, rouge, spearman


# ---------------------------------------------------------------------------
# norm shrinkage


@dataclass
class ShrinkageReport:
    n: list[int]
    mean_norm: list[float]
    std_norm: list[float]
    samples: list[int]
    seed: int | None = None

    def rows(self):
        return list(zip(self.n, self.mean_norm, self.std_norm, self.samples))

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "rows": [
                {"n": n, "mean_norm": m, "std_norm": s, "samples": k} for n, m, s, k in self.rows()
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "mean_norm", "std_norm", "samples"])
        for n, m, s, k in self.rows():
            w.writerow([n, repr(m), repr(s), k])
        return buf.getvalue()

    def to_text(self) -> str:
        lines = [f"{'n':>3}  {'mean_norm':>12}  {'std_norm':>12}  {'samples':>8}"]
        for n, m, s, k in self.rows():
            lines.append(f"{n:>3}  {m:>12.6f}  {s:>12.6f}  {k:>8}")
        return "\n".join(lines)


def shrinkage_curve(batches: Mapping[str, np.ndarray], max_n: int, seed: int = 0) -> ShrinkageReport:
    """Mean L2 norm of the simple average of n reviews, for n = 1..max_n.

    The n=1 row averages every individual review vector. For n >= 2 one
    random n-subset per entity is drawn (seeded) and averaged.
    """
    if max_n < 1:
        raise ValueError("max_n must be >= 1")
    mats = {eid: as_batch(zs) for eid, zs in batches.items()}
    if not mats:
        raise ValueError("no entities to analyse")
    for eid, m in mats.items():
        if m.shape[0] < max_n:
            raise ValueError(f"entity {eid!r} has {m.shape[0]} reviews, need at least {max_n}")
    rng = np.random.default_rng(seed)
    report = ShrinkageReport([], [], [], [], seed)
    for n in range(1, max_n + 1):
        if n == 1:
            norms = np.concatenate([np.linalg.norm(m, axis=1) for m in mats.values()])
        else:
            norms = np.array(
                [
                    np.linalg.norm(m[rng.choice(m.shape[0], n, replace=False)].mean(axis=0))
                    for m in mats.values()
                ]
            )
        report.n.append(n)
        report.mean_norm.append(float(norms.mean()))
        report.std_norm.append(float(norms.std()))
        report.samples.append(int(norms.size))
    return report


def synthetic_topic_reviews(
    n_reviews: int,
    words_per_topic: int = 12,
    review_len: int = 10,
    rng: np.random.Generator | None = None,
) -> tuple[list[str], list[list[str]]]:
    """Reviews drawn from pairwise-disjoint topic vocabularies.

    Returns (vocab, reviews); review i only uses words ``t{i}_w*``.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    vocab = [f"t{t}_w{j}" for t in range(n_reviews) for j in range(words_per_topic)]
    reviews = [
        [f"t{t}_w{j}" for j in rng.integers(0, words_per_topic, size=review_len)]
        for t in range(n_reviews)
    ]
    return vocab, reviews


# ---------------------------------------------------------------------------
# norm vs. generated-text quality


def norm_quality_correlation(zs, decoder, lm: NgramLM) -> tuple[float, float]:
    """Spearman of latent norm against decoded length and information amount."""
    m = as_batch(zs)
    if m.shape[0] < 2:
        raise ValueError("need at least two latent vectors")
    norms = [l2_norm(z) for z in m]
    outputs = [decoder.decode(z) for z in m]
    lengths = [len(o) for o in outputs]
    info = [info_amount(o, lm) for o in outputs]
    return spearman(norms, lengths), spearman(norms, info)


# ---------------------------------------------------------------------------
# candidate tables shared by ranking quality and overlap correlation


@dataclass
class CandidateTable:
    """Every non-empty subset of one entity's reviews, in ascending bitmask order."""

    entity_id: str
    masks: list[int]
    overlap: list[float]
    gold: dict[str, list[float]]

    def gold_order(self) -> list[int]:
        """Masks sorted best-first by gold ROUGE-1 under the search tie order."""
        return sorted(
            range(len(self.masks)),
            key=lambda j: tie_key(self.masks[j], self.gold["rouge1"][j]),
        )

    def ranks(self) -> dict[int, int]:
        return {self.masks[j]: r for r, j in enumerate(self.gold_order(), 1)}


def candidate_table(
    entity_id: str,
    reviews: Sequence[Sequence[str]],
    zs,
    gold: Sequence[Sequence[str]] | None,
    decoder,
    objective: Objective,
    max_exact_n: int = MAX_EXACT_N,
) -> CandidateTable:
    if not gold:
        raise ValueError(f"entity {entity_id!r} has no gold summaries")
    m = as_batch(zs)
    if m.shape[0] != len(reviews):
        raise ValueError(f"entity {entity_id!r}: {len(reviews)} reviews but {m.shape[0]} vectors")
    table = CandidateTable(entity_id, [], [], {"rouge1": [], "rouge2": [], "rougeL": []})
    for sel in enumerate_subsets(m.shape[0], max_exact_n):
        summary = decoder.decode(m[list(sel)].mean(axis=0))
        table.masks.append(indices_to_mask(sel))
        table.overlap.append(objective(summary, reviews))
        for metric, col in table.gold.items():
            col.append(rouge(summary, gold, metric).f1)
    return table


# ---------------------------------------------------------------------------
# ranking quality


@dataclass
class MethodRanking:
    method: str
    ranks: list[int] = field(default_factory=list)
    n_candidates: list[int] = field(default_factory=list)

    @property
    def mrr(self) -> float:
        return mrr(self.ranks)

    @property
    def ndcg(self) -> float:
        return ndcg_rank(self.ranks)

    @property
    def ndcg_alt(self) -> float:
        return ndcg_rank(self.ranks, discount="one_plus_log2_rank")

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "entities": len(self.ranks),
            "mrr": self.mrr,
            "ndcg": self.ndcg,
            "ndcg_one_plus_log2": self.ndcg_alt,
            "mrr_percent": 100 * self.mrr,
            "ndcg_percent": 100 * self.ndcg,
            "ndcg_one_plus_log2_percent": 100 * self.ndcg_alt,
            "mean_rank": float(np.mean(self.ranks)),
        }


@dataclass
class RankingReport:
    methods: dict[str, MethodRanking]

    def to_dict(self) -> dict:
        return {"methods": [m.to_dict() for m in self.methods.values()]}

    def to_text(self) -> str:
        w = max([6] + [len(k) for k in self.methods])
        lines = [f"{'method':<{w}}  {'MRR%':>7}  {'nDCG%':>7}  {'nDCG%(1+log2)':>13}  {'entities':>8}"]
        for name, m in self.methods.items():
            lines.append(
                f"{name:<{w}}  {100 * m.mrr:>7.2f}  {100 * m.ndcg:>7.2f}  "
                f"{100 * m.ndcg_alt:>13.2f}  {len(m.ranks):>8}"
            )
        return "\n".join(lines)


def ranking_quality(
    entities: Sequence[dict],
    decoder,
    methods: Sequence[str | Method],
    objective: Objective = Objective(),
    max_exact_n: int = MAX_EXACT_N,
    tables: Sequence[CandidateTable] | None = None,
) -> RankingReport:
    """Rank each method's chosen subset among all candidates by gold ROUGE-1.

    ``entities`` items are dicts with keys ``entity_id``, ``reviews`` (token
    lists), ``zs``, ``gold`` (token lists) and optionally ``variances``.
    """
    parsed = [parse_method(m) if isinstance(m, str) else m for m in methods]
    for m in parsed:
        if not m.selects_subset:
            raise ValueError(f"method {m.spec or m.name!r} does not select a subset and cannot be ranked")
    if tables is None:
        tables = [
            candidate_table(e["entity_id"], e["reviews"], e["zs"], e.get("gold"), decoder, objective, max_exact_n)
            for e in entities
        ]
    report = RankingReport({m.spec or m.name: MethodRanking(m.spec or m.name) for m in parsed})
    for ent, table in zip(entities, tables):
        ranks = table.ranks()
        for m in parsed:
            res = run_method(
                m, ent["reviews"], ent["zs"], decoder, objective,
                ent.get("variances"), ent["entity_id"], max_exact_n,
            )
            entry = report.methods[m.spec or m.name]
            entry.ranks.append(ranks[indices_to_mask(res.selection)])
            entry.n_candidates.append(len(table.masks))
    return report


def simulate_random_ranking(
    n_reviews: int = 8, n_entities: int = 100_000, seed: int = 0, chunk: int = 10_000
) -> MethodRanking:
    """Monte Carlo ranks of uniformly random subset selections.

    Each simulated entity gets i.i.d. continuous gold scores for its
    2**n_reviews - 1 candidates; the random method picks a candidate with
    :func:`random_masks` and its rank is 1 + the number of better candidates.
    """
    rng = np.random.default_rng(seed)
    n_cand = (1 << n_reviews) - 1
    out = MethodRanking("random")
    done = 0
    while done < n_entities:
        b = min(chunk, n_entities - done)
        scores = rng.random((b, n_cand))
        picked = random_masks(n_reviews, b, rng) - 1
        chosen = scores[np.arange(b), picked]
        out.ranks.extend((1 + (scores > chosen[:, None]).sum(axis=1)).tolist())
        out.n_candidates.extend([n_cand] * b)
        done += b
    return out


# ---------------------------------------------------------------------------
# overlap vs. gold ROUGE


def overlap_rouge_correlation(tables: Sequence[CandidateTable]) -> dict[str, float]:
    """Spearman between input-output overlap and gold ROUGE, pooled over entities."""
    overlap = [v for t in tables for v in t.overlap]
    return {
        metric: spearman(overlap, [v for t in tables for v in t.gold[metric]])
        for metric in ("rouge1", "rouge2", "rougeL")
    }
