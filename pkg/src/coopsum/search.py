"""Choosing which input latents to aggregate.

The objective scores a candidate summary vector by decoding it and measuring
ROUGE overlap between the decoded text and *all* input reviews. Candidates
are non-empty subsets of the inputs, averaged uniformly. Every search breaks
ties with the same total order: higher objective, then fewer reviews, then
smaller bitmask. That order is what makes exact search, beam search and
parallel runs agree bit for bit.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .latentspace import (
    MAX_EXACT_N,
    as_batch,
    enumerate_subsets,
    indices_to_mask,
    inverse_variance_weighting,
    mask_to_indices,
    rescale,
    simple_average,
    subset_average,
    subset_weights,
)
from .textmetrics import REF_MODES, rouge

OVERLAP_METRICS = ("rouge1", "rouge2", "rougeL")


@dataclass(frozen=True)
class Objective:
    overlap_metric: str = "rouge1"
    ref_mode: str = "average"

    def __post_init__(self):
        if self.overlap_metric not in OVERLAP_METRICS:
            raise ValueError(f"unknown overlap metric {self.overlap_metric!r}")
        if self.ref_mode not in REF_MODES:
            raise ValueError(f"unknown ref_mode {self.ref_mode!r}")

    def __call__(self, summary: Sequence[str], reviews: Sequence[Sequence[str]]) -> float:
        return rouge(summary, reviews, self.overlap_metric, self.ref_mode).f1


@dataclass(frozen=True)
class SearchConfig:
    strategy: str = "exact"
    direction: str = "forward"
    beam_size: int = 1
    max_exact_n: int = MAX_EXACT_N

    def __post_init__(self):
        if self.strategy not in ("exact", "greedy", "beam"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.direction not in ("forward", "backward"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")


@dataclass
class SearchResult:
    selection: tuple[int, ...]
    summary_vector: np.ndarray
    summary: list[str]
    objective_value: float
    candidates_evaluated: int = 1
    weights: np.ndarray | None = None
    ranked_candidates: list[tuple[tuple[int, ...], float]] | None = None
    method: str = ""


def tie_key(mask: int, value: float) -> tuple[float, int, int]:
    """Sort key implementing the total candidate order (best first)."""
    return (-value, bin(mask).count("1"), mask)


def evaluate_candidate(reviews, zs, indices, decoder, objective: Objective) -> float:
    z = subset_average(zs, indices)
    return objective(decoder.decode(z), reviews)


class CandidateScorer:
    """Evaluates subset candidates for one entity, memoized by bitmask."""

    def __init__(self, reviews, zs, decoder, objective: Objective):
        self.reviews = [list(r) for r in reviews]
        self.zs = as_batch(zs)
        if len(self.reviews) != self.zs.shape[0]:
            raise ValueError(
                f"{len(self.reviews)} reviews but {self.zs.shape[0]} latent vectors"
            )
        self.decoder = decoder
        self.objective = objective
        self.cache: dict[int, float] = {}

    @property
    def n(self) -> int:
        return self.zs.shape[0]

    def vector(self, mask: int) -> np.ndarray:
        return subset_average(self.zs, mask_to_indices(mask))

    def score(self, mask: int) -> float:
        if mask not in self.cache:
            summary = self.decoder.decode(self.vector(mask))
            self.cache[mask] = self.objective(summary, self.reviews)
        return self.cache[mask]

    def score_vector(self, z: np.ndarray) -> tuple[list[str], float]:
        summary = self.decoder.decode(z)
        return summary, self.objective(summary, self.reviews)

    def result(self, mask: int, method: str, ranked=None) -> SearchResult:
        z = self.vector(mask)
        sel = mask_to_indices(mask)
        return SearchResult(
            selection=sel,
            summary_vector=z,
            summary=self.decoder.decode(z),
            objective_value=self.score(mask),
            candidates_evaluated=len(self.cache),
            weights=subset_weights(sel, self.n),
            ranked_candidates=ranked,
            method=method,
        )


def search_exact(
    reviews, zs, decoder, objective: Objective, max_exact_n: int = MAX_EXACT_N
) -> SearchResult:
    sc = CandidateScorer(reviews, zs, decoder, objective)
    masks = [indices_to_mask(s) for s in enumerate_subsets(sc.n, max_exact_n)]
    ranked = sorted(masks, key=lambda m: tie_key(m, sc.score(m)))
    return sc.result(
        ranked[0],
        "coop-exact",
        [(mask_to_indices(m), sc.cache[m]) for m in ranked],
    )


def search_beam(reviews, zs, decoder, objective: Objective, cfg: SearchConfig) -> SearchResult:
    """Forward or backward beam search over subsets; greedy is beam_size 1.

    Forward starts from all singletons and grows by one review per step;
    backward starts from the full set and drops one review per step. The
    best candidate evaluated at any step is returned.
    """
    sc = CandidateScorer(reviews, zs, decoder, objective)
    n = sc.n
    beam_size = 1 if cfg.strategy == "greedy" else cfg.beam_size
    full = (1 << n) - 1
    if cfg.direction == "forward":
        frontier = [1 << i for i in range(n)]
    else:
        frontier = [full]
    best = None
    while frontier:
        frontier.sort(key=lambda m: tie_key(m, sc.score(m)))
        if best is None or tie_key(frontier[0], sc.cache[frontier[0]]) < tie_key(best, sc.cache[best]):
            best = frontier[0]
        kept = frontier[:beam_size]
        nxt = set()
        for mask in kept:
            for i in range(n):
                bit = 1 << i
                if cfg.direction == "forward" and not mask & bit:
                    nxt.add(mask | bit)
                elif cfg.direction == "backward" and mask & bit and mask != bit:
                    nxt.add(mask & ~bit)
        frontier = list(nxt)
    if beam_size == 1:
        return sc.result(best, f"coop-greedy:{cfg.direction}")
    return sc.result(best, f"coop-beam:{cfg.direction}:{beam_size}")


def select_simpleavg(reviews, zs, decoder, objective: Objective) -> SearchResult:
    sc = CandidateScorer(reviews, zs, decoder, objective)
    return sc.result((1 << sc.n) - 1, "simpleavg")


def lexrank_centrality(
    zs, damping: float = 0.15, tol: float = 1e-10, max_iter: int = 1000
) -> np.ndarray:
    """Continuous LexRank over cosine similarities of latent vectors.

    Negative cosines are clipped to zero so each row is a valid transition
    distribution; the diagonal (self-similarity 1) keeps every row non-empty.
    """
    m = as_batch(zs)
    norms = np.linalg.norm(m, axis=1)
    if np.any(norms == 0):
        raise ValueError("cosine similarity is undefined for a zero latent vector")
    unit = m / norms[:, None]
    sim = np.clip(unit @ unit.T, 0.0, None)
    trans = sim / sim.sum(axis=1, keepdims=True)
    n = m.shape[0]
    p = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = damping / n + (1 - damping) * (trans.T @ p)
        nxt /= nxt.sum()
        done = np.abs(nxt - p).sum() < tol
        p = nxt
        if done:
            break
    return p


def select_extractive(zs, k: int = 4, damping: float = 0.15) -> tuple[int, ...]:
    n = as_batch(zs).shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    c = lexrank_centrality(zs, damping)
    # rounding absorbs power-iteration noise so symmetric inputs tie exactly
    order = sorted(range(n), key=lambda i: (-round(float(c[i]), 12), i))
    return tuple(sorted(order[:k]))


def random_masks(n: int, size: int, rng: np.random.Generator) -> np.ndarray:
    """Bitmasks drawn uniformly from the 2**n - 1 non-empty subsets."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 62:
        raise ValueError("random_masks supports at most 62 inputs")
    return rng.integers(1, 1 << n, size=size, dtype=np.int64)


def select_random(n: int, seed=None) -> tuple[int, ...]:
    rng = np.random.default_rng(seed)
    return mask_to_indices(int(random_masks(n, 1, rng)[0]))


# ---------------------------------------------------------------------------
# method grammar shared by the CLI and the diagnostics


@dataclass(frozen=True)
class Method:
    name: str
    direction: str = "forward"
    beam_size: int = 1
    alpha: float = 1.0
    k: int = 4
    seed: int = 0
    spec: str = field(default="", compare=False)

    @property
    def selects_subset(self) -> bool:
        return self.name not in ("ivw", "rescale")


def parse_method(spec: str) -> Method:
    """Parse ``simpleavg | coop-exact | coop-greedy:DIR | coop-beam:DIR:K |
    ivw | rescale:ALPHA | extractive:K | random:SEED``."""
    parts = spec.strip().split(":")
    head, args = parts[0], parts[1:]

    def bad(why: str) -> ValueError:
        return ValueError(f"invalid method {spec!r}: {why}")

    def direction(s: str) -> str:
        if s not in ("forward", "backward"):
            raise bad("direction must be forward or backward")
        return s

    def posint(s: str, what: str) -> int:
        try:
            v = int(s)
        except ValueError:
            raise bad(f"{what} must be an integer") from None
        if v < 1:
            raise bad(f"{what} must be >= 1")
        return v

    arity = {
        "simpleavg": 0, "coop-exact": 0, "ivw": 0, "coop-greedy": 1,
        "coop-beam": 2, "rescale": 1, "extractive": 1, "random": 1,
    }
    if head not in arity:
        raise bad(f"unknown method name {head!r}")
    if len(args) != arity[head]:
        raise bad(f"{head} takes {arity[head]} argument(s)")
    if head == "coop-greedy":
        return Method(head, direction=direction(args[0]), spec=spec)
    if head == "coop-beam":
        return Method(head, direction=direction(args[0]), beam_size=posint(args[1], "beam size"), spec=spec)
    if head == "rescale":
        try:
            alpha = float(args[0])
        except ValueError:
            raise bad("alpha must be a number") from None
        if not alpha > 0:
            raise bad("alpha must be positive")
        return Method(head, alpha=alpha, spec=spec)
    if head == "extractive":
        return Method(head, k=posint(args[0], "k"), spec=spec)
    if head == "random":
        try:
            seed = int(args[0])
        except ValueError:
            raise bad("seed must be an integer") from None
        return Method(head, seed=seed, spec=spec)
    return Method(head, spec=spec)


def entity_seed(seed: int, entity_id: str) -> np.random.SeedSequence:
    """Per-entity random stream; independent of processing order."""
    return np.random.SeedSequence([seed & 0xFFFFFFFF, zlib.crc32(entity_id.encode("utf-8"))])


def run_method(
    method: Method | str,
    reviews,
    zs,
    decoder,
    objective: Objective,
    variances=None,
    entity_id: str = "",
    max_exact_n: int = MAX_EXACT_N,
) -> SearchResult:
    """Apply one aggregation method to one entity."""
    if isinstance(method, str):
        method = parse_method(method)
    label = method.spec or method.name
    name = method.name
    if name == "simpleavg":
        res = select_simpleavg(reviews, zs, decoder, objective)
    elif name == "coop-exact":
        res = search_exact(reviews, zs, decoder, objective, max_exact_n)
    elif name in ("coop-greedy", "coop-beam"):
        cfg = SearchConfig(
            "greedy" if name == "coop-greedy" else "beam", method.direction, method.beam_size, max_exact_n
        )
        res = search_beam(reviews, zs, decoder, objective, cfg)
    elif name in ("extractive", "random"):
        sc = CandidateScorer(reviews, zs, decoder, objective)
        if name == "extractive":
            sel = select_extractive(sc.zs, min(method.k, sc.n))
        else:
            sel = select_random(sc.n, entity_seed(method.seed, entity_id))
        res = sc.result(indices_to_mask(sel), name)
    elif name in ("ivw", "rescale"):
        sc = CandidateScorer(reviews, zs, decoder, objective)
        if name == "ivw":
            z = inverse_variance_weighting(sc.zs, variances)
        else:
            z = rescale(simple_average(sc.zs), method.alpha)
        summary, value = sc.score_vector(z)
        res = SearchResult(tuple(range(sc.n)), z, summary, value, 1, None, None, name)
    else:  # pragma: no cover - parse_method rejects unknown names
        raise ValueError(name)
    res.method = label
    return res

