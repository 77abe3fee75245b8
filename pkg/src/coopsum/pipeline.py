"""Batch runs behind the CLI.

Each run writes files whose bytes depend only on the semantic part of the
:class:`RunConfig` (never on the worker count or the output directory), so
any output can be regenerated from the config embedded in it.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .autoencoder import ToyAutoencoder, load_external_latents
from .data import EntityBatch, ingest_entities
from .latentspace import MAX_EXACT_N, l2_norm
from .search import OVERLAP_METRICS, Objective, parse_method, run_method
from .textmetrics import REF_MODES, NgramLM, rouge

log = logging.getLogger(__name__)

COMMANDS = ("summarize", "diagnose", "rank-eval")
# execution-only settings; excluded from the embedded config
_RUNTIME_FIELDS = ("out", "workers")


@dataclass
class RunConfig:
    command: str
    input: str
    method: str = "coop-exact"
    methods: list[str] = field(default_factory=list)
    overlap: str = "rouge1"
    ref_mode: str = "average"
    latents: str | None = None
    toy_vocab: str | None = None
    toy_dim: int = 64
    kappa: float = 3.0
    max_len: int = 40
    block_pronouns: bool = True
    max_exact_n: int = MAX_EXACT_N
    seed: int = 0
    max_n: int | None = None
    simulate_random: int = 0
    timing: bool = False
    out: str = "."
    workers: int = 1

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.overlap not in OVERLAP_METRICS:
            raise ValueError(f"--overlap must be one of {OVERLAP_METRICS}")
        if self.ref_mode not in REF_MODES:
            raise ValueError(f"--ref-mode must be one of {REF_MODES}")
        if self.toy_dim < 1 or self.kappa <= 0 or self.max_len < 0:
            raise ValueError("--toy-dim and --kappa must be positive, --max-len nonnegative")
        if self.max_exact_n < 1 or self.workers < 1:
            raise ValueError("--max-exact-n and --workers must be >= 1")
        if self.max_n is not None and self.max_n < 1:
            raise ValueError("--max-n must be >= 1")
        if self.simulate_random < 0:
            raise ValueError("--simulate-random must be >= 0")
        parse_method(self.method)
        for m in self.methods:
            if not parse_method(m).selects_subset:
                raise ValueError(f"method {m!r} does not select a subset and cannot be ranked")
        return self

    def embedded(self) -> dict:
        d = asdict(self)
        for k in _RUNTIME_FIELDS:
            d.pop(k)
        return d

    @classmethod
    def from_embedded(cls, d: dict, **runtime) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown run_config keys: {sorted(unknown)}")
        return cls(**{**d, **runtime}).validate()

    @property
    def objective(self) -> Objective:
        return Objective(self.overlap, self.ref_mode)


def load_embedded_config(path) -> dict:
    """Pull ``run_config`` out of any file a run produced."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        rest = fh.read()
    try:
        doc = json.loads(first + rest)
    except json.JSONDecodeError:
        doc = json.loads(first)
    if not isinstance(doc, dict) or "run_config" not in doc:
        raise ValueError(f"{path} does not contain an embedded run_config")
    return doc["run_config"]


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False, allow_nan=False)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# model and latents


def _corpus_vocab(entities: list[EntityBatch]) -> list[str]:
    seen: dict[str, None] = {}
    for e in entities:
        for toks in e.review_tokens:
            for t in toks:
                seen.setdefault(t, None)
    return list(seen)


def prepare(cfg: RunConfig):
    """Load entities, build the decoder and attach latents to every entity."""
    entities = ingest_entities(cfg.input)
    external = load_external_latents(cfg.latents) if cfg.latents else None
    if cfg.toy_vocab:
        vocab = [w.strip() for w in Path(cfg.toy_vocab).read_text(encoding="utf-8").splitlines() if w.strip()]
        vocab = list(dict.fromkeys(vocab))
    else:
        vocab = _corpus_vocab(entities)
    if not vocab:
        raise ValueError("empty decoder vocabulary")
    dim = cfg.toy_dim
    if external:
        dim = next(iter(external.values())).vectors.shape[1]
    model = ToyAutoencoder.build(
        vocab, dim=dim, seed=cfg.seed, kappa=cfg.kappa,
        max_len=cfg.max_len, block_pronouns=cfg.block_pronouns,
    )
    items = []
    for e in entities:
        if external is not None:
            if e.entity_id not in external:
                raise ValueError(f"entity {e.entity_id!r} is missing from latents file {cfg.latents}")
            lat = external[e.entity_id]
            if len(lat) != len(e.reviews):
                raise ValueError(
                    f"entity {e.entity_id!r} has {len(e.reviews)} reviews but {len(lat)} latent vectors"
                )
            zs, var = lat.vectors, lat.variances
        else:
            zs, var = np.stack([model.encode(t) for t in e.review_tokens]), None
        items.append(
            {
                "entity_id": e.entity_id,
                "reviews": e.review_tokens,
                "gold": e.gold_tokens,
                "zs": zs,
                "variances": var,
            }
        )
    return entities, model, items


# ---------------------------------------------------------------------------
# summarize

_CTX: dict = {}


def _init_worker(ctx: dict) -> None:
    _CTX.clear()
    _CTX.update(ctx)


def _summarize_one(item: dict) -> dict:
    cfg: RunConfig = _CTX["cfg"]
    t0 = time.perf_counter()
    res = run_method(
        _CTX["method"], item["reviews"], item["zs"], _CTX["model"], cfg.objective,
        item["variances"], item["entity_id"], cfg.max_exact_n,
    )
    rec = {
        "entity_id": item["entity_id"],
        "method": res.method,
        "selection": list(res.selection),
        "weights": None if res.weights is None else res.weights.tolist(),
        "objective": res.objective_value,
        "summary": " ".join(res.summary),
        "summary_norm": l2_norm(res.summary_vector),
        "candidates_evaluated": res.candidates_evaluated,
    }
    if item["gold"]:
        rec["rouge"] = {m: rouge(res.summary, item["gold"], m).f1 for m in OVERLAP_METRICS}
    if cfg.timing:
        rec["time_s"] = time.perf_counter() - t0
    return rec


def _map_ordered(fn, items: list, ctx: dict, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        _init_worker(ctx)
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(ctx,)) as pool:
        # map() yields in submission order regardless of completion order
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


def run_summarize(cfg: RunConfig) -> dict:
    cfg.validate()
    _, model, items = prepare(cfg)
    ctx = {"cfg": cfg, "model": model, "method": parse_method(cfg.method)}
    records = _map_ordered(_summarize_one, items, ctx, cfg.workers)
    out = Path(cfg.out)
    lines = [_dumps({"run_config": cfg.embedded()})] + [_dumps(r) for r in records]
    _write(out / "summaries.jsonl", "\n".join(lines) + "\n")

    metrics = {
        "run_config": cfg.embedded(),
        "entities": len(records),
        "mean_objective": float(np.mean([r["objective"] for r in records])) if records else None,
        "candidates_evaluated": {
            "total": sum(r["candidates_evaluated"] for r in records),
            "per_entity": [r["candidates_evaluated"] for r in records],
        },
    }
    scored = [r["rouge"] for r in records if "rouge" in r]
    if scored:
        metrics["rouge_vs_gold"] = {
            m: float(np.mean([s[m] for s in scored])) for m in OVERLAP_METRICS
        }
        metrics["entities_with_gold"] = len(scored)
    _write(out / "metrics.json", _dumps(metrics) + "\n")
    log.info("wrote %d summaries to %s", len(records), out)
    return metrics


# ---------------------------------------------------------------------------
# diagnose


def _table_one(item: dict) -> diag.CandidateTable:
    cfg: RunConfig = _CTX["cfg"]
    return diag.candidate_table(
        item["entity_id"], item["reviews"], item["zs"], item["gold"],
        _CTX["model"], cfg.objective, cfg.max_exact_n,
    )


def run_diagnose(cfg: RunConfig) -> dict:
    cfg.validate()
    _, model, items = prepare(cfg)
    if not items:
        raise ValueError("no entities in input")
    max_n = cfg.max_n or min(len(it["reviews"]) for it in items)
    shrink = diag.shrinkage_curve({it["entity_id"]: it["zs"] for it in items}, max_n, cfg.seed)

    review_vecs = [z for it in items for z in it["zs"]]
    avg_vecs = [it["zs"].mean(axis=0) for it in items]
    lm = NgramLM.fit([t for it in items for t in it["reviews"]], vocab=model.vocab)
    try:
        rho_len, rho_info = diag.norm_quality_correlation(review_vecs + avg_vecs, model, lm)
        norm_quality = {"norm_vs_length": rho_len, "norm_vs_information": rho_info}
    except ValueError as exc:
        norm_quality = {"error": str(exc)}

    report = {
        "run_config": cfg.embedded(),
        "shrinkage": shrink.to_dict(),
        "norm_quality_spearman": norm_quality,
    }
    gold_items = [it for it in items if it["gold"]]
    if gold_items:
        tables = _map_ordered(_table_one, gold_items, {"cfg": cfg, "model": model}, cfg.workers)
        try:
            report["overlap_rouge_spearman"] = diag.overlap_rouge_correlation(tables)
        except ValueError as exc:
            report["overlap_rouge_spearman"] = {"error": str(exc)}

    out = Path(cfg.out)
    _write(out / "diagnostics.json", _dumps(report) + "\n")
    _write(out / "shrinkage.csv", shrink.to_csv())
    report["_text"] = shrink.to_text()
    return report


# ---------------------------------------------------------------------------
# rank-eval


def _rank_one(item: dict) -> list[int]:
    cfg: RunConfig = _CTX["cfg"]
    rep = diag.ranking_quality([item], _CTX["model"], cfg.methods, cfg.objective, cfg.max_exact_n)
    return [m.ranks[0] for m in rep.methods.values()]


def run_rank_eval(cfg: RunConfig) -> dict:
    if not cfg.methods:
        cfg.methods = [f"random:{cfg.seed}", "simpleavg", "coop-exact"]
    cfg.validate()
    _, model, items = prepare(cfg)
    if not items:
        raise ValueError("no entities in input")
    for it in items:
        if not it["gold"]:
            raise ValueError(f"entity {it['entity_id']!r} has no gold summaries")
    rows = _map_ordered(_rank_one, items, {"cfg": cfg, "model": model}, cfg.workers)
    report = diag.RankingReport({m: diag.MethodRanking(m) for m in cfg.methods})
    for it, ranks in zip(items, rows):
        n_cand = (1 << len(it["reviews"])) - 1
        for m, r in zip(cfg.methods, ranks):
            report.methods[m].ranks.append(r)
            report.methods[m].n_candidates.append(n_cand)
    if cfg.simulate_random:
        n_reviews = min(len(it["reviews"]) for it in items)
        sim = diag.simulate_random_ranking(n_reviews, cfg.simulate_random, cfg.seed)
        sim.method = f"random-montecarlo(n={n_reviews})"
        report.methods[sim.method] = sim
    doc = {"run_config": cfg.embedded(), **report.to_dict()}
    _write(Path(cfg.out) / "ranking.json", _dumps(doc) + "\n")
    doc["_text"] = report.to_text()
    return doc


RUNNERS = {"summarize": run_summarize, "diagnose": run_diagnose, "rank-eval": run_rank_eval}


def run(cfg: RunConfig) -> dict:
    return RUNNERS[cfg.command](cfg)
