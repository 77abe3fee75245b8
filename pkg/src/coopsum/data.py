"""Entity JSONL ingestion."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .textmetrics import tokenize


@dataclass
class EntityBatch:
    entity_id: str
    reviews: list[str]
    gold_summaries: list[str] | None = None
    _tokens: list[list[str]] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.reviews:
            raise ValueError(f"entity {self.entity_id!r} has no reviews")

    @property
    def review_tokens(self) -> list[list[str]]:
        if self._tokens is None:
            self._tokens = [tokenize(r) for r in self.reviews]
        return self._tokens

    @property
    def gold_tokens(self) -> list[list[str]] | None:
        if self.gold_summaries is None:
            return None
        return [tokenize(g) for g in self.gold_summaries]


def _strings(value, what: str) -> list[str]:
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise TypeError(f"{what} must be a string or a list of strings")
    return value


def ingest_entities(path) -> list[EntityBatch]:
    """One entity per line: ``{"entity_id", "reviews", "summary" | "summaries"}``."""
    out: list[EntityBatch] = []
    seen: set[str] = set()
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise TypeError("each line must be a JSON object")
                eid = rec["entity_id"]
                if not isinstance(eid, str):
                    raise TypeError("entity_id must be a string")
                reviews = _strings(rec["reviews"], "reviews")
                gold = None
                if "summaries" in rec:
                    gold = _strings(rec["summaries"], "summaries")
                elif "summary" in rec:
                    gold = _strings(rec["summary"], "summary")
                batch = EntityBatch(eid, reviews, gold)
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed entity record ({exc})") from exc
            if eid in seen:
                raise ValueError(f"{path}:{lineno}: duplicate entity_id {eid!r}")
            seen.add(eid)
            out.append(batch)
    return out
