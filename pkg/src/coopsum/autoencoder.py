"""Encoder/decoder contracts and a deterministic bag-of-embeddings autoencoder.

The toy model encodes a text as the *sum* of its word embeddings, so the
norm of a latent grows with how much the text says, and decodes by emitting
the words whose embeddings align best with the latent, with an output length
proportional to the latent's norm. That gives the same norm/length/content
coupling a trained text VAE shows, which is what the aggregation search and
the diagnostics depend on.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

DEFAULT_BLOCKLIST = frozenset(
    {"i", "my", "me", "mine", "we", "our", "us", "ourselves", "myself"}
)


class Encoder(Protocol):
    dim: int

    def encode(self, tokens: Sequence[str]) -> np.ndarray: ...


class Decoder(Protocol):
    dim: int

    def decode(self, z: np.ndarray) -> list[str]: ...


def random_unit_embeddings(n: int, dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    e = rng.standard_normal((n, dim))
    return e / np.linalg.norm(e, axis=1, keepdims=True)


@dataclass(frozen=True, eq=False)
class ToyAutoencoder:
    vocab: tuple[str, ...]
    embeddings: np.ndarray
    kappa: float = 3.0
    max_len: int = 40
    blocklist: frozenset = DEFAULT_BLOCKLIST
    block_pronouns: bool = True
    _index: dict = field(init=False, repr=False)
    _allowed: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vocab = tuple(self.vocab)
        if len(set(vocab)) != len(vocab):
            raise ValueError("vocabulary contains duplicate words")
        emb = np.array(self.embeddings, dtype=np.float64)
        if emb.ndim != 2 or emb.shape[0] != len(vocab):
            raise ValueError(f"need one embedding row per word, got shape {emb.shape}")
        if not np.allclose(np.linalg.norm(emb, axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("embeddings must have unit norm")
        if self.kappa <= 0 or self.max_len < 0:
            raise ValueError("kappa must be positive and max_len nonnegative")
        emb.setflags(write=False)
        allowed = np.array(
            [not (self.block_pronouns and w in self.blocklist) for w in vocab], dtype=bool
        )
        object.__setattr__(self, "vocab", vocab)
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "_index", {w: i for i, w in enumerate(vocab)})
        object.__setattr__(self, "_allowed", allowed)

    @classmethod
    def build(
        cls,
        vocab: Iterable[str],
        dim: int = 64,
        seed: int = 0,
        **kwargs,
    ) -> "ToyAutoencoder":
        vocab = tuple(vocab)
        return cls(vocab, random_unit_embeddings(len(vocab), dim, seed), **kwargs)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def encode(self, tokens: Sequence[str]) -> np.ndarray:
        z = np.zeros(self.dim)
        for tok in tokens:
            i = self._index.get(tok)
            if i is not None:
                z += self.embeddings[i]
        return z

    def output_length(self, z: np.ndarray) -> int:
        # round half up; Python's round() would make the length rule non-monotone
        return min(self.max_len, int(math.floor(self.kappa * np.linalg.norm(z) + 0.5)))

    def decode(self, z: np.ndarray) -> list[str]:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.dim,):
            raise ValueError(f"latent has shape {z.shape}, decoder expects ({self.dim},)")
        m = self.output_length(z)
        if m == 0:
            return []
        allowed = np.flatnonzero(self._allowed)
        scores = self.embeddings[allowed] @ z
        # stable sort keeps vocabulary order among equal scores
        order = np.argsort(-scores, kind="stable")[:m]
        return [self.vocab[i] for i in allowed[order]]


def toy_encode(model: ToyAutoencoder, tokens: Sequence[str]) -> np.ndarray:
    return model.encode(tokens)


def toy_decode(model: ToyAutoencoder, z) -> list[str]:
    return model.decode(z)


@dataclass
class EntityLatents:
    vectors: np.ndarray
    variances: np.ndarray | None = None

    def __len__(self) -> int:
        return self.vectors.shape[0]


def load_external_latents(path) -> dict[str, EntityLatents]:
    """Read latents JSONL: ``{"entity_id", "vectors", "variances"?}`` per line.

    Lines for the same entity are appended in file order. Every vector in the
    file must have the same dimension.
    """
    grouped: dict[str, list] = {}
    variances: dict[str, list | None] = {}
    dim = None
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                eid = rec["entity_id"]
                vecs = rec["vectors"]
                var = rec.get("variances")
                if not isinstance(eid, str) or not isinstance(vecs, list):
                    raise TypeError("entity_id must be a string and vectors a list")
                if var is not None and len(var) != len(vecs):
                    raise ValueError("variances must have one row per vector")
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed latents record ({exc})") from exc
            for row in list(vecs) + list(var or []):
                if not isinstance(row, list) or len(row) == 0:
                    raise ValueError(f"{path}:{lineno}: entity {eid!r} has a non-list or empty vector")
                if dim is None:
                    dim = len(row)
                elif len(row) != dim:
                    raise ValueError(
                        f"{path}:{lineno}: entity {eid!r} has a vector of dimension "
                        f"{len(row)}, expected {dim}"
                    )
            if eid in grouped and (variances[eid] is None) != (var is None):
                raise ValueError(f"{path}:{lineno}: entity {eid!r} mixes rows with and without variances")
            grouped.setdefault(eid, []).extend(vecs)
            if var is not None:
                variances.setdefault(eid, []).extend(var)
            else:
                variances.setdefault(eid, None)
    out = {}
    for eid, vecs in grouped.items():
        var = variances[eid]
        out[eid] = EntityLatents(
            np.asarray(vecs, dtype=np.float64),
            None if var is None else np.asarray(var, dtype=np.float64),
        )
    return out
