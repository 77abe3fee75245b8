"""Latent-vector algebra.

Vectors are numpy arrays; a batch of N vectors of dimension d is an (N, d)
float64 matrix. Subsets of a batch are written either as a sorted tuple of
0-based indices or as an int bitmask (bit i set <=> index i selected).
"""

from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

WEIGHT_TOL = 1e-9
MAX_EXACT_N = 16


def as_batch(zs) -> np.ndarray:
    """Stack vectors into an (N, d) float64 matrix, validating shape."""
    if isinstance(zs, np.ndarray):
        m = np.asarray(zs, dtype=np.float64)
    else:
        if len(zs) == 0:
            raise ValueError("need at least one latent vector")
        dims = {np.shape(z) for z in zs}
        if len(dims) != 1:
            raise ValueError(f"dimension mismatch among latent vectors: {sorted(dims)}")
        m = np.asarray(zs, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise ValueError(f"expected a non-empty (N, d) batch, got shape {m.shape}")
    return m


def l2_norm(z) -> float:
    return float(np.linalg.norm(np.asarray(z, dtype=np.float64)))


def simple_average(zs) -> np.ndarray:
    return as_batch(zs).mean(axis=0)


def check_weights(w, n: int | None = None, normalize: bool = False) -> np.ndarray:
    """Validate convex weights; optionally divide by their sum first."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size == 0:
        raise ValueError("weights must be a non-empty 1-D sequence")
    if n is not None and w.size != n:
        raise ValueError(f"got {w.size} weights for {n} vectors")
    if np.any(w < 0):
        raise ValueError("convex weights must be nonnegative")
    if normalize:
        total = w.sum()
        if total <= 0:
            raise ValueError("cannot normalize weights that sum to zero")
        w = w / total
    elif abs(w.sum() - 1.0) > WEIGHT_TOL:
        raise ValueError(f"convex weights must sum to 1 (got {w.sum():.12g})")
    return w


def convex_combine(zs, w, normalize: bool = False) -> np.ndarray:
    m = as_batch(zs)
    return check_weights(w, m.shape[0], normalize) @ m


def indices_to_mask(indices: Sequence[int]) -> int:
    mask = 0
    for i in indices:
        mask |= 1 << i
    return mask


def mask_to_indices(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def check_subset(indices: Sequence[int], n: int) -> tuple[int, ...]:
    s = tuple(int(i) for i in indices)
    if not s:
        raise ValueError("subset selection must be non-empty")
    if any(b <= a for a, b in zip(s, s[1:])):
        raise ValueError(f"subset indices must be strictly increasing: {s}")
    if s[0] < 0 or s[-1] >= n:
        raise ValueError(f"subset index out of range for {n} vectors: {s}")
    return s


def subset_weights(indices: Sequence[int], n: int) -> np.ndarray:
    s = check_subset(indices, n)
    w = np.zeros(n)
    w[list(s)] = 1.0 / len(s)
    return w


def subset_average(zs, indices: Sequence[int]) -> np.ndarray:
    m = as_batch(zs)
    s = check_subset(indices, m.shape[0])
    return m[list(s)].mean(axis=0)


def enumerate_subsets(n: int, max_exact_n: int = MAX_EXACT_N) -> Iterator[tuple[int, ...]]:
    """Yield all 2**n - 1 non-empty subsets of range(n) in ascending bitmask order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > max_exact_n:
        raise ValueError(
            f"{n} inputs exceeds max_exact_n={max_exact_n} ({2**n - 1} subsets); "
            "use greedy or beam search instead"
        )
    for mask in range(1, 1 << n):
        yield mask_to_indices(mask)


def inverse_variance_weighting(zs, variances) -> np.ndarray:
    """Per-dimension weighted mean with weights 1/variance.

    Each dimension is normalized separately, so the result is a convex
    combination of the inputs in every coordinate.
    """
    m = as_batch(zs)
    if variances is None:
        raise ValueError("inverse-variance weighting needs posterior variances")
    v = np.asarray(variances, dtype=np.float64)
    if v.shape != m.shape:
        raise ValueError(f"variance shape {v.shape} does not match vectors {m.shape}")
    if np.any(~(v > 0)):
        raise ValueError("variances must be strictly positive")
    inv = 1.0 / v
    return (inv * m).sum(axis=0) / inv.sum(axis=0)


def rescale(z, alpha: float) -> np.ndarray:
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = np.asarray(z, dtype=np.float64)
    norm = np.linalg.norm(z)
    if norm == 0:
        raise ValueError("cannot rescale a zero vector")
    return alpha * z / norm
