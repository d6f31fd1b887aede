"""Pairwise similarity scores and normalization.

Convention: lower is more similar. ``cosine_distance`` is the working
metric everywhere; ``cosine_similarity`` (higher is better) exists only
for the accuracy metric in evaluation.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import Dataset, DiversityControlSet, FeatureVector, InvalidInputError


def _as_vec(x) -> np.ndarray:
    if isinstance(x, FeatureVector):
        return x.vec
    return np.asarray(x, dtype=np.float64)


def _check_pair(u: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    if u.shape != v.shape:
        raise InvalidInputError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise InvalidInputError("cosine requires nonzero-norm vectors")
    return nu, nv


def cosine_similarity(u, v) -> float:
    """Standard cosine, in [-1, 1]. Higher means more similar."""
    uv, vv = _as_vec(u), _as_vec(v)
    nu, nv = _check_pair(uv, vv)
    return float(np.dot(uv, vv) / (nu * nv))


def cosine_distance(u, v) -> float:
    """1 - cosine, in [0, 2]. Lower means more similar."""
    return 1.0 - cosine_similarity(u, v)


def avg_sim(item, references: Sequence) -> float:
    """Mean cosine distance from ``item`` to every reference vector."""
    refs = list(references)
    if not refs:
        raise InvalidInputError("avg_sim requires a non-empty reference set")
    return float(np.mean([cosine_distance(item, r) for r in refs]))


def z_normalize(scores) -> np.ndarray:
    """Center to mean 0 and scale by the population standard deviation.

    Zero-variance input maps to all zeros rather than erroring, so
    degenerate datasets still produce a usable (neutral) score.
    """
    a = np.asarray(scores, dtype=np.float64)
    if a.size == 0:
        raise InvalidInputError("z_normalize requires a non-empty list")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("z_normalize requires finite entries")
    mean = a.mean()
    std = a.std()  # population (1/N) convention
    # treat rounding-level spread around a constant as zero variance
    if std <= 1e-9 * max(1.0, abs(float(mean))):
        return np.zeros_like(a)
    return (a - mean) / std


def diversity_matrix(dataset: Dataset, control: DiversityControlSet) -> np.ndarray:
    """|S| x |T_F| matrix of per-column z-normalized cosine distances.

    Column j holds the normalized distances of every dataset item to
    control image j; each column has mean 0 (and population std 1 unless
    degenerate). Row-parallel computation would be bit-identical since
    every entry depends on one row and fixed column statistics.
    """
    if dataset.dim != control.dim:
        raise InvalidInputError(
            f"dataset dimension {dataset.dim} != control dimension {control.dim}"
        )
    X = dataset.matrix()
    C = np.stack([fv.vec for fv in control.items])
    xn = np.linalg.norm(X, axis=1)
    cn = np.linalg.norm(C, axis=1)
    raw = 1.0 - (X @ C.T) / np.outer(xn, cn)
    out = np.empty_like(raw)
    for j in range(raw.shape[1]):
        out[:, j] = z_normalize(raw[:, j])
    return out
