"""Query relevance scores and the combined score matrix.

A(q, I) is lower-is-better: for a reference-set query it is the
z-normalized mean distance to the reference images; for an external
classifier it is the negated classifier output. The combined entry is
(1 - alpha) * A(q, I) + alpha * normalized distance to each control image.
"""

from __future__ import annotations

import numpy as np

from .core import (
    Dataset,
    DiversityControlSet,
    ExternalScores,
    InvalidInputError,
    QuerySpec,
    ReferenceSet,
    ScoreMatrix,
)
from .similarity import avg_sim, diversity_matrix, z_normalize

DEFAULT_ALPHA = 0.5


def query_scores(
    query: QuerySpec, dataset: Dataset, normalize_external: bool = False
) -> dict[str, float]:
    """Per-id relevance scores for the dataset; lower = more relevant.

    External classifier scores are negated as-is by default;
    ``normalize_external`` opts in to z-normalizing them first.
    """
    scorer = query.scorer
    if isinstance(scorer, ReferenceSet):
        if scorer.items[0].dim != dataset.dim:
            raise InvalidInputError(
                f"reference set dimension {scorer.items[0].dim} != "
                f"dataset dimension {dataset.dim}"
            )
        raw = np.array([avg_sim(fv, scorer.items) for fv in dataset.items])
        normed = z_normalize(raw)
        return {fv.id: float(s) for fv, s in zip(dataset.items, normed)}
    if isinstance(scorer, ExternalScores):
        missing = [fv.id for fv in dataset.items if fv.id not in scorer.scores]
        if missing:
            raise InvalidInputError(
                f"external scores missing for {len(missing)} ids: "
                + ", ".join(sorted(missing)[:10])
            )
        raw = np.array([scorer.scores[fv.id] for fv in dataset.items])
        if normalize_external:
            raw = z_normalize(raw)
        return {fv.id: float(-s) for fv, s in zip(dataset.items, raw)}
    raise InvalidInputError(f"unsupported scorer type {type(scorer).__name__}")


def query_score_vector(qscores: dict[str, float], dataset: Dataset) -> np.ndarray:
    """Relevance scores as a vector in dataset order."""
    missing = [fv.id for fv in dataset.items if fv.id not in qscores]
    if missing:
        raise InvalidInputError(
            f"query scores missing for ids: {', '.join(sorted(missing)[:10])}"
        )
    return np.array([qscores[fv.id] for fv in dataset.items], dtype=np.float64)


def ds_scores(
    qscores: dict[str, float],
    divmatrix: np.ndarray,
    alpha: float,
    dataset: Dataset,
    control: DiversityControlSet,
) -> ScoreMatrix:
    """Combine relevance and control-similarity into a ScoreMatrix."""
    if not (0.0 <= alpha <= 1.0):
        raise InvalidInputError(f"alpha must be in [0, 1], got {alpha}")
    div = np.asarray(divmatrix, dtype=np.float64)
    if div.shape != (len(dataset), len(control)):
        raise InvalidInputError(
            f"diversity matrix shape {div.shape} does not match "
            f"{len(dataset)} x {len(control)}"
        )
    q = query_score_vector(qscores, dataset)
    entries = (1.0 - alpha) * q[:, None] + alpha * div
    return ScoreMatrix(
        row_ids=tuple(dataset.ids),
        col_ids=tuple(control.ids),
        entries=entries,
        alpha=alpha,
        query_scores=q,
    )


def build_score_matrix(
    query: QuerySpec,
    dataset: Dataset,
    control: DiversityControlSet,
    alpha: float = DEFAULT_ALPHA,
    normalize_external: bool = False,
) -> ScoreMatrix:
    """Convenience path: query scores + diversity matrix + combination."""
    control.validate_against(dataset)
    qs = query_scores(query, dataset, normalize_external=normalize_external)
    div = diversity_matrix(dataset, control)
    return ds_scores(qs, div, alpha, dataset, control)
