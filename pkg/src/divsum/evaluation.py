"""Diversity and accuracy metrics.

The only module that reads group labels. Fractions use the full summary
size as the denominator by default, with unlabeled coverage reported
alongside; ``denominator="labeled"`` switches to labeled-only for
replication against externally labeled data.
"""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np

from .core import Dataset, EvaluationLabels, InvalidInputError, Summary
from .similarity import cosine_similarity

GENDER_COMPLEMENT = {"male": "female", "female": "male"}
FAIR, DARK = "fair", "dark"


def _summary_ids(summary) -> list[str]:
    if isinstance(summary, Summary):
        return summary.ids
    return list(summary)


def group_fractions(
    summary, labels: EvaluationLabels, attribute: str
) -> dict[str, float]:
    """Fraction of the summary per label value; missing labels count as unknown."""
    ids = _summary_ids(summary)
    if not ids:
        raise InvalidInputError("summary is empty")
    counts: dict[str, int] = {}
    for i in ids:
        v = labels.get(i, attribute)
        counts[v] = counts.get(v, 0) + 1
    return {v: c / len(ids) for v, c in sorted(counts.items())}


def anti_stereotypical_fraction(
    summary,
    labels: EvaluationLabels,
    majority_value: str,
    denominator: str = "summary",
) -> float:
    """Share of the summary whose gender label opposes the majority group.

    Labels outside the male/female pair contribute to the denominator
    only (unless ``denominator="labeled"``).
    """
    if majority_value not in GENDER_COMPLEMENT:
        raise InvalidInputError(
            f"majority value must be one of {sorted(GENDER_COMPLEMENT)}, got {majority_value!r}"
        )
    ids = _summary_ids(summary)
    if not ids:
        raise InvalidInputError("summary is empty")
    anti = GENDER_COMPLEMENT[majority_value]
    values = [labels.get(i, "gender") for i in ids]
    hits = sum(1 for v in values if v == anti)
    labeled = sum(1 for v in values if v in GENDER_COMPLEMENT)
    if labeled == 0:
        warnings.warn("no gender-labeled images in summary; fraction is 0", stacklevel=2)
        return 0.0
    denom = labeled if denominator == "labeled" else len(ids)
    return hits / denom


def intersectional_table(
    summary, labels: EvaluationLabels, majority_value: str
) -> dict[str, float]:
    """2x2 fractions over (stereo / anti-stereo gender) x (fair / dark skin).

    Returns the four cells plus an ``unlabeled`` remainder; the five
    values sum to 1.
    """
    if majority_value not in GENDER_COMPLEMENT:
        raise InvalidInputError(
            f"majority value must be one of {sorted(GENDER_COMPLEMENT)}, got {majority_value!r}"
        )
    ids = _summary_ids(summary)
    if not ids:
        raise InvalidInputError("summary is empty")
    anti = GENDER_COMPLEMENT[majority_value]
    cells = {
        "stereo_fair": 0,
        "stereo_dark": 0,
        "anti_fair": 0,
        "anti_dark": 0,
    }
    for i in ids:
        g = labels.get(i, "gender")
        s = labels.get(i, "skintone")
        if g == majority_value:
            gk = "stereo"
        elif g == anti:
            gk = "anti"
        else:
            continue
        if s in (FAIR, DARK):
            cells[f"{gk}_{s}"] += 1
    out = {k: v / len(ids) for k, v in cells.items()}
    out["unlabeled"] = 1.0 - sum(out.values())
    return out


def accuracy_avgsim(summary, references: Sequence, dataset: Dataset) -> float:
    """Mean cosine similarity (higher-better) of summary items to the reference set."""
    ids = _summary_ids(summary)
    if not ids:
        raise InvalidInputError("summary is empty")
    refs = list(references)
    if not refs:
        raise InvalidInputError("reference set is empty")
    vals = [
        np.mean([cosine_similarity(dataset.get(i), r) for r in refs]) for i in ids
    ]
    return float(np.mean(vals))


POSITIVE_VALUES = {"1", "true", "yes", "y", "positive"}


def accuracy_attribute(summary, labels: EvaluationLabels, query_attribute: str) -> float:
    """Fraction of the summary labeled positive for the query attribute."""
    ids = _summary_ids(summary)
    if not ids:
        raise InvalidInputError("summary is empty")
    hits = sum(
        1 for i in ids if labels.get(i, query_attribute).lower() in POSITIVE_VALUES
    )
    return hits / len(ids)


def nonredundancy_logdet(summary, dataset: Dataset) -> float:
    """Ridge-stabilized log-determinant of the summary's embedding Gram matrix."""
    ids = _summary_ids(summary)
    if not ids:
        raise InvalidInputError("summary is empty")
    V = np.stack([dataset.get(i).vec for i in ids])
    G = V @ V.T
    ridge = 1e-10 * float(np.mean(np.diag(G)))
    sign, logdet = np.linalg.slogdet(G + ridge * np.eye(len(ids)))
    if sign <= 0:
        raise InvalidInputError("Gram matrix is numerically non-positive")
    return float(logdet)
