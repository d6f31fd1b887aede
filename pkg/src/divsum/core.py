"""Immutable domain types shared across the package.

Everything here is plain data: embeddings, control sets, query specs,
score matrices and summaries. Group labels live in ``EvaluationLabels``
and are consumed by the evaluation module only; the selection code never
sees them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np


class InvalidInputError(ValueError):
    """Raised when a precondition on user-supplied data is violated."""


@dataclass(frozen=True)
class FeatureVector:
    """An item id together with its dense embedding."""

    id: str
    vec: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vec, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "vec", v)
        if v.ndim != 1 or v.size == 0:
            raise InvalidInputError(f"embedding for {self.id!r} must be a 1-d nonempty vector")
        if not np.all(np.isfinite(v)):
            raise InvalidInputError(f"embedding for {self.id!r} contains non-finite entries")
        if float(np.linalg.norm(v)) == 0.0:
            raise InvalidInputError(f"embedding for {self.id!r} has zero norm")

    @property
    def dim(self) -> int:
        return int(self.vec.shape[0])


def _check_uniform_dimension(items: Sequence[FeatureVector], what: str) -> None:
    dims = {fv.dim for fv in items}
    if len(dims) > 1:
        raise InvalidInputError(f"{what} has mixed embedding dimensions: {sorted(dims)}")


def _check_unique_ids(items: Sequence[FeatureVector], what: str) -> None:
    seen = set()
    for fv in items:
        if fv.id in seen:
            raise InvalidInputError(f"duplicate id {fv.id!r} in {what}")
        seen.add(fv.id)


@dataclass(frozen=True)
class Dataset:
    """The ordered corpus of items summarization runs over."""

    items: tuple[FeatureVector, ...]
    index: Mapping[str, int] = field(init=False)

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise InvalidInputError("dataset must be non-empty")
        _check_unique_ids(items, "dataset")
        _check_uniform_dimension(items, "dataset")
        object.__setattr__(self, "index", {fv.id: i for i, fv in enumerate(items)})

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [fv.id for fv in self.items]

    @property
    def dim(self) -> int:
        return self.items[0].dim

    def matrix(self) -> np.ndarray:
        """All embeddings stacked as rows, in dataset order."""
        return np.stack([fv.vec for fv in self.items])

    def get(self, item_id: str) -> FeatureVector:
        try:
            return self.items[self.index[item_id]]
        except KeyError:
            raise InvalidInputError(f"unknown id {item_id!r}") from None


# Warn when the control set gets large enough that the linear dependence of
# the selection cost on its size starts to matter.
CONTROL_SET_SOFT_CAP = 64


@dataclass(frozen=True)
class DiversityControlSet:
    """Small set of reference embeddings defining the target visible diversity."""

    items: tuple[FeatureVector, ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise InvalidInputError("diversity control set must be non-empty")
        _check_unique_ids(items, "control set")
        _check_uniform_dimension(items, "control set")
        if len(items) > CONTROL_SET_SOFT_CAP:
            warnings.warn(
                f"control set has {len(items)} images; sets above "
                f"{CONTROL_SET_SOFT_CAP} are unusually large",
                stacklevel=2,
            )

    def __len__(self) -> int:
        return len(self.items)

    @property
    def ids(self) -> list[str]:
        return [fv.id for fv in self.items]

    @property
    def dim(self) -> int:
        return self.items[0].dim

    def validate_against(self, dataset: Dataset) -> None:
        if self.dim != dataset.dim:
            raise InvalidInputError(
                f"control set dimension {self.dim} != dataset dimension {dataset.dim}"
            )
        if len(self) > len(dataset) // 2:
            raise InvalidInputError(
                f"control set size {len(self)} exceeds half the dataset size {len(dataset)}"
            )


@dataclass(frozen=True)
class ReferenceSet:
    """Query scorer backed by a small set of reference embeddings."""

    items: tuple[FeatureVector, ...]

    def __post_init__(self):
        items = tuple(self.items)
        object.__setattr__(self, "items", items)
        if not items:
            raise InvalidInputError("reference set must be non-empty")
        _check_uniform_dimension(items, "reference set")


@dataclass(frozen=True)
class ExternalScores:
    """Query scorer backed by per-id classifier outputs in [0, 1]."""

    scores: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "scores", dict(self.scores))
        for k, v in self.scores.items():
            if not np.isfinite(v):
                raise InvalidInputError(f"external score for {k!r} is not finite")


@dataclass(frozen=True)
class QuerySpec:
    """A named query: how relevance scores are produced, plus evaluation ground truth."""

    name: str
    scorer: ReferenceSet | ExternalScores
    ground_truth: Optional[Mapping[str, str]] = None

    def __post_init__(self):
        if self.ground_truth is not None:
            object.__setattr__(self, "ground_truth", dict(self.ground_truth))


@dataclass(frozen=True)
class ScoreMatrix:
    """The |S| x |T_F| matrix of combined scores driving balanced selection.

    Rows follow dataset order, columns follow control-set order. Lower is
    better throughout. ``query_scores`` keeps the per-row relevance scores
    around for tie-breaking; matrices built directly in tests may omit it.
    """

    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]
    entries: np.ndarray
    alpha: float
    query_scores: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "row_ids", tuple(self.row_ids))
        object.__setattr__(self, "col_ids", tuple(self.col_ids))
        e = np.asarray(self.entries, dtype=np.float64)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        if e.shape != (len(self.row_ids), len(self.col_ids)):
            raise InvalidInputError(
                f"score matrix shape {e.shape} does not match "
                f"{len(self.row_ids)} rows x {len(self.col_ids)} cols"
            )
        if not np.all(np.isfinite(e)):
            raise InvalidInputError("score matrix contains non-finite entries")
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidInputError(f"alpha must be in [0, 1], got {self.alpha}")
        if self.query_scores is not None:
            q = np.asarray(self.query_scores, dtype=np.float64)
            q.setflags(write=False)
            if q.shape != (len(self.row_ids),):
                raise InvalidInputError("query_scores length does not match rows")
            object.__setattr__(self, "query_scores", q)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


@dataclass(frozen=True)
class SummaryEntry:
    id: str
    selected_by: str  # control-image id, or "query-only"
    score: float
    round: int


@dataclass(frozen=True)
class Summary:
    """Ordered selection result with per-entry provenance."""

    entries: tuple[SummaryEntry, ...]
    notes: tuple[str, ...] = ()

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "notes", tuple(self.notes))
        seen = set()
        for e in entries:
            if e.id in seen:
                raise InvalidInputError(f"duplicate id {e.id!r} in summary")
            seen.add(e.id)
            if e.round < 0:
                raise InvalidInputError("summary round must be non-negative")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def id_set(self) -> frozenset[str]:
        return frozenset(e.id for e in self.entries)


@dataclass(frozen=True)
class EvaluationLabels:
    """Per-id attribute labels, read by the evaluation module only."""

    by_id: Mapping[str, Mapping[str, str]]

    def __post_init__(self):
        object.__setattr__(
            self, "by_id", {k: dict(v) for k, v in self.by_id.items()}
        )

    def get(self, item_id: str, attribute: str) -> str:
        return self.by_id.get(item_id, {}).get(attribute, "unknown")

    def ids(self) -> list[str]:
        return list(self.by_id.keys())
