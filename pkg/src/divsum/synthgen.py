"""Seeded synthetic instances with planted group structure.

Embeddings are unit-normalized Gaussian clusters; the generator records
group membership as evaluation labels, emits per-group control-set
candidates near the cluster means, and builds a query reference set whose
composition can be biased toward the first (majority) group. Streams come
from the counter-based Philox generator, keyed by the config seed, so a
given (seed, config) pair always produces identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    Dataset,
    DiversityControlSet,
    EvaluationLabels,
    FeatureVector,
    InvalidInputError,
    QuerySpec,
    ReferenceSet,
)

GENERATOR_NAME = "philox4x64"

# How far the query direction leans from the neutral concept axis toward
# a group mean at query_bias = 1. Small relative to the inter-group gap:
# the query signal should rank groups without separating them outright.
QUERY_TILT = 0.2


@dataclass(frozen=True)
class GroupSpec:
    name: str
    proportion: float
    spread: float = 0.1

    def __post_init__(self):
        if self.proportion < 0:
            raise InvalidInputError(f"group {self.name!r} has negative proportion")
        if self.spread <= 0:
            raise InvalidInputError(f"group {self.name!r} needs spread > 0")


@dataclass(frozen=True)
class SynthConfig:
    n: int
    d: int
    groups: tuple[GroupSpec, ...]
    query_bias: float = 0.5
    seed: int = 0
    n_query: int = 10
    n_control_per_group: int = 4

    def __post_init__(self):
        object.__setattr__(self, "groups", tuple(self.groups))
        if self.n < 1:
            raise InvalidInputError(f"n must be >= 1, got {self.n}")
        if self.d < 2:
            raise InvalidInputError(f"d must be >= 2, got {self.d}")
        if not self.groups:
            raise InvalidInputError("at least one group is required")
        total = sum(g.proportion for g in self.groups)
        if abs(total - 1.0) > 1e-9:
            raise InvalidInputError(f"group proportions must sum to 1, got {total}")
        if not (0.0 <= self.query_bias <= 1.0):
            raise InvalidInputError(f"query_bias must be in [0, 1], got {self.query_bias}")


@dataclass(frozen=True)
class SynthInstance:
    dataset: Dataset
    labels: EvaluationLabels
    control_candidates: dict[str, tuple[FeatureVector, ...]]
    query: QuerySpec
    metadata: dict = field(default_factory=dict)

    def balanced_control_set(self, per_group: int = 1) -> DiversityControlSet:
        """Equal numbers of control candidates from every group."""
        items = []
        for name in sorted(self.control_candidates):
            cands = self.control_candidates[name]
            if len(cands) < per_group:
                raise InvalidInputError(
                    f"group {name!r} has only {len(cands)} control candidates"
                )
            items.extend(cands[:per_group])
        return DiversityControlSet(items=tuple(items))

    def mixed_control_set(self, fractions: dict[str, float], size: int) -> DiversityControlSet:
        """Control set of ``size`` with the given per-group composition."""
        counts = _apportion([fractions.get(n, 0.0) for n in sorted(fractions)], size)
        items = []
        for name, cnt in zip(sorted(fractions), counts):
            cands = self.control_candidates.get(name, ())
            if len(cands) < cnt:
                raise InvalidInputError(
                    f"group {name!r} has only {len(cands)} control candidates, needs {cnt}"
                )
            items.extend(cands[:cnt])
        return DiversityControlSet(items=tuple(items))


def _apportion(proportions, total: int) -> list[int]:
    """Largest-remainder rounding of proportions to integer counts."""
    raw = [p * total for p in proportions]
    counts = [int(np.floor(r)) for r in raw]
    short = total - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: (counts[i] - raw[i], i))
    for i in order[:short]:
        counts[i] += 1
    return counts


def _unit(v: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(v)
    if nrm == 0:
        raise InvalidInputError("degenerate zero sample")
    return v / nrm


def generate(cfg: SynthConfig) -> SynthInstance:
    """Build a full synthetic instance: dataset, labels, control candidates, query.

    Geometry: group mean directions and a query concept direction form an
    orthonormal frame (QR of Gaussian draws), so group membership and
    query relevance are separate axes. Items are unit-normalized Gaussian
    samples around their group mean; query references sit near the
    concept axis, tilted toward the majority group by query_bias.
    """
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    k = len(cfg.groups)
    if k + 1 > cfg.d:
        raise InvalidInputError(
            f"d must be at least {k + 1} for {k} groups plus a query direction"
        )
    frame, _ = np.linalg.qr(rng.standard_normal((cfg.d, k + 1)))
    means = [frame[:, i] for i in range(k)]
    concept = frame[:, k]
    counts = _apportion([g.proportion for g in cfg.groups], cfg.n)

    items: list[FeatureVector] = []
    by_id: dict[str, dict[str, str]] = {}
    gender_like = all(g.name in ("male", "female") for g in cfg.groups)
    for gi, (group, mean, cnt) in enumerate(zip(cfg.groups, means, counts)):
        for j in range(cnt):
            vec = _unit(mean + group.spread * rng.standard_normal(cfg.d))
            item_id = f"{group.name}_{j:05d}"
            items.append(FeatureVector(id=item_id, vec=vec))
            lbl = {"group": group.name}
            if gender_like:
                lbl["gender"] = group.name
            by_id[item_id] = lbl
    dataset = Dataset(items=tuple(items))
    labels = EvaluationLabels(by_id=by_id)

    control_candidates: dict[str, tuple[FeatureVector, ...]] = {}
    for group, mean in zip(cfg.groups, means):
        cands = tuple(
            FeatureVector(
                id=f"ctrl_{group.name}_{j}",
                vec=_unit(mean + 0.5 * group.spread * rng.standard_normal(cfg.d)),
            )
            for j in range(cfg.n_control_per_group)
        )
        control_candidates[group.name] = cands

    # Query references: near the concept axis, tilted toward the majority
    # (largest-proportion) group in proportion to query_bias. bias=0 tilts
    # toward the groups' average direction instead, which ranks all groups
    # equally.
    majority = max(range(k), key=lambda i: (cfg.groups[i].proportion, -i))
    neutral = _unit(np.mean(means, axis=0))
    lean = cfg.query_bias * means[majority] + (1.0 - cfg.query_bias) * neutral
    query_dir = concept + QUERY_TILT * lean
    ref_spread = cfg.groups[majority].spread
    refs = tuple(
        FeatureVector(
            id=f"query_{j}",
            vec=_unit(query_dir + ref_spread * rng.standard_normal(cfg.d)),
        )
        for j in range(cfg.n_query)
    )
    majority_name = cfg.groups[majority].name
    ground_truth = {"group": majority_name}
    if gender_like:
        ground_truth["gender"] = majority_name
    query = QuerySpec(
        name="synthetic", scorer=ReferenceSet(items=refs), ground_truth=ground_truth
    )
    metadata = {
        "generator": GENERATOR_NAME,
        "seed": cfg.seed,
        "n": cfg.n,
        "d": cfg.d,
        "groups": [
            {"name": g.name, "proportion": g.proportion, "spread": g.spread}
            for g in cfg.groups
        ],
        "query_bias": cfg.query_bias,
    }
    return SynthInstance(
        dataset=dataset,
        labels=labels,
        control_candidates=control_candidates,
        query=query,
        metadata=metadata,
    )
