"""Summary-selection algorithms.

The two control-set algorithms (balanced round-robin selection and its
MMR-style variant), the iterative two-level-score reformulation of the
round-robin algorithm, and the baselines: plain MMR, determinant greedy,
partition-quota and partition-reward selection, plus the pure relevance /
pure diversity reductions and a full ranking.

This module never touches evaluation labels. The partition baselines take
predicted partitions (classifier output files), which are a different
input than ground-truth labels by design.

Tie-breaking is uniform: lower query score first when available, then
lexicographic id. All routines are deterministic single-threaded loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import (
    Dataset,
    DiversityControlSet,
    InvalidInputError,
    ScoreMatrix,
    Summary,
    SummaryEntry,
)
from .scoring import query_score_vector

QUERY_ONLY = "query-only"

# Redundancy ceiling: cosine distance never exceeds 2, so an empty selection
# behaves as "maximally far" wherever a min over selected items is needed as
# a set function. The greedy loops use 0 instead (a constant shift at the
# first pick, so the argmin is unaffected).
MAX_COSINE_DISTANCE = 2.0


@dataclass(frozen=True)
class SelectionConfig:
    """Shared knobs for the selection algorithms."""

    m: int
    alpha: float = 0.5
    beta: float = 0.33
    c: float = 3.0  # oversampling factor for determinant greedy
    u: float = 1.5  # two-level score constants, l < u <= 2l
    l: float = 1.0

    def __post_init__(self):
        if self.m < 1:
            raise InvalidInputError(f"summary size must be positive, got {self.m}")
        if not (0.0 <= self.alpha <= 1.0):
            raise InvalidInputError(f"alpha must be in [0, 1], got {self.alpha}")
        if not (0.0 <= self.beta <= 1.0):
            raise InvalidInputError(f"beta must be in [0, 1], got {self.beta}")
        if self.alpha + self.beta > 1.0:
            raise InvalidInputError(
                f"alpha + beta must be <= 1, got {self.alpha + self.beta}"
            )
        if self.c <= 1.0:
            raise InvalidInputError(f"oversampling factor must be > 1, got {self.c}")
        if not (self.l < self.u <= 2 * self.l):
            raise InvalidInputError(
                f"two-level constants need l < u <= 2l, got u={self.u}, l={self.l}"
            )


def _lex_argmin(
    primary: np.ndarray,
    secondary: np.ndarray,
    ids: Sequence[str],
    mask: np.ndarray,
) -> int:
    """Index minimizing (primary, secondary, id) among masked-in positions."""
    cand = np.flatnonzero(mask)
    p = primary[cand]
    cand = cand[p == p.min()]
    if len(cand) > 1:
        s = secondary[cand]
        cand = cand[s == s.min()]
        if len(cand) > 1:
            cand = [min(cand, key=lambda i: ids[i])]
    return int(cand[0])


def _row_qscores(scores: ScoreMatrix) -> np.ndarray:
    if scores.query_scores is not None:
        return scores.query_scores
    # No relevance vector available: ties fall through to id order.
    return np.zeros(len(scores.row_ids))


def _unit_rows(dataset: Dataset) -> np.ndarray:
    X = dataset.matrix()
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def qs_balanced(scores: ScoreMatrix, m: int) -> Summary:
    """Round-robin selection over control columns.

    Each round, every column picks the available item with the lowest
    combined score; a selected item becomes unavailable in every column
    (this also prevents the stall the plain per-column invalidation would
    cause). When fewer slots remain than columns, the round's candidates
    with the lowest stored scores fill them.
    """
    n, k = scores.shape
    if m > n:
        raise InvalidInputError(f"requested {m} items from a dataset of {n}")
    qs = _row_qscores(scores)
    ids = scores.row_ids
    available = np.ones(n, dtype=bool)
    entries: list[SummaryEntry] = []
    rnd = 0
    while len(entries) < m:
        candidates: list[tuple[int, SummaryEntry]] = []
        for col in range(k):
            if not available.any():
                break
            i = _lex_argmin(scores.entries[:, col], qs, ids, available)
            available[i] = False
            candidates.append(
                (
                    i,
                    SummaryEntry(
                        id=ids[i],
                        selected_by=scores.col_ids[col],
                        score=float(scores.entries[i, col]),
                        round=rnd,
                    ),
                )
            )
        remaining = m - len(entries)
        if len(candidates) <= remaining:
            entries.extend(e for _, e in candidates)
        else:
            keep = sorted(candidates, key=lambda t: (t[1].score, qs[t[0]], t[1].id))
            entries.extend(e for _, e in keep[:remaining])
        rnd += 1
    return Summary(entries=tuple(entries))


def assign_clusters(scores: ScoreMatrix) -> np.ndarray:
    """Closest control column per row (row argmin; ties to the earlier column)."""
    return np.argmin(scores.entries, axis=1)


def dds_score(
    scores: ScoreMatrix,
    u: float,
    l: float,
    selected: Sequence[str],
    candidate: str,
) -> float:
    """Two-level marginal score of adding ``candidate`` to ``selected``.

    The candidate's cluster is its closest control column; with n items
    of that cluster already selected, the score is u / 2^n when the
    candidate is the best remaining item of its cluster and l / 2^n
    otherwise. With l < u <= 2l this marginal has diminishing returns.
    """
    if not (l < u <= 2 * l):
        raise InvalidInputError(f"need l < u <= 2l, got u={u}, l={l}")
    pos = {rid: i for i, rid in enumerate(scores.row_ids)}
    if candidate in set(selected):
        raise InvalidInputError(f"candidate {candidate!r} already selected")
    clusters = assign_clusters(scores)
    ci = pos[candidate]
    col = int(clusters[ci])
    sel_idx = {pos[rid] for rid in selected}
    members = np.flatnonzero(clusters == col)
    n = sum(1 for i in members if i in sel_idx)
    remaining = [int(i) for i in members if i not in sel_idx]
    best = min(remaining, key=lambda i: (scores.entries[i, col], scores.row_ids[i]))
    level = u if ci == best else l
    return level / (2.0**n)


def dds_iterative(scores: ScoreMatrix, u: float, l: float, m: int) -> Summary:
    """One-at-a-time reformulation of the round-robin selection.

    Each step adds the item maximizing the two-level score, where the
    item credited to a column is that column's current best available
    item and columns that have received fewer items take precedence
    (u / 2^n beats anything at depth n + 1 because u <= 2l). Produces the
    same set as ``qs_balanced`` whenever ``m`` is a multiple of the number
    of columns; other sizes are supported but flagged.
    """
    if not (l < u <= 2 * l):
        raise InvalidInputError(f"need l < u <= 2l, got u={u}, l={l}")
    n, k = scores.shape
    if m > n:
        raise InvalidInputError(f"requested {m} items from a dataset of {n}")
    qs = _row_qscores(scores)
    ids = scores.row_ids
    available = np.ones(n, dtype=bool)
    counts = [0] * k
    entries: list[SummaryEntry] = []
    while len(entries) < m and available.any():
        n_min = min(counts)
        col = counts.index(n_min)  # within the minimal tier, column order
        i = _lex_argmin(scores.entries[:, col], qs, ids, available)
        available[i] = False
        counts[col] += 1
        entries.append(
            SummaryEntry(
                id=ids[i],
                selected_by=scores.col_ids[col],
                score=u / (2.0**n_min),
                round=n_min,
            )
        )
    notes = (
        ()
        if m % k == 0
        else ("summary size not a multiple of the column count: outside theorem scope",)
    )
    return Summary(entries=tuple(entries), notes=notes)


def mmr(
    dataset: Dataset,
    qscores: Mapping[str, float],
    alpha: float,
    m: int,
) -> Summary:
    """Greedy marginal-relevance selection: relevance minus nearest-selected distance."""
    if not (0.0 <= alpha <= 1.0):
        raise InvalidInputError(f"alpha must be in [0, 1], got {alpha}")
    return _greedy_redundancy(dataset, qscores, m, rel_w=alpha, red_w=1.0 - alpha)


def mmr_balanced(
    dataset: Dataset,
    qscores: Mapping[str, float],
    control: DiversityControlSet,
    alpha: float,
    beta: float,
    m: int,
) -> Summary:
    """MMR variant with an extra pull toward the nearest control image."""
    if not (0.0 <= alpha <= 1.0) or not (0.0 <= beta <= 1.0):
        raise InvalidInputError("alpha and beta must be in [0, 1]")
    if alpha + beta > 1.0:
        raise InvalidInputError(f"alpha + beta must be <= 1, got {alpha + beta}")
    if dataset.dim != control.dim:
        raise InvalidInputError("dataset / control set dimension mismatch")
    return _greedy_redundancy(
        dataset, qscores, m, rel_w=1.0 - alpha - beta, red_w=beta,
        control=control, div_w=alpha,
    )


def _greedy_redundancy(
    dataset: Dataset,
    qscores: Mapping[str, float],
    m: int,
    rel_w: float,
    red_w: float,
    control: DiversityControlSet | None = None,
    div_w: float = 0.0,
) -> Summary:
    """Shared greedy loop for the redundancy-penalizing selectors.

    Per-step score: rel_w * A(I) - red_w * min distance to selected
    (0 while nothing is selected) + div_w * min distance to a control image.
    """
    n = len(dataset)
    if m > n:
        raise InvalidInputError(f"requested {m} items from a dataset of {n}")
    qvec = query_score_vector(dict(qscores), dataset)
    ids = dataset.ids
    Xn = _unit_rows(dataset)
    base = rel_w * qvec
    if control is not None and div_w != 0.0:
        C = np.stack([fv.vec for fv in control.items])
        Cn = C / np.linalg.norm(C, axis=1, keepdims=True)
        div = (1.0 - Xn @ Cn.T).min(axis=1)
        base = base + div_w * div
    red = np.zeros(n)  # min distance to selected; 0 while empty
    available = np.ones(n, dtype=bool)
    entries: list[SummaryEntry] = []
    for step in range(m):
        score = base - red_w * red
        i = _lex_argmin(score, qvec, ids, available)
        available[i] = False
        entries.append(
            SummaryEntry(id=ids[i], selected_by=QUERY_ONLY, score=float(score[i]), round=step)
        )
        dist_to_i = 1.0 - Xn @ Xn[i]
        red = dist_to_i if step == 0 else np.minimum(red, dist_to_i)
    return Summary(entries=tuple(entries))


def mmod(
    dataset: Dataset,
    qscores: Mapping[str, float],
    control: DiversityControlSet,
    alpha: float,
    beta: float,
    selected: Sequence[str],
    candidate: str,
) -> float:
    """Per-step score of the MMR-balanced objective as a set function.

    Exposed for the diminishing-returns property check; the empty-set
    redundancy term is the distance ceiling so the min is monotone in the
    selected set.
    """
    from .similarity import cosine_distance

    qvec = query_score_vector(dict(qscores), dataset)
    i = dataset.index[candidate]
    fv = dataset.items[i]
    div = min(cosine_distance(fv, cf) for cf in control.items)
    if selected:
        red = min(cosine_distance(fv, dataset.get(j)) for j in selected)
    else:
        red = MAX_COSINE_DISTANCE
    return (1.0 - alpha - beta) * qvec[i] - beta * red + alpha * div


def det_greedy(
    dataset: Dataset,
    qscores: Mapping[str, float],
    c: float,
    m: int,
) -> Summary:
    """Volume-greedy selection from the top relevance pool.

    Filters the ceil(c * m) most relevant items, then greedily grows the
    set maximizing the log-determinant of the (ridge-stabilized) Gram
    matrix of the selected embeddings, via incremental Cholesky marginals.
    """
    if c <= 1.0:
        raise InvalidInputError(f"oversampling factor must be > 1, got {c}")
    n = len(dataset)
    if m > n:
        raise InvalidInputError(f"requested {m} items from a dataset of {n}")
    qvec = query_score_vector(dict(qscores), dataset)
    pool_size = min(n, int(np.ceil(c * m)))
    order = sorted(range(n), key=lambda i: (qvec[i], dataset.ids[i]))
    pool = order[:pool_size]

    V = np.stack([dataset.items[i].vec for i in pool])
    G = V @ V.T
    ridge = 1e-10 * float(np.mean(np.diag(G)))
    L = G + ridge * np.eye(len(pool))

    # Incremental Cholesky greedy: d2[i] is the marginal squared residual
    # of item i against the current selection, so the log-det gain of
    # adding i is log d2[i]; after a pick the residuals are downdated with
    # the new factor row (fast MAP greedy for kernel matrices).
    p = len(pool)
    pool_q = qvec[pool]
    pool_ids = [dataset.ids[i] for i in pool]
    d2 = np.diag(L).copy()
    rows = np.zeros((m, p))
    entries: list[SummaryEntry] = []
    active = np.ones(p, dtype=bool)
    for step in range(m):
        j = _lex_argmin(-d2, pool_q, pool_ids, active)
        dj = float(np.sqrt(max(d2[j], ridge * 1e-6)))  # floor for rank-deficient adds
        ei = (L[:, j] - rows[:step].T @ rows[:step, j]) / dj
        rows[step] = ei
        d2 = d2 - ei**2
        active[j] = False
        entries.append(
            SummaryEntry(
                id=pool_ids[j],
                selected_by=QUERY_ONLY,
                score=float(np.log(dj * dj)),
                round=step,
            )
        )
    return Summary(entries=tuple(entries))


def autolabel(
    dataset: Dataset,
    qscores: Mapping[str, float],
    partition_labels: Mapping[str, str],
    m: int,
) -> Summary:
    """Equal-quota top relevance picks from two predicted partitions.

    When ``m`` is odd, the extra slot goes to the partition whose single
    best relevance score is lower.
    """
    n = len(dataset)
    if m > n:
        raise InvalidInputError(f"requested {m} items from a dataset of {n}")
    qvec = query_score_vector(dict(qscores), dataset)
    missing = [i for i in dataset.ids if i not in partition_labels]
    if missing:
        raise InvalidInputError(
            f"partition labels missing for ids: {', '.join(sorted(missing)[:10])}"
        )
    names = sorted(set(partition_labels[i] for i in dataset.ids))
    if len(names) != 2:
        raise InvalidInputError(
            f"expected exactly two partitions, got {len(names)}: {names}"
        )
    groups = {
        name: sorted(
            (i for i in range(n) if partition_labels[dataset.ids[i]] == name),
            key=lambda i: (qvec[i], dataset.ids[i]),
        )
        for name in names
    }
    big, small = (m + 1) // 2, m // 2
    first = min(
        names,
        key=lambda nm: (qvec[groups[nm][0]], nm) if groups[nm] else (np.inf, nm),
    )
    second = next(nm for nm in names if nm != first)
    quotas = {first: big, second: small}
    for nm, quota in quotas.items():
        if len(groups[nm]) < quota:
            raise InvalidInputError(
                f"partition {nm!r} has {len(groups[nm])} members, needs {quota}"
            )
    picked = []
    for nm in names:
        picked.extend((i, nm) for i in groups[nm][: quotas[nm]])
    picked.sort(key=lambda t: (qvec[t[0]], dataset.ids[t[0]]))
    entries = tuple(
        SummaryEntry(
            id=dataset.ids[i], selected_by=f"partition:{nm}", score=float(qvec[i]), round=r
        )
        for r, (i, nm) in enumerate(picked)
    )
    return Summary(entries=entries)


def autolabel_rwd(
    dataset: Dataset,
    qscores: Mapping[str, float],
    partitions: Mapping[str, str],
    m: int,
) -> Summary:
    """Greedy partition-reward selection.

    Relevance is shifted to a nonnegative higher-is-better utility
    (max score minus score); the objective is total utility plus the sum
    over partitions of the square root of within-partition utility, so
    spreading picks across partitions is rewarded.
    """
    n = len(dataset)
    if m > n:
        raise InvalidInputError(f"requested {m} items from a dataset of {n}")
    qvec = query_score_vector(dict(qscores), dataset)
    missing = [i for i in dataset.ids if i not in partitions]
    if missing:
        raise InvalidInputError(
            f"partition labels missing for ids: {', '.join(sorted(missing)[:10])}"
        )
    util = float(qvec.max()) - qvec
    part_names = sorted({partitions[i] for i in dataset.ids})
    part_idx = np.array([part_names.index(partitions[i]) for i in dataset.ids])
    part_util = np.zeros(len(part_names))
    available = np.ones(n, dtype=bool)
    ids = dataset.ids
    entries: list[SummaryEntry] = []
    for step in range(m):
        base = part_util[part_idx]
        gain = util + np.sqrt(base + util) - np.sqrt(base)
        i = _lex_argmin(-gain, qvec, ids, available)
        available[i] = False
        part_util[part_idx[i]] += util[i]
        entries.append(
            SummaryEntry(
                id=ids[i],
                selected_by=f"partition:{part_names[part_idx[i]]}",
                score=float(gain[i]),
                round=step,
            )
        )
    return Summary(entries=tuple(entries))


def qs_top(qscores: Mapping[str, float], m: int) -> Summary:
    """Top-m by relevance alone."""
    items = sorted(qscores.items(), key=lambda kv: (kv[1], kv[0]))
    if m > len(items):
        raise InvalidInputError(f"requested {m} items from a dataset of {len(items)}")
    entries = tuple(
        SummaryEntry(id=k, selected_by=QUERY_ONLY, score=float(v), round=r)
        for r, (k, v) in enumerate(items[:m])
    )
    return Summary(entries=entries)


def ds_top(
    divmatrix: np.ndarray, row_ids: Sequence[str], col_ids: Sequence[str], m: int
) -> Summary:
    """Round-robin selection on the pure diversity matrix (alpha = 1)."""
    scores = ScoreMatrix(
        row_ids=tuple(row_ids),
        col_ids=tuple(col_ids),
        entries=np.asarray(divmatrix, dtype=np.float64),
        alpha=1.0,
    )
    return qs_balanced(scores, m)


def rank_all(scores: ScoreMatrix) -> list[str]:
    """Deterministic full ranking: the round-robin selection run to exhaustion.

    Length-m prefixes (m a multiple of the column count) equal the
    balanced-selection sets for that m.
    """
    return qs_balanced(scores, len(scores.row_ids)).ids
