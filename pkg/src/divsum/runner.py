"""Experiment orchestration: compare runs, parameter sweeps, JSON reports.

Report bytes are a pure function of (inputs, config): sections are
assembled in sorted algorithm / parameter order no matter which worker
finishes first, and serialization is canonical JSON.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import evaluation, scoring, selection
from .core import (
    Dataset,
    DiversityControlSet,
    EvaluationLabels,
    InvalidInputError,
    QuerySpec,
    ReferenceSet,
    Summary,
)
from .similarity import diversity_matrix

ALGORITHMS = (
    "autolabel",
    "autolabel-rwd",
    "dds",
    "det",
    "ds",
    "mmr",
    "mmr-balanced",
    "qs",
    "qs-balanced",
)

SWEEP_PARAMS = ("alpha", "control_composition", "summary_size")


def thread_count() -> int:
    """Worker cap from DIVSUM_THREADS; 0 or unset means one per CPU."""
    raw = os.environ.get("DIVSUM_THREADS", "0")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidInputError(f"DIVSUM_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise InvalidInputError(f"DIVSUM_THREADS must be >= 0, got {n}")
    return n if n > 0 else (os.cpu_count() or 1)


@dataclass(frozen=True)
class RunConfig:
    """Inputs plus knobs for a compare run or a sweep."""

    dataset: Dataset
    query: QuerySpec
    control: DiversityControlSet | None = None
    labels: EvaluationLabels | None = None
    algorithms: tuple[str, ...] = ("qs", "qs-balanced")
    m: int = 50
    alpha: float = 0.5
    beta: float = 0.33
    c: float = 3.0
    partition_attribute: str = "gender"
    normalize_external: bool = False
    input_digests: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        unknown = sorted(set(self.algorithms) - set(ALGORITHMS))
        if unknown:
            raise InvalidInputError(
                f"unknown algorithms: {', '.join(unknown)}; known: {', '.join(ALGORITHMS)}"
            )
        if not self.algorithms:
            raise InvalidInputError("no algorithms configured")
        needs_control = {"qs-balanced", "mmr-balanced", "dds", "ds"}
        if self.control is None and needs_control & set(self.algorithms):
            raise InvalidInputError(
                f"algorithms {sorted(needs_control & set(self.algorithms))} need a control set"
            )
        needs_labels = {"autolabel", "autolabel-rwd"}
        if self.labels is None and needs_labels & set(self.algorithms):
            raise InvalidInputError(
                f"algorithms {sorted(needs_labels & set(self.algorithms))} need labels"
            )


def config_from_files(path) -> RunConfig:
    """Build a RunConfig from a run-config file; relative paths resolve
    against the config file's directory."""
    from pathlib import Path

    from . import fileio

    path = Path(path)
    data = fileio.load_run_config(path)
    root = path.parent

    def resolve(key, required=True):
        p = data.get(key)
        if p is None:
            if required:
                raise InvalidInputError(f"{path}: missing required key {key!r}")
            return None
        return root / p

    emb_path = resolve("embeddings")
    dataset = fileio.load_embeddings(emb_path)
    query_path = resolve("query")
    query = fileio.load_query(query_path)
    digests = {"embeddings": digest_file(emb_path), "query": digest_file(query_path)}
    control = labels = None
    ctl_path = resolve("control_set", required=False)
    if ctl_path is not None:
        control = fileio.load_control_set(ctl_path, dataset)
        control.validate_against(dataset)
        digests["control_set"] = digest_file(ctl_path)
    lbl_path = resolve("labels", required=False)
    if lbl_path is not None:
        labels = fileio.load_labels(lbl_path)
        digests["labels"] = digest_file(lbl_path)
    return RunConfig(
        dataset=dataset,
        query=query,
        control=control,
        labels=labels,
        algorithms=tuple(data.get("algorithms", ("qs", "qs-balanced"))),
        m=int(data.get("m", 50)),
        alpha=float(data.get("alpha", 0.5)),
        beta=float(data.get("beta", 0.33)),
        c=float(data.get("c", 3.0)),
        partition_attribute=data.get("partition_attribute", "gender"),
        normalize_external=bool(data.get("normalize_external", False)),
        input_digests=digests,
    )


def digest_file(path) -> str:
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()


def _digest_dataset(dataset: Dataset) -> str:
    h = hashlib.sha256()
    for fv in dataset.items:
        h.update(fv.id.encode("utf-8"))
        h.update(np.asarray(fv.vec, dtype="<f8").tobytes())
    return h.hexdigest()


def _partitions(cfg: RunConfig) -> dict[str, str]:
    parts = {
        fv.id: cfg.labels.get(fv.id, cfg.partition_attribute) for fv in cfg.dataset.items
    }
    values = sorted(set(parts.values()))
    if len(values) != 2:
        raise InvalidInputError(
            f"partition attribute {cfg.partition_attribute!r} must take exactly "
            f"two values, got {values}"
        )
    return parts


def _run_algorithm(name: str, cfg: RunConfig, qscores: dict[str, float]) -> Summary:
    if name == "qs":
        return selection.qs_top(qscores, cfg.m)
    if name == "mmr":
        return selection.mmr(cfg.dataset, qscores, cfg.alpha, cfg.m)
    if name == "det":
        return selection.det_greedy(cfg.dataset, qscores, cfg.c, cfg.m)
    if name == "autolabel":
        return selection.autolabel(cfg.dataset, qscores, _partitions(cfg), cfg.m)
    if name == "autolabel-rwd":
        return selection.autolabel_rwd(cfg.dataset, qscores, _partitions(cfg), cfg.m)
    if name == "mmr-balanced":
        return selection.mmr_balanced(
            cfg.dataset, qscores, cfg.control, cfg.alpha, cfg.beta, cfg.m
        )
    div = diversity_matrix(cfg.dataset, cfg.control)
    if name == "ds":
        return selection.ds_top(div, cfg.dataset.ids, cfg.control.ids, cfg.m)
    scores = scoring.ds_scores(qscores, div, cfg.alpha, cfg.dataset, cfg.control)
    if name == "qs-balanced":
        return selection.qs_balanced(scores, cfg.m)
    if name == "dds":
        sel = selection.SelectionConfig(m=cfg.m, alpha=cfg.alpha)
        return selection.dds_iterative(scores, sel.u, sel.l, cfg.m)
    raise InvalidInputError(f"unknown algorithm {name!r}")


def _metrics(summary: Summary, cfg: RunConfig) -> dict:
    out: dict = {"nonredundancy_logdet": evaluation.nonredundancy_logdet(summary, cfg.dataset)}
    if isinstance(cfg.query.scorer, ReferenceSet):
        out["accuracy_avgsim"] = evaluation.accuracy_avgsim(
            summary, cfg.query.scorer.items, cfg.dataset
        )
    if cfg.labels is not None:
        for attr in sorted({a for v in cfg.labels.by_id.values() for a in v}):
            out[f"fractions_{attr}"] = evaluation.group_fractions(summary, cfg.labels, attr)
        majority = (cfg.query.ground_truth or {}).get("gender")
        if majority in evaluation.GENDER_COMPLEMENT:
            out["anti_stereotypical"] = evaluation.anti_stereotypical_fraction(
                summary, cfg.labels, majority
            )
            out["intersectional"] = evaluation.intersectional_table(
                summary, cfg.labels, majority
            )
    return out


def _section(summary: Summary, cfg: RunConfig) -> dict:
    return {
        "ids": [
            {"id": e.id, "selected_by": e.selected_by, "score": e.score, "round": e.round}
            for e in summary.entries
        ],
        "notes": list(summary.notes),
        "metrics": _metrics(summary, cfg),
    }


def _base_report(cfg: RunConfig, kind: str) -> dict:
    digests = dict(cfg.input_digests) or {"dataset": _digest_dataset(cfg.dataset)}
    return {
        "kind": kind,
        "query": cfg.query.name,
        "config": {
            "m": cfg.m,
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "c": cfg.c,
            "algorithms": sorted(cfg.algorithms),
        },
        "input_digests": digests,
    }


def run_compare(cfg: RunConfig) -> dict:
    """Run every configured algorithm on the same inputs; one section each."""
    qscores = scoring.query_scores(
        cfg.query, cfg.dataset, normalize_external=cfg.normalize_external
    )
    names = sorted(set(cfg.algorithms))
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        summaries = list(pool.map(lambda n: _run_algorithm(n, cfg, qscores), names))
    report = _base_report(cfg, "compare")
    report["sections"] = {n: _section(s, cfg) for n, s in zip(names, summaries)}
    return report


def run_sweep(
    cfg: RunConfig,
    param: str,
    values: Sequence,
    control_builder: Callable[[float], DiversityControlSet] | None = None,
) -> dict:
    """One row per swept value, each row a full compare-style section set.

    ``control_composition`` sweeps need ``control_builder`` mapping the
    swept fraction to a control set; its ids are recorded per row.
    """
    if param not in SWEEP_PARAMS:
        raise InvalidInputError(f"param must be one of {SWEEP_PARAMS}, got {param!r}")
    values = list(values)
    if not values:
        raise InvalidInputError("no sweep values")
    if param == "control_composition" and control_builder is None:
        raise InvalidInputError("control_composition sweeps need a control_builder")

    def _cfg_for(v) -> RunConfig:
        kw = {}
        if param == "alpha":
            kw["alpha"] = float(v)
        elif param == "summary_size":
            kw["m"] = int(v)
        else:
            kw["control"] = control_builder(float(v))
        return replace(cfg, **kw)

    qscores = scoring.query_scores(
        cfg.query, cfg.dataset, normalize_external=cfg.normalize_external
    )
    names = sorted(set(cfg.algorithms))
    jobs = [(v, _cfg_for(v)) for v in values]
    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(
            pool.map(
                lambda jv: {n: _run_algorithm(n, jv[1], qscores) for n in names}, jobs
            )
        )
    report = _base_report(cfg, "sweep")
    report["param"] = param
    report["rows"] = []
    for (v, row_cfg), summaries in zip(jobs, rows):
        row = {
            "value": v,
            "sections": {n: _section(s, row_cfg) for n, s in summaries.items()},
        }
        if param == "control_composition":
            row["control_set"] = list(row_cfg.control.ids)
        report["rows"].append(row)
    return report


def report_bytes(report: dict) -> bytes:
    """Canonical serialization; equal reports give identical bytes."""
    return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode("utf-8")


def _flatten(prefix: str, value, out: dict) -> None:
    if isinstance(value, dict):
        for k, v in sorted(value.items()):
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    else:
        out[prefix] = value


def sweep_csv(report: dict) -> str:
    """Plot-ready flattening of a sweep report: one line per (value, algorithm)."""
    if report.get("kind") != "sweep":
        raise InvalidInputError("not a sweep report")
    cols: list[str] = []
    rows = []
    for row in report["rows"]:
        for name, section in sorted(row["sections"].items()):
            flat: dict = {"value": row["value"], "algorithm": name}
            _flatten("", section["metrics"], flat)
            for k in flat:
                if k not in cols:
                    cols.append(k)
            rows.append(flat)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for flat in rows:
        w.writerow(flat)
    return buf.getvalue()
