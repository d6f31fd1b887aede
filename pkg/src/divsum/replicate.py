"""Table-style replication over externally supplied dataset bundles.

A bundle directory holds `embeddings.csv` (or `.bin`), `labels.csv`,
`control_set.csv`, and a `queries/` directory of query spec files, one
per query, each carrying its ground-truth majority. The datasets
themselves are not redistributable and must be supplied by the user; the
harness aggregates mean (std) of each metric across queries.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import fileio, runner
from .core import InvalidInputError

DEFAULT_ALGORITHMS = (
    "autolabel",
    "autolabel-rwd",
    "det",
    "mmr",
    "mmr-balanced",
    "qs",
    "qs-balanced",
)

ACQUISITION_NOTE = """\
No dataset bundle found at {path}.

The image corpora behind the occupation and face comparisons are not
redistributable, so this harness only runs against data you supply:

  {path}/
    embeddings.csv      id,v0,...,v{{d-1}} rows (or embeddings.bin)
    labels.csv          id,attribute,value rows (gender, skintone, ...)
    control_set.csv     the diversity control images' embeddings
    queries/*.toml      one query spec per query, with [ground_truth]

Build embeddings from raw images with the companion extractor package,
then re-run this command.
"""


def bundle_paths(bundle_dir) -> dict | None:
    """Resolve a bundle's files; None when the bundle is absent/incomplete."""
    root = Path(bundle_dir)
    emb = root / "embeddings.csv"
    if not emb.exists():
        emb = root / "embeddings.bin"
    queries = sorted((root / "queries").glob("*.toml")) if (root / "queries").is_dir() else []
    paths = {
        "embeddings": emb,
        "labels": root / "labels.csv",
        "control_set": root / "control_set.csv",
        "queries": queries,
    }
    if not (emb.exists() and paths["labels"].exists() and paths["control_set"].exists() and queries):
        return None
    return paths


def replicate_tables(
    bundle_dir,
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS,
    m: int = 50,
    alpha: float = 0.5,
    beta: float = 0.33,
) -> dict:
    """Per-query compare runs aggregated into a mean (std) table."""
    paths = bundle_paths(bundle_dir)
    if paths is None:
        raise InvalidInputError(ACQUISITION_NOTE.format(path=bundle_dir))
    dataset = fileio.load_embeddings(paths["embeddings"])
    labels = fileio.load_labels(paths["labels"])
    control = fileio.load_control_set(paths["control_set"], dataset)
    control.validate_against(dataset)
    digests = {
        "embeddings": runner.digest_file(paths["embeddings"]),
        "labels": runner.digest_file(paths["labels"]),
        "control_set": runner.digest_file(paths["control_set"]),
    }

    per_query = {}
    for qpath in paths["queries"]:
        query = fileio.load_query(qpath)
        cfg = runner.RunConfig(
            dataset=dataset,
            query=query,
            control=control,
            labels=labels,
            algorithms=algorithms,
            m=m,
            alpha=alpha,
            beta=beta,
            input_digests={**digests, "query": runner.digest_file(qpath)},
        )
        per_query[query.name] = runner.run_compare(cfg)

    # Aggregate scalar metrics: mean and population std across queries.
    table: dict = {}
    for name in sorted(set(algorithms)):
        metrics: dict[str, list[float]] = {}
        for rep in per_query.values():
            for k, v in rep["sections"][name]["metrics"].items():
                if isinstance(v, (int, float)):
                    metrics.setdefault(k, []).append(float(v))
        table[name] = {
            k: {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
            for k, vals in sorted(metrics.items())
        }
    return {
        "kind": "replication",
        "bundle": str(bundle_dir),
        "config": {"m": m, "alpha": alpha, "beta": beta, "algorithms": sorted(set(algorithms))},
        "input_digests": digests,
        "n_queries": len(per_query),
        "table": table,
        "per_query": per_query,
    }
