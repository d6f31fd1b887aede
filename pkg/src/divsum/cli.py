"""Command-line entry points.

Exit codes: 0 on success, 1 on usage errors (bad flags, malformed
argument values), 2 on data errors (unparseable or inconsistent input
files).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evaluation, fileio, runner, scoring, selection, synthgen
from .core import InvalidInputError
from .similarity import diversity_matrix

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is 1.
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="divsum", description="Diversity-controlled image-set summarization.")
    sub = p.add_subparsers(dest="command", required=True)

    def common_inputs(sp, control_required=False):
        sp.add_argument("--embeddings", required=True, help="embedding file (CSV or binary)")
        sp.add_argument("--query", required=True, help="query spec (TOML)")
        sp.add_argument(
            "--control",
            required=control_required,
            help="control set (embedding file or id list)",
        )
        sp.add_argument("--labels", help="labels CSV (id,attribute,value)")
        sp.add_argument("--alpha", type=float, default=0.5)
        sp.add_argument("--beta", type=float, default=0.33)
        sp.add_argument("-c", "--pool-factor", type=float, default=3.0, dest="c")
        sp.add_argument("--output", help="write JSON here instead of stdout")

    sp = sub.add_parser("summarize", help="select a size-m summary with one algorithm")
    common_inputs(sp)
    sp.add_argument("--algorithm", default="qs-balanced", choices=runner.ALGORITHMS)
    sp.add_argument("-m", "--size", type=int, required=True, dest="m")

    sp = sub.add_parser("rank", help="deterministic full ranking of the dataset")
    common_inputs(sp, control_required=True)

    sp = sub.add_parser("evaluate", help="metrics for an existing summary")
    sp.add_argument("--summary", required=True, help="id list file or summarize JSON output")
    sp.add_argument("--labels", required=True)
    sp.add_argument("--embeddings", help="needed for log-det and avgSim accuracy")
    sp.add_argument("--query", help="query spec; enables avgSim accuracy and majority")
    sp.add_argument("--majority", help="stereotypical gender value (male or female)")
    sp.add_argument(
        "--denominator",
        default="summary",
        choices=("summary", "labeled"),
        help="anti-stereotypical fraction denominator",
    )
    sp.add_argument("--output")

    sp = sub.add_parser("compare", help="run all configured algorithms on one input set")
    sp.add_argument("--config", required=True, help="run config (TOML)")
    sp.add_argument("--output")

    sp = sub.add_parser("sweep", help="sweep one parameter across a value grid")
    sp.add_argument("--config", required=True)
    sp.add_argument("--param", required=True, choices=runner.SWEEP_PARAMS)
    sp.add_argument("--values", required=True, help="comma-separated numeric values")
    sp.add_argument(
        "--control-file",
        action="append",
        default=[],
        metavar="VALUE=PATH",
        help="control set per composition value (repeatable)",
    )
    sp.add_argument("--output")
    sp.add_argument("--csv", help="also write the plot-ready CSV here")

    sp = sub.add_parser("synth", help="generate a seeded synthetic instance")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument(
        "--groups",
        required=True,
        help="name:proportion[:spread] pairs, comma-separated (e.g. male:0.8,female:0.2)",
    )
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--query-bias", type=float, default=0.5)
    sp.add_argument("--n-query", type=int, default=10)
    sp.add_argument("--out-dir", required=True)

    sp = sub.add_parser("validate", help="parse inputs and report problems")
    sp.add_argument("--embeddings", required=True)
    sp.add_argument("--labels")
    sp.add_argument("--query")
    sp.add_argument("--control")

    return p


def _emit(obj: dict, output: str | None) -> None:
    data = runner.report_bytes(obj)
    if output:
        Path(output).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))


def _load_common(args):
    dataset = fileio.load_embeddings(args.embeddings)
    query = fileio.load_query(args.query)
    control = labels = None
    if args.control:
        control = fileio.load_control_set(args.control, dataset)
        control.validate_against(dataset)
    if args.labels:
        labels = fileio.load_labels(args.labels)
    return dataset, query, control, labels


def _cmd_summarize(args) -> int:
    dataset, query, control, labels = _load_common(args)
    cfg = runner.RunConfig(
        dataset=dataset,
        query=query,
        control=control,
        labels=labels,
        algorithms=(args.algorithm,),
        m=args.m,
        alpha=args.alpha,
        beta=args.beta,
        c=args.c,
        input_digests={"embeddings": runner.digest_file(args.embeddings)},
    )
    report = runner.run_compare(cfg)
    _emit(report, args.output)
    return 0


def _cmd_rank(args) -> int:
    dataset, query, control, _ = _load_common(args)
    qscores = scoring.query_scores(query, dataset)
    div = diversity_matrix(dataset, control)
    scores = scoring.ds_scores(qscores, div, args.alpha, dataset, control)
    ranking = selection.rank_all(scores)
    _emit({"kind": "rank", "query": query.name, "ranking": ranking}, args.output)
    return 0


def _read_summary_ids(path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        sections = data.get("sections", {})
        if len(sections) != 1:
            raise InvalidInputError(
                f"{path}: expected exactly one section, got {len(sections)}"
            )
        (section,) = sections.values()
        return [e["id"] for e in section["ids"]]
    ids = [line.strip() for line in text.splitlines() if line.strip()]
    if not ids:
        raise InvalidInputError(f"{path}: no summary ids")
    return ids


def _cmd_evaluate(args) -> int:
    ids = _read_summary_ids(args.summary)
    labels = fileio.load_labels(args.labels)
    metrics: dict = {}
    for attr in sorted({a for v in labels.by_id.values() for a in v}):
        metrics[f"fractions_{attr}"] = evaluation.group_fractions(ids, labels, attr)
    majority = args.majority
    if args.query and not majority:
        q = fileio.load_query(args.query)
        majority = (q.ground_truth or {}).get("gender")
    if majority:
        metrics["anti_stereotypical"] = evaluation.anti_stereotypical_fraction(
            ids, labels, majority, denominator=args.denominator
        )
        metrics["intersectional"] = evaluation.intersectional_table(ids, labels, majority)
    if args.embeddings:
        dataset = fileio.load_embeddings(args.embeddings)
        metrics["nonredundancy_logdet"] = evaluation.nonredundancy_logdet(ids, dataset)
        if args.query:
            q = fileio.load_query(args.query)
            from .core import ReferenceSet

            if isinstance(q.scorer, ReferenceSet):
                metrics["accuracy_avgsim"] = evaluation.accuracy_avgsim(
                    ids, q.scorer.items, dataset
                )
    _emit({"kind": "evaluate", "metrics": metrics}, args.output)
    return 0


def _cmd_compare(args) -> int:
    cfg = runner.config_from_files(args.config)
    _emit(runner.run_compare(cfg), args.output)
    return 0


def _parse_values(raw: str) -> list[float]:
    try:
        return [float(v) for v in raw.split(",") if v.strip() != ""]
    except ValueError:
        raise UsageError(f"bad --values {raw!r}; expected comma-separated numbers") from None


def _cmd_sweep(args) -> int:
    cfg = runner.config_from_files(args.config)
    values = _parse_values(args.values)
    builder = None
    if args.param == "control_composition":
        table = {}
        for spec in args.control_file:
            if "=" not in spec:
                raise UsageError(f"bad --control-file {spec!r}; expected VALUE=PATH")
            v, path = spec.split("=", 1)
            try:
                table[float(v)] = path
            except ValueError:
                raise UsageError(f"bad --control-file value {v!r}") from None
        missing = [v for v in values if v not in table]
        if missing:
            raise UsageError(
                f"no --control-file given for values: {missing}"
            )

        def builder(v: float):
            cs = fileio.load_control_set(table[v], cfg.dataset)
            cs.validate_against(cfg.dataset)
            return cs

    report = runner.run_sweep(cfg, args.param, values, control_builder=builder)
    _emit(report, args.output)
    if args.csv:
        Path(args.csv).write_text(runner.sweep_csv(report), encoding="utf-8")
    return 0


def _parse_groups(raw: str) -> list[synthgen.GroupSpec]:
    groups = []
    for part in raw.split(","):
        bits = part.split(":")
        if len(bits) not in (2, 3):
            raise UsageError(f"bad group spec {part!r}; expected name:proportion[:spread]")
        try:
            prop = float(bits[1])
            spread = float(bits[2]) if len(bits) == 3 else 0.1
        except ValueError:
            raise UsageError(f"bad number in group spec {part!r}") from None
        groups.append(synthgen.GroupSpec(name=bits[0], proportion=prop, spread=spread))
    return groups


def _cmd_synth(args) -> int:
    cfg = synthgen.SynthConfig(
        n=args.n,
        d=args.d,
        groups=tuple(_parse_groups(args.groups)),
        query_bias=args.query_bias,
        seed=args.seed,
        n_query=args.n_query,
    )
    inst = synthgen.generate(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fileio.write_embeddings_csv(out / "embeddings.csv", inst.dataset.items)
    fileio.write_labels_csv(out / "labels.csv", inst.labels)
    fileio.write_embeddings_csv(out / "query_refs.csv", inst.query.scorer.items)
    for name, cands in sorted(inst.control_candidates.items()):
        fileio.write_embeddings_csv(out / f"control_{name}.csv", cands)
    balanced = inst.balanced_control_set(per_group=1)
    fileio.write_embeddings_csv(out / "control_balanced.csv", balanced.items)
    gt = inst.query.ground_truth or {}
    lines = ['name = "synthetic"', 'scorer = "reference_set"',
             'reference_set = "query_refs.csv"', "", "[ground_truth]"]
    lines += [f'{k} = "{v}"' for k, v in sorted(gt.items())]
    (out / "query.toml").write_text("\n".join(lines) + "\n", encoding="utf-8")
    (out / "metadata.json").write_text(
        json.dumps(inst.metadata, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    sys.stdout.write(f"wrote synthetic instance to {out}\n")
    return 0


def _cmd_validate(args) -> int:
    dataset = fileio.load_embeddings(args.embeddings)
    checked = [f"embeddings: {len(dataset)} items, dimension {dataset.dim}"]
    if args.labels:
        labels = fileio.load_labels(args.labels)
        known = sum(1 for i in labels.ids() if i in dataset.index)
        checked.append(f"labels: {len(labels.by_id)} ids ({known} present in embeddings)")
    if args.query:
        query = fileio.load_query(args.query)
        checked.append(f"query: {query.name}")
    if args.control:
        control = fileio.load_control_set(args.control, dataset)
        control.validate_against(dataset)
        checked.append(f"control set: {len(control)} items")
    for line in checked:
        sys.stdout.write(f"ok: {line}\n")
    return 0


_COMMANDS = {
    "summarize": _cmd_summarize,
    "rank": _cmd_rank,
    "evaluate": _cmd_evaluate,
    "compare": _cmd_compare,
    "sweep": _cmd_sweep,
    "synth": _cmd_synth,
    "validate": _cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE_ERROR
    try:
        return _COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (InvalidInputError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())
