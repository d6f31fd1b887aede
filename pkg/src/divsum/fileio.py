"""File formats: embeddings (CSV and binary), labels, queries, control sets.

Loaders are strict: anything that cannot be fully validated is rejected
with the offending line number, never a partial result.
"""

from __future__ import annotations

import csv
import io
import struct
import sys
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .core import (
    Dataset,
    DiversityControlSet,
    EvaluationLabels,
    ExternalScores,
    FeatureVector,
    InvalidInputError,
    QuerySpec,
    ReferenceSet,
)


class ParseError(InvalidInputError):
    """Malformed input file; message carries file and line context."""


BINARY_MAGIC = b"DVSM"


def _err(path, line: int | None, msg: str) -> ParseError:
    loc = f"{path}:{line}" if line is not None else str(path)
    return ParseError(f"{loc}: {msg}")


def _parse_embedding_rows(path, rows, header) -> list[FeatureVector]:
    if not header or header[0] != "id" or len(header) < 2:
        raise _err(path, 1, "expected header 'id,v0,...,v{d-1}'")
    for j, name in enumerate(header[1:]):
        if name != f"v{j}":
            raise _err(path, 1, f"expected column 'v{j}', got {name!r}")
    d = len(header) - 1
    items: list[FeatureVector] = []
    seen = set()
    for lineno, row in rows:
        if len(row) != d + 1:
            raise _err(path, lineno, f"expected {d + 1} fields, got {len(row)}")
        item_id = row[0]
        if not item_id:
            raise _err(path, lineno, "empty id")
        if item_id in seen:
            raise _err(path, lineno, f"duplicate id {item_id!r}")
        seen.add(item_id)
        try:
            vec = np.array([float(x) for x in row[1:]], dtype=np.float64)
        except ValueError as e:
            raise _err(path, lineno, f"bad float: {e}") from None
        if not np.all(np.isfinite(vec)):
            raise _err(path, lineno, f"non-finite entry for id {item_id!r}")
        if float(np.linalg.norm(vec)) == 0.0:
            raise _err(path, lineno, f"zero-norm embedding for id {item_id!r}")
        items.append(FeatureVector(id=item_id, vec=vec))
    if not items:
        raise _err(path, None, "no embedding rows")
    return items


def load_embedding_vectors(path) -> list[FeatureVector]:
    """Parse an embedding file (CSV or binary, sniffed by magic bytes)."""
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(4)
    if head == BINARY_MAGIC:
        return _read_binary(path)
    header, rows = _read_csv_rows(path)
    return _parse_embedding_rows(path, rows, header)


def _read_csv_rows(path):
    """CSV rows with 1-based line numbers; leading '#' comment lines skipped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    numbered = [
        (i, line) for i, line in enumerate(lines, start=1) if not line.startswith("#")
    ]
    parsed = [
        (i, row)
        for (i, _), row in zip(numbered, csv.reader(line for _, line in numbered))
    ]
    parsed = [(i, row) for i, row in parsed if row]
    if not parsed:
        raise _err(path, None, "empty file")
    (_, header), rows = parsed[0], parsed[1:]
    return header, rows


def load_embeddings(path) -> Dataset:
    return Dataset(items=tuple(load_embedding_vectors(path)))


def write_embeddings_csv(path, items, header_comment: str | None = None) -> None:
    path = Path(path)
    items = list(items)
    if not items:
        raise InvalidInputError("nothing to write")
    d = items[0].dim
    buf = io.StringIO()
    if header_comment:
        for line in header_comment.splitlines():
            buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id"] + [f"v{j}" for j in range(d)])
    for fv in items:
        w.writerow([fv.id] + [repr(float(x)) for x in fv.vec])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _read_binary(path) -> list[FeatureVector]:
    raw = Path(path).read_bytes()
    if raw[:4] != BINARY_MAGIC:
        raise _err(path, None, "bad magic")
    off = 4
    try:
        count, dim = struct.unpack_from("<II", raw, off)
        off += 8
        ids = []
        for _ in range(count):
            (ln,) = struct.unpack_from("<I", raw, off)
            off += 4
            ids.append(raw[off : off + ln].decode("utf-8"))
            off += ln
        vecs = np.frombuffer(raw, dtype="<f8", count=count * dim, offset=off).reshape(
            count, dim
        )
    except (struct.error, ValueError, UnicodeDecodeError) as e:
        raise _err(path, None, f"truncated or corrupt binary embedding file: {e}") from None
    items = []
    seen = set()
    for item_id, vec in zip(ids, vecs):
        if item_id in seen:
            raise _err(path, None, f"duplicate id {item_id!r}")
        seen.add(item_id)
        if not np.all(np.isfinite(vec)):
            raise _err(path, None, f"non-finite entry for id {item_id!r}")
        items.append(FeatureVector(id=item_id, vec=np.array(vec)))
    if not items:
        raise _err(path, None, "no embedding rows")
    return items


def write_embeddings_binary(path, items) -> None:
    items = list(items)
    if not items:
        raise InvalidInputError("nothing to write")
    d = items[0].dim
    out = bytearray()
    out += BINARY_MAGIC
    out += struct.pack("<II", len(items), d)
    for fv in items:
        b = fv.id.encode("utf-8")
        out += struct.pack("<I", len(b)) + b
    for fv in items:
        out += np.asarray(fv.vec, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(out))


def load_labels(path) -> EvaluationLabels:
    """CSV `id,attribute,value`."""
    path = Path(path)
    by_id: dict[str, dict[str, str]] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise _err(path, None, "empty file") from None
        if header != ["id", "attribute", "value"]:
            raise _err(path, 1, "expected header 'id,attribute,value'")
        n = 0
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise _err(path, lineno, f"expected 3 fields, got {len(row)}")
            item_id, attr, value = row
            if not item_id or not attr:
                raise _err(path, lineno, "empty id or attribute")
            if attr in by_id.get(item_id, {}):
                raise _err(path, lineno, f"duplicate label {attr!r} for id {item_id!r}")
            by_id.setdefault(item_id, {})[attr] = value
            n += 1
    if n == 0:
        raise _err(path, None, "no label rows")
    return EvaluationLabels(by_id=by_id)


def load_scores(path) -> dict[str, float]:
    """CSV `id,score` of external classifier outputs."""
    path = Path(path)
    out: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise _err(path, None, "empty file") from None
        if header != ["id", "score"]:
            raise _err(path, 1, "expected header 'id,score'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise _err(path, lineno, f"expected 2 fields, got {len(row)}")
            item_id, raw = row
            if item_id in out:
                raise _err(path, lineno, f"duplicate id {item_id!r}")
            try:
                val = float(raw)
            except ValueError:
                raise _err(path, lineno, f"bad float {raw!r}") from None
            if not np.isfinite(val):
                raise _err(path, lineno, f"non-finite score for id {item_id!r}")
            out[item_id] = val
    if not out:
        raise _err(path, None, "no score rows")
    return out


def load_query(path) -> QuerySpec:
    """TOML query spec: name, scorer type, scorer path, optional ground truth."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise _err(path, None, f"bad TOML: {e}") from None
    try:
        name = data["name"]
        scorer_type = data["scorer"]
    except KeyError as e:
        raise _err(path, None, f"missing key {e}") from None
    if scorer_type == "reference_set":
        ref_path = data.get("reference_set")
        if not ref_path:
            raise _err(path, None, "scorer 'reference_set' needs a 'reference_set' path")
        items = load_embedding_vectors(path.parent / ref_path)
        scorer = ReferenceSet(items=tuple(items))
    elif scorer_type == "external_scores":
        sc_path = data.get("scores")
        if not sc_path:
            raise _err(path, None, "scorer 'external_scores' needs a 'scores' path")
        scorer = ExternalScores(scores=load_scores(path.parent / sc_path))
    else:
        raise _err(path, None, f"unknown scorer type {scorer_type!r}")
    gt = data.get("ground_truth")
    return QuerySpec(name=name, scorer=scorer, ground_truth=gt)


def load_control_set(path, embeddings: Dataset | None = None) -> DiversityControlSet:
    """Control set file: either a full embedding file or an id list.

    An id-list file (single `id` header column) resolves ids against the
    supplied dataset.
    """
    path = Path(path)
    with open(path, "rb") as f:
        head = f.read(4)
    if head == BINARY_MAGIC:
        return DiversityControlSet(items=tuple(_read_binary(path)))
    header, rows = _read_csv_rows(path)
    if header == ["id"]:
        if embeddings is None:
            raise _err(path, 1, "id-list control set requires loaded embeddings")
        items = []
        for lineno, row in rows:
            if len(row) != 1:
                raise _err(path, lineno, f"expected 1 field, got {len(row)}")
            item_id = row[0]
            if item_id not in embeddings.index:
                raise _err(path, lineno, f"id {item_id!r} not in embeddings")
            items.append(embeddings.get(item_id))
        if not items:
            raise _err(path, None, "no control ids")
        return DiversityControlSet(items=tuple(items))
    items = _parse_embedding_rows(path, rows, header)
    return DiversityControlSet(items=tuple(items))


def write_labels_csv(path, labels: EvaluationLabels) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["id", "attribute", "value"])
    for item_id in labels.ids():
        for attr, value in sorted(labels.by_id[item_id].items()):
            w.writerow([item_id, attr, value])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_run_config(path) -> dict:
    """Top-level run config (TOML); returned as a plain dict, paths unresolved."""
    path = Path(path)
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise _err(path, None, f"bad TOML: {e}") from None
