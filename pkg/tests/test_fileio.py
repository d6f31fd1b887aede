import numpy as np
import pytest

from divsum import fileio
from divsum.core import Dataset, ExternalScores, FeatureVector, ReferenceSet
from divsum.fileio import (
    ParseError,
    load_control_set,
    load_embeddings,
    load_labels,
    load_query,
    load_scores,
    write_embeddings_binary,
    write_embeddings_csv,
    write_labels_csv,
)


def fv(i, *coords):
    return FeatureVector(id=i, vec=np.array(coords, dtype=float))


@pytest.fixture
def emb_csv(tmp_path):
    p = tmp_path / "emb.csv"
    p.write_text("id,v0,v1\na,1.0,0.0\nb,0.0,1.0\n")
    return p


class TestLoadEmbeddings:
    def test_two_rows(self, emb_csv):
        ds = load_embeddings(emb_csv)
        assert len(ds) == 2
        assert ds.ids == ["a", "b"]
        assert ds.dim == 2

    def test_duplicate_id_names_id_and_line(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,v0\na,1.0\na,2.0\n")
        with pytest.raises(ParseError, match=r"3.*'a'|'a'.*3"):
            load_embeddings(p)

    def test_nan_entry(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,v0\na,nan\n")
        with pytest.raises(ParseError, match="2"):
            load_embeddings(p)

    def test_dimension_drift(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,v0,v1\na,1.0,2.0\nb,1.0\n")
        with pytest.raises(ParseError, match="3"):
            load_embeddings(p)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,x0\na,1.0\n")
        with pytest.raises(ParseError):
            load_embeddings(p)

    def test_bad_float(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,v0\na,oops\n")
        with pytest.raises(ParseError, match="2"):
            load_embeddings(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            load_embeddings(p)

    def test_zero_norm_rejected(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("id,v0,v1\na,0.0,0.0\n")
        with pytest.raises(ParseError):
            load_embeddings(p)

    def test_comment_header_skipped(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("# backbone: whatever\nid,v0\na,1.5\n")
        ds = load_embeddings(p)
        assert ds.ids == ["a"]


class TestRoundTrips:
    def test_csv_round_trip_lossless(self, tmp_path):
        items = [fv("a", 1 / 3, -2.5e-7), fv("b", np.pi, 1e300)]
        p = tmp_path / "rt.csv"
        write_embeddings_csv(p, items)
        back = load_embeddings(p)
        assert np.array_equal(back.matrix(), np.stack([i.vec for i in items]))

    def test_csv_with_comment_round_trips(self, tmp_path):
        items = [fv("a", 0.25, 0.5)]
        p = tmp_path / "rt.csv"
        write_embeddings_csv(p, items, header_comment="model: test\nhash: abc")
        assert load_embeddings(p).ids == ["a"]

    def test_binary_round_trip_lossless(self, tmp_path):
        items = [fv("a", 1 / 3, -2.5e-7), fv("ünicøde", np.pi, 1e300)]
        p = tmp_path / "rt.bin"
        write_embeddings_binary(p, items)
        back = load_embeddings(p)
        assert back.ids == ["a", "ünicøde"]
        assert np.array_equal(back.matrix(), np.stack([i.vec for i in items]))

    def test_binary_magic(self, tmp_path):
        p = tmp_path / "rt.bin"
        write_embeddings_binary(p, [fv("a", 1.0)])
        assert p.read_bytes()[:4] == b"DVSM"

    def test_truncated_binary(self, tmp_path):
        p = tmp_path / "rt.bin"
        write_embeddings_binary(p, [fv("a", 1.0, 2.0)])
        p.write_bytes(p.read_bytes()[:-4])
        with pytest.raises(ParseError):
            load_embeddings(p)


class TestLoadLabels:
    def test_minimal(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("id,attribute,value\na,gender,male\na,skintone,fair\n")
        lab = load_labels(p)
        assert lab.get("a", "gender") == "male"
        assert lab.get("a", "skintone") == "fair"

    def test_empty(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            load_labels(p)

    def test_duplicate_attribute(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("id,attribute,value\na,gender,male\na,gender,female\n")
        with pytest.raises(ParseError, match="3"):
            load_labels(p)

    def test_round_trip(self, tmp_path):
        p = tmp_path / "l.csv"
        p.write_text("id,attribute,value\na,gender,male\nb,gender,female\n")
        lab = load_labels(p)
        q = tmp_path / "l2.csv"
        write_labels_csv(q, lab)
        assert load_labels(q).by_id == lab.by_id


class TestLoadScores:
    def test_minimal(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("id,score\na,0.9\nb,0.1\n")
        assert load_scores(p) == {"a": 0.9, "b": 0.1}

    def test_bad_value(self, tmp_path):
        p = tmp_path / "s.csv"
        p.write_text("id,score\na,high\n")
        with pytest.raises(ParseError, match="2"):
            load_scores(p)


class TestLoadQuery:
    def test_reference_set(self, tmp_path):
        (tmp_path / "refs.csv").write_text("id,v0\nr0,1.0\n")
        q = tmp_path / "q.toml"
        q.write_text(
            'name = "ceo"\nscorer = "reference_set"\nreference_set = "refs.csv"\n'
            '[ground_truth]\ngender = "male"\n'
        )
        spec = load_query(q)
        assert spec.name == "ceo"
        assert isinstance(spec.scorer, ReferenceSet)
        assert spec.ground_truth == {"gender": "male"}

    def test_external_scores(self, tmp_path):
        (tmp_path / "scores.csv").write_text("id,score\na,0.5\n")
        q = tmp_path / "q.toml"
        q.write_text('name = "smiling"\nscorer = "external_scores"\nscores = "scores.csv"\n')
        spec = load_query(q)
        assert isinstance(spec.scorer, ExternalScores)

    def test_unknown_scorer(self, tmp_path):
        q = tmp_path / "q.toml"
        q.write_text('name = "x"\nscorer = "telepathy"\n')
        with pytest.raises(ParseError):
            load_query(q)

    def test_missing_key(self, tmp_path):
        q = tmp_path / "q.toml"
        q.write_text('name = "x"\n')
        with pytest.raises(ParseError):
            load_query(q)

    def test_bad_toml(self, tmp_path):
        q = tmp_path / "q.toml"
        q.write_text("name = [unclosed\n")
        with pytest.raises(ParseError):
            load_query(q)


class TestLoadControlSet:
    def _dataset(self):
        return Dataset(items=tuple(fv(f"i{k}", 1.0, float(k)) for k in range(6)))

    def test_embedding_file(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("id,v0,v1\nc0,1.0,0.0\n")
        ctrl = load_control_set(p)
        assert ctrl.ids == ["c0"]

    def test_id_list_resolved(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("id\ni1\ni4\n")
        ctrl = load_control_set(p, self._dataset())
        assert ctrl.ids == ["i1", "i4"]
        assert np.array_equal(ctrl.items[0].vec, [1.0, 1.0])

    def test_id_list_missing_id(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("id\nzz\n")
        with pytest.raises(ParseError, match="zz"):
            load_control_set(p, self._dataset())

    def test_id_list_needs_embeddings(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("id\ni1\n")
        with pytest.raises(ParseError):
            load_control_set(p)

    def test_empty(self, tmp_path):
        p = tmp_path / "c.csv"
        p.write_text("")
        with pytest.raises(ParseError):
            load_control_set(p)

    def test_binary_control_set(self, tmp_path):
        p = tmp_path / "c.bin"
        write_embeddings_binary(p, [fv("c0", 1.0, 2.0)])
        assert load_control_set(p).ids == ["c0"]


def test_parse_error_is_invalid_input():
    from divsum.core import InvalidInputError

    assert issubclass(fileio.ParseError, InvalidInputError)
