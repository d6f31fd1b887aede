import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from divsum.core import (
    Dataset,
    DiversityControlSet,
    ExternalScores,
    FeatureVector,
    InvalidInputError,
    QuerySpec,
    ReferenceSet,
)
from divsum.scoring import build_score_matrix, ds_scores, query_scores
from divsum.similarity import diversity_matrix


def fv(i, *coords):
    return FeatureVector(id=i, vec=np.array(coords, dtype=float))


def make_query(scorer):
    return QuerySpec(name="q", scorer=scorer)


class TestQueryScores:
    def test_external_negation(self):
        ds = Dataset(items=(fv("a", 1, 0), fv("b", 0, 1)))
        q = make_query(ExternalScores(scores={"a": 0.9, "b": 0.1}))
        got = query_scores(q, ds)
        assert got == {"a": -0.9, "b": -0.1}

    def test_external_missing_ids_listed(self):
        ds = Dataset(items=(fv("a", 1, 0), fv("b", 0, 1)))
        q = make_query(ExternalScores(scores={"a": 0.9}))
        with pytest.raises(InvalidInputError, match="b"):
            query_scores(q, ds)

    def test_reference_singleton_dataset(self):
        x = fv("x", 1, 0)
        ds = Dataset(items=(x,))
        got = query_scores(make_query(ReferenceSet(items=(x,))), ds)
        assert got == {"x": 0.0}

    def test_reference_hand_values(self):
        # raw avgSim distances are [0, 1, 1 - 1/sqrt(2)]; z-normalizing with
        # the population std gives the values below (mean 0, std exactly 1)
        ds = Dataset(items=(fv("a", 1, 0), fv("b", 0, 1), fv("c", 1, 1)))
        q = make_query(ReferenceSet(items=(fv("r", 1, 0),)))
        got = query_scores(q, ds)
        raw = np.array([0.0, 1.0, 1.0 - 1.0 / np.sqrt(2.0)])
        want = (raw - raw.mean()) / raw.std()
        assert got["a"] == pytest.approx(want[0], abs=1e-12)
        assert got["b"] == pytest.approx(want[1], abs=1e-12)
        assert got["c"] == pytest.approx(want[2], abs=1e-12)
        assert got["a"] == pytest.approx(-1.0267, abs=1e-3)
        assert got["b"] == pytest.approx(1.3556, abs=1e-3)
        assert got["c"] == pytest.approx(-0.3289, abs=1e-3)

    def test_reference_dimension_mismatch(self):
        ds = Dataset(items=(fv("a", 1, 0),))
        q = make_query(ReferenceSet(items=(fv("r", 1, 0, 0),)))
        with pytest.raises(InvalidInputError):
            query_scores(q, ds)

    @settings(max_examples=20)
    @given(st.integers(0, 2**32 - 1), st.floats(-5, 5, allow_nan=False))
    def test_shift_invariant_argmin(self, seed, shift):
        """Adding a constant to external scores shifts but keeps the argmin."""
        rng = np.random.default_rng(seed)
        ds = Dataset(
            items=tuple(FeatureVector(id=f"i{k}", vec=rng.standard_normal(3) + 3)
                        for k in range(8))
        )
        base = {f"i{k}": float(rng.random()) for k in range(8)}
        shifted = {k: v + shift for k, v in base.items()}
        a = query_scores(make_query(ExternalScores(scores=base)), ds)
        b = query_scores(make_query(ExternalScores(scores=shifted)), ds)
        assert min(a, key=lambda k: (a[k], k)) == min(b, key=lambda k: (b[k], k))


class TestDsScores:
    def _instance(self, seed=0, n=10, k=2):
        rng = np.random.default_rng(seed)
        ds = Dataset(
            items=tuple(FeatureVector(id=f"i{k_}", vec=rng.standard_normal(4) + 2)
                        for k_ in range(n))
        )
        ctrl = DiversityControlSet(
            items=tuple(FeatureVector(id=f"c{j}", vec=rng.standard_normal(4) + 2)
                        for j in range(k))
        )
        q = {f"i{k_}": float(rng.standard_normal()) for k_ in range(n)}
        return ds, ctrl, q

    def test_alpha_zero_columns_equal_qscores(self):
        ds, ctrl, q = self._instance()
        div = diversity_matrix(ds, ctrl)
        sm = ds_scores(q, div, 0.0, ds, ctrl)
        expect = np.array([q[i] for i in ds.ids])
        for j in range(sm.shape[1]):
            assert np.allclose(sm.entries[:, j], expect)

    def test_alpha_one_equals_divmatrix(self):
        ds, ctrl, q = self._instance()
        div = diversity_matrix(ds, ctrl)
        sm = ds_scores(q, div, 1.0, ds, ctrl)
        assert np.allclose(sm.entries, div)

    def test_hand_combination(self):
        ds = Dataset(items=(fv("a", 1, 0), fv("b", 0, 1)))
        ctrl = DiversityControlSet(items=(fv("c", 1, 0),))
        div = np.array([[0.4], [0.4]])
        sm = ds_scores({"a": -1.0, "b": -1.0}, div, 0.5, ds, ctrl)
        assert sm.entries[0, 0] == pytest.approx(-0.3)

    def test_alpha_out_of_range(self):
        ds, ctrl, q = self._instance()
        div = diversity_matrix(ds, ctrl)
        with pytest.raises(InvalidInputError):
            ds_scores(q, div, 1.5, ds, ctrl)

    @settings(max_examples=25)
    @given(st.integers(0, 2**32 - 1), st.floats(0, 1, allow_nan=False))
    def test_affine_in_alpha(self, seed, alpha):
        ds, ctrl, q = self._instance(seed=seed)
        div = diversity_matrix(ds, ctrl)
        e0 = ds_scores(q, div, 0.0, ds, ctrl).entries
        e1 = ds_scores(q, div, 1.0, ds, ctrl).entries
        ea = ds_scores(q, div, alpha, ds, ctrl).entries
        assert np.allclose(ea, (1 - alpha) * e0 + alpha * e1, atol=1e-12)


def test_build_score_matrix_end_to_end():
    rng = np.random.default_rng(3)
    ds = Dataset(
        items=tuple(FeatureVector(id=f"i{k}", vec=rng.standard_normal(4) + 2)
                    for k in range(10))
    )
    ctrl = DiversityControlSet(items=(ds.items[0], ds.items[5]))
    q = QuerySpec(name="q", scorer=ReferenceSet(items=(ds.items[1],)))
    sm = build_score_matrix(q, ds, ctrl, alpha=0.5)
    assert sm.shape == (10, 2)
    assert sm.query_scores is not None
