import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marginlab.distmodel import Figure1Params, ValidationError, from_arrays, make_figure1_distribution, make_random_distribution
from marginlab.hypothesis import (
    CompleteClass,
    FiniteSet,
    MonotoneTransform,
    ScoreTable,
    apply_transform,
    bayes_classifier,
    predict,
    reachable_labels,
)


def table(*rows):
    return ScoreTable(tuple(range(len(rows))), np.array(rows, dtype=float))


class TestPredict:
    def test_tie_goes_to_lowest_label(self):
        assert predict(table([0.2, 0.9, 0.9]), 0) == 2

    def test_binary_zero_is_plus_one(self):
        h = ScoreTable.from_binary((0,), [0.0])
        assert predict(h, 0) == 1
        assert predict(ScoreTable.from_binary((0,), [-1e-300]), 0) == 2

    def test_plain_argmax(self):
        assert predict(table([3.0, 1.0, 2.0]), 0) == 1

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            table([np.nan, 1.0])


class TestBayes:
    def test_picks_max(self):
        d = from_arrays([1.0], [[0.2, 0.5, 0.3]])
        assert predict(bayes_classifier(d), 0) == 2

    def test_tie(self):
        d = from_arrays([1.0], [[0.5, 0.5]])
        assert predict(bayes_classifier(d), 0) == 1

    def test_figure1(self):
        d = make_figure1_distribution(Figure1Params(0.25, 2.0, 50))
        assert set(bayes_classifier(d).label_indices()) == {0}

    @given(seed=st.integers(0, 2**32), n=st.integers(1, 30), k=st.integers(2, 6))
    @settings(max_examples=60, deadline=None)
    def test_optimal_exactly(self, seed, n, k):
        d = make_random_distribution(seed, n, k, 0.5)
        picked = d.cond[np.arange(n), bayes_classifier(d).label_indices()]
        assert np.array_equal(picked, d.cond.max(axis=1))


class TestReachable:
    def test_complete(self):
        assert reachable_labels(CompleteClass(), 0, 4) == {1, 2, 3, 4}

    def test_singleton_bayes_on_figure1(self):
        d = make_figure1_distribution(Figure1Params(0.25, 2.0, 8))
        H = FiniteSet((bayes_classifier(d),))
        assert all(reachable_labels(H, x) == {1} for x in d.points)

    def test_two_constant_members(self):
        pts = (0, 1, 2)
        H = FiniteSet((ScoreTable.constant(pts, [1.0, 0.0]), ScoreTable.constant(pts, [0.0, 1.0])))
        assert reachable_labels(H, 1) == {1, 2}

    @given(seed=st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_monotone_in_H(self, seed):
        rng = np.random.default_rng(seed)
        pts = tuple(range(5))
        members = [ScoreTable(pts, rng.normal(size=(5, 3))) for _ in range(6)]
        H1 = FiniteSet(tuple(members[:3]))
        H2 = FiniteSet(tuple(members))
        assert all(reachable_labels(H1, x) <= reachable_labels(H2, x) for x in pts)

    def test_finite_set_checks(self):
        with pytest.raises(ValidationError):
            FiniteSet(())
        with pytest.raises(ValidationError):
            FiniteSet((table([1.0, 0.0]), table([1.0, 0.0, 0.0])))


class TestTransform:
    def test_identity(self):
        h = table([0.3, -1.0, 2.0], [5.0, 5.0, 1.0])
        out = apply_transform(h, MonotoneTransform.affine(1.0, 0.0))
        assert np.array_equal(out.scores, h.scores)

    def test_affine_example(self):
        out = apply_transform(table([3.0, 1.0, 2.0]), MonotoneTransform.affine(2.0, 1.0))
        assert out.scores.tolist() == [[7.0, 3.0, 5.0]]
        assert predict(out, 0) == 1

    def test_extrapolates_linearly(self):
        psi = MonotoneTransform([0.0, 1.0, 2.0], [0.0, 2.0, 3.0])
        assert psi(-1.0) == -2.0
        assert psi(4.0) == 5.0
        assert psi(1.5) == 2.5

    def test_rejects_non_monotone(self):
        with pytest.raises(ValidationError):
            MonotoneTransform([0.0, 1.0], [1.0, 1.0])
        with pytest.raises(ValidationError):
            MonotoneTransform.affine(0.0, 1.0)

    def test_json_round_trip(self):
        psi = MonotoneTransform.random(4)
        back = MonotoneTransform.from_dict(json.loads(json.dumps(psi.to_dict())))
        assert np.array_equal(back.values, psi.values)

    def test_seeded_trials_preserve_predictions(self):
        for seed in range(200):
            rng = np.random.default_rng(seed)
            pts = tuple(range(10))
            h = ScoreTable(pts, rng.normal(0, 3, size=(10, int(rng.integers(2, 6)))))
            out = apply_transform(h, MonotoneTransform.random(seed))
            assert np.array_equal(out.label_indices(), h.label_indices())


class TestScoreTableJson:
    def test_round_trip(self):
        h = table([0.1, 0.2], [1e-17, -3.5])
        back = ScoreTable.from_dict(json.loads(json.dumps(h.to_dict())))
        assert np.array_equal(back.scores, h.scores) and back.points == h.points
