import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marginlab.distmodel import ValidationError, from_arrays, make_random_distribution
from marginlab.hypothesis import CompleteClass, FiniteSet, ScoreTable
from marginlab.losses import (
    MARGIN_KINDS,
    LossSpec,
    OracleConfig,
    OracleError,
    ZERO_ONE,
    best_conditional_error,
    best_conditional_errors,
    clamp_regrets,
    conditional_error,
    conditional_errors,
    conditional_regret,
    conditional_regrets,
    golden_section,
    loss_matrix,
    loss_value,
    margin_infimum,
    parse_loss,
    simplex_infimum,
)

HINGE = LossSpec("hinge")
LOGISTIC = LossSpec("logistic")
CE = LossSpec("cross-entropy")
MAE = LossSpec("mae")

# test-side closed forms for the binary conditional infimum
CLOSED_MARGIN = {
    "hinge": lambda e: 2 * min(e, 1 - e),
    "squared-hinge": lambda e: 4 * e * (1 - e),
    "exponential": lambda e: 2 * math.sqrt(e * (1 - e)),
    "logistic": lambda e: -sum(p * math.log(p) for p in (e, 1 - e) if p > 0),
}


def binary(eta, z):
    d = from_arrays([1.0], [[eta, 1 - eta]])
    return d, ScoreTable.from_binary(d.points, [z])


class TestParse:
    def test_names(self):
        assert parse_loss("logistic") == LOGISTIC
        assert parse_loss("gce:q=1.5") == LossSpec("gce", 1.5)
        assert parse_loss("gce").q == 2.0

    @pytest.mark.parametrize("text", ["foo", "gce:q=1", "gce:q=abc", "gce:r=2", "hinge:q=2"])
    def test_rejects(self, text):
        with pytest.raises(ValidationError):
            parse_loss(text)

    def test_unknown_lists_names(self):
        with pytest.raises(ValidationError, match="cross-entropy"):
            parse_loss("nope")


class TestPointwise:
    def test_hinge_value(self):
        _, h = binary(0.7, -0.1)
        assert loss_value(HINGE, h, 0, 1) == pytest.approx(1.1, abs=1e-15)

    def test_uniform_softmax(self):
        h = ScoreTable((0,), np.zeros((1, 3)))
        for y in (1, 2, 3):
            assert loss_value(CE, h, 0, y) == pytest.approx(1.0986123, abs=1e-7)
            assert loss_value(MAE, h, 0, y) == pytest.approx(2 / 3, abs=1e-15)

    def test_gce_q2_is_mae(self):
        rng = np.random.default_rng(0)
        h = ScoreTable(tuple(range(200)), rng.normal(0, 4, size=(200, 4)))
        assert np.max(np.abs(loss_matrix(LossSpec("gce", 2.0), h) - loss_matrix(MAE, h))) <= 1e-12

    def test_gce_printed_formula(self):
        h = ScoreTable((0,), np.array([[0.0, math.log(3.0)]]))
        p = 0.25
        assert loss_value(LossSpec("gce", 1.5), h, 0, 1) == pytest.approx((1 - p**0.5) / 0.5, abs=1e-14)

    def test_exp_comp_sum(self):
        h = ScoreTable((0,), np.array([[1.0, 0.0, -2.0]]))
        p = np.exp([1.0, 0.0, -2.0]) / np.exp([1.0, 0.0, -2.0]).sum()
        assert loss_value(LossSpec("exp-comp-sum"), h, 0, 1) == pytest.approx(1 / p[0] - 1, rel=1e-13)

    def test_extreme_scores_stay_finite(self):
        h = ScoreTable((0,), np.array([[800.0, -800.0, 0.0]]))
        assert np.all(np.isfinite(loss_matrix(CE, h)))
        assert loss_matrix(CE, h)[0, 0] == 0.0


class TestConditional:
    def test_zero_one_binary(self):
        d, h = binary(0.7, 1.0)
        assert conditional_error(ZERO_ONE, d, h, 0) == pytest.approx(0.3, abs=1e-15)

    def test_hinge(self):
        d, h = binary(0.7, -0.1)
        assert conditional_error(HINGE, d, h, 0) == pytest.approx(1.04, abs=1e-14)

    @pytest.mark.parametrize("loss", ["hinge", "logistic", "mae", "cross-entropy", "gce:q=1.5"])
    def test_degenerate_cond(self, loss):
        spec = parse_loss(loss)
        d = from_arrays([1.0], [[1.0, 0.0]])
        h = ScoreTable.from_binary(d.points, [0.3])
        assert conditional_error(spec, d, h, 0) == loss_value(spec, h, 0, 1)


class TestBestConditional:
    def test_zero_one_complete(self):
        d = from_arrays([1.0], [[0.2, 0.5, 0.3]])
        assert best_conditional_error(ZERO_ONE, d, CompleteClass(), 0) == 0.5

    def test_zero_one_closed_form_equals_enumeration(self):
        d = make_random_distribution(5, 6, 3)
        onehots = []
        for labels in product(range(3), repeat=6):
            s = np.zeros((6, 3))
            s[np.arange(6), labels] = 1.0
            onehots.append(ScoreTable(d.points, s))
        enum = best_conditional_errors(ZERO_ONE, d, FiniteSet(tuple(onehots)))
        assert np.array_equal(enum, best_conditional_errors(ZERO_ONE, d, CompleteClass()))

    def test_hinge_complete(self):
        d = from_arrays([1.0], [[0.7, 0.3]])
        assert best_conditional_error(HINGE, d, CompleteClass(), 0) == pytest.approx(0.6, abs=1e-9)

    def test_logistic_half(self):
        d = from_arrays([1.0], [[0.5, 0.5]])
        assert best_conditional_error(LOGISTIC, d, CompleteClass(), 0) == pytest.approx(0.6931472, abs=1e-7)

    def test_cross_entropy_half(self):
        d = from_arrays([1.0], [[0.5, 0.5]])
        assert best_conditional_error(CE, d, CompleteClass(), 0) == pytest.approx(0.6931472, abs=1e-7)

    def test_finite_set_is_member_min(self):
        d = make_random_distribution(2, 5, 3)
        rng = np.random.default_rng(2)
        members = [ScoreTable(d.points, rng.normal(size=(5, 3))) for _ in range(4)]
        got = best_conditional_errors(CE, d, FiniteSet(tuple(members)))
        ref = np.min([conditional_errors(CE, d, h) for h in members], axis=0)
        assert np.array_equal(got, ref)

    def test_margin_needs_binary(self):
        d = from_arrays([1.0], [[0.2, 0.5, 0.3]])
        with pytest.raises(ValidationError):
            best_conditional_errors(HINGE, d, CompleteClass())


class TestMarginOracle:
    @pytest.mark.parametrize("kind", MARGIN_KINDS)
    def test_closed_forms(self, kind):
        eta = np.linspace(0, 1, 201)
        got, _ = margin_infimum(kind, eta)
        ref = np.array([CLOSED_MARGIN[kind](e) for e in eta])
        np.testing.assert_allclose(got, ref, rtol=0, atol=1e-9)

    @pytest.mark.parametrize("kind", MARGIN_KINDS)
    @given(eta=st.floats(0, 1))
    @settings(max_examples=40, deadline=None)
    def test_symmetry(self, kind, eta):
        a, _ = margin_infimum(kind, [eta])
        b, _ = margin_infimum(kind, [1 - eta])
        assert abs(a[0] - b[0]) <= 1e-9

    def test_exponential_endpoint_is_zero(self):
        v, _ = margin_infimum("exponential", [0.0, 1.0])
        assert v.tolist() == [0.0, 0.0]

    def test_unconverged_raises(self):
        cfg = OracleConfig(score_bracket=1.0, max_doublings=0)
        with pytest.raises(OracleError, match="did not converge"):
            margin_infimum("logistic", [0.999999], cfg)

    def test_golden_section_parabola(self):
        x, fx = golden_section(lambda z: (z - 0.3) ** 2, np.array([-2.0]), np.array([5.0]), 1e-12)
        assert abs(x[0] - 0.3) < 1e-9 and fx[0] < 1e-18


class TestSimplexOracle:
    @given(seed=st.integers(0, 2**32), k=st.integers(2, 5))
    @settings(max_examples=30, deadline=None)
    def test_cross_entropy_is_entropy(self, seed, k):
        rng = np.random.default_rng(seed)
        p = rng.dirichlet(np.ones(k))
        got, _ = simplex_infimum(CE, p)
        ref = -sum(v * math.log(v) for v in p if v > 0)
        assert abs(got[0] - ref) <= 1e-6

    def test_mae_is_one_minus_max(self):
        P = np.random.default_rng(1).dirichlet(np.ones(3), size=50)
        got, _ = simplex_infimum(MAE, P)
        np.testing.assert_allclose(got, 1 - P.max(axis=1), atol=1e-8)

    def test_exp_comp_sum_closed_form(self):
        P = np.random.default_rng(2).dirichlet(np.ones(3), size=50)
        got, _ = simplex_infimum(LossSpec("exp-comp-sum"), P)
        np.testing.assert_allclose(got, np.sqrt(P).sum(axis=1) ** 2 - 1, atol=1e-8)


class TestRegret:
    def test_zero_one(self):
        d, h = binary(0.7, -1.0)
        assert conditional_regret(ZERO_ONE, d, CompleteClass(), h, 0) == pytest.approx(0.4, abs=1e-15)

    def test_hinge(self):
        d, h = binary(0.7, -0.1)
        assert conditional_regret(HINGE, d, CompleteClass(), h, 0) == pytest.approx(0.44, abs=1e-8)

    def test_optimum_has_zero_regret(self):
        d, h = binary(0.7, 1.0)
        assert conditional_regret(HINGE, d, CompleteClass(), h, 0) <= 1e-9

    @given(seed=st.integers(0, 2**32), loss=st.sampled_from(["hinge", "logistic", "exponential", "squared-hinge", "zero-one"]))
    @settings(max_examples=40, deadline=None)
    def test_nonnegative_binary(self, seed, loss):
        spec = parse_loss(loss)
        d = make_random_distribution(seed, 8, 2)
        h = ScoreTable.from_binary(d.points, np.random.default_rng(seed).normal(0, 3, size=8))
        assert np.all(conditional_regrets(spec, d, CompleteClass(), h) >= 0)
        assert np.all(best_conditional_errors(spec, d, CompleteClass()) <= conditional_errors(spec, d, h) + 1e-9)

    def test_clamp_raises_below_tol(self):
        with pytest.raises(OracleError):
            clamp_regrets(np.array([0.0, -1e-3]), 1e-6)
        assert clamp_regrets(np.array([-1e-12]), 1e-9).tolist() == [0.0]
