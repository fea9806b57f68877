import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from marginlab.bounds import (
    conjugate,
    generalization_error,
    best_in_class_error,
    lemma_mm_verify,
    low_noise_exponent,
    minimizability_gap,
    power_check,
    power_check_comp_sum_sampled,
    power_check_margin_grid,
    verify_theorem_binary,
    verify_theorem_general,
    verify_theorem_low_noise,
)
from marginlab.distmodel import Figure1Params, ValidationError, from_arrays, make_figure1_distribution
from marginlab.hypothesis import CompleteClass, FiniteSet, ScoreTable, bayes_classifier
from marginlab.losses import ZERO_ONE, LossSpec, conditional_errors, parse_loss
from marginlab.trials import general_trial, lemma_trial, low_noise_trial

LOGISTIC = LossSpec("logistic")
HINGE = LossSpec("hinge")
TWO_POINT = from_arrays([0.5, 0.5], [[0.6, 0.4], [0.9, 0.1]])
H_TWO = ScoreTable((0, 1), np.array([[0.0, 1.0], [1.0, 0.0]]))


class TestErrors:
    def test_figure1_zero_one(self):
        d = make_figure1_distribution(Figure1Params(0.25, 2.0, 4))
        x = np.array([0.125, 0.375, 0.625, 0.875])
        got = generalization_error(ZERO_ONE, d, bayes_classifier(d))
        assert got == pytest.approx(1 - (0.5 + 0.25 * np.mean(x**2)), abs=1e-15)

    def test_single_point(self):
        d = from_arrays([1.0], [[0.7, 0.3]])
        h = ScoreTable.from_binary((0,), [-0.1])
        assert generalization_error(HINGE, d, h) == conditional_errors(HINGE, d, h)[0]

    def test_best_in_class(self):
        h2 = ScoreTable((0, 1), np.array([[1.0, 0.0], [1.0, 0.0]]))
        assert best_in_class_error(ZERO_ONE, TWO_POINT, FiniteSet((H_TWO,))) == generalization_error(ZERO_ONE, TWO_POINT, H_TWO)
        assert best_in_class_error(ZERO_ONE, TWO_POINT, FiniteSet((H_TWO, h2))) == generalization_error(ZERO_ONE, TWO_POINT, h2)
        assert best_in_class_error(ZERO_ONE, TWO_POINT, CompleteClass()) == pytest.approx(0.5 * 0.4 + 0.5 * 0.1, abs=1e-15)


class TestGap:
    def test_complete_is_zero(self):
        assert minimizability_gap(LOGISTIC, TWO_POINT, CompleteClass()) == 0.0

    def test_bayes_singleton(self):
        d = make_figure1_distribution(Figure1Params(0.25, 2.0, 20))
        assert minimizability_gap(ZERO_ONE, d, FiniteSet((bayes_classifier(d),))) == 0.0

    def test_singleton_is_zero(self):
        h = ScoreTable((0, 1), np.array([[0.0, 1.0], [0.0, 1.0]]))
        assert minimizability_gap(ZERO_ONE, TWO_POINT, FiniteSet((h,))) == 0.0

    def test_two_members_brute_force(self):
        # each member is right on one half of the mass; pointwise best beats both
        d = from_arrays([0.5, 0.5], [[0.8, 0.2], [0.8, 0.2]])
        a = ScoreTable((0, 1), np.array([[1.0, 0.0], [0.0, 1.0]]))
        b = ScoreTable((0, 1), np.array([[0.0, 1.0], [1.0, 0.0]]))
        member_best = 0.5 * 0.2 + 0.5 * 0.8
        pointwise = 0.2
        assert minimizability_gap(ZERO_ONE, d, FiniteSet((a, b))) == pytest.approx(member_best - pointwise, abs=1e-15)


class TestLemma:
    def test_two_point_example(self):
        rec = lemma_mm_verify(TWO_POINT, FiniteSet((H_TWO,)), H_TWO, 0.5)
        assert rec.disagreement_mass == 0.5
        assert rec.zero_one_excess_vs_bayes == pytest.approx(0.1, abs=1e-15)
        assert rec.B_min == pytest.approx(2.5, abs=1e-12)
        assert rec.c == pytest.approx(2.2360680, abs=1e-7)
        assert rec.bound == pytest.approx(0.7071068, abs=1e-7)
        assert rec.holds and rec.variational_holds

    def test_bayes(self):
        h = bayes_classifier(TWO_POINT)
        for alpha in (0.1, 0.5, 0.9):
            rec = lemma_mm_verify(TWO_POINT, FiniteSet((h,)), h, alpha)
            assert rec.disagreement_mass == 0 and rec.zero_one_excess_vs_bayes == 0 and rec.holds

    @pytest.mark.parametrize("index", range(60))
    def test_identity_and_inequality(self, index):
        tr = lemma_trial(11, index)
        for h in tr.H:
            rec = lemma_mm_verify(tr.dist, tr.H, h, 0.5)
            assert abs(rec.identity_gap) <= 1e-12
            assert rec.holds and rec.variational_holds

    def test_alpha_range(self):
        with pytest.raises(ValidationError):
            lemma_mm_verify(TWO_POINT, FiniteSet((H_TWO,)), H_TWO, 1.0)


class TestPower:
    def test_hinge_s1(self):
        assert power_check_margin_grid(HINGE, 1.0, 201, 401).holds

    def test_squared_hinge_s2(self):
        assert power_check_margin_grid(LossSpec("squared-hinge"), 2.0, 201, 401).holds

    def test_logistic_s1_witness_near_half(self):
        res = power_check_margin_grid(LOGISTIC, 1.0, 201, 401)
        eta, z, gap = res.worst_witness
        assert not res.holds and gap > 0.1
        assert abs(eta - 0.5) < 0.45 and abs(z) < 0.5

    def test_logistic_s2_needs_root_two(self):
        assert not power_check_margin_grid(LOGISTIC, 2.0, 201, 401).holds
        assert power_check_margin_grid(LOGISTIC, 2.0, 201, 401, constant=math.sqrt(2)).holds

    @pytest.mark.parametrize("name", ["cross-entropy", "exp-comp-sum", "gce:q=1.5"])
    def test_comp_sum_s2_needs_more_than_one(self, name):
        loss = parse_loss(name)
        assert not power_check_comp_sum_sampled(loss, 2.0, 3, 2000, 0).holds
        assert power_check_comp_sum_sampled(loss, 2.0, 3, 2000, 0, constant=math.sqrt(2)).holds

    def test_mae_s1_fails_at_two(self):
        assert not power_check_comp_sum_sampled(LossSpec("mae"), 1.0, 3, 2000, 0, constant=2.0).holds

    def test_complete_class_needs_samples(self):
        with pytest.raises(ValidationError):
            power_check(LOGISTIC, 2.0, TWO_POINT, CompleteClass())


class TestExponent:
    def test_values(self):
        assert low_noise_exponent(2, Fraction(1, 2)) == Fraction(2, 3)
        assert low_noise_exponent(2, 0) == Fraction(1, 2)
        assert low_noise_exponent(2, 1) == 1

    @given(s=st.floats(1.01, 10))
    @settings(max_examples=50, deadline=None)
    def test_increasing_in_alpha(self, s):
        e = [low_noise_exponent(s, a) for a in np.linspace(0, 1, 41)]
        assert all(b > a for a, b in zip(e, e[1:]))

    def test_conjugate(self):
        assert conjugate(1) == math.inf and conjugate(2) == 2.0


class TestGeneral:
    def test_bayes_zero(self):
        d = TWO_POINT
        rep = verify_theorem_general(LOGISTIC, 2.0, d, CompleteClass(), bayes_classifier(d))
        assert rep.lhs == 0 and rep.factor == 0 and rep.satisfied

    def test_factor_quarter_mass(self):
        d = from_arrays([0.25, 0.75], [[0.6, 0.4], [0.9, 0.1]])
        h = ScoreTable.from_binary((0, 1), [-1.0, 1.0])
        rep = verify_theorem_general(LOGISTIC, 2.0, d, CompleteClass(), h)
        assert rep.factor == 0.5

    def test_hinge_factor_one(self):
        rep = verify_theorem_general(HINGE, 1.0, TWO_POINT, CompleteClass(), H_TWO)
        assert rep.factor == 1.0 and rep.t_conj == math.inf and rep.satisfied

    @pytest.mark.parametrize("index", range(80))
    def test_seeded(self, index):
        tr = general_trial(5, index)
        rep = verify_theorem_general(LOGISTIC, 2.0, tr.dist, CompleteClass(), tr.h)
        assert 0 <= rep.factor <= 1
        assert rep.rhs_enhanced <= rep.rhs_standard
        if rep.precondition_ok:
            assert rep.satisfied

    def test_report_dict(self):
        d = verify_theorem_general(HINGE, 1.0, TWO_POINT, CompleteClass(), H_TWO).to_dict()
        assert d["t_conj"] is None and d["mode"] == "general"


class TestLowNoise:
    @pytest.mark.parametrize("index", range(40))
    def test_seeded(self, index):
        tr = low_noise_trial(5, index)
        for alpha in (0.25, 0.5, 0.75):
            rep = verify_theorem_low_noise(LOGISTIC, 2.0, tr.dist, tr.H, tr.h, alpha)
            assert rep.exponent == pytest.approx(1 / (2 - alpha), abs=1e-15)
            assert rep.rhs_enhanced <= rep.rhs_standard
            if rep.precondition_ok:
                assert rep.satisfied

    def test_precondition_flag(self):
        # H lacks h*: E*_01(H) > E_01(h*)
        h = ScoreTable.from_binary((0, 1), [-1.0, 1.0])
        rep = verify_theorem_low_noise(HINGE, 1.0, TWO_POINT, FiniteSet((h,)), h, 0.5)
        assert not rep.precondition_ok and rep.notes

    def test_needs_finite(self):
        with pytest.raises(ValidationError):
            verify_theorem_low_noise(LOGISTIC, 2.0, TWO_POINT, CompleteClass(), H_TWO, 0.5)


class TestBinary:
    def test_figure1_bayes(self):
        d = make_figure1_distribution(Figure1Params(0.25, 2.0, 50))
        h = bayes_classifier(d)
        rep = verify_theorem_binary(LOGISTIC, 2.0, d, FiniteSet((h,)), h, alpha=0.5)
        assert rep.lhs == 0 and rep.satisfied

    def test_same_as_multiclass_path(self):
        for index in range(200):
            tr = general_trial(9, index, max_support=8)
            a = verify_theorem_binary(LOGISTIC, 2.0, tr.dist, CompleteClass(), tr.h)
            b = verify_theorem_general(LOGISTIC, 2.0, tr.dist, CompleteClass(), tr.h)
            assert a.to_dict() == b.to_dict()

    def test_rejects_multiclass(self):
        d = from_arrays([1.0], [[0.2, 0.5, 0.3]])
        with pytest.raises(ValidationError):
            verify_theorem_binary(LossSpec("cross-entropy"), 2.0, d, CompleteClass(), ScoreTable((0,), np.zeros((1, 3))))
