"""Excess errors, minimizability gaps, and bound verification.

Every theorem-level check returns a :class:`BoundReport` that keeps the
two failure modes apart: an unmet precondition (the theorem says nothing)
and a violated bound (a genuine counterexample).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .distmodel import DiscreteDistribution, ValidationError
from .hypothesis import CompleteClass, FiniteSet, HypothesisSet, ScoreTable, bayes_classifier
from .losses import (
    DEFAULT_ORACLE,
    ZERO_ONE,
    LossSpec,
    OracleConfig,
    OracleError,
    best_conditional_errors,
    clamp_regrets,
    conditional_errors,
)
from .margins import disagreement_mass, model_margins, uniform_B_min

EXACT_TOL = 1e-9
ORACLE_TOL = 1e-6


def _expect(dist: DiscreteDistribution, values: np.ndarray) -> float:
    return math.fsum(dist.weights * values)


def generalization_error(loss: LossSpec, dist, h: ScoreTable, cfg: OracleConfig = DEFAULT_ORACLE) -> float:
    return _expect(dist, conditional_errors(loss, dist, h))


def best_in_class_error(loss: LossSpec, dist, H: HypothesisSet, cfg: OracleConfig = DEFAULT_ORACLE) -> float:
    """inf over H of the generalization error.

    For the complete class the pointwise infimum is realizable member by
    member, so the expectation of the pointwise infima is exact.
    """
    if isinstance(H, FiniteSet):
        return min(generalization_error(loss, dist, h, cfg) for h in H)
    return _expect(dist, best_conditional_errors(loss, dist, H, cfg))


def _tol_for(loss: LossSpec, H: HypothesisSet) -> float:
    if isinstance(H, CompleteClass) and loss.family != "zero-one":
        return ORACLE_TOL
    return EXACT_TOL


def minimizability_gap(loss: LossSpec, dist, H: HypothesisSet, cfg: OracleConfig = DEFAULT_ORACLE, tol: Optional[float] = None) -> float:
    tol = _tol_for(loss, H) if tol is None else tol
    if isinstance(H, CompleteClass):
        return 0.0
    gap = best_in_class_error(loss, dist, H, cfg) - _expect(dist, best_conditional_errors(loss, dist, H, cfg))
    if gap < -tol:
        raise OracleError(f"minimizability gap {gap!r} below -{tol}")
    return max(gap, 0.0)


@dataclass
class ExcessReport:
    gen_error: float
    best_in_class: float
    minimizability_gap: float
    excess: float


def excess_report(
    loss: LossSpec,
    dist,
    H: HypothesisSet,
    h: ScoreTable,
    cfg: OracleConfig = DEFAULT_ORACLE,
    tol: Optional[float] = None,
) -> ExcessReport:
    """E(h) - E*(H) + M(H), which equals the expected conditional regret."""
    tol = _tol_for(loss, H) if tol is None else tol
    gen = generalization_error(loss, dist, h, cfg)
    best = best_in_class_error(loss, dist, H, cfg)
    gap = minimizability_gap(loss, dist, H, cfg, tol)
    excess = gen - best + gap
    if excess < -tol:
        raise OracleError(f"excess {excess!r} below -{tol} for {loss.label()}")
    return ExcessReport(gen, best, gap, max(excess, 0.0))


# ---------------------------------------------------------------------------
# Lemma: disagreement mass vs 0-1 excess


@dataclass
class LemmaRecord:
    alpha: float
    disagreement_mass: float
    zero_one_excess_vs_bayes: float
    margin_integral: float
    identity_gap: float
    B_min: float
    c: float
    bound: float
    holds: bool
    variational_lower: float
    variational_holds: bool


def mm_constant(B: float, alpha: float) -> float:
    """B^(1-alpha) / alpha^alpha."""
    return B ** (1.0 - alpha) / alpha**alpha


def lemma_mm_verify(
    dist: DiscreteDistribution,
    H: FiniteSet,
    h: ScoreTable,
    alpha: float,
    tol: float = EXACT_TOL,
    B_min: Optional[float] = None,
) -> LemmaRecord:
    """Check Pr[mu > 0] <= c (E01(h) - E01(h*))^alpha with c from the uniform B_min over H."""
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if isinstance(H, CompleteClass):
        raise ValidationError("the lemma check needs a finite hypothesis set")
    mu = model_margins(dist, h)
    mass = math.fsum(dist.weights[mu > 0])
    integral = math.fsum(dist.weights * np.where(mu > 0, mu, 0.0))
    h_star = bayes_classifier(dist)
    excess = generalization_error(ZERO_ONE, dist, h) - generalization_error(ZERO_ONE, dist, h_star)
    if B_min is None:
        B_min = uniform_B_min(dist, H, alpha)
    c = mm_constant(B_min, alpha)
    bound = c * max(excess, 0.0) ** alpha
    if mass == 0.0:
        lower = 0.0
    else:
        lower = alpha * B_min ** (-(1.0 - alpha) / alpha) * mass ** (1.0 / alpha)
    return LemmaRecord(
        alpha=alpha,
        disagreement_mass=mass,
        zero_one_excess_vs_bayes=excess,
        margin_integral=integral,
        identity_gap=integral - excess,
        B_min=B_min,
        c=c,
        bound=bound,
        holds=mass <= bound + tol,
        variational_lower=lower,
        variational_holds=integral >= lower - tol,
    )


# ---------------------------------------------------------------------------
# Pointwise power precondition


@dataclass
class PowerCheck:
    holds: bool
    max_violation: float
    worst_witness: Optional[tuple]  # (hypothesis index, point id, gap)
    n_checked: int
    constant: float = 1.0


def power_check(
    loss: LossSpec,
    s: float,
    dist: DiscreteDistribution,
    H: HypothesisSet,
    cfg: OracleConfig = DEFAULT_ORACLE,
    hypotheses: Optional[Sequence[ScoreTable]] = None,
    tol: float = 1e-8,
    constant: float = 1.0,
) -> PowerCheck:
    """Check dC01_H(h,x) <= constant * dC_loss_H(h,x)^(1/s) over hypotheses x support.

    ``hypotheses`` defaults to the members of a finite ``H``; for the
    complete class it must be supplied (sampled members). ``constant`` = 1
    is the precondition exactly as the theorems state it.
    """
    if s < 1:
        raise ValidationError(f"s must be >= 1, got {s}")
    if hypotheses is None:
        if isinstance(H, CompleteClass):
            raise ValidationError("pass sampled hypotheses to check the complete class")
        hypotheses = list(H)
    best01 = best_conditional_errors(ZERO_ONE, dist, H, cfg)
    best_l = best_conditional_errors(loss, dist, H, cfg)
    worst = -math.inf
    witness = None
    slack = _tol_for(loss, H)
    for k, h in enumerate(hypotheses):
        d01 = clamp_regrets(conditional_errors(ZERO_ONE, dist, h) - best01, EXACT_TOL, "0-1 regret")
        dl = clamp_regrets(conditional_errors(loss, dist, h) - best_l, slack, f"{loss.label()} regret")
        gap = d01 - constant * dl ** (1.0 / s)
        j = int(np.argmax(gap))
        if gap[j] > worst:
            worst = float(gap[j])
            witness = (k, dist.points[j], worst)
    n = len(hypotheses) * dist.size
    return PowerCheck(worst <= tol, max(worst, 0.0), witness, n, constant)


def margin_grid_instance(eta_grid: Sequence[float], score_grid: Sequence[float]):
    """Distribution over eta values plus one constant-score hypothesis per grid score."""
    eta = np.asarray(eta_grid, dtype=np.float64)
    n = eta.size
    dist = DiscreteDistribution(tuple(range(n)), np.full(n, 1.0 / n), np.column_stack([eta, 1.0 - eta]), 2)
    pts = dist.points
    hyps = [ScoreTable.from_binary(pts, np.full(n, z)) for z in score_grid]
    return dist, hyps


def power_check_margin_grid(
    loss: LossSpec,
    s: float,
    n_eta: int = 1001,
    n_score: int = 2001,
    score_span: float = 5.0,
    cfg: OracleConfig = DEFAULT_ORACLE,
    tol: float = 1e-8,
    constant: float = 1.0,
) -> PowerCheck:
    """Binary power check on eta in linspace(0, 1) x score in linspace(-span, span)."""
    dist, hyps = margin_grid_instance(np.linspace(0.0, 1.0, n_eta), np.linspace(-score_span, score_span, n_score))
    res = power_check(loss, s, dist, CompleteClass(), cfg, hyps, tol, constant)
    if res.worst_witness is not None:
        k, point, gap = res.worst_witness
        res.worst_witness = (float(dist.cond[point, 0]), float(hyps[k].binary_scores()[0]), gap)
    return res


def sampled_comp_sum_instance(n_labels: int = 3, n_pairs: int = 10_000, seed: int = 0, score_scale: float = 3.0):
    """Seeded (conditional vector, score vector) pairs laid out as one distribution and one table."""
    rng = np.random.default_rng(seed)
    conc = np.exp(rng.uniform(math.log(0.2), math.log(5.0), size=(n_pairs, 1)))
    raw = np.maximum(rng.uniform(size=(n_pairs, n_labels)) ** (1.0 / conc), np.finfo(float).tiny)
    cond = raw / raw.sum(axis=1, keepdims=True)
    scores = rng.normal(0.0, score_scale, size=(n_pairs, n_labels))
    pts = tuple(range(n_pairs))
    dist = DiscreteDistribution(pts, np.full(n_pairs, 1.0 / n_pairs), cond, n_labels)
    return dist, ScoreTable(pts, scores)


def power_check_comp_sum_sampled(
    loss: LossSpec,
    s: float,
    n_labels: int = 3,
    n_pairs: int = 10_000,
    seed: int = 0,
    cfg: OracleConfig = DEFAULT_ORACLE,
    tol: float = ORACLE_TOL,
    constant: float = 1.0,
) -> PowerCheck:
    dist, h = sampled_comp_sum_instance(n_labels, n_pairs, seed)
    res = power_check(loss, s, dist, CompleteClass(), cfg, [h], tol, constant)
    if res.worst_witness is not None:
        _, point, gap = res.worst_witness
        res.worst_witness = (tuple(float(v) for v in dist.cond[point]), tuple(float(v) for v in h.scores[point]), gap)
    return res


# ---------------------------------------------------------------------------
# Theorem verification


def conjugate(s: float) -> float:
    """t with 1/s + 1/t = 1; infinite at s = 1."""
    if s < 1:
        raise ValidationError(f"s must be >= 1, got {s}")
    return math.inf if s == 1 else s / (s - 1.0)


def low_noise_exponent(s, alpha):
    """1 / (s - alpha (s - 1)). Exact when given Fractions or ints."""
    if s < 1:
        raise ValidationError(f"s must be >= 1, got {s}")
    if not (0 <= alpha <= 1):
        raise ValidationError(f"alpha must lie in [0, 1], got {alpha}")
    one = Fraction(1) if isinstance(s, (int, Fraction)) and isinstance(alpha, (int, Fraction)) else 1.0
    return one / (s - alpha * (s - 1))


def low_noise_constant(c: float, s: float, alpha: float) -> float:
    """c^((s-1)/(s - alpha(s-1)))."""
    return c ** ((s - 1.0) / (s - alpha * (s - 1.0)))


@dataclass
class BoundReport:
    mode: str
    lhs: float
    factor: float
    surrogate_excess: float
    s: float
    t_conj: float
    exponent: float
    constant: float
    rhs: float
    rhs_enhanced: float
    rhs_standard: float
    satisfied: bool
    precondition_ok: bool
    alpha: Optional[float] = None
    tol: float = EXACT_TOL
    worst_pointwise_witness: Optional[tuple] = None
    notes: list = field(default_factory=list)

    @property
    def binding(self) -> bool:
        """Whether the theorem actually asserts this bound."""
        return self.precondition_ok

    def zero_one_fields(self) -> tuple:
        return (self.lhs, self.factor)

    def to_dict(self) -> dict:
        d = {
            "mode": self.mode,
            "lhs": self.lhs,
            "factor": self.factor,
            "surrogate_excess": self.surrogate_excess,
            "s": self.s,
            "t_conj": None if math.isinf(self.t_conj) else self.t_conj,
            "exponent": self.exponent,
            "constant": self.constant,
            "rhs": self.rhs,
            "rhs_enhanced": self.rhs_enhanced,
            "rhs_standard": self.rhs_standard,
            "satisfied": self.satisfied,
            "precondition_ok": self.precondition_ok,
            "alpha": self.alpha,
        }
        if self.worst_pointwise_witness is not None:
            pt, gap = self.worst_pointwise_witness
            d["witness"] = {"point": pt, "gap": gap}
        if self.notes:
            d["notes"] = list(self.notes)
        return d


def _hoelder_factor(mass: float, s: float) -> float:
    if s == 1:
        return 1.0
    return mass ** ((s - 1.0) / s)


def _zero_one_side(dist, H, h, cfg):
    lhs = excess_report(ZERO_ONE, dist, H, h, cfg, EXACT_TOL).excess
    return lhs, disagreement_mass(dist, h)


def verify_theorem_general(
    loss: LossSpec,
    s: float,
    dist: DiscreteDistribution,
    H: HypothesisSet,
    h: ScoreTable,
    cfg: OracleConfig = DEFAULT_ORACLE,
    tol: Optional[float] = None,
) -> BoundReport:
    """Enhanced bound with the disagreement-mass factor, for a single h."""
    tol = _tol_for(loss, H) if tol is None else tol
    t_conj = conjugate(s)
    lhs, mass = _zero_one_side(dist, H, h, cfg)
    factor = _hoelder_factor(mass, s)
    surr = excess_report(loss, dist, H, h, cfg, tol).excess
    standard = surr ** (1.0 / s)
    rhs = factor * standard
    pc = power_check(loss, s, dist, H, cfg, [h], tol)
    witness = None if pc.worst_witness is None else (pc.worst_witness[1], pc.worst_witness[2])
    rep = BoundReport(
        mode="general",
        lhs=lhs,
        factor=factor,
        surrogate_excess=surr,
        s=float(s),
        t_conj=t_conj,
        exponent=1.0 / s,
        constant=1.0,
        rhs=rhs,
        rhs_enhanced=rhs,
        rhs_standard=standard,
        satisfied=lhs <= rhs + tol,
        precondition_ok=pc.holds,
        tol=tol,
        worst_pointwise_witness=witness,
    )
    if not pc.holds:
        rep.notes.append("pointwise power precondition unmet; bound is not asserted")
    return rep


def verify_theorem_low_noise(
    loss: LossSpec,
    s: float,
    dist: DiscreteDistribution,
    H: FiniteSet,
    h: ScoreTable,
    alpha: float,
    cfg: OracleConfig = DEFAULT_ORACLE,
    tol: Optional[float] = None,
) -> BoundReport:
    """Low-noise bound with exponent 1/(s - alpha(s-1)) and c from the uniform MM constant."""
    if not (0.0 < alpha < 1.0):
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    if not isinstance(H, FiniteSet):
        raise ValidationError("the low-noise check needs a finite hypothesis set")
    tol = _tol_for(loss, H) if tol is None else tol
    t_conj = conjugate(s)
    notes = []
    h_star = bayes_classifier(dist)
    e_star = best_in_class_error(ZERO_ONE, dist, H, cfg)
    approx_ok = abs(e_star - generalization_error(ZERO_ONE, dist, h_star, cfg)) <= EXACT_TOL
    gap01 = minimizability_gap(ZERO_ONE, dist, H, cfg, EXACT_TOL)
    if not approx_ok:
        notes.append("E*_01(H) != E_01(h*): approximation-error precondition unmet")
    elif gap01 > EXACT_TOL:
        notes.append(f"E*_01(H) = E_01(h*) but zero-one minimizability gap is {gap01!r}")
    pc = power_check(loss, s, dist, H, cfg, [h], tol)
    if not pc.holds:
        notes.append("pointwise power precondition unmet; bound is not asserted")
    lhs, mass = _zero_one_side(dist, H, h, cfg)
    lemma = lemma_mm_verify(dist, H, h, alpha)
    exponent = low_noise_exponent(float(s), alpha)
    constant = low_noise_constant(lemma.c, s, alpha)
    surr = excess_report(loss, dist, H, h, cfg, tol).excess
    rhs = constant * surr**exponent
    factor = _hoelder_factor(mass, s)
    standard = surr ** (1.0 / s)
    witness = None if pc.worst_witness is None else (pc.worst_witness[1], pc.worst_witness[2])
    return BoundReport(
        mode="low-noise",
        lhs=lhs,
        factor=factor,
        surrogate_excess=surr,
        s=float(s),
        t_conj=t_conj,
        exponent=exponent,
        constant=constant,
        rhs=rhs,
        rhs_enhanced=factor * standard,
        rhs_standard=standard,
        satisfied=lhs <= rhs + tol,
        precondition_ok=approx_ok and gap01 <= EXACT_TOL and pc.holds,
        alpha=alpha,
        tol=tol,
        worst_pointwise_witness=witness,
        notes=notes,
    )


def verify_theorem_binary(
    loss: LossSpec,
    s: float,
    dist: DiscreteDistribution,
    H: HypothesisSet,
    h: ScoreTable,
    alpha: Optional[float] = None,
    cfg: OracleConfig = DEFAULT_ORACLE,
    tol: Optional[float] = None,
) -> BoundReport:
    """Binary analogue: the binary 0-1 loss is the 2-label multi-class 0-1 loss under sign(0) = +1."""
    if dist.n_labels != 2:
        raise ValidationError(f"binary verification needs 2 labels, got {dist.n_labels}")
    if alpha is None:
        return verify_theorem_general(loss, s, dist, H, h, cfg, tol)
    return verify_theorem_low_noise(loss, s, dist, H, h, alpha, cfg, tol)
