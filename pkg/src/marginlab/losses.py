"""Zero-one, binary margin-based, and multi-class comp-sum losses.

Besides pointwise loss values this module computes conditional errors
E_{y|x}[loss] and their infima over a hypothesis set. For a finite set the
infimum is an exact minimum over members. For the complete class it is a
pointwise problem: closed form for the zero-one loss, a bracketed
golden-section search over the score for margin losses, and pairwise
coordinate descent on the eps-interior of the probability simplex for
comp-sum losses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Optional

import numpy as np

from .distmodel import DiscreteDistribution, ValidationError
from .hypothesis import CompleteClass, FiniteSet, HypothesisSet, ScoreTable, bayes_classifier, check_compatible

MARGIN_KINDS = ("hinge", "logistic", "exponential", "squared-hinge")
COMP_SUM_KINDS = ("mae", "cross-entropy", "exp-comp-sum", "gce")
LOSS_NAMES = ("zero-one",) + MARGIN_KINDS + ("mae", "cross-entropy", "exp-comp-sum", "gce:q=<value>")

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class OracleError(RuntimeError):
    """A minimization oracle failed to converge or returned an inconsistent value."""


@dataclass(frozen=True)
class LossSpec:
    """A loss identified by its CLI name; ``q`` is used by GCE only."""

    name: str
    q: Optional[float] = None

    def __post_init__(self):
        if self.name not in ("zero-one",) + MARGIN_KINDS + COMP_SUM_KINDS:
            raise ValidationError(f"unknown loss {self.name!r}; valid names: {', '.join(LOSS_NAMES)}")
        if self.name == "gce":
            if self.q is None:
                object.__setattr__(self, "q", 2.0)
            if not (self.q > 1.0) or not math.isfinite(self.q):
                raise ValidationError(f"GCE requires q > 1, got q={self.q}")
        elif self.q is not None:
            raise ValidationError(f"parameter q is only meaningful for gce, not {self.name}")

    @property
    def family(self) -> str:
        if self.name == "zero-one":
            return "zero-one"
        return "margin" if self.name in MARGIN_KINDS else "comp-sum"

    def label(self) -> str:
        return f"gce:q={self.q:g}" if self.name == "gce" else self.name

    def __str__(self) -> str:
        return self.label()


ZERO_ONE = LossSpec("zero-one")


def parse_loss(text: str) -> LossSpec:
    """Parse a CLI loss name such as ``logistic`` or ``gce:q=1.5``."""
    text = text.strip().lower()
    if text.startswith("gce"):
        q = None
        if ":" in text:
            _, arg = text.split(":", 1)
            key, _, value = arg.partition("=")
            if key.strip() != "q" or not value:
                raise ValidationError(f"malformed GCE parameter {arg!r}; expected gce:q=<value>")
            try:
                q = float(value)
            except ValueError:
                raise ValidationError(f"GCE q is not a number: {value!r}") from None
        return LossSpec("gce", q)
    return LossSpec(text)


@dataclass(frozen=True)
class OracleConfig:
    score_bracket: float = 50.0
    grid: int = 64
    simplex_floor: float = 1e-9
    tol: float = 1e-9
    max_doublings: int = 4
    max_sweeps: int = 2000

    def __post_init__(self):
        if not (self.score_bracket > 0 and self.grid >= 3 and self.tol > 0):
            raise ValidationError("score_bracket, grid (>= 3) and tol must be positive")
        if not (0 < self.simplex_floor <= 1e-3):
            raise ValidationError(f"simplex_floor must lie in (0, 1e-3], got {self.simplex_floor}")


DEFAULT_ORACLE = OracleConfig()


# ---------------------------------------------------------------------------
# Pointwise losses


def margin_phi(kind: str, z):
    z = np.asarray(z, dtype=np.float64)
    if kind == "hinge":
        return np.maximum(0.0, 1.0 - z)
    if kind == "logistic":
        return np.logaddexp(0.0, -z)
    if kind == "exponential":
        return np.exp(-z)
    if kind == "squared-hinge":
        return np.maximum(0.0, 1.0 - z) ** 2
    raise ValueError(f"not a margin loss: {kind}")


def comp_sum_of_prob(loss: LossSpec, p):
    """Comp-sum loss as a function of the softmax probability of the true label."""
    p = np.asarray(p, dtype=np.float64)
    if loss.name == "mae":
        return 1.0 - p
    if loss.name == "cross-entropy":
        return -np.log(p)
    if loss.name == "exp-comp-sum":
        return 1.0 / p - 1.0
    if loss.name == "gce":
        qm1 = loss.q - 1.0
        return -np.expm1(qm1 * np.log(p)) / qm1
    raise ValueError(f"not a comp-sum loss: {loss.name}")


def _comp_sum_matrix(loss: LossSpec, scores: np.ndarray) -> np.ndarray:
    top = scores.max(axis=1, keepdims=True)
    e = np.exp(scores - top)
    total = e.sum(axis=1, keepdims=True)
    log_p = (scores - top) - np.log(total)
    if loss.name == "cross-entropy":
        return -log_p
    if loss.name == "mae":
        return (total - e) / total
    if loss.name == "exp-comp-sum":
        diff = np.exp(scores[:, None, :] - scores[:, :, None])
        n = scores.shape[1]
        diff[:, np.arange(n), np.arange(n)] = 0.0
        return diff.sum(axis=2)
    if loss.name == "gce":
        qm1 = loss.q - 1.0
        return -np.expm1(qm1 * log_p) / qm1
    raise ValueError(loss.name)


def loss_matrix(loss: LossSpec, h: ScoreTable) -> np.ndarray:
    """loss(h, x, y) for every point (rows) and label (columns)."""
    fam = loss.family
    if fam == "zero-one":
        out = np.ones(h.scores.shape)
        out[np.arange(h.scores.shape[0]), h.label_indices()] = 0.0
        return out
    if fam == "margin":
        if h.n_labels != 2:
            raise ValidationError(f"margin loss {loss.name} requires 2 labels, got {h.n_labels}")
        z = h.binary_scores()
        return np.column_stack([margin_phi(loss.name, z), margin_phi(loss.name, -z)])
    return _comp_sum_matrix(loss, h.scores)


def loss_value(loss: LossSpec, h: ScoreTable, x: Hashable, y: int) -> float:
    """loss(h, x, y) for a 1-based label ``y``."""
    row = ScoreTable((x,), h.row(x)[None, :])
    if not 1 <= y <= h.n_labels:
        raise ValueError(f"label {y} outside 1..{h.n_labels}")
    return float(loss_matrix(loss, row)[0, y - 1])


def _expect_rows(cond: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Row-wise sum of cond * values in label order, compensated for n > 2."""
    prod = cond * values
    if prod.shape[1] == 1:
        return prod[:, 0].copy()
    if prod.shape[1] == 2:
        return prod[:, 0] + prod[:, 1]
    return np.array([math.fsum(r) for r in prod])


def conditional_errors(loss: LossSpec, dist: DiscreteDistribution, h: ScoreTable) -> np.ndarray:
    check_compatible(h, dist)
    return _expect_rows(dist.cond, loss_matrix(loss, h))


def conditional_error(loss: LossSpec, dist: DiscreteDistribution, h: ScoreTable, x: Hashable) -> float:
    return float(conditional_errors(loss, dist, h)[dist.index(x)])


# ---------------------------------------------------------------------------
# Oracles


def golden_section(f: Callable[[np.ndarray], np.ndarray], lo, hi, tol: float, max_iter: int = 400):
    """Vectorized golden-section minimization of unimodal ``f`` on [lo, hi].

    Each array element is an independent problem. Returns the best abscissa
    seen and its value; iteration stops once every bracket is narrower than
    ``tol`` (scaled by max(1, |x|)).
    """
    a = np.array(lo, dtype=np.float64, ndmin=1)
    b = np.array(hi, dtype=np.float64, ndmin=1)
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if np.all((b - a) <= tol * np.maximum(1.0, np.abs(a) + np.abs(b))):
            break
        left = fc <= fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - _INV_PHI * (b - a)
        new_d = a + _INV_PHI * (b - a)
        c_next = np.where(left, new_c, d)
        d_next = np.where(left, c, new_d)
        # Only one new evaluation point per element is genuinely needed; the
        # vectorized form evaluates both and keeps the reused value.
        f_new_c = f(new_c)
        f_new_d = f(new_d)
        fc, fd = np.where(left, f_new_c, fd), np.where(left, fc, f_new_d)
        c, d = c_next, d_next
    else:
        raise OracleError(f"golden section did not converge; last bracket [{a.min()}, {b.max()}]")
    # Endpoints are included so a minimizer on the bracket edge is not missed.
    fa, fb = f(a), f(b)
    xs = np.stack([a, c, d, b])
    fs = np.stack([fa, fc, fd, fb])
    k = np.argmin(fs, axis=0)
    cols = np.arange(xs.shape[1])
    return xs[k, cols], fs[k, cols]


def margin_conditional(kind: str, eta, z):
    """eta * Phi(z) + (1 - eta) * Phi(-z); a zero weight kills an infinite term."""
    with np.errstate(over="ignore", invalid="ignore"):
        pos = np.where(eta > 0, eta * margin_phi(kind, z), 0.0)
        neg = np.where(eta < 1, (1.0 - eta) * margin_phi(kind, -z), 0.0)
    return pos + neg


def margin_infimum(kind: str, eta, cfg: OracleConfig = DEFAULT_ORACLE):
    """inf_z eta Phi(z) + (1 - eta) Phi(-z) for each entry of ``eta``.

    Returns (values, minimizers). A coarse scan of ``cfg.grid`` points
    localizes the minimum before golden-section refinement; when the scan
    minimum sits on the bracket edge the bracket is doubled.
    """
    eta = np.array(eta, dtype=np.float64, ndmin=1)
    values = np.empty_like(eta)
    argmins = np.empty_like(eta)
    todo = np.arange(eta.size)
    half = cfg.score_bracket
    for attempt in range(cfg.max_doublings + 1):
        e = eta[todo]
        zs = np.linspace(-half, half, cfg.grid)
        fz = margin_conditional(kind, e[:, None], zs[None, :])
        j = np.argmin(fz, axis=1)
        lo = zs[np.maximum(j - 1, 0)]
        hi = zs[np.minimum(j + 1, cfg.grid - 1)]
        x, fx = golden_section(lambda z: margin_conditional(kind, e, z), lo, hi, cfg.tol * 1e-2)
        on_edge = np.abs(np.abs(x) - half) <= cfg.tol * half
        values[todo] = fx
        argmins[todo] = x
        if not np.any(on_edge):
            return values, argmins
        if attempt == cfg.max_doublings:
            idx = todo[on_edge]
            small = values[idx] < cfg.tol
            values[idx[small]] = 0.0
            if np.any(~small):
                bad = idx[~small][0]
                raise OracleError(
                    f"margin oracle for {kind} did not converge at eta={eta[bad]!r}: "
                    f"minimizer on edge of bracket [-{half}, {half}] with value {values[bad]!r}"
                )
            return values, argmins
        todo = todo[on_edge]
        half *= 2.0
    return values, argmins


def simplex_objective(loss: LossSpec, cond: np.ndarray, p: np.ndarray) -> np.ndarray:
    return np.sum(cond * comp_sum_of_prob(loss, p), axis=-1)


def _is_convex_in_p(loss: LossSpec) -> bool:
    """Whether p -> loss(p) is strictly convex; GCE is convex for q < 2, linear at 2, concave above."""
    if loss.name == "gce":
        return loss.q < 2.0
    return loss.name in ("cross-entropy", "exp-comp-sum")


def _simplex_vertices(loss: LossSpec, P: np.ndarray, eps: float):
    K, n = P.shape
    best_val = np.full(K, np.inf)
    best_p = np.zeros((K, n))
    for v in range(n):
        vert = np.full((K, n), eps)
        vert[:, v] = 1.0 - (n - 1) * eps
        val = simplex_objective(loss, P, vert)
        better = val < best_val
        best_val = np.where(better, val, best_val)
        best_p[better] = vert[better]
    return best_val, best_p


def simplex_infimum(loss: LossSpec, cond, cfg: OracleConfig = DEFAULT_ORACLE):
    """min over {p : p_y >= eps, sum p = 1} of sum_y cond_y f(p_y), row-wise.

    For a linear or concave f the minimum of the objective over this
    polytope sits at a vertex, so the vertices are enumerated. For a
    strictly convex f the problem is convex and pairwise coordinate
    descent from the projected conditional vector converges to the global
    minimum: each step moves mass between two labels with an exact
    golden-section line search. Vertices are still compared as a guard.
    Returns (values, minimizers).
    """
    P = np.array(cond, dtype=np.float64, ndmin=2)
    K, n = P.shape
    eps = cfg.simplex_floor
    if n * eps >= 1:
        raise ValidationError("simplex_floor too large for the label count")
    best_val, best_p = _simplex_vertices(loss, P, eps)
    if not _is_convex_in_p(loss):
        return best_val, best_p
    f = lambda p: comp_sum_of_prob(loss, p)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    stop = cfg.tol * 1e-4
    p = eps + (1.0 - n * eps) * P
    val = simplex_objective(loss, P, p)
    active = np.arange(K)
    for _ in range(cfg.max_sweeps):
        Pa, pa = P[active], p[active]
        for i, j in pairs:
            m = pa[:, i] + pa[:, j]
            Pi, Pj = Pa[:, i], Pa[:, j]
            u, _ = golden_section(lambda u: Pi * f(u) + Pj * f(m - u), np.full(active.size, eps), m - eps, 1e-13)
            cur = Pi * f(pa[:, i]) + Pj * f(pa[:, j])
            new = Pi * f(u) + Pj * f(m - u)
            take = new < cur
            pa[:, i] = np.where(take, u, pa[:, i])
            pa[:, j] = np.where(take, m - u, pa[:, j])
        p[active] = pa
        new_val = simplex_objective(loss, Pa, pa)
        gain = val[active] - new_val
        val[active] = new_val
        active = active[gain > stop]
        if active.size == 0:
            break
    else:
        raise OracleError(f"simplex oracle for {loss.label()} did not converge in {cfg.max_sweeps} sweeps; last iterate {p[active[0]]}")
    better = val < best_val
    best_val = np.where(better, val, best_val)
    best_p[better] = p[better]
    return best_val, best_p


# ---------------------------------------------------------------------------
# Best-in-class conditional errors and regrets


def best_conditional_errors(
    loss: LossSpec,
    dist: DiscreteDistribution,
    H: HypothesisSet,
    cfg: OracleConfig = DEFAULT_ORACLE,
) -> np.ndarray:
    """C*_loss(H, x) at every support point."""
    if isinstance(H, FiniteSet):
        return np.min(np.stack([conditional_errors(loss, dist, h) for h in H]), axis=0)
    if not isinstance(H, CompleteClass):
        raise TypeError(f"unsupported hypothesis set {type(H).__name__}")
    if loss.family == "zero-one":
        # 1 - max_y P(y|x), summed the same way as any member's error so the
        # complete class and an enumeration of one-hot tables agree bit for bit
        return conditional_errors(ZERO_ONE, dist, bayes_classifier(dist))
    if loss.family == "margin":
        if dist.n_labels != 2:
            raise ValidationError(f"margin loss {loss.name} requires 2 labels, got {dist.n_labels}")
        return margin_infimum(loss.name, dist.cond[:, 0], cfg)[0]
    return simplex_infimum(loss, dist.cond, cfg)[0]


def best_conditional_error(loss, dist, H, x, cfg: OracleConfig = DEFAULT_ORACLE) -> float:
    return float(best_conditional_errors(loss, dist, H, cfg)[dist.index(x)])


def clamp_regrets(raw: np.ndarray, tol: float, what: str = "regret") -> np.ndarray:
    """Zero out slightly negative values; anything below -tol is an oracle fault."""
    if np.any(raw < -tol):
        k = int(np.argmin(raw))
        raise OracleError(f"{what} {raw[k]!r} below -{tol} at point index {k}")
    return np.maximum(raw, 0.0)


def conditional_regrets(
    loss: LossSpec,
    dist: DiscreteDistribution,
    H: HypothesisSet,
    h: ScoreTable,
    cfg: OracleConfig = DEFAULT_ORACLE,
    best: Optional[np.ndarray] = None,
) -> np.ndarray:
    if best is None:
        best = best_conditional_errors(loss, dist, H, cfg)
    return clamp_regrets(conditional_errors(loss, dist, h) - best, cfg.tol)


def conditional_regret(loss, dist, H, h, x, cfg: OracleConfig = DEFAULT_ORACLE) -> float:
    return float(conditional_regrets(loss, dist, H, h, cfg)[dist.index(x)])
