"""Minimal and model margins, their tail functions, and noise-condition checks.

A tail on finite support is an exact right-continuous step function. The
smallest constant B with ``mass(t) <= B t**(alpha / (1 - alpha))`` for all
t > 0 is attained at a breakpoint: between breakpoints the mass is flat
while the bound curve increases.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Hashable, Optional, Sequence

import numpy as np

from .distmodel import DiscreteDistribution, ValidationError
from .hypothesis import CompleteClass, FiniteSet, ScoreTable, check_compatible

STRICT_POSITIVE = "strict-positive"
ALL = "all"
EXACT_TOL = 1e-9


def minimal_margins(dist: DiscreteDistribution) -> np.ndarray:
    """Top conditional probability minus the runner-up, per point."""
    if dist.n_labels < 2:
        raise ValidationError("minimal margin needs at least 2 labels")
    top2 = np.sort(dist.cond, axis=1)[:, -2:]
    return top2[:, 1] - top2[:, 0]


def minimal_margin(dist: DiscreteDistribution, x: Hashable) -> float:
    return float(minimal_margins(dist)[dist.index(x)])


def model_margins(dist: DiscreteDistribution, h: ScoreTable) -> np.ndarray:
    """max_y Pr(y|x) - Pr(h(x)|x), per point."""
    check_compatible(h, dist)
    picked = dist.cond[np.arange(dist.size), h.label_indices()]
    return dist.cond.max(axis=1) - picked


def model_margin(dist: DiscreteDistribution, h: ScoreTable, x: Hashable) -> float:
    return float(model_margins(dist, h)[dist.index(x)])


def disagreement_mass(dist: DiscreteDistribution, h: ScoreTable) -> float:
    """Pr[mu(h, X) > 0]."""
    mu = model_margins(dist, h)
    return math.fsum(dist.weights[mu > 0])


class _ExactSum:
    """Running sum with exact partials (Shewchuk); ``value`` is correctly rounded."""

    def __init__(self):
        self.partials: list[float] = []

    def add(self, x: float) -> None:
        i = 0
        for y in self.partials:
            if abs(x) < abs(y):
                x, y = y, x
            hi = x + y
            lo = y - (hi - x)
            if lo:
                self.partials[i] = lo
                i += 1
            x = hi
        self.partials[i:] = [x]

    @property
    def value(self) -> float:
        return math.fsum(self.partials)


@dataclass(frozen=True, eq=False)
class TailFunction:
    """Right-continuous step tail t -> mass.

    ``masses[k]`` is the tail at ``breakpoints[k]``. In ``all`` mode the
    mass of points with value exactly 0 is ``mass_at_zero`` and is included
    in every entry of ``masses``; in ``strict-positive`` mode it is dropped.
    """

    breakpoints: np.ndarray
    masses: np.ndarray
    mode: str = STRICT_POSITIVE
    mass_at_zero: float = 0.0

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=np.float64)
        m = np.array(self.masses, dtype=np.float64)
        if b.shape != m.shape or b.ndim != 1:
            raise ValidationError("breakpoints and masses must be equal-length 1-D sequences")
        if np.any(b <= 0) or np.any(np.diff(b) <= 0):
            raise ValidationError("breakpoints must be strictly increasing positive reals")
        if np.any(np.diff(m) < 0):
            raise ValidationError("tail masses must be nondecreasing")
        if m.size and m[-1] > 1.0 + 1e-12:
            raise ValidationError(f"final tail mass {m[-1]} exceeds 1")
        if self.mode not in (STRICT_POSITIVE, ALL):
            raise ValidationError(f"unknown tail mode {self.mode!r}")
        b.setflags(write=False)
        m.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "masses", m)

    @property
    def is_empty(self) -> bool:
        return self.masses.size == 0 and self.mass_at_zero == 0

    @property
    def final_mass(self) -> float:
        return float(self.masses[-1]) if self.masses.size else float(self.mass_at_zero)

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.breakpoints, t, side="right") - 1
        base = self.mass_at_zero if self.mode == ALL else 0.0
        padded = np.concatenate([[base], self.masses])
        out = padded[k + 1]
        return np.where(t < 0, 0.0, out)

    def left_limit(self, t):
        """mass(t-) for t > 0."""
        t = np.asarray(t, dtype=np.float64)
        k = np.searchsorted(self.breakpoints, t, side="left") - 1
        base = self.mass_at_zero if self.mode == ALL else 0.0
        padded = np.concatenate([[base], self.masses])
        return padded[k + 1]


def tail_of(values: Sequence[float], dist: DiscreteDistribution, mode: str = STRICT_POSITIVE) -> TailFunction:
    """Exact tail of a per-point nonnegative quantity under ``dist``."""
    v = np.asarray(values, dtype=np.float64)
    if v.shape != (dist.size,):
        raise ValidationError(f"expected {dist.size} values, got shape {v.shape}")
    if np.any(v < 0) or np.any(np.isnan(v)):
        k = int(np.flatnonzero((v < 0) | np.isnan(v))[0])
        raise ValidationError(f"negative value {v[k]!r} at point {k}")
    zero = v == 0
    mass_at_zero = math.fsum(dist.weights[zero]) if mode == ALL else 0.0
    pos = np.flatnonzero(~zero)
    order = pos[np.argsort(v[pos], kind="stable")]
    acc = _ExactSum()
    if mode == ALL:
        for w in dist.weights[zero]:
            acc.add(float(w))
    breaks: list[float] = []
    masses: list[float] = []
    sv = v[order]
    sw = dist.weights[order]
    n = len(order)
    k = 0
    while k < n:
        t = sv[k]
        while k < n and sv[k] == t:
            acc.add(float(sw[k]))
            k += 1
        breaks.append(float(t))
        masses.append(acc.value)
    return TailFunction(np.array(breaks), np.array(masses), mode, mass_at_zero)


def tail_exponent(alpha: float) -> float:
    if not (0.0 <= alpha < 1.0):
        raise ValidationError(f"alpha must lie in [0, 1) for tail checks, got {alpha}")
    return alpha / (1.0 - alpha)


def min_B_for_alpha(tail: TailFunction, alpha: float) -> float:
    """Smallest B with tail(t) <= B t^(alpha/(1-alpha)) for every t > 0."""
    e = tail_exponent(alpha)
    if e == 0.0:
        return tail.final_mass
    if tail.mode == ALL and tail.mass_at_zero > 0:
        return math.inf
    if tail.masses.size == 0:
        return 0.0
    return float(np.max(tail.masses / tail.breakpoints**e))


@dataclass(frozen=True)
class NoiseFit:
    """Log-log scaling summary of a tail over ``t_range``.

    ``alpha`` is the noise level whose exponent alpha/(1-alpha) equals the
    fitted slope (clipped into [0, 1)); ``B_min`` is the smallest constant
    for that alpha over the whole tail.
    """

    alpha: float
    B_min: float
    fitted_exponent: float
    t_range: tuple
    n_breakpoints: int = 0


def fit_tail_exponent(tail: TailFunction, t_lo: float, t_hi: float, min_points: int = 5) -> NoiseFit:
    """Least-squares slope of log(mass) against log(t) over breakpoints in range."""
    if not (0 < t_lo < t_hi):
        raise ValidationError(f"need 0 < t_lo < t_hi, got [{t_lo}, {t_hi}]")
    b = tail.breakpoints
    sel = (b >= t_lo) & (b <= t_hi) & (tail.masses > 0)
    if int(sel.sum()) < min_points:
        raise ValidationError(
            f"too few breakpoints for fit: {int(sel.sum())} in [{t_lo}, {t_hi}], need {min_points}"
        )
    x = np.log(b[sel])
    y = np.log(tail.masses[sel])
    xc = x - x.mean()
    slope = float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))
    alpha = min(max(slope, 0.0) / (1.0 + max(slope, 0.0)), np.nextafter(1.0, 0.0))
    return NoiseFit(alpha, min_B_for_alpha(tail, alpha), slope, (float(t_lo), float(t_hi)), int(sel.sum()))


def scaling_verdict(fit: NoiseFit, alpha: float) -> str:
    """HOLD when the fitted exponent reaches the target alpha/(1-alpha), FAIL otherwise."""
    return "HOLD" if fit.fitted_exponent >= tail_exponent(alpha) else "FAIL"


def gamma_tail(dist: DiscreteDistribution) -> TailFunction:
    return tail_of(minimal_margins(dist), dist, ALL)


def mu_tail(dist: DiscreteDistribution, h: ScoreTable) -> TailFunction:
    return tail_of(model_margins(dist, h), dist, STRICT_POSITIVE)


@dataclass
class MMResult:
    alpha: float
    B: float
    per_hypothesis: list  # (holds, B_min) per member, in set order
    holds: bool
    B_min: float


def uniform_B_min(dist: DiscreteDistribution, H, alpha: float) -> float:
    """max over members of the smallest admissible MM constant."""
    if isinstance(H, CompleteClass):
        raise ValidationError("uniform MM constants are only computed for finite hypothesis sets")
    return max(min_B_for_alpha(mu_tail(dist, h), alpha) for h in H)


def tail_within(tail: TailFunction, alpha: float, B: float, tol: float = EXACT_TOL) -> bool:
    """mass(t) <= B t^(alpha/(1-alpha)) + tol at every breakpoint (and at 0+ in ``all`` mode)."""
    e = tail_exponent(alpha)
    if tail.mode == ALL and tail.mass_at_zero > tol and e > 0:
        return False
    if tail.masses.size == 0:
        return tail.final_mass <= B + tol or e > 0
    return bool(np.all(tail.masses <= B * tail.breakpoints**e + tol))


def check_mm(dist: DiscreteDistribution, H, alpha: float, B: float, tol: float = EXACT_TOL) -> MMResult:
    if isinstance(H, CompleteClass):
        raise ValidationError("MM check over the complete class is not supported; pass a finite set")
    if isinstance(H, ScoreTable):
        H = FiniteSet((H,))
    per = []
    for h in H:
        tail = mu_tail(dist, h)
        per.append((tail_within(tail, alpha, B, tol), min_B_for_alpha(tail, alpha)))
    return MMResult(alpha, B, per, all(ok for ok, _ in per), max(b for _, b in per))


@dataclass
class TsybakovResult:
    alpha: float
    B: float
    holds: bool
    B_min: float
    fit: Optional[NoiseFit] = None
    scaling: Optional[str] = None


def check_tsybakov(
    dist: DiscreteDistribution,
    alpha: float,
    B: float,
    t_range: Optional[tuple] = None,
    tol: float = EXACT_TOL,
) -> TsybakovResult:
    """Exact finite-support check plus, when ``t_range`` is given, a scaling verdict."""
    tail = gamma_tail(dist)
    b = min_B_for_alpha(tail, alpha)
    res = TsybakovResult(alpha, B, tail_within(tail, alpha, B, tol), b)
    if t_range is not None:
        res.fit = fit_tail_exponent(tail, *t_range)
        res.scaling = scaling_verdict(res.fit, alpha)
    return res


@dataclass
class DominationResult:
    holds: bool
    first_violation: Optional[float] = None
    n_checked: int = 0


def check_domination(dist: DiscreteDistribution, h: ScoreTable) -> DominationResult:
    """Pr[0 < mu(h,X) <= t] <= Pr[gamma(X) <= t] at every breakpoint of either tail."""
    mt = mu_tail(dist, h)
    gt = gamma_tail(dist)
    ts = np.union1d(mt.breakpoints, gt.breakpoints)
    bad = np.flatnonzero(mt(ts) > gt(ts))
    if bad.size:
        return DominationResult(False, float(ts[bad[0]]), int(ts.size))
    return DominationResult(True, None, int(ts.size))


def tail_rows(tail: TailFunction, alpha: float, B: float) -> list[tuple]:
    """(t, mass, bound) at each breakpoint, bound = B t^(alpha/(1-alpha))."""
    e = tail_exponent(alpha)
    return [(float(t), float(m), float(B * t**e)) for t, m in zip(tail.breakpoints, tail.masses)]


def tail_csv(tail: TailFunction, alpha: float, B: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "mass", "bound"])
    for t, m, b in tail_rows(tail, alpha, B):
        w.writerow([repr(t), repr(m), repr(b)])
    return buf.getvalue()
