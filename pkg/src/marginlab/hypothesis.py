"""Score tables, hypothesis sets, and argmax prediction.

Prediction is argmax over labels with ties resolved toward the lowest
label index. Binary hypotheses store h(x) as the label-1 (+1) score and 0
as the label-2 (-1) score, so the argmax rule reproduces sign(h(x)) with
sign(0) = +1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence, Union

import numpy as np

from .distmodel import DiscreteDistribution, ValidationError


@dataclass(frozen=True, eq=False)
class ScoreTable:
    """Real score per (point, label). ``scores[i, y-1]`` is h(point i, y)."""

    points: tuple
    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        arr = np.array(self.scores, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != len(self.points):
            raise ValidationError(
                f"scores must have shape (n_points, n_labels); got {arr.shape} for {len(self.points)} points"
            )
        if not np.all(np.isfinite(arr)):
            raise ValidationError("scores must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})

    @property
    def n_labels(self) -> int:
        return self.scores.shape[1]

    def row(self, point: Hashable) -> np.ndarray:
        try:
            return self.scores[self._index[point]]
        except KeyError:
            raise KeyError(f"unknown point id {point!r}") from None

    def binary_scores(self) -> np.ndarray:
        """h(x) = score(+1) - score(-1) for two-label tables."""
        if self.n_labels != 2:
            raise ValueError(f"binary score requested on a {self.n_labels}-label table")
        return self.scores[:, 0] - self.scores[:, 1]

    def label_indices(self) -> np.ndarray:
        """0-based predicted label index per point (argmax, lowest index on ties)."""
        # np.argmax returns the first maximal entry.
        return np.argmax(self.scores, axis=1)

    def to_dict(self) -> dict:
        return {
            "n_labels": self.n_labels,
            "scores": [{"point": p, "values": [float(v) for v in row]} for p, row in zip(self.points, self.scores)],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScoreTable":
        try:
            n_labels = int(data["n_labels"])
            rows = data["scores"]
            points = [r["point"] for r in rows]
            values = [[float(v) for v in r["values"]] for r in rows]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed score table: {exc}") from exc
        if any(len(v) != n_labels for v in values):
            raise ValidationError(f"every score row must have {n_labels} values")
        return cls(points, np.array(values, dtype=np.float64).reshape(len(points), n_labels))

    @classmethod
    def from_binary(cls, points: Sequence, h_values: Sequence[float]) -> "ScoreTable":
        h = np.asarray(h_values, dtype=np.float64)
        return cls(points, np.column_stack([h, np.zeros_like(h)]))

    @classmethod
    def constant(cls, points: Sequence, values: Sequence[float]) -> "ScoreTable":
        """Same score vector at every point."""
        row = np.asarray(values, dtype=np.float64)
        return cls(points, np.tile(row, (len(points), 1)))


@dataclass(frozen=True)
class CompleteClass:
    """Every score table on the support. Never materialized."""


@dataclass(frozen=True)
class FiniteSet:
    """Explicit, nonempty list of score tables sharing support and arity."""

    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise ValidationError("a finite hypothesis set must be nonempty")
        first = members[0]
        for h in members[1:]:
            if h.points != first.points or h.n_labels != first.n_labels:
                raise ValidationError("all members must share support and n_labels")
        object.__setattr__(self, "members", members)

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


HypothesisSet = Union[FiniteSet, CompleteClass]


def check_compatible(h: ScoreTable, dist: DiscreteDistribution) -> None:
    if h.points != dist.points:
        missing = set(dist.points) - set(h.points)
        raise ValidationError(f"score table support differs from distribution support (missing {sorted(map(str, missing))[:5]})")
    if h.n_labels != dist.n_labels:
        raise ValidationError(f"score table has {h.n_labels} labels, distribution has {dist.n_labels}")


def predict(h: ScoreTable, x: Hashable) -> int:
    """Predicted 1-based label at point ``x``."""
    return int(np.argmax(h.row(x))) + 1


def bayes_classifier(dist: DiscreteDistribution) -> ScoreTable:
    """One-hot table on a maximizing label per point (lowest index among ties)."""
    best = np.argmax(dist.cond, axis=1)
    scores = np.zeros((dist.size, dist.n_labels))
    scores[np.arange(dist.size), best] = 1.0
    return ScoreTable(dist.points, scores)


def reachable_labels(H: HypothesisSet, x: Hashable, n_labels: int | None = None) -> frozenset:
    """Labels some member of ``H`` predicts at ``x``.

    For the complete class every label is reachable; ``n_labels`` must then
    be supplied.
    """
    if isinstance(H, CompleteClass):
        if n_labels is None:
            raise ValueError("n_labels is required for the complete class")
        return frozenset(range(1, n_labels + 1))
    return frozenset(predict(h, x) for h in H)


def reachable_mask(H: HypothesisSet, dist: DiscreteDistribution) -> np.ndarray:
    """Boolean (n_points, n_labels) array of labels reachable at each point."""
    mask = np.zeros((dist.size, dist.n_labels), dtype=bool)
    if isinstance(H, CompleteClass):
        mask[:] = True
        return mask
    rows = np.arange(dist.size)
    for h in H:
        mask[rows, h.label_indices()] = True
    return mask


@dataclass(frozen=True, eq=False)
class MonotoneTransform:
    """Strictly increasing piecewise-linear map.

    Between breakpoints the map interpolates the given values; outside it
    continues linearly with the first and last segment slopes. A single
    breakpoint defines a unit-slope shift.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        b = np.array(self.breakpoints, dtype=np.float64)
        v = np.array(self.values, dtype=np.float64)
        if b.ndim != 1 or b.shape != v.shape or b.size == 0:
            raise ValidationError("breakpoints and values must be equal-length nonempty sequences")
        if not (np.all(np.isfinite(b)) and np.all(np.isfinite(v))):
            raise ValidationError("breakpoints and values must be finite")
        if np.any(np.diff(b) <= 0):
            raise ValidationError("breakpoints must be strictly increasing")
        if np.any(np.diff(v) <= 0):
            raise ValidationError("transform values must be strictly increasing")
        b.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)

    def slopes(self) -> np.ndarray:
        if self.breakpoints.size == 1:
            return np.array([1.0])
        return np.diff(self.values) / np.diff(self.breakpoints)

    def __call__(self, z):
        z = np.asarray(z, dtype=np.float64)
        b, v = self.breakpoints, self.values
        slopes = self.slopes()
        out = np.interp(z, b, v)
        lo = z < b[0]
        hi = z > b[-1]
        out = np.where(lo, v[0] + slopes[0] * (z - b[0]), out)
        out = np.where(hi, v[-1] + slopes[-1] * (z - b[-1]), out)
        return out

    def to_dict(self) -> dict:
        return {"breakpoints": [float(x) for x in self.breakpoints], "values": [float(x) for x in self.values]}

    @classmethod
    def from_dict(cls, data: dict) -> "MonotoneTransform":
        return cls(data["breakpoints"], data["values"])

    @classmethod
    def affine(cls, slope: float, intercept: float) -> "MonotoneTransform":
        if not slope > 0:
            raise ValidationError("slope must be positive")
        return cls([0.0, 1.0], [intercept, intercept + slope])

    @classmethod
    def random(cls, seed: int, n_breaks: int = 6, span: float = 10.0) -> "MonotoneTransform":
        rng = np.random.default_rng(seed)
        b = np.sort(rng.uniform(-span, span, size=n_breaks))
        b = b + np.arange(n_breaks) * 1e-3
        slopes = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=n_breaks - 1))
        v = rng.uniform(-5, 5) + np.concatenate([[0.0], np.cumsum(slopes * np.diff(b))])
        return cls(b, v)


def apply_transform(h: ScoreTable, psi: MonotoneTransform) -> ScoreTable:
    """Pointwise composition psi o h(x, .)."""
    return ScoreTable(h.points, psi(h.scores))


def as_finite(members: Iterable[ScoreTable]) -> FiniteSet:
    return FiniteSet(tuple(members))
