"""Finite-support joint distributions over (input point, label).

A distribution is a list of weighted input points, each carrying a
conditional probability vector over ``n_labels`` labels. Labels are
1-based at the public surface; binary problems use label 1 for +1 and
label 2 for -1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Optional, Sequence

import numpy as np

SUM_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when a distribution or its parameters are malformed."""


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Weighted input points with conditional label probabilities.

    ``cond[i, y-1]`` is Pr(y | point i). Arrays are stored read-only, so
    instances can be shared freely.
    """

    points: tuple
    weights: np.ndarray
    cond: np.ndarray
    n_labels: int
    coords: Optional[np.ndarray] = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        object.__setattr__(self, "weights", _frozen(self.weights))
        cond = _frozen(self.cond)
        if cond.ndim == 1:
            cond = _frozen(cond.reshape(len(self.points), -1))
        object.__setattr__(self, "cond", cond)
        if self.coords is not None:
            object.__setattr__(self, "coords", _frozen(self.coords))
        object.__setattr__(self, "n_labels", int(self.n_labels))
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(self.points)})

    @property
    def size(self) -> int:
        return len(self.points)

    def index(self, point: Hashable) -> int:
        """Row index of ``point``; raises KeyError for unknown ids."""
        try:
            return self._index[point]
        except KeyError:
            raise KeyError(f"unknown point id {point!r}") from None

    def cond_of(self, point: Hashable) -> np.ndarray:
        return self.cond[self.index(point)]

    def is_binary(self) -> bool:
        return self.n_labels == 2

    def equals(self, other: "DiscreteDistribution") -> bool:
        """Bit-level equality of every field."""
        same_coords = (self.coords is None and other.coords is None) or (
            self.coords is not None
            and other.coords is not None
            and np.array_equal(self.coords, other.coords)
        )
        return (
            self.points == other.points
            and self.n_labels == other.n_labels
            and np.array_equal(self.weights, other.weights)
            and np.array_equal(self.cond, other.cond)
            and same_coords
        )

    def to_dict(self) -> dict:
        pts = []
        for i, p in enumerate(self.points):
            entry: dict[str, Any] = {"id": p}
            if self.coords is not None:
                entry["x"] = float(self.coords[i])
            entry["weight"] = float(self.weights[i])
            entry["cond"] = [float(v) for v in self.cond[i]]
            pts.append(entry)
        return {"n_labels": self.n_labels, "points": pts}

    @classmethod
    def from_dict(cls, data: dict) -> "DiscreteDistribution":
        try:
            n_labels = int(data["n_labels"])
            raw = data["points"]
            points = [p["id"] for p in raw]
            weights = [float(p["weight"]) for p in raw]
            cond = [[float(v) for v in p["cond"]] for p in raw]
            has_x = [("x" in p) for p in raw]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"malformed distribution object: {exc}") from exc
        coords = None
        if raw and all(has_x):
            coords = [float(p["x"]) for p in raw]
        if any(len(c) != n_labels for c in cond):
            bad = next(i for i, c in enumerate(cond) if len(c) != n_labels)
            raise ValidationError(f"cond length {len(cond[bad])} != n_labels {n_labels} at point {bad}")
        dist = cls(points, weights, np.array(cond).reshape(len(points), n_labels), n_labels, coords)
        problems = validate(dist)
        if problems:
            raise ValidationError("; ".join(problems))
        return dist


@dataclass(frozen=True)
class Figure1Params:
    """Parameters of the eta(x) = 1/2 + c x^beta family on [0, 1]."""

    c: float
    beta: float
    n_points: int

    def __post_init__(self):
        if not (0.0 < self.c < 0.5):
            raise ValidationError(f"c must lie in (0, 1/2), got {self.c}")
        if not (self.beta > 0.0) or not math.isfinite(self.beta):
            raise ValidationError(f"beta must be a positive real, got {self.beta}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValidationError(f"n_points must be an integer >= 2, got {self.n_points}")


def figure1_eta(x, c: float, beta: float):
    return 0.5 + c * np.power(x, beta)


def make_figure1_distribution(params: Figure1Params) -> DiscreteDistribution:
    """Midpoint discretization of Unif[0, 1] with eta(x) = 1/2 + c x^beta.

    Points sit at (i + 0.5) / N with weight 1/N, so the empirical
    minimal-margin tail is within 1/(2N) of the continuum tail.
    """
    n = int(params.n_points)
    x = (np.arange(n, dtype=np.float64) + 0.5) / n
    eta = figure1_eta(x, params.c, params.beta)
    cond = np.column_stack([eta, 1.0 - eta])
    weights = np.full(n, 1.0 / n)
    return DiscreteDistribution(tuple(range(n)), weights, cond, 2, coords=x)


def make_random_distribution(
    seed: int,
    support_size: int,
    n_labels: int,
    concentration: float = 1.0,
) -> DiscreteDistribution:
    """Seeded random distribution for property suites.

    Conditional vectors are normalized uniform draws raised to the power
    ``1 / concentration``: small concentration pushes rows toward simplex
    vertices, large concentration toward the uniform vector.
    """
    if support_size < 1:
        raise ValidationError(f"support_size must be >= 1, got {support_size}")
    if n_labels < 2:
        raise ValidationError(f"n_labels must be >= 2, got {n_labels}")
    if not (concentration > 0):
        raise ValidationError(f"concentration must be positive, got {concentration}")
    rng = np.random.default_rng(seed)
    w = rng.uniform(0.05, 1.0, size=support_size)
    weights = w / w.sum()
    raw = rng.uniform(0.0, 1.0, size=(support_size, n_labels)) ** (1.0 / concentration)
    raw = np.maximum(raw, np.finfo(float).tiny)
    cond = raw / raw.sum(axis=1, keepdims=True)
    return DiscreteDistribution(tuple(range(support_size)), weights, cond, n_labels)


def validate(dist: DiscreteDistribution) -> list[str]:
    """List every violated invariant; empty when the distribution is valid."""
    problems: list[str] = []
    n = len(dist.points)
    if dist.n_labels < 1:
        problems.append(f"n_labels {dist.n_labels} < 1")
    if len(set(dist.points)) != n:
        seen: set = set()
        for i, p in enumerate(dist.points):
            if p in seen:
                problems.append(f"duplicate point id {p!r} at point {i}")
            seen.add(p)
    if dist.weights.shape != (n,):
        problems.append(f"weights length {dist.weights.shape[0]} != {n} points")
        return problems
    for i, w in enumerate(dist.weights):
        if not (w >= 0) or not math.isfinite(w):
            problems.append(f"weight {w!r} < 0 at point {i}")
    total = math.fsum(dist.weights)
    if abs(total - 1.0) > SUM_TOL:
        problems.append(f"weights sum {total:.12g} ≠ 1")
    if dist.cond.shape != (n, dist.n_labels):
        problems.append(f"cond shape {dist.cond.shape} != ({n}, {dist.n_labels})")
        return problems
    for i, row in enumerate(dist.cond):
        if np.any(~np.isfinite(row)) or np.any(row < 0) or np.any(row > 1):
            problems.append(f"cond entry outside [0,1] at point {i}")
        s = math.fsum(row)
        if abs(s - 1.0) > SUM_TOL:
            problems.append(f"cond sum {s:.12g} ≠ 1 at point {i}")
    if dist.coords is not None and dist.coords.shape != (n,):
        problems.append(f"coords length {dist.coords.shape[0]} != {n} points")
    return problems


def from_arrays(weights: Sequence[float], cond: Sequence[Sequence[float]], points=None, coords=None) -> DiscreteDistribution:
    """Convenience constructor; ids default to 0..n-1."""
    cond = np.asarray(cond, dtype=np.float64)
    if points is None:
        points = tuple(range(cond.shape[0]))
    return DiscreteDistribution(points, weights, cond, cond.shape[1], coords)
