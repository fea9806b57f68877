"""Seeded random instances for the verification suites.

Every generator takes ``(seed, index)`` and derives its own stream from
both, so trial k is reproducible on its own and independent of how many
trials precede it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distmodel import DiscreteDistribution, make_random_distribution
from .hypothesis import FiniteSet, ScoreTable, bayes_classifier


@dataclass
class Trial:
    index: int
    dist: DiscreteDistribution
    H: FiniteSet
    h: Optional[ScoreTable] = None


def _rng(seed: int, index: int, salt: int) -> np.random.Generator:
    return np.random.default_rng([seed, index, salt])


def random_distribution(rng: np.random.Generator, support: int, n_labels: int, tie_prob: float = 0.25) -> DiscreteDistribution:
    """Random distribution; with probability ``tie_prob`` rows come from small integer counts so exact ties occur."""
    conc = math.exp(rng.uniform(math.log(0.2), math.log(5.0)))
    dist = make_random_distribution(int(rng.integers(2**63)), support, n_labels, conc)
    if rng.uniform() < tie_prob:
        counts = rng.integers(0, 4, size=(support, n_labels)).astype(float)
        counts[counts.sum(axis=1) == 0, 0] = 1.0
        cond = counts / counts.sum(axis=1, keepdims=True)
        dist = DiscreteDistribution(dist.points, dist.weights, cond, n_labels)
    return dist


def random_hypothesis(rng: np.random.Generator, dist: DiscreteDistribution, kind: Optional[str] = None) -> ScoreTable:
    """A score table that is random, a label-flipped Bayes table, or a rescaled Bayes table."""
    n, k = dist.size, dist.n_labels
    kind = kind or rng.choice(["random", "flipped", "bayes-noise"])
    if kind == "random":
        scale = math.exp(rng.uniform(math.log(0.1), math.log(5.0)))
        return ScoreTable(dist.points, rng.normal(0.0, scale, size=(n, k)))
    base = bayes_classifier(dist).scores * rng.uniform(0.5, 3.0)
    if kind == "flipped":
        scores = base.copy()
        flip = rng.uniform(size=n) < rng.uniform(0.05, 0.6)
        new = rng.integers(0, k, size=n)
        scores[flip] = 0.0
        scores[np.flatnonzero(flip), new[flip]] = rng.uniform(0.5, 3.0)
        return ScoreTable(dist.points, scores + rng.normal(0.0, 0.01, size=(n, k)) * (~flip)[:, None])
    # bayes-noise: small perturbation that keeps the argmax
    noise = rng.uniform(-0.2, 0.2, size=(n, k)) * (base.max() / 4.0)
    return ScoreTable(dist.points, base + noise)


def lemma_trial(seed: int, index: int, max_support: int = 64, max_labels: int = 5, max_set: int = 8) -> Trial:
    """Distribution plus a finite hypothesis set; every member is a lemma subject."""
    rng = _rng(seed, index, 1)
    support = int(rng.integers(1, max_support + 1))
    labels = int(rng.integers(2, max_labels + 1))
    size = int(rng.integers(1, max_set + 1))
    dist = random_distribution(rng, support, labels)
    H = FiniteSet(tuple(random_hypothesis(rng, dist) for _ in range(size)))
    return Trial(index, dist, H)


def general_trial(seed: int, index: int, max_support: int = 32, n_labels: int = 2) -> Trial:
    """Distribution and one hypothesis, to be checked against the complete class."""
    rng = _rng(seed, index, 2)
    support = int(rng.integers(1, max_support + 1))
    dist = random_distribution(rng, support, n_labels)
    h = random_hypothesis(rng, dist)
    return Trial(index, dist, FiniteSet((h,)), h)


def low_noise_trial(seed: int, index: int, max_support: int = 32, max_set: int = 8, n_labels: int = 2) -> Trial:
    """Finite set {h*} plus perturbations, so E*_01(H) = E_01(h*) by construction.

    The subject hypothesis is a random non-Bayes member when there is one.
    """
    rng = _rng(seed, index, 3)
    support = int(rng.integers(1, max_support + 1))
    dist = random_distribution(rng, support, n_labels)
    h_star = bayes_classifier(dist)
    others = [random_hypothesis(rng, dist) for _ in range(int(rng.integers(1, max_set)))]
    H = FiniteSet((h_star, *others))
    h = others[int(rng.integers(len(others)))]
    return Trial(index, dist, H, h)


def nested_sets(seed: int, index: int, max_support: int = 32, max_labels: int = 4, max_set: int = 8):
    """(dist, H1, H2) with H1 a nonempty prefix-subset of H2."""
    rng = _rng(seed, index, 4)
    support = int(rng.integers(1, max_support + 1))
    labels = int(rng.integers(2, max_labels + 1))
    dist = random_distribution(rng, support, labels)
    members = [random_hypothesis(rng, dist) for _ in range(int(rng.integers(2, max_set + 1)))]
    pick = rng.permutation(len(members))[: int(rng.integers(1, len(members)))]
    H1 = FiniteSet(tuple(members[i] for i in sorted(pick)))
    return dist, H1, FiniteSet(tuple(members))
