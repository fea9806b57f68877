"""Finite-support verification of margin-noise consistency bounds."""

__version__ = "0.1.0"

from .distmodel import (
    DiscreteDistribution,
    Figure1Params,
    ValidationError,
    make_figure1_distribution,
    make_random_distribution,
    validate,
)
from .hypothesis import CompleteClass, FiniteSet, MonotoneTransform, ScoreTable, bayes_classifier, predict
from .losses import LOSS_NAMES, LossSpec, OracleConfig, OracleError, parse_loss
from .margins import check_domination, check_mm, check_tsybakov, gamma_tail, mu_tail
from .bounds import (
    BoundReport,
    lemma_mm_verify,
    low_noise_exponent,
    power_check,
    verify_theorem_binary,
    verify_theorem_general,
    verify_theorem_low_noise,
)

__all__ = [
    "BoundReport", "CompleteClass", "DiscreteDistribution", "Figure1Params", "FiniteSet",
    "LOSS_NAMES", "LossSpec", "MonotoneTransform", "OracleConfig", "OracleError", "ScoreTable",
    "ValidationError", "bayes_classifier", "check_domination", "check_mm", "check_tsybakov",
    "gamma_tail", "lemma_mm_verify", "low_noise_exponent", "make_figure1_distribution",
    "make_random_distribution", "mu_tail", "parse_loss", "power_check", "predict",
    "validate", "verify_theorem_binary", "verify_theorem_general", "verify_theorem_low_noise",
]
