"""Falsification of signal temporal logic specifications.

Hill-climbing falsification and its multi-armed-bandit guided variants for
conjunctive and disjunctive safety properties, together with an STL monitor,
surrogate benchmark models and an experiment harness.
"""

from .falsify import (
    FalsificationResult,
    SafetySpec,
    classify_spec,
    falsify,
    falsify_hc,
    falsify_mab_conj,
    falsify_mab_disj,
)
from .signals import Signal
from .stl import eval_boolean, eval_robust, eval_robust_restricted, parse
from .systems import load_model

__version__ = "0.1.0"

__all__ = [
    "FalsificationResult",
    "SafetySpec",
    "Signal",
    "classify_spec",
    "eval_boolean",
    "eval_robust",
    "eval_robust_restricted",
    "falsify",
    "falsify_hc",
    "falsify_mab_conj",
    "falsify_mab_disj",
    "load_model",
    "parse",
]
