"""Exponential-series semigroups on Köthe echelon spaces and related function spaces.

Modules: seqspace (spaces and seminorms), operators (diagonal and Taylor
operators, optimal domination constants), mu_calculus (mu-sequences and
certified exponential series), classifier (the condition hierarchy),
expo_semigroup (evaluation and proof-obligation checks), function_models
(H(D), H(C) and the trig model) and cli.
"""

from .classifier import ProbeConfig, classify, implication_closure
from .operators import DiagonalOperator, TaylorDifferentiation
from .seqspace import KotheMatrix, SpaceDescriptor

__all__ = [
    "DiagonalOperator",
    "KotheMatrix",
    "ProbeConfig",
    "SpaceDescriptor",
    "TaylorDifferentiation",
    "classify",
    "implication_closure",
]
__version__ = "0.1.0"
