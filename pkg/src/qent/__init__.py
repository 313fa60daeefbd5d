"""Factorization-relative and relational analysis of bipartite quantum states."""

from . import config, entanglement, factorization, generalized, operators, psa, relational
from .errors import InputError, QentError

__version__ = "0.1.0"

__all__ = [
    "InputError",
    "QentError",
    "config",
    "entanglement",
    "factorization",
    "generalized",
    "operators",
    "psa",
    "relational",
]
