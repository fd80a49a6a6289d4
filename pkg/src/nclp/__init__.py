"""Numerical tools for column/row structures in noncommutative L_p spaces.

Submodules
----------
linalg
    Hermitian eigensolvers, Schatten norms and PSD powers.
opspace
    Column, row, intersection and sum norms, and the ``S_p[C_q]`` norm.
fock
    CAR and truncated free Fock models with quasi-free vacuum densities.
interpolation
    K-functionals, real interpolation norms and graph decompositions.
cb
    Completely bounded norms of maps between column spaces.
cli
    Seeded experiment runner (``nclp`` command).
"""

from .errors import (
    ConfigError,
    DomainError,
    InvalidExponentError,
    NclpError,
    ResourceError,
    StateExtractionError,
)
from .opspace import ExponentTriple, OpVector

__all__ = [
    "ConfigError",
    "DomainError",
    "ExponentTriple",
    "InvalidExponentError",
    "NclpError",
    "OpVector",
    "ResourceError",
    "StateExtractionError",
]

__version__ = "0.1.0"
