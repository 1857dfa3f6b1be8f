"""hyperlab: a numerical laboratory for linear operator dynamics with
unimodular point spectrum — random eigenvector series, return-time sets,
Cantor eigenvector fields and visit-density estimation, all at finite
truncation with explicit error bookkeeping."""

from . import (
    cantor,
    construction,
    density,
    diophantine,
    eigenfields,
    ergodicity,
    linspace,
    operators,
    steinhaus,
)

__all__ = [
    "cantor",
    "construction",
    "density",
    "diophantine",
    "eigenfields",
    "ergodicity",
    "linspace",
    "operators",
    "steinhaus",
]

__version__ = "0.1.0"
