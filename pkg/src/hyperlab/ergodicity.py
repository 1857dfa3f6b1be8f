"""Non-ergodicity diagnostic: closed-form correlations and Cesaro averages.

For a random series over unimodular eigenvectors, the time correlation of
squared probe moduli splits into a constant (product term minus a diagonal
overlap term) plus the squared modulus of a cross term
sum_p lambda_p**n c_p conj(d_p).  Ergodicity would force the Cesaro
average of the cross term to vanish; its strictly positive stabilized
value is the witness.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .linspace import DualFunctional, pair
from .operators import OperatorSpec
from .steinhaus import MCReport, SteinhausSeries


@dataclass(frozen=True)
class CorrelationSpec:
    c: tuple  # <x*, x_p>
    d: tuple  # <y*, x_p>
    angles: tuple  # theta_p

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(complex(z) for z in self.c))
        object.__setattr__(self, "d", tuple(complex(z) for z in self.d))
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if not len(self.c) == len(self.d) == len(self.angles):
            raise ValueError("c, d and angles must have equal lengths")

    def product_term(self) -> float:
        return float(
            np.sum(np.abs(self.c) ** 2) * np.sum(np.abs(self.d) ** 2)
        )

    def diagonal_term(self) -> float:
        """sum_p |c_p|**2 |d_p|**2, the all-equal-index fourth moment."""
        return float(np.sum((np.abs(self.c) * np.abs(self.d)) ** 2))

    def cross_terms(self, ns) -> np.ndarray:
        """|sum_p lambda_p**n c_p conj(d_p)|**2 for each n."""
        ns = np.asarray(ns)
        weights = np.asarray(self.c) * np.conj(self.d)
        phases = np.exp(2j * np.pi * np.outer(ns, self.angles))
        return np.abs(phases @ weights) ** 2

    @classmethod
    def from_probes(cls, series: SteinhausSeries, xstar: DualFunctional, ystar: DualFunctional):
        c = [a * pair(xstar, p.vector) for a, p in series.terms]
        d = [a * pair(ystar, p.vector) for a, p in series.terms]
        return cls(tuple(c), tuple(d), tuple(p.theta for _, p in series.terms))


def correlation_closed_form(spec: CorrelationSpec, n: int) -> float:
    """Exact fourth-moment value of E(|<x*, T**n Phi>|**2 |<y*, Phi>|**2).

    For independent uniform unimodular phases the only nonzero index
    quadruples are the two pairings, which overlap exactly on the
    all-equal case (where E|chi|**4 = 1, not 2); hence the value is
    product + cross - diagonal.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return (
        spec.product_term()
        - spec.diagonal_term()
        + float(spec.cross_terms([n])[0])
    )


def pairing_correlation(spec: CorrelationSpec, n: int) -> float:
    """Product term plus squared cross term at time n: the two-pairing
    decomposition without the all-equal overlap correction.

    This is the exact correlation when the phases are standard complex
    Gaussian (E|chi|**4 = 2); for unimodular phases it exceeds the true
    value by the constant diagonal term.  Its Cesaro limit is
    product + witness, the quantity whose excess over the product term
    exhibits non-ergodicity.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    return spec.product_term() + float(spec.cross_terms([n])[0])


def cesaro_average(values, N: int) -> float:
    """(1/N) * sum_{n=0}^{N-1} value(n); ``values`` is a callable on numpy
    index arrays or an indexable sequence."""
    if N < 1:
        raise ValueError("N must be >= 1")
    ns = np.arange(N)
    if callable(values):
        vals = np.asarray(values(ns), dtype=float)
    else:
        vals = np.asarray([values[n] for n in ns], dtype=float)
    return float(np.mean(vals))


def nonergodicity_witness(spec: CorrelationSpec, N: int) -> float:
    """Cesaro average of the squared cross term over n < N."""
    if N < 10**3:
        raise ValueError("N must be at least 10**3")
    return float(np.mean(spec.cross_terms(np.arange(N))))


def cross_mass_fraction(spec: CorrelationSpec, eps: float, N: int) -> float:
    """Fraction of n < N with squared cross term >= eps; a positive floor
    persisting as N grows is the finite-horizon non-ergodicity rendering."""
    vals = spec.cross_terms(np.arange(N))
    return float(np.mean(vals >= eps))


def correlation_monte_carlo(
    op: OperatorSpec,
    series: SteinhausSeries,
    xstar: DualFunctional,
    ystar: DualFunctional,
    n: int,
    trials: int,
    rng: np.random.Generator,
    seed=None,
) -> MCReport:
    """MC estimate of E(|<x*, T**n Phi>|**2 |<y*, Phi>|**2) for the series;
    agrees with the closed form within Monte Carlo error."""
    coeffs = series.coefficients()
    thetas = series.thetas()
    c = np.array([pair(xstar, p.vector) for _, p in series.terms])
    d = np.array([pair(ystar, p.vector) for _, p in series.terms])
    chi = np.exp(2j * np.pi * rng.random((trials, coeffs.size)))
    lam_n = np.exp(2j * np.pi * n * thetas)
    a = np.abs(chi @ (lam_n * coeffs * c)) ** 2
    b = np.abs(chi @ (coeffs * d)) ** 2
    vals = a * b
    return MCReport(
        estimate=float(np.mean(vals)),
        stderr=float(np.std(vals, ddof=1) / np.sqrt(trials)),
        trials=trials,
        seed=seed,
    )


def correlation_csv(spec: CorrelationSpec, N: int, path) -> None:
    """(n, correlation, running Cesaro average) rows for plotting."""
    ns = np.arange(N)
    vals = spec.product_term() - spec.diagonal_term() + spec.cross_terms(ns)
    running = np.cumsum(vals) / (ns + 1)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "correlation", "running_cesaro"])
        for n, v, r in zip(ns, vals, running):
            writer.writerow([int(n), repr(float(v)), repr(float(r))])
