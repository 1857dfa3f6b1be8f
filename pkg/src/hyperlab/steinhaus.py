"""Steinhaus variables, random eigenvector series and invariance checks.

A Steinhaus variable is uniform on the unit circle; multiplying it by any
unimodular constant leaves its law unchanged, which is what makes the
induced measure of a random eigenvector series invariant under the
operator.  Seeding uses numpy SeedSequence spawning, so disjoint stream
ids give independent blocks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .eigenfields import EigenPair
from .linspace import DualFunctional, StateVector
from .operators import OperatorSpec, apply


@dataclass(frozen=True)
class SteinhausSeries:
    """List of (coefficient, eigenpair) terms defining the random series
    Phi = sum chi_j a_j x_j."""

    terms: tuple  # of (complex, EigenPair)
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((complex(c), p) for c, p in self.terms)
        )
        thetas = [p.theta for _, p in self.terms]
        if len(set(thetas)) != len(thetas):
            raise ValueError("eigenvalue angles must be pairwise distinct")

    def __len__(self) -> int:
        return len(self.terms)

    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    def matrix(self) -> np.ndarray:
        return np.column_stack([p.vector.entries for _, p in self.terms])

    def thetas(self) -> np.ndarray:
        return np.array([p.theta for _, p in self.terms])

    def tail_error(self, n_kept: int) -> float:
        """Sum of |a_j| over the dropped terms beyond index n_kept."""
        return float(np.sum(np.abs(self.coefficients()[n_kept:])))


@dataclass
class EmpiricalMeasure:
    samples: list  # of StateVector
    seed: int | None
    sample_count: int

    def __post_init__(self):
        if self.sample_count != len(self.samples):
            raise ValueError("sample_count must match the number of samples")


@dataclass(frozen=True)
class MCReport:
    estimate: float
    stderr: float
    trials: int
    seed: int | None = None

    def to_json(self) -> str:
        return json.dumps(
            {
                "estimate": self.estimate,
                "stderr": self.stderr,
                "trials": self.trials,
                "seed": self.seed,
            },
            sort_keys=True,
        )


def sample_steinhaus(rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. points uniform on the unit circle."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return np.exp(2j * np.pi * rng.random(n))


def sample_series(series: SteinhausSeries, rng: np.random.Generator) -> StateVector:
    """One draw sum_j chi_j a_j x_j."""
    if not series.terms:
        raise ValueError("series must have at least one term")
    chi = sample_steinhaus(rng, len(series))
    return StateVector(series.matrix() @ (chi * series.coefficients()))


def sample_series_batch(
    series: SteinhausSeries, rng: np.random.Generator, trials: int
) -> np.ndarray:
    """trials x d array of independent draws of the series."""
    chi = np.exp(2j * np.pi * rng.random((trials, len(series))))
    return (chi * series.coefficients()[None, :]) @ series.matrix().T


def empirical_measure(
    series: SteinhausSeries, rng: np.random.Generator, trials: int, seed=None
) -> EmpiricalMeasure:
    batch = sample_series_batch(series, rng, trials)
    return EmpiricalMeasure([StateVector(row) for row in batch], seed, trials)


def khinchine_ratio(coeffs, trials: int, rng: np.random.Generator) -> float:
    """Monte Carlo estimate of E|sum chi_j a_j| / sqrt(sum |a_j|^2).

    The exact one-sided comparison E|sum chi a| <= (sum |a|^2)^(1/2) holds
    with constant 1 (Cauchy-Schwarz plus orthogonality of the phases), so
    the ratio always lies in (0, 1].
    """
    return khinchine_report(coeffs, trials, rng).estimate


def khinchine_report(coeffs, trials: int, rng: np.random.Generator, seed=None) -> MCReport:
    coeffs = np.asarray(coeffs, dtype=complex)
    if coeffs.size == 0:
        raise ValueError("need at least one coefficient")
    if trials < 1000:
        raise ValueError("need at least 1000 trials")
    l2 = float(np.linalg.norm(coeffs))
    chi = np.exp(2j * np.pi * rng.random((trials, coeffs.size)))
    sums = np.abs(chi @ coeffs) / l2
    return MCReport(
        estimate=float(np.mean(sums)),
        stderr=float(np.std(sums, ddof=1) / np.sqrt(trials)),
        trials=trials,
        seed=seed,
    )


@dataclass(frozen=True)
class InvarianceReport:
    """Per-probe moment gaps between Phi and T Phi, with combined Monte
    Carlo standard errors."""

    rows: tuple  # of (probe index, moment order, gap, stderr)
    max_gap: float

    def within(self, k_sigma: float) -> bool:
        return all(gap <= k_sigma * se for _, _, gap, se in self.rows)


def invariance_gap(
    op: OperatorSpec,
    series: SteinhausSeries,
    trials: int,
    probes,
    rng: np.random.Generator,
) -> InvarianceReport:
    """Compare first and second absolute moments of <f, Phi> and <f, T Phi>
    over independent sample batches, probe by probe.

    Because the eigenvalues are unimodular and the Steinhaus law is
    rotation invariant, both moments agree exactly in distribution; the
    report quantifies the empirical gap against its Monte Carlo error.
    """
    probes = list(probes)
    batch_a = sample_series_batch(series, rng, trials)
    batch_b = sample_series_batch(series, rng, trials)
    # apply T to every sample of the second batch
    tb = np.empty_like(batch_b)
    for i, row in enumerate(batch_b):
        tb[i] = apply(op, StateVector(row)).entries
    rows = []
    max_gap = 0.0
    for idx, f in enumerate(probes):
        fa = np.abs(batch_a @ np.conj(f.entries))
        fb = np.abs(tb @ np.conj(f.entries))
        for order in (1, 2):
            xa, xb = fa**order, fb**order
            gap = abs(float(np.mean(xa) - np.mean(xb)))
            se = float(
                np.sqrt(
                    np.var(xa, ddof=1) / trials + np.var(xb, ddof=1) / trials
                )
            )
            rows.append((idx, order, gap, se))
            max_gap = max(max_gap, gap)
    return InvarianceReport(tuple(rows), max_gap)
