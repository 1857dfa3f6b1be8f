"""Unimodular eigenvalue/eigenvector machinery.

Covers the continuous eigenvector field of the scaled backward shift, the
directly computable eigenvectors of the perturbed diagonal, rationally
independent angle generation from square roots of primes, and the
finite-scale approximation-closure check used before tree constructions.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .linspace import StateVector, norm
from .operators import OperatorSpec, PERTURBED_DIAGONAL, apply


def unimodular(theta: float) -> complex:
    return complex(np.exp(2j * np.pi * theta))


@dataclass(frozen=True)
class EigenPair:
    """Angle theta in (0,1] (eigenvalue exp(2*pi*i*theta)) plus a unit
    eigenvector and the truncation residual ||T v - lambda v||."""

    theta: float
    vector: StateVector
    residual: float

    @property
    def eigenvalue(self) -> complex:
        return unimodular(self.theta)


@dataclass(frozen=True)
class EigenFamily:
    pairs: tuple
    provenance: str = "unspecified"

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        thetas = [p.theta for p in self.pairs]
        if len(set(thetas)) != len(thetas):
            raise ValueError("family angles must be pairwise distinct")
        for p in self.pairs:
            if abs(norm(p.vector) - 1.0) > 1e-12:
                raise ValueError("family vectors must be unit vectors")

    def __len__(self) -> int:
        return len(self.pairs)

    def thetas(self) -> np.ndarray:
        return np.array([p.theta for p in self.pairs])

    def coordinate_matrix(self) -> np.ndarray:
        """d x n matrix with the family vectors as columns."""
        return np.column_stack([p.vector.entries for p in self.pairs])


@dataclass(frozen=True)
class EigenExpansion:
    """Finite combination sum_j c_j x_j over eigenpairs.

    Powers of the operator act on the eigenvalues only, so orbits of an
    expansion stay bounded whatever the operator norm is.
    """

    terms: tuple  # of (complex coefficient, EigenPair)

    def __post_init__(self):
        object.__setattr__(
            self, "terms", tuple((complex(c), p) for c, p in self.terms)
        )

    def coefficients(self) -> np.ndarray:
        return np.array([c for c, _ in self.terms])

    def thetas(self) -> np.ndarray:
        return np.array([p.theta for _, p in self.terms])

    def matrix(self) -> np.ndarray:
        return np.column_stack([p.vector.entries for _, p in self.terms])

    def to_vector(self) -> StateVector:
        if not self.terms:
            raise ValueError("empty expansion has no ambient dimension")
        return self.power(0)

    def power(self, n: int) -> StateVector:
        """sum_j c_j lambda_j**n x_j, exact in the expansion."""
        phases = np.exp(2j * np.pi * n * self.thetas())
        out = self.matrix() @ (phases * self.coefficients())
        return StateVector(out, self.terms[0][1].vector.space_p)


def eigenvector_2B(theta: float, w: float, d: int) -> EigenPair:
    """Truncated geometric eigenvector of the scaled backward shift.

    The untruncated field is E(lambda) = sum (lambda/w)**n e_n; truncating
    at d leaves the exact residual (1/w)**(d-1) before normalization, which
    is recorded on the pair after dividing by the normalizing constant.
    """
    if not w > 1:
        raise ValueError("shift weight must be > 1")
    lam = unimodular(theta)
    raw = (lam / w) ** np.arange(d)
    scale = float(np.linalg.norm(raw))
    residual = (1.0 / w) ** (d - 1) / scale
    return EigenPair(theta, StateVector(raw / scale), residual)


def perturbed_diagonal_eigenvector(op: OperatorSpec, k: int) -> EigenPair:
    """Eigenvector of D + N for the k-th diagonal eigenvalue.

    Solves (T - lambda_k) v = 0 by back-substitution with v_k = 1 and zero
    entries above index k, then normalizes.  The triangular system is
    well conditioned because the coupling weights decay like 4**-j.
    """
    if op.kind != PERTURBED_DIAGONAL:
        raise ValueError("operator must be a perturbed diagonal")
    if not 0 <= k < op.dim:
        raise ValueError("index out of range")
    lam = np.exp(2j * np.pi * op.angles)
    gaps = np.abs(lam[:k] - lam[k])
    if gaps.size and gaps.min() < 1e-8:
        raise ValueError(
            f"angle spacing too small near index {k}: min |lambda_k-lambda_j| = {gaps.min():.3g}"
        )
    weights = op.perturbation_weights()
    v = np.zeros(op.dim, dtype=complex)
    v[k] = 1.0
    for j in range(k - 1, -1, -1):
        v[j] = -weights[j] * v[j + 1] / (lam[j] - lam[k])
    v /= np.linalg.norm(v)
    vec = StateVector(v)
    resid = norm(
        StateVector(apply(op, vec).entries - lam[k] * v)
    )
    return EigenPair(float(op.angles[k]), vec, resid)


def primes(k: int) -> list[int]:
    """First k primes by a plain sieve."""
    if k < 1:
        raise ValueError("need k >= 1")
    limit = 15 if k < 6 else int(k * (np.log(k) + np.log(np.log(k))) * 1.2) + 10
    while True:
        sieve = np.ones(limit + 1, dtype=bool)
        sieve[:2] = False
        for p in range(2, int(limit**0.5) + 1):
            if sieve[p]:
                sieve[p * p :: p] = False
        found = np.flatnonzero(sieve)
        if found.size >= k:
            return found[:k].tolist()
        limit *= 2


def qindependent_angles(k: int) -> list[float]:
    """frac(sqrt(p)) for the first k primes.

    Square roots of distinct primes are rationally independent, so the
    returned angles are irrational and Q-independent by construction; this
    is never re-tested numerically (it is undecidable from floats).
    """
    return [float(np.sqrt(p) % 1.0) for p in primes(k)]


def sample_2B_family(w: float, d: int, count: int) -> EigenFamily:
    """Eigenvector field of w*B sampled at the first ``count`` sqrt-prime
    angles."""
    thetas = qindependent_angles(count)
    lam = np.exp(2j * np.pi * np.asarray(thetas))
    raw = (lam[:, None] / w) ** np.arange(d)[None, :]
    scales = np.linalg.norm(raw, axis=1)
    tail = (1.0 / w) ** (d - 1)
    pairs = [
        EigenPair(t, StateVector(row / s), tail / s)
        for t, row, s in zip(thetas, raw, scales)
    ]
    return EigenFamily(tuple(pairs), provenance="sqrt_prime_angles")


def diagonal_family(op: OperatorSpec) -> EigenFamily:
    pairs = tuple(perturbed_diagonal_eigenvector(op, k) for k in range(op.dim))
    return EigenFamily(pairs, provenance="diagonal")


@dataclass(frozen=True)
class ApproximationReport:
    """Result of the approximation-closure check over a family."""

    passed: bool
    max_nearest_distance: float
    witnesses: tuple  # (index, nearest index or None, distance)
    diagnostic: str = ""


def check_assumption_H(family: EigenFamily, F, tol: float) -> ApproximationReport:
    """Can every family member be approximated by members whose angle lies
    outside the excluded finite angle set F?

    For each pair, the nearest other pair with angle outside F is found;
    the report PASSes iff the worst such nearest distance is <= tol.
    """
    if len(family) == 0:
        raise ValueError("family must be nonempty")
    excluded = set(float(t) for t in F)
    thetas = family.thetas()
    admissible = np.array([t not in excluded for t in thetas])
    mat = family.coordinate_matrix()
    gram = mat.conj().T @ mat
    sq = np.real(np.diag(gram))
    dist2 = sq[:, None] + sq[None, :] - 2.0 * np.real(gram)
    np.fill_diagonal(dist2, np.inf)
    dist2[:, ~admissible] = np.inf
    witnesses = []
    worst = 0.0
    for i in range(len(family)):
        j = int(np.argmin(dist2[i]))
        if not np.isfinite(dist2[i, j]):
            return ApproximationReport(
                False,
                float("inf"),
                tuple(witnesses),
                diagnostic=f"no admissible neighbor for member {i} (A_F empty)",
            )
        dij = float(np.sqrt(max(dist2[i, j], 0.0)))
        witnesses.append((i, j, dij))
        worst = max(worst, dij)
    return ApproximationReport(worst <= tol, worst, tuple(witnesses))


def spanning_rank(family: EigenFamily) -> int:
    """Numerical rank of the family's coordinate matrix.

    A full-rank value (equal to the truncation dimension) is the finite
    stand-in for the density of the family's span; tolerance is
    1e-8 times the largest singular value.
    """
    s = np.linalg.svd(family.coordinate_matrix(), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > 1e-8 * s[0]))


def family_to_csv(family: EigenFamily, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        d = family.pairs[0].vector.dim
        writer.writerow(["theta", "residual"] + [f"re_{k}" for k in range(d)] + [f"im_{k}" for k in range(d)])
        for p in family.pairs:
            e = p.vector.entries
            writer.writerow(
                [repr(p.theta), repr(p.residual)]
                + [repr(float(x)) for x in e.real]
                + [repr(float(x)) for x in e.imag]
            )
