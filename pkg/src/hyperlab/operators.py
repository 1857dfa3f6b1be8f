"""Operator abstraction and the two concrete testbeds.

Two operators with computable unimodular eigenstructure are provided: the
scaled backward shift w*B with w > 1, and a perturbed unimodular diagonal
D + N where N is a strictly upper-triangular coupling with rapidly decaying
weights eps * 4**-k.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .linspace import StateVector, norm

SCALED_BACKWARD_SHIFT = "scaled_backward_shift"
PERTURBED_DIAGONAL = "perturbed_diagonal"
DENSE_MATRIX = "dense_matrix"


@dataclass(frozen=True)
class OperatorSpec:
    """A linear operator with an application rule and a norm bound.

    ``norm_bound`` always dominates the true operator norm on the truncated
    space (it equals w for the scaled backward shift).
    """

    kind: str
    dim: int
    norm_bound: float
    weight: float | None = None
    angles: np.ndarray | None = None
    eps: float | None = None
    matrix: np.ndarray | None = None

    def perturbation_weights(self) -> np.ndarray:
        """Superdiagonal entries eps * 4**-k of the perturbed diagonal."""
        if self.kind != PERTURBED_DIAGONAL:
            raise ValueError("only defined for perturbed_diagonal operators")
        return self.eps * 4.0 ** (-np.arange(self.dim - 1, dtype=float))

    def diagonal(self) -> np.ndarray:
        if self.kind != PERTURBED_DIAGONAL:
            raise ValueError("only defined for perturbed_diagonal operators")
        return np.exp(2j * np.pi * self.angles)


def make_scaled_backward_shift(w: float, d: int) -> OperatorSpec:
    if not w > 1:
        raise ValueError("shift weight must be > 1")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return OperatorSpec(SCALED_BACKWARD_SHIFT, d, float(w), weight=float(w))


def make_perturbed_diagonal(angles, eps: float, d: int) -> OperatorSpec:
    """Diagonal of unimodular entries exp(2*pi*i*theta_k) plus a weighted
    coupling of entry k+1 into entry k with weight eps * 4**-k."""
    angles = np.array(angles, dtype=float)
    if angles.size != d:
        raise ValueError("need exactly d angles")
    if eps < 0:
        raise ValueError("perturbation size must be >= 0")
    angles.setflags(write=False)
    return OperatorSpec(
        PERTURBED_DIAGONAL, d, 1.0 + float(eps), angles=angles, eps=float(eps)
    )


def make_dense(matrix) -> OperatorSpec:
    matrix = np.array(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("matrix must be square")
    bound = float(np.linalg.norm(matrix, ord=2))
    matrix.setflags(write=False)
    return OperatorSpec(DENSE_MATRIX, matrix.shape[0], bound, matrix=matrix)


def apply(op: OperatorSpec, v: StateVector) -> StateVector:
    if op.dim != v.dim:
        raise ValueError(f"dimension mismatch: operator {op.dim}, vector {v.dim}")
    e = v.entries
    if op.kind == SCALED_BACKWARD_SHIFT:
        out = np.zeros_like(e)
        out[:-1] = op.weight * e[1:]
    elif op.kind == PERTURBED_DIAGONAL:
        out = op.diagonal() * e
        out[:-1] += op.perturbation_weights() * e[1:]
    elif op.kind == DENSE_MATRIX:
        out = op.matrix @ e
    else:
        raise ValueError(f"unknown operator kind {op.kind!r}")
    return StateVector(out, v.space_p)


def power_apply(op: OperatorSpec, v, n: int):
    """T**n v.

    When ``v`` carries an eigen-expansion (anything exposing a ``power``
    method, e.g. :class:`hyperlab.eigenfields.EigenExpansion`), the powers
    are taken on the eigenvalues directly instead of by repeated
    application; this is exact in the expansion and never grows with n.
    """
    if n < 0:
        raise ValueError("power must be >= 0")
    if hasattr(v, "power"):
        return v.power(n)
    if not isinstance(v, StateVector):
        raise TypeError("expected a StateVector or an eigen-expansion")
    # overflow guard: ||T^n v|| <= norm_bound**n * ||v||
    nv = norm(v)
    if nv > 0 and n * math.log(max(op.norm_bound, 1.0)) + math.log(nv) > math.log(
        sys.float_info.max
    ):
        raise OverflowError(
            f"norm_bound**{n} * ||v|| exceeds float range for this operator"
        )
    out = v
    for _ in range(n):
        out = apply(op, out)
    return out


def power_iteration_norm(op: OperatorSpec, iterations: int = 200, seed: int = 7) -> float:
    """Largest singular value of the operator, by power iteration on T*T.

    Independent of any norm_bound bookkeeping; used as an oracle for the
    invariant norm_bound >= true operator norm.
    """
    rng = np.random.default_rng(seed)
    mat = np.column_stack(
        [apply(op, basis).entries for basis in _basis(op.dim)]
    )
    x = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
    x /= np.linalg.norm(x)
    for _ in range(iterations):
        y = mat.conj().T @ (mat @ x)
        ny = np.linalg.norm(y)
        if ny == 0:
            return 0.0
        x = y / ny
    return float(np.sqrt(np.linalg.norm(mat.conj().T @ (mat @ x))))


def _basis(d: int):
    from .linspace import basis_vector

    return [basis_vector(k, d) for k in range(d)]
