import numpy as np
import pytest

from hyperlab.linspace import (
    DualFunctional,
    StateVector,
    add_scaled,
    basis_vector,
    norm,
    pair,
    zero_vector,
)


def test_vector_construction_rejects_bad_entries():
    with pytest.raises(ValueError):
        StateVector(np.array([]))
    with pytest.raises(ValueError):
        StateVector(np.ones((2, 2)))
    with pytest.raises(ValueError):
        StateVector([1.0, np.inf])
    with pytest.raises(ValueError):
        StateVector([1.0, np.nan])
    with pytest.raises(ValueError):
        StateVector([1.0, 2.0], space_p=0.5)


def test_entries_are_immutable():
    v = StateVector([1.0, 2.0])
    with pytest.raises(ValueError):
        v.entries[0] = 5.0


def test_zero_and_basis_vectors():
    z = zero_vector(5)
    assert z.dim == 5 and norm(z) == 0.0
    e = basis_vector(2, 5)
    assert e.entries[2] == 1.0 and norm(e) == 1.0
    assert np.sum(np.abs(e.entries)) == 1.0


def test_norm_triangle_inequality_and_homogeneity():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        d = int(rng.integers(1, 12))
        a = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        b = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        c = complex(rng.standard_normal(), rng.standard_normal())
        va, vb = StateVector(a), StateVector(b)
        lhs = norm(StateVector(a + b))
        assert lhs <= (norm(va) + norm(vb)) * (1 + 1e-12)
        assert norm(StateVector(c * a)) == pytest.approx(
            abs(c) * norm(va), rel=1e-12
        )


def test_norm_matches_manual_lp():
    a = np.array([3.0, -4.0, 1j])
    assert norm(StateVector(a, 2.0)) == pytest.approx(np.sqrt(26.0))
    assert norm(StateVector(a, 1.0)) == pytest.approx(8.0)


def test_pair_is_conjugate_linear_in_functional_linear_in_vector():
    rng = np.random.default_rng(1)
    f = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    manual = complex(np.sum(np.conj(f) * v))
    assert pair(DualFunctional(f), StateVector(v)) == pytest.approx(manual)
    c = 2.0 - 1.5j
    assert pair(DualFunctional(c * f), StateVector(v)) == pytest.approx(
        np.conj(c) * manual
    )
    assert pair(DualFunctional(f), StateVector(c * v)) == pytest.approx(c * manual)


def test_pair_dimension_mismatch():
    with pytest.raises(ValueError):
        pair(DualFunctional([1.0]), StateVector([1.0, 2.0]))


def test_add_scaled():
    v = StateVector([1.0, 2.0])
    w = StateVector([0.0, 1.0])
    out = add_scaled(v, 2j, w)
    assert np.allclose(out.entries, [1.0, 2.0 + 2j])
    assert out.space_p == v.space_p
    with pytest.raises(ValueError):
        add_scaled(v, 1.0, StateVector([1.0]))
