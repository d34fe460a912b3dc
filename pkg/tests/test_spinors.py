import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cliffdyn import algebra, spinors
from cliffdyn.errors import CapacityError, DimensionError, ValidationError
from cliffdyn.verify import random_hermitian, signature_hermitian, timelike


def test_pauli_map_roundtrip_and_determinant(rng):
    v = rng.standard_normal(4)
    S = spinors.to_spinor(v)
    assert spinors.is_hermitian(S)
    np.testing.assert_allclose(spinors.from_spinor(S), v, atol=1e-15)
    assert abs(np.linalg.det(S).real - spinors.minkowski(v, v)) < 1e-12


def test_from_spinor_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        spinors.from_spinor(np.array([[1, 1j], [1j, 0]]))
    with pytest.raises(DimensionError):
        spinors.to_spinor([1.0, 2.0])


def test_index_raise_lower_inverse(rng):
    c = rng.standard_normal((2, 3)) + 1j * rng.standard_normal((2, 3))
    np.testing.assert_allclose(spinors.raise_index(spinors.lower_index(c)), c)
    S = random_hermitian(2, rng)
    np.testing.assert_allclose(spinors.raise_(spinors.lower(S)), S, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_four_vector_rule(seed):
    S = random_hermitian(2, np.random.default_rng(seed))
    assert spinors.four_vector_rule_residual(S) < 1e-12


@pytest.mark.parametrize("n", range(1, 7))
def test_resolve_all_signatures(n, rng):
    ctx = algebra.make_algebra(n)
    for npos in range(n + 1):
        for nneg in range(n - npos + 1):
            H = signature_hermitian(n, npos, nneg, rng)
            c = spinors.resolve_hermitian(H, ctx)
            r1, r2 = spinors.gram_residuals(c, H, ctx)
            assert r1 < 1e-10 and r2 < 1e-10


def test_resolve_rejects_bad_input(rng):
    ctx = algebra.make_algebra(2)
    with pytest.raises(DimensionError):
        spinors.resolve_hermitian(np.eye(3), ctx)
    with pytest.raises(ValidationError):
        spinors.resolve_hermitian(np.array([[0, 1], [0, 0]]), ctx)


def test_resolve_null_vector():
    ctx = algebra.make_algebra(1)
    x = np.array([1.0, 0.6, 0.0, 0.8])
    s = spinors.resolve_null(x, ctx)
    np.testing.assert_allclose(spinors.from_spinor(s.hermitian_gram()), x, atol=1e-12)
    with pytest.raises(ValidationError):
        spinors.resolve_null(np.array([1.0, 2.0, 0.0, 0.0]), ctx)


def test_phase_point_recovery(rng):
    ctx = algebra.make_algebra(5)
    x, p = rng.standard_normal(4), timelike(rng)
    pp = spinors.resolve_phase_point(x, p, -0.4, ctx)
    np.testing.assert_allclose(pp.x, x, atol=1e-12)
    np.testing.assert_allclose(pp.p, p, atol=1e-12)
    assert abs(pp.mu + 0.4) < 1e-12
    assert pp.noether_residual() < 1e-12 and pp.unstarred_residual() < 1e-12


def test_phase_point_needs_room():
    with pytest.raises(CapacityError):
        spinors.resolve_phase_point(np.zeros(4), [1, 0, 0, 0], 0.0, algebra.make_algebra(4))
    assert spinors.required_pairs(3) == 3 * spinors.PAIRS_PER_PARTICLE


def test_momentum_spinor_roundtrip(rng):
    p = timelike(rng)
    np.testing.assert_allclose(spinors.momentum_vector(spinors.momentum_spinor(p)), p, atol=1e-14)
