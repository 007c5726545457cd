import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbtomo._validation import DimensionError, NotHermitianError
from nbtomo.measurements import magic_projector
from nbtomo.operators import (HilbertSpec, hs_inner, pseudoinverse_norm, random_hermitian, random_unitary,
                              tensor_product, traceless_part)

from conftest import X, Z, I2


def test_hilbert_spec_dims():
    assert HilbertSpec.qubits(3).dim == 8
    assert HilbertSpec.bosonic(2, 5).dim == 25
    with pytest.raises(ValueError):
        HilbertSpec.bosonic(1, 1)


def test_tensor_examples():
    assert np.array_equal(tensor_product(I2, I2), np.eye(4))
    assert np.array_equal(tensor_product(Z, I2), np.diag([1, 1, -1, -1]))
    p0, p1 = np.diag([1, 0]), np.diag([0, 1])
    assert np.array_equal(tensor_product(p0, p1), np.diag([0, 1, 0, 0]))


def test_tensor_cap():
    big = np.eye(128)
    with pytest.raises(DimensionError):
        tensor_product(big, big)


def test_hs_inner():
    assert hs_inner(Z, Z) == pytest.approx(2)
    assert hs_inner(X, Z) == pytest.approx(0)
    # 2x2 by hand: <0|(I + (X+Y+Z)/sqrt3)/2|0> = (1 + 1/sqrt3)/2
    val = hs_inner(np.diag([1, 0]), magic_projector())
    assert val.real == pytest.approx((1 + 1 / math.sqrt(3)) / 2, abs=1e-12)
    assert val.real == pytest.approx(0.78868, abs=1e-5)
    with pytest.raises(ValueError):
        hs_inner(np.eye(2), np.eye(3))


def test_traceless_examples():
    assert np.allclose(traceless_part(I2), 0)
    assert np.allclose(traceless_part(np.diag([1, 0])), Z / 2)
    assert np.allclose(traceless_part(Z), Z)
    with pytest.raises(NotHermitianError):
        traceless_part(np.array([[0, 1], [0, 0]]))


def test_pinv_norm_examples():
    assert pseudoinverse_norm(np.eye(3)) == pytest.approx(1)
    th = 0.7
    g = np.array([[1, math.cos(th)], [math.cos(th), 1]])
    assert pseudoinverse_norm(g) == pytest.approx(1 / (1 - math.cos(th)), rel=1e-12)
    assert pseudoinverse_norm(np.ones((2, 2))) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        pseudoinverse_norm(np.diag([1.0, -0.5]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(1, 3), st.integers(0, 2 ** 31))
def test_tensor_associative(a, b, c, seed):
    r = np.random.default_rng(seed)
    A, B, C = (random_hermitian(2 ** n, r) for n in (a, b, c))
    lhs = tensor_product(tensor_product(A, B), C)
    rhs = tensor_product(A, tensor_product(B, C))
    assert np.max(np.abs(lhs - rhs)) <= 1e-14


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2 ** 31))
def test_traceless_idempotent(d, seed):
    h = random_hermitian(d, np.random.default_rng(seed))
    t = traceless_part(h)
    assert abs(np.trace(t)) < 1e-12
    assert np.allclose(traceless_part(t), t, atol=1e-13)
    assert np.allclose(traceless_part(np.eye(d)), 0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(1, 6), st.integers(0, 2 ** 31))
def test_pinv_times_smallest(d, r, seed):
    # known spectrum: r eigenvalues in [1e-3, 10], the rest exactly zero
    rng = np.random.default_rng(seed)
    lam = np.zeros(d)
    lam[: min(r, d)] = rng.uniform(1e-3, 10, min(r, d))
    u = random_unitary(d, rng)
    g = u @ np.diag(lam) @ u.conj().T
    smallest = lam[lam > 0].min()
    assert pseudoinverse_norm(g) * smallest == pytest.approx(1, abs=1e-10)
