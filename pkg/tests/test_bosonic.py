import math

import numpy as np
import pytest
from scipy.special import eval_laguerre

from nbtomo.bosonic import (annihilation, coherent_state, displacement, fock, number, parity,
                            wigner_1mode, wigner_multimode)
from nbtomo.operators import tensor_product

from conftest import dm


def test_ladder():
    a = annihilation(6)
    assert np.allclose(a.conj().T @ a, number(6))
    assert np.allclose(parity(4), np.diag([1, -1, 1, -1]))


def test_displacement_unitary_and_coherent():
    d = displacement(0.3 + 0.2j, 25)
    assert np.allclose(d.conj().T @ d, np.eye(25), atol=1e-12)
    c = coherent_state(0.3 + 0.2j, 25)
    assert abs(np.vdot(c, d @ fock(0, 25))) == pytest.approx(1, abs=1e-10)


def test_vacuum_wigner():
    pts = np.array([0, 0.5, 1 + 1j])
    w = wigner_1mode(dm(fock(0, 20)), pts)
    assert np.allclose(w, 2 / math.pi * np.exp(-2 * np.abs(pts) ** 2), atol=1e-10)


def test_fock1_wigner_closed_form():
    # W_n(a) = 2/pi (-1)^n L_n(4|a|^2) e^{-2|a|^2}
    pts = np.array([0.1, 0.7j, 0.4 - 0.3j])
    w = wigner_1mode(dm(fock(1, 25)), pts)
    r2 = np.abs(pts) ** 2
    want = 2 / math.pi * -eval_laguerre(1, 4 * r2) * np.exp(-2 * r2)
    assert np.allclose(w, want, atol=1e-10)


def test_two_mode_factorizes():
    rho = tensor_product(dm(fock(0, 8)), dm(fock(1, 8)))
    alphas = np.array([[0.2, 0.1j]])
    w = wigner_multimode(rho, alphas, 8, 2)
    w0 = wigner_1mode(dm(fock(0, 8)), np.array([0.2]))[0]
    w1 = wigner_1mode(dm(fock(1, 8)), np.array([0.1j]))[0]
    assert w[0] == pytest.approx(w0 * w1, abs=1e-10)
