"""Truncated Fock-space primitives for bosonic modes.

Two independent routes to displaced operators are provided:

* :func:`displacement` exponentiates the truncated generator
  ``alpha a^dag - alpha* a``; the result is exactly unitary on the
  truncated space.
* :func:`displacement_elements` evaluates the exact matrix elements
  ``<m|D(beta)|n>`` of the infinite-dimensional operator through associated
  Laguerre polynomials, i.e. the compression of the true displacement.

Wigner functions follow the convention ``W(alpha) = (2/pi) tr(rho D(alpha)
Pi D(alpha)^dag)`` with ``Pi`` the photon-number parity, so the vacuum has
``W(alpha) = (2/pi) exp(-2|alpha|^2)``.
"""

from __future__ import annotations

from math import factorial, lgamma

import numpy as np
from scipy.linalg import expm
from scipy.special import eval_genlaguerre
from scipy.stats import poisson

from .operators import tensor_product


def annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), 1).astype(complex)


def creation(cutoff: int) -> np.ndarray:
    return annihilation(cutoff).conj().T


def number(cutoff: int) -> np.ndarray:
    return np.diag(np.arange(cutoff, dtype=float)).astype(complex)


def parity(cutoff: int) -> np.ndarray:
    return np.diag((-1.0) ** np.arange(cutoff)).astype(complex)


def displacement(alpha: complex, cutoff: int) -> np.ndarray:
    a = annihilation(cutoff)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def fock(n: int, cutoff: int) -> np.ndarray:
    v = np.zeros(cutoff, dtype=complex)
    v[n] = 1.0
    return v


def coherent_state(alpha: complex, cutoff: int) -> np.ndarray:
    """Exact coherent-state amplitudes ``<n|alpha>`` for ``n < cutoff`` (not renormalized)."""
    n = np.arange(cutoff)
    if alpha == 0:
        return (n == 0).astype(complex)
    log_mag = -abs(alpha) ** 2 / 2 + n * np.log(abs(alpha)) - np.array([0.5 * lgamma(k + 1) for k in n])
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def coherent_tail(alpha: complex, cutoff: int) -> float:
    """Probability mass of the coherent state ``|alpha>`` at or above ``cutoff``."""
    return float(poisson.sf(cutoff - 1, abs(alpha) ** 2))


def displacement_elements(beta, cutoff: int) -> np.ndarray:
    """Exact ``<m|D(beta)|n>`` for ``m, n < cutoff``.

    ``beta`` may be an array; the result then has shape ``beta.shape + (cutoff, cutoff)``.
    """
    beta = np.asarray(beta, dtype=complex)
    x = np.abs(beta) ** 2
    gauss = np.exp(-x / 2)
    out = np.empty(beta.shape + (cutoff, cutoff), dtype=complex)
    for m in range(cutoff):
        for n in range(cutoff):
            if m >= n:
                lo, hi, amp = n, m, beta
            else:
                lo, hi, amp = m, n, -np.conj(beta)
            d = hi - lo
            pref = np.sqrt(factorial(lo) / factorial(hi))
            out[..., m, n] = pref * amp ** d * gauss * eval_genlaguerre(lo, d, x)
    return out


def displaced_parity_elements(alpha, cutoff: int) -> np.ndarray:
    """Exact compressed matrix of ``D(alpha) Pi D(alpha)^dag`` (equal to ``D(2 alpha) Pi``)."""
    dm = displacement_elements(2 * np.asarray(alpha, dtype=complex), cutoff)
    return dm * ((-1.0) ** np.arange(cutoff))


def wigner_kernels(alpha, cutoff: int) -> np.ndarray:
    """``(2/pi) <n|D(2 alpha) Pi|m>`` arranged so that ``W(alpha) = sum rho[m, n] K[..., n, m]``."""
    return (2 / np.pi) * displaced_parity_elements(alpha, cutoff)


def wigner_1mode(rho, points) -> np.ndarray:
    """Wigner function of a single-mode operator at complex ``points`` (any shape).

    ``rho`` need not be a state; any operator gives the linear Wigner transform.
    Zero entries of ``rho`` are skipped, which keeps sparse targets cheap on
    large grids.
    """
    rho = np.asarray(rho, dtype=complex)
    c = rho.shape[0]
    points = np.asarray(points, dtype=complex)
    beta = 2 * points
    x = np.abs(beta) ** 2
    gauss = np.exp(-x / 2)
    w = np.zeros(points.shape, dtype=complex)
    for m, n in zip(*np.nonzero(np.abs(rho) > 0)):
        # W gets rho[m, n] * (2/pi) <n|D(2a)|m> (-1)^m
        if n >= m:
            lo, hi, amp = m, n, beta
        else:
            lo, hi, amp = n, m, -np.conj(beta)
        d = hi - lo
        pref = np.sqrt(factorial(lo) / factorial(hi))
        elem = pref * amp ** d * gauss * eval_genlaguerre(lo, d, x)
        w += rho[m, n] * elem * (-1.0) ** m
    w *= 2 / np.pi
    if np.allclose(rho, rho.conj().T):
        return w.real
    return w


def _letters(k):
    return "abcdefghijklmnopqrstuvwxyz"[k]


def wigner_multimode(rho, alphas, cutoff: int, modes: int) -> np.ndarray:
    """Wigner function of a ``modes``-mode operator at points ``alphas`` of shape ``(n, modes)``."""
    rho = np.asarray(rho, dtype=complex)
    alphas = np.atleast_2d(np.asarray(alphas, dtype=complex))
    t = rho.reshape((cutoff,) * (2 * modes))
    rows = [_letters(k) for k in range(modes)]
    cols = [_letters(modes + k) for k in range(modes)]
    # kernel index order is (point, col, row): W = sum t[r, c] prod_k K_k[c_k, r_k]
    subs = "".join(rows + cols) + "," + ",".join("Z" + c + r for r, c in zip(rows, cols)) + "->Z"
    kerns = [wigner_kernels(alphas[:, k], cutoff) for k in range(modes)]
    out = np.einsum(subs, t, *kerns)
    return out.real if np.allclose(rho, rho.conj().T) else out


def wigner_grid(rho, axis_points, cutoff: int, modes: int) -> np.ndarray:
    """Wigner function on the outer-product grid ``axis_points`` (1-D complex array) per mode.

    Returns an array of shape ``(len(axis_points),) * modes``.
    """
    rho = np.asarray(rho, dtype=complex)
    if modes == 1:
        return wigner_1mode(rho, axis_points)
    t = rho.reshape((cutoff,) * (2 * modes))
    kern = wigner_kernels(np.asarray(axis_points), cutoff)
    rows = [_letters(k) for k in range(modes)]
    cols = [_letters(modes + k) for k in range(modes)]
    outs = [_letters(2 * modes + k) for k in range(modes)]
    subs = ("".join(rows + cols) + ","
            + ",".join(o + c + r for o, r, c in zip(outs, rows, cols))
            + "->" + "".join(outs))
    out = np.einsum(subs, t, *([kern] * modes), optimize=True)
    return out.real if np.allclose(rho, rho.conj().T) else out


def product_displacement(alphas, cutoff: int) -> np.ndarray:
    return tensor_product(*[displacement(a, cutoff) for a in np.atleast_1d(alphas)])
