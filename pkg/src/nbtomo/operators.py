"""Dense linear algebra over small Hilbert spaces.

Operators are plain complex ``numpy`` arrays; states are 1-D arrays. The
helpers here validate shapes, enforce the desk-scale dimension cap and
implement the few primitives every other module needs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from ._validation import (
    MAX_DIM,
    DimensionError,
    check_hermitian,
    check_operator,
    check_state,
)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_MATRICES = {"I": I2, "X": X, "Y": Y, "Z": Z}


@dataclass(frozen=True)
class HilbertSpec:
    """Shape of the Hilbert space: ``m`` qubits or ``modes`` truncated bosons."""

    kind: str = "qubits"
    m: int = 1
    cutoff: int = 2

    def __post_init__(self):
        if self.kind not in ("qubits", "bosonic"):
            raise ValueError(f"unknown Hilbert space kind {self.kind!r}")
        if self.m < 1:
            raise ValueError("need at least one site")
        if self.kind == "qubits" and self.cutoff != 2:
            object.__setattr__(self, "cutoff", 2)
        if self.kind == "bosonic" and self.cutoff < 2:
            raise ValueError("bosonic cutoff must be at least 2")
        if self.dim > MAX_DIM:
            raise DimensionError(f"dimension {self.dim} exceeds desk-scale cap {MAX_DIM}")

    @classmethod
    def qubits(cls, m: int) -> "HilbertSpec":
        return cls("qubits", m, 2)

    @classmethod
    def bosonic(cls, modes: int, cutoff: int) -> "HilbertSpec":
        return cls("bosonic", modes, cutoff)

    @property
    def local_dims(self) -> tuple[int, ...]:
        return (self.cutoff,) * self.m

    @property
    def dim(self) -> int:
        return self.cutoff ** self.m


def tensor_product(*ops) -> np.ndarray:
    """Kronecker product of operators (or state vectors), left to right."""
    if not ops:
        raise ValueError("need at least one factor")
    arrays = [np.asarray(o, dtype=complex) for o in ops]
    total = int(np.prod([a.shape[0] for a in arrays]))
    if total > MAX_DIM:
        raise DimensionError(f"tensor product dimension {total} exceeds cap {MAX_DIM}")
    return reduce(np.kron, arrays)


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``tr(a^dagger b)``."""
    a = check_operator(a, name="a")
    b = check_operator(b, dim=a.shape[0], name="b")
    return complex(np.vdot(a, b))


def frobenius_norm(a) -> float:
    return float(np.linalg.norm(np.asarray(a)))


def traceless_part(o) -> np.ndarray:
    """``o - tr(o)/D * I`` for Hermitian ``o``."""
    o = check_hermitian(o)
    d = o.shape[0]
    return o - (np.trace(o) / d) * np.eye(d)


def projector(psi) -> np.ndarray:
    psi = check_state(psi)
    return np.outer(psi, psi.conj())


def embed(local, site: int, local_dims) -> np.ndarray:
    """Lift a single-site operator to the full product space."""
    factors = [np.eye(d, dtype=complex) for d in local_dims]
    factors[site] = np.asarray(local, dtype=complex)
    return tensor_product(*factors)


def basis_state(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def pseudoinverse_norm(g, tol: float | None = None) -> float:
    """Spectral norm of the Moore-Penrose inverse of a PSD Gram matrix.

    Eigenvalues at or below ``tol`` count as exact zeros; the default is
    ``1e-10`` times the largest eigenvalue. A zero matrix has a zero
    pseudoinverse.
    """
    g = check_hermitian(g, atol=1e-10, name="Gram matrix")
    evals = np.linalg.eigvalsh(g)
    top = max(evals[-1], 0.0)
    if tol is None:
        tol = 1e-10 * top
    if evals[0] < -max(tol, 1e-12):
        raise ValueError(f"Gram matrix has negative eigenvalue {evals[0]:.3g}")
    kept = evals[evals > tol]
    if kept.size == 0:
        return 0.0
    return float(1.0 / kept[0])


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (a + a.conj().T) / 2


def random_density_matrix(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    a = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real
