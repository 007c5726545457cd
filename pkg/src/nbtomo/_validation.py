"""Input validation helpers shared by every module.

These mirror the ``check_array`` family from scikit-learn: they coerce the
input to a complex ndarray, verify the structural contract, and raise
``ValueError`` with a readable message otherwise.
"""

from __future__ import annotations

import numpy as np

#: Largest Hilbert-space dimension accepted anywhere in the package.
MAX_DIM = 4096

HERMITIAN_ATOL = 1e-12


class DimensionError(ValueError):
    """Operator dimensions are incompatible or exceed ``MAX_DIM``."""


class NotHermitianError(ValueError):
    """An operator required to be Hermitian is not."""


def check_dim(dim: int) -> int:
    dim = int(dim)
    if dim < 1:
        raise DimensionError(f"dimension must be positive, got {dim}")
    if dim > MAX_DIM:
        raise DimensionError(f"dimension {dim} exceeds desk-scale cap {MAX_DIM}")
    return dim


def check_operator(a, *, dim: int | None = None, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a square complex matrix, optionally of dimension ``dim``."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be a square matrix, got shape {a.shape}")
    check_dim(a.shape[0])
    if dim is not None and a.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {a.shape[0]}, expected {dim}")
    return a


def is_hermitian(a: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    return bool(np.max(np.abs(a - a.conj().T), initial=0.0) <= atol)


def check_hermitian(a, *, dim: int | None = None, atol: float = HERMITIAN_ATOL,
                    name: str = "operator") -> np.ndarray:
    a = check_operator(a, dim=dim, name=name)
    if not is_hermitian(a, atol):
        dev = np.max(np.abs(a - a.conj().T))
        raise NotHermitianError(f"{name} is not Hermitian (max deviation {dev:.3g})")
    return a


def check_state(psi, *, dim: int | None = None, normalize: bool = False) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    check_dim(psi.size)
    if dim is not None and psi.size != dim:
        raise DimensionError(f"state has dimension {psi.size}, expected {dim}")
    if normalize:
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        psi = psi / norm
    return psi


def check_density_matrix(rho, *, dim: int | None = None, atol: float = 1e-10) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, PSD within ``atol``."""
    rho = check_hermitian(rho, dim=dim, atol=max(atol, HERMITIAN_ATOL), name="density matrix")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > atol:
        raise ValueError(f"density matrix trace {tr:.12g} differs from 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -atol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")
    return rho


def check_probability(x: float, name: str) -> float:
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"{name} must lie in (0, 1), got {x}")
    return x
