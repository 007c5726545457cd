"""Neighborhood subspaces ``N_k(psi, K)`` and their orthonormal bases.

Words over the generator set are enumerated breadth-first. A word
``(i_1, ..., i_L)`` denotes the vector ``K_{i_L} ... K_{i_1} |psi>``, i.e. the
first letter acts first. Parallel vectors are merged, so the number of
kept raw vectors never exceeds ``(|K| + 1)**k``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_operator, check_state
from .operators import pseudoinverse_norm, tensor_product
from .pauli import PauliString, check_stabilizer_generators

log = logging.getLogger(__name__)

UNITARY_TOL = 1e-10
ZERO_TOL = 1e-12


class GeneratorSet:
    """Operators generating a neighborhood, with optional structure.

    ``paulis`` (one :class:`PauliString` per operator) enables the
    stabilizer fast path; ``local`` (one ``(site, matrix)`` per operator)
    enables the product-state route.
    """

    def __init__(self, operators, labels=None, is_unitary=None, paulis=None, local=None):
        ops = [check_operator(o, name="generator") for o in operators]
        if not ops:
            raise ValueError("empty generator set")
        d = ops[0].shape[0]
        if any(o.shape[0] != d for o in ops):
            raise ValueError("generators act on different dimensions")
        self.operators = ops
        self.labels = list(labels) if labels is not None else [f"K{i}" for i in range(len(ops))]
        if len(self.labels) != len(ops):
            raise ValueError("need one label per generator")
        detected = [np.linalg.norm(o.conj().T @ o - np.eye(d)) <= UNITARY_TOL for o in ops]
        if is_unitary is None:
            is_unitary = detected
        for flag, ok, lbl in zip(is_unitary, detected, self.labels):
            if flag and not ok:
                raise ValueError(f"generator {lbl} is flagged unitary but U^dag U != I")
        self.is_unitary = [bool(f) for f in is_unitary]
        self.paulis = list(paulis) if paulis is not None else None
        self.local = list(local) if local is not None else None

    def __len__(self):
        return len(self.operators)

    @property
    def dim(self) -> int:
        return self.operators[0].shape[0]

    @classmethod
    def from_paulis(cls, labels) -> "GeneratorSet":
        ps = [PauliString.from_label(lbl) if isinstance(lbl, str) else lbl for lbl in labels]
        return cls([p.to_matrix() for p in ps], [p.label for p in ps], [True] * len(ps), paulis=ps)

    @classmethod
    def local_ops(cls, site_ops, local_dims, labels=None) -> "GeneratorSet":
        """Single-site generators given as ``(site, matrix)`` pairs on a product space."""
        full = []
        for site, mat in site_ops:
            factors = [np.eye(d, dtype=complex) for d in local_dims]
            factors[site] = np.asarray(mat, dtype=complex)
            full.append(tensor_product(*factors))
        labels = labels or [f"L{s}" for s, _ in site_ops]
        return cls(full, labels, local=[(s, np.asarray(m, dtype=complex)) for s, m in site_ops])


@dataclass
class NeighborhoodBasis:
    base: np.ndarray
    k: int
    words: list
    raw: np.ndarray
    gram: np.ndarray
    coeffs: np.ndarray
    rank: int
    gram_pinv_norm: float
    generators: GeneratorSet
    merged_words: list = field(default_factory=list)
    dropped_words: list = field(default_factory=list)
    stabilizer: list | None = None
    base_factors: list | None = None
    word_factors: list | None = None

    @property
    def states(self) -> np.ndarray:
        """Orthonormal basis vectors as columns (``D x rank``)."""
        return self.raw @ self.coeffs

    def state(self, a: int) -> np.ndarray:
        return self.states[:, a]

    @property
    def dim(self) -> int:
        return self.base.size

    @property
    def orthonormal_raw(self) -> bool:
        """True when the raw vectors are already orthonormal (``B = I``)."""
        return self.coeffs.shape == (len(self.words), len(self.words)) and np.allclose(
            self.coeffs, np.eye(len(self.words)), atol=1e-10)

    def word_label(self, i: int) -> str:
        w = self.words[i]
        return "*".join(self.generators.labels[j] for j in reversed(w)) if w else "I"

    def word_pauli(self, i: int) -> PauliString:
        """Pauli string ``P_{i_L} ... P_{i_1}`` of raw vector ``i`` (needs Pauli generators)."""
        if self.generators.paulis is None:
            raise ValueError("generators carry no Pauli structure")
        m = self.generators.paulis[0].m
        p = PauliString.identity(m)
        for j in self.words[i]:
            p = self.generators.paulis[j] * p
        return p

    def projector(self) -> np.ndarray:
        s = self.states
        return s @ s.conj().T

    def describe(self) -> dict:
        evals = np.linalg.eigvalsh(self.gram)
        return {
            "k": self.k,
            "rank": self.rank,
            "n_raw": len(self.words),
            "generators": list(self.generators.labels),
            "words": [self.word_label(i) for i in range(len(self.words))],
            "merged": [[self._label(w) for w in ws] for ws in self.merged_words],
            "dropped": [self._label(w) for w in self.dropped_words],
            "gram_spectrum": [float(v) for v in evals],
            "gram_pinv_norm": self.gram_pinv_norm,
        }

    def _label(self, w) -> str:
        return "*".join(self.generators.labels[j] for j in reversed(w)) if w else "I"


def orthonormalize(gram, tol: float | None = None):
    """Symmetric orthonormalization from the eigenbasis of ``gram``.

    Full rank gives Lowdin coefficients ``G^{-1/2}`` (the identity when the
    raw vectors are orthonormal); otherwise the retained eigenvectors scaled
    by ``lambda^{-1/2}``. Returns ``(B, rank)`` with ``B^dag G B = I``.
    """
    evals, vecs = np.linalg.eigh(gram)
    top = max(evals[-1], 0.0)
    tol = 1e-10 * top if tol is None else tol
    keep = evals > tol
    rank = int(keep.sum())
    if rank == 0:
        raise ValueError("empty neighborhood basis")
    if rank == gram.shape[0]:
        b = (vecs / np.sqrt(evals)) @ vecs.conj().T
    else:
        b = vecs[:, keep] / np.sqrt(evals[keep])
    return b, rank


def generate(base, gens: GeneratorSet, k: int, dedup_tol: float = 1e-10, stabilizer=None,
             base_factors=None, rank_tol: float | None = None) -> NeighborhoodBasis:
    """Breadth-first construction of ``N_k(base, gens)``."""
    if k < 0:
        raise ValueError("depth k must be nonnegative")
    base = check_state(base, dim=gens.dim)
    if stabilizer is not None:
        stabilizer = check_stabilizer_generators(
            [PauliString.from_label(g) if isinstance(g, str) else g for g in stabilizer])
    words = [()]
    vecs = [base]
    units = [base / np.linalg.norm(base)]
    merged = [[()]]
    dropped = []
    factors = [list(base_factors)] if base_factors is not None else None
    frontier = [0]
    scale = np.linalg.norm(base)
    for _ in range(k):
        nxt = []
        for idx in frontier:
            for j, op in enumerate(gens.operators):
                w = words[idx] + (j,)
                v = op @ vecs[idx]
                nrm = np.linalg.norm(v)
                if nrm <= ZERO_TOL * scale:
                    dropped.append(w)
                    log.warning("word %s annihilates the base state; dropped", w)
                    continue
                u = v / nrm
                overlaps = np.abs(np.array(units).conj() @ u)
                hit = int(np.argmax(overlaps))
                if overlaps[hit] >= 1 - dedup_tol:
                    merged[hit].append(w)
                    continue
                words.append(w)
                vecs.append(v)
                units.append(u)
                merged.append([w])
                if factors is not None:
                    site, mat = gens.local[j]
                    f = list(factors[idx])
                    f[site] = mat @ f[site]
                    factors.append(f)
                nxt.append(len(words) - 1)
        frontier = nxt
    raw = np.column_stack(vecs)
    gram = raw.conj().T @ raw
    gram = (gram + gram.conj().T) / 2
    b, rank = orthonormalize(gram, rank_tol)
    if b.shape[0] == b.shape[1] and np.allclose(b, np.eye(b.shape[0]), atol=1e-10):
        b = np.eye(b.shape[0], dtype=complex)
    pinv = pseudoinverse_norm(gram, rank_tol)
    return NeighborhoodBasis(base, k, words, raw, gram, b, rank, pinv, gens, merged, dropped,
                             stabilizer, base_factors, factors)


def element_operator(basis: NeighborhoodBasis, a: int, b: int, phase_c: int = 0) -> np.ndarray:
    """``i^c |psi_a><psi_b| + h.c.``; for ``a == b`` and ``c == 0`` the projector ``|psi_a><psi_a|``."""
    if phase_c not in (0, 1):
        raise ValueError("phase_c must be 0 or 1")
    if not (0 <= a < basis.rank and 0 <= b < basis.rank):
        raise IndexError("basis index out of range")
    if a == b:
        if phase_c == 1:
            raise ValueError("a == b with c = 1 gives the zero operator")
        v = basis.state(a)
        return np.outer(v, v.conj())
    op = (1j ** phase_c) * np.outer(basis.state(a), basis.state(b).conj())
    return op + op.conj().T


def superposition_cost_bound(rank: int, element_costs: dict, method: str = "tight") -> float:
    """Cost bound for any normalized superposition of basis states.

    ``element_costs[(a, b, c)]`` holds the cost of the element operator for
    either ordering of ``a != b`` (diagonal entries use ``c = 0``). Writing
    ``alpha_a alpha_b^* = x + iy`` the projector splits into diagonal
    projectors plus ``x E0_ab + y E1_ab``; the triangle inequality bounds the
    cost by a quadratic form in ``|alpha|`` whose maximum over the unit
    sphere is the top eigenvalue of ``T`` with ``T_aa = Z_aa`` and
    ``T_ab = sqrt(Z0_ab^2 + Z1_ab^2)/2``. ``method="crude"`` instead returns
    ``sum_a Z_aa + sum_{a>b} (Z0_ab + Z1_ab)/2``, bounding every
    coefficient separately.
    """
    if hasattr(rank, "rank"):
        rank = rank.rank

    def cost(a, b, c):
        # swapping a and b only flips the sign of the element operator
        for key in ((max(a, b), min(a, b), c), (min(a, b), max(a, b), c)):
            if key in element_costs:
                return float(element_costs[key])
        raise KeyError(f"missing element cost for {(max(a, b), min(a, b), c)}")

    if method == "crude":
        total = sum(cost(a, a, 0) for a in range(rank))
        total += sum((cost(a, b, 0) + cost(a, b, 1)) / 2 for a in range(rank) for b in range(a))
        return total
    if method != "tight":
        raise ValueError(f"unknown method {method!r}")
    t = np.zeros((rank, rank))
    for a in range(rank):
        t[a, a] = cost(a, a, 0)
        for b in range(a):
            t[a, b] = t[b, a] = np.hypot(cost(a, b, 0), cost(a, b, 1)) / 2
    return float(np.linalg.eigvalsh(t)[-1])
