"""Writing a Hermitian target as ``C*I + sum_i f_i M_i`` over a measurement family.

The cost of a decomposition is ``Z = sum_i r_i |f_i|`` with ``r_i`` the
outcome range of ``M_i``. Sampling term ``i`` with probability
``p_i = r_i |f_i| / Z`` and weighting its outcome by ``w_i = f_i / p_i`` gives
an unbiased estimator of ``<O - C>``. Outcomes are centered on the
midpoint ``m_i`` of their value range (the shift ``sum_i f_i m_i`` moves into
the constant), so every single-sample value lies in ``[-Z/2, Z/2]``.
"""

from __future__ import annotations

import json
from collections.abc import Sequence

import numpy as np
from scipy.optimize import linprog

from ._validation import check_hermitian
from .measurements import (
    MeasurementFamily,
    MeasurementOperator,
    pauli_measurement,
)
from .pauli import PauliString, all_pauli_strings, stabilizer_group

PRUNE_TOL = 1e-14


class DecompositionError(ValueError):
    """Target cannot be decomposed over the requested family."""


class LazySequence(Sequence):
    """Sequence whose items are built on first access and cached."""

    def __init__(self, size: int, builder):
        self._size = int(size)
        self._builder = builder
        self._cache: dict[int, object] = {}

    def __len__(self):
        return self._size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(self._size))]
        if not -self._size <= i < self._size:
            raise IndexError(i)
        i %= self._size
        if i not in self._cache:
            self._cache[i] = self._builder(i)
        return self._cache[i]


def build_sampling(coefficients, ranges):
    """Variance-optimal sampling table for coefficients ``f`` and outcome ranges ``r``.

    Returns ``(Z, p, w)`` with ``Z = sum r|f|``, ``p = r|f|/Z`` and
    ``w = sgn(f) Z / r``.
    """
    f = np.asarray(coefficients, dtype=float)
    r = np.asarray(ranges, dtype=float)
    if f.shape != r.shape:
        raise ValueError("coefficients and ranges must have the same length")
    if np.any(r <= 0):
        raise ValueError("outcome ranges must be positive")
    if f.size == 0 or not np.any(f != 0):
        raise DecompositionError("all coefficients vanish; the target is a multiple of I")
    if np.any(f == 0):
        raise ValueError("drop zero coefficients before building the sampling table")
    z = float(np.sum(r * np.abs(f)))
    p = r * np.abs(f) / z
    w = np.sign(f) * z / r
    return z, p, w


class Decomposition:
    """Finite decomposition ``C*I + sum_i f_i M_i``.

    ``measurements`` may be a lazy sequence; ``ranges`` can be passed to avoid
    building measurements just to learn their outcome range.
    """

    def __init__(self, target_id: str, constant: float, measurements: Sequence[MeasurementOperator],
                 coefficients, ranges=None, *, ids: Sequence[str] | None = None,
                 residual: float = 0.0, metadata: dict | None = None, midpoints=None):
        f = np.asarray(coefficients, dtype=float).reshape(-1)
        if len(measurements) != f.size:
            raise ValueError("need one coefficient per measurement")
        if ranges is None:
            ranges = [m.range for m in measurements]
        r = np.asarray(ranges, dtype=float).reshape(-1)
        if np.any(f == 0):
            raise ValueError("zero coefficients must be pruned before construction")
        self.target_id = str(target_id)
        self.constant = float(constant)
        self.measurements = measurements
        self.coefficients = f
        self.ranges = r
        self._ids = list(ids) if ids is not None else None
        self._mid = None if midpoints is None else np.asarray(midpoints, dtype=float).reshape(-1)
        self.residual = float(residual)
        self.metadata = dict(metadata or {})
        if f.size:
            self.cost, self.probabilities, self.weights = build_sampling(f, r)
        else:
            self.cost, self.probabilities, self.weights = 0.0, np.zeros(0), np.zeros(0)
        self._cdf = np.cumsum(self.probabilities)

    def __len__(self):
        return self.coefficients.size

    def __repr__(self):
        return (f"Decomposition({self.target_id!r}, C={self.constant:.6g}, "
                f"terms={len(self)}, Z={self.cost:.6g})")

    @property
    def ids(self) -> list[str]:
        if self._ids is None:
            self._ids = [m.id for m in self.measurements]
        return self._ids

    @property
    def is_constant(self) -> bool:
        return len(self) == 0

    @property
    def midpoints(self) -> np.ndarray:
        """Centre ``(lambda_max + lambda_min)/2`` of each measurement's outcome values."""
        if self._mid is None:
            self._mid = np.array([(m.lambda_max + m.lambda_min) / 2 for m in self.measurements])
        return self._mid

    @property
    def shifted_constant(self) -> float:
        """Constant of the centered estimator, ``C + sum_i f_i m_i``."""
        if not len(self):
            return self.constant
        return self.constant + float(self.coefficients @ self.midpoints)

    @property
    def dim(self) -> int:
        return self.measurements[0].dim if len(self) else int(self.metadata.get("dim", 0))

    def terms(self):
        return list(zip(self.ids, self.coefficients))

    def reconstruct(self, dim: int | None = None) -> np.ndarray:
        d = dim or self.dim
        out = self.constant * np.eye(d, dtype=complex)
        for f, m in zip(self.coefficients, self.measurements):
            out = out + f * m.observable
        return out

    def reconstruction_error(self, target) -> float:
        target = np.asarray(target)
        return float(np.linalg.norm(self.reconstruct(target.shape[0]) - target))

    # sampling interface shared with grid/product decompositions
    def draw(self, u) -> np.ndarray:
        """Term indices from uniforms ``u`` of shape ``(n, k)`` (column 0 used)."""
        idx = np.searchsorted(self._cdf, np.asarray(u)[:, 0] * self._cdf[-1], side="right")
        return np.minimum(idx, len(self) - 1)

    def term_weights(self, keys) -> np.ndarray:
        return self.weights[np.asarray(keys)]

    def term_offsets(self, keys) -> np.ndarray:
        return self.midpoints[np.asarray(keys)]

    def measurement(self, key) -> MeasurementOperator:
        return self.measurements[int(key)]

    def measurement_id(self, key) -> str:
        return self.ids[int(key)]

    def iter_terms(self):
        """Yield ``(p_i, w_i, m_i, M_i)`` for exact (branch-summed) evaluation."""
        for i in range(len(self)):
            yield self.probabilities[i], self.weights[i], self.midpoints[i], self.measurements[i]

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "constant": self.constant,
            "cost": self.cost,
            "residual": self.residual,
            "terms": [{"measurement": i, "f": float(f), "range": float(r), "midpoint": float(m)}
                      for i, f, r, m in zip(self.ids, self.coefficients, self.ranges,
                                            self.midpoints if len(self) else [])],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, doc: dict, family: MeasurementFamily | None = None) -> "Decomposition":
        """Rebuild from :meth:`to_dict` output, resolving ids via ``family`` or Pauli labels."""
        ids = [t["measurement"] for t in doc["terms"]]
        mids = [t["midpoint"] for t in doc["terms"]] if all("midpoint" in t for t in doc["terms"]) else None

        def resolve(i):
            mid = ids[i]
            if family is not None and mid in family.ids:
                return family.get(mid)
            if mid.startswith("pauli:"):
                return pauli_measurement(mid.split(":", 1)[1])
            raise KeyError(f"cannot resolve measurement id {mid!r}")

        return cls(doc["target_id"], doc["constant"], LazySequence(len(ids), resolve),
                   [t["f"] for t in doc["terms"]], [t["range"] for t in doc["terms"]],
                   ids=ids, residual=doc.get("residual", 0.0), midpoints=mids)

    @classmethod
    def from_json(cls, text: str, family: MeasurementFamily | None = None) -> "Decomposition":
        return cls.from_dict(json.loads(text), family)


def dfe_cost(d) -> float:
    """``Z = sum_i r_i |f_i|`` of a decomposition."""
    return float(d.cost)


def _pauli_decomposition(target_id, constant, coeffs: dict[str, float], m: int, metadata=None):
    labels = sorted(coeffs)
    f = [coeffs[lbl] for lbl in labels]
    ms = LazySequence(len(labels), lambda i: pauli_measurement(labels[i]))
    meta = {"dim": 2 ** m, **(metadata or {})}
    return Decomposition(target_id, constant, ms, f, [2.0] * len(labels),
                         ids=[f"pauli:{lbl}" for lbl in labels], metadata=meta,
                         midpoints=np.zeros(len(labels)))


def pauli_coefficients(o, m: int) -> tuple[float, dict[str, float]]:
    """``C = tr(o)/2^m`` and ``f_P = tr(P o)/2^m`` for every nontrivial Pauli ``P``."""
    d = 2 ** m
    o = check_hermitian(o, dim=d, atol=1e-10, name="target")
    constant = float(np.trace(o).real / d)
    coeffs = {}
    for p in all_pauli_strings(m):
        coeffs[p.body] = p.trace_with(o).real / d
    return constant, coeffs


def pauli_decompose(o, m: int, target_id: str = "target", prune_tol: float = PRUNE_TOL) -> Decomposition:
    """Decomposition over the Pauli family (unique, since Paulis are orthogonal)."""
    constant, coeffs = pauli_coefficients(o, m)
    kept = {k: v for k, v in coeffs.items() if abs(v) >= prune_tol}
    return _pauli_decomposition(target_id, constant, kept, m, {"route": "pauli"})


def stabilizer_outer_terms(generators, p_left: PauliString, p_right: PauliString, phase_c: int = 0):
    """Pauli expansion of ``i^c P_l |psi><psi| P_r^dag + h.c.`` in the symplectic representation.

    ``|psi>`` is the stabilizer state of ``generators``. Using
    ``|psi><psi| = 2^-m sum_{s in S} s``, each ``P_l s P_r^dag`` is a Pauli
    ``phi Q`` and contributes ``2 Re(i^c phi) 2^-m`` to the coefficient of
    the Hermitian string ``Q``. Returns ``(C, {label: f})``.
    """
    if phase_c not in (0, 1):
        raise ValueError("phase_c must be 0 or 1")
    group = stabilizer_group(list(generators))
    m = group[0].m
    if p_left.m != m or p_right.m != m:
        raise ValueError("Pauli operators act on a different qubit count")
    right_dag = p_right.dagger()
    acc: dict[tuple[int, int], int] = {}
    # exact integer bookkeeping: 2 Re(i^k) is 2, 0, -2, 0 for k = 0..3
    for s in group:
        q = p_left * s * right_dag
        k = (q.phase + phase_c) % 4
        re2 = (2, 0, -2, 0)[k]
        if re2:
            key = (q.x, q.z)
            acc[key] = acc.get(key, 0) + re2
    constant = 0.0
    coeffs = {}
    for (x, z), val in acc.items():
        if val == 0:
            continue
        f = val / 2 ** m
        if x == 0 and z == 0:
            constant = f
        else:
            coeffs[PauliString(m, x, z).body] = f
    return constant, coeffs


def stabilizer_outer_decompose(generators, p_left, p_right, phase_c: int = 0,
                               target_id: str = "stabilizer_element") -> Decomposition:
    if isinstance(p_left, str):
        p_left = PauliString.from_label(p_left)
    if isinstance(p_right, str):
        p_right = PauliString.from_label(p_right)
    generators = [PauliString.from_label(g) if isinstance(g, str) else g for g in generators]
    constant, coeffs = stabilizer_outer_terms(generators, p_left, p_right, phase_c)
    return _pauli_decomposition(target_id, constant, coeffs, p_left.m, {"route": "stabilizer"})


# --- L1-minimal decomposition --------------------------------------------------


def hermitian_dof(o) -> np.ndarray:
    """Real coordinates of a Hermitian matrix: diagonal, then Re and Im of the upper triangle."""
    o = np.asarray(o)
    iu = np.triu_indices(o.shape[0], 1)
    return np.concatenate([np.diag(o).real, o[iu].real, o[iu].imag])


def l1_min_decompose(o, family, tol: float = 1e-9, target_id: str = "target",
                     max_family: int = 20000) -> Decomposition:
    """Minimal-cost decomposition over a finite family via linear programming.

    Solves ``min sum r_i |f_i|`` subject to ``C*I + sum f_i M_i = o`` in
    split-variable form, then re-solves the equality system on the optimal
    support to remove solver tolerance from the coefficients.
    """
    members = list(family)
    if len(members) > max_family:
        raise ValueError(f"family of size {len(members)} exceeds cap {max_family}")
    d = members[0].dim if members else np.asarray(o).shape[0]
    o = check_hermitian(o, dim=d, atol=1e-10, name="target")
    b = hermitian_dof(o)
    ident = hermitian_dof(np.eye(d))
    if not members:
        cols = ident[:, None]
    else:
        cols = np.column_stack([ident] + [hermitian_dof(mm.observable) for mm in members])
    scale = max(1.0, float(np.linalg.norm(b)))

    sol, *_ = np.linalg.lstsq(cols, b, rcond=None)
    if np.linalg.norm(cols @ sol - b) > tol * scale * 10:
        rank = np.linalg.matrix_rank(cols)
        raise DecompositionError(
            f"target lies outside span(I, family) (family span rank {rank} of {b.size})")

    n = len(members)
    if n == 0:
        return Decomposition(target_id, float(sol[0]), [], [], [], metadata={"dim": d, "route": "lp"})
    r = np.array([mm.range for mm in members])
    a = cols[:, 1:]
    c = np.concatenate([[0.0], r, r])
    a_eq = np.hstack([cols[:, :1], a, -a])
    bounds = [(None, None)] + [(0, None)] * (2 * n)
    res = linprog(c, A_eq=a_eq, b_eq=b, bounds=bounds, method="highs")
    if res.status != 0:
        raise DecompositionError(f"LP did not converge: {res.message}")
    f = res.x[1:n + 1] - res.x[n + 1:]

    support = np.flatnonzero(np.abs(f) > 1e-9 * scale)
    sub = np.column_stack([cols[:, 0]] + [a[:, i] for i in support])
    refined, *_ = np.linalg.lstsq(sub, b, rcond=None)
    if np.linalg.norm(sub @ refined - b) <= tol * scale and np.linalg.matrix_rank(sub) == sub.shape[1]:
        constant, f_sup = float(refined[0]), refined[1:]
    else:
        constant, f_sup = float(res.x[0]), f[support]
    keep = np.abs(f_sup) > PRUNE_TOL
    support, f_sup = support[keep], f_sup[keep]
    chosen = [members[i] for i in support]
    dec = Decomposition(target_id, constant, chosen, f_sup, r[support],
                        metadata={"dim": d, "route": "lp", "lp_objective": float(res.fun)})
    dec.residual = dec.reconstruction_error(o)
    return dec


def decompose_with_identity(o, measurements: Sequence[MeasurementOperator], target_id="target"):
    """Least-squares coefficients over ``I`` plus ``measurements`` (exact when the system is consistent)."""
    o = np.asarray(o, dtype=complex)
    cols = np.column_stack([hermitian_dof(np.eye(o.shape[0]))] + [hermitian_dof(m.observable) for m in measurements])
    sol, *_ = np.linalg.lstsq(cols, hermitian_dof(o), rcond=None)
    keep = [i for i in range(len(measurements)) if abs(sol[i + 1]) > PRUNE_TOL]
    dec = Decomposition(target_id, float(sol[0]), [measurements[i] for i in keep], sol[[i + 1 for i in keep]],
                        metadata={"dim": o.shape[0]})
    dec.residual = dec.reconstruction_error(o)
    return dec


__all__ = [
    "Decomposition",
    "DecompositionError",
    "LazySequence",
    "build_sampling",
    "decompose_with_identity",
    "dfe_cost",
    "l1_min_decompose",
    "pauli_coefficients",
    "pauli_decompose",
    "stabilizer_outer_decompose",
    "stabilizer_outer_terms",
]
