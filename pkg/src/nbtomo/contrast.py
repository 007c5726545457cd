"""Effective contrast and the iterative measurement-ensemble construction.

For a target ``O`` with traceless part ``Ot`` and a measurement ``M`` with
outcome range ``r``, the normalized traceless observable is
``Mt = (M - tr(M)/D I) / r`` and its deviation from the target direction is
``Delta = Mt - tr(Mt Ot)/|Ot|^2 Ot``. The ensemble deviation
``s_n = sum_i p_i Delta_i`` shrinks like ``sqrt(D/n)`` when every new
measurement satisfies ``tr(s_n M) <= 0``, and the weighted ensemble then
realizes ``O = Z sum_i p_i Mt_i + C I``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import check_hermitian
from .decomposition import Decomposition
from .measurements import MeasurementFamily, MeasurementOperator
from .operators import HilbertSpec, traceless_part

CONTRACT_TOL = 1e-12


class OracleViolation(RuntimeError):
    """The oracle returned a measurement breaking the contract."""


def _observable(meas):
    if isinstance(meas, MeasurementOperator):
        return meas.observable, meas.range
    obs = check_hermitian(meas, atol=1e-10, name="measurement observable")
    ev = np.linalg.eigvalsh(obs)
    return obs, float(ev[-1] - ev[0])


def _target(o):
    o = check_hermitian(o, atol=1e-10, name="target")
    ot = traceless_part(o)
    n2 = float(np.vdot(ot, ot).real)
    if n2 <= 1e-24:
        raise ValueError("target is proportional to the identity; its traceless part vanishes")
    return o, ot, n2


def normalized_traceless(meas) -> np.ndarray:
    obs, r = _observable(meas)
    if r <= 0:
        raise ValueError("measurement with a single outcome value has no contrast")
    d = obs.shape[0]
    return (obs - np.trace(obs) / d * np.eye(d)) / r


def effective_contrast(o, meas, varsigma) -> float:
    """``Y(O, M, s)``: zero if ``tr(M s~) > 0``, else ``tr(M Ot) / r``.

    ``s~`` is ``s`` with its identity and ``Ot`` components removed.
    """
    o, ot, n2 = _target(o)
    d = o.shape[0]
    s = check_hermitian(varsigma, dim=d, atol=1e-10, name="varsigma")
    st = s - np.eye(d) * np.trace(s) / d - ot * np.vdot(ot, s).real / n2
    obs, r = _observable(meas)
    if np.vdot(obs, st).real > 0:
        return 0.0
    return float(np.vdot(obs, ot).real / r)


def mixture_measurement(measurements, weights, id: str = "mixture") -> MeasurementOperator:
    """Pick ``M_i`` with probability ``q_i`` and measure it (effects ``q_i Lambda_j``)."""
    q = np.asarray(weights, dtype=float)
    if np.any(q < 0) or abs(q.sum() - 1) > 1e-12:
        raise ValueError("mixture weights must be a probability vector")
    effects, values = [], []
    for qi, m in zip(q, measurements):
        effects += [qi * e for e in m.effects]
        values += list(m.values)
    return MeasurementOperator(id, tuple(effects), np.array(values), "custom")


@dataclass
class ContrastState:
    n: int
    varsigma: np.ndarray
    measurements: list
    weights: np.ndarray
    history: list = field(default_factory=list)
    implied_z: list = field(default_factory=list)
    inverse_square_ok: bool = True
    exact: bool = False

    @property
    def ensemble(self) -> list:
        return list(zip(self.measurements, self.weights))

    @property
    def final_z(self) -> float:
        return self.implied_z[-1]

    def trace_rows(self):
        return [(i + 1, h, z) for i, (h, z) in enumerate(zip(self.history, self.implied_z))]


def iterative_ensemble(o, oracle, n_max: int, y0: float = 0.0, tol: float = CONTRACT_TOL,
                       weight_rule: str = "optimal") -> ContrastState:
    """Grow a measurement ensemble whose deviation ``s_n`` obeys ``|s_n| < sqrt(D/n)``.

    ``oracle(s)`` must return a measurement with ``tr(s M) <= 0`` and
    ``tr(Mt Ot) >= y0`` (strictly positive when ``y0 == 0``); anything else
    raises :class:`OracleViolation`.

    The new weight is ``q = |s|^2 / (|Delta|^2 + |s|^2)``, the minimizer of
    ``|q Delta + (1 - q) s|`` for orthogonal ``Delta`` and ``s``; it gives
    ``|s'|^-2 >= |Delta|^-2 + |s|^-2``. ``weight_rule="swapped"`` uses
    ``|Delta|^2 / (|Delta|^2 + |s|^2)`` instead, which does not.
    """
    if n_max < 1:
        raise ValueError("need at least one iteration")
    if weight_rule not in ("optimal", "swapped"):
        raise ValueError(f"unknown weight rule {weight_rule!r}")
    o, ot, n2 = _target(o)
    d = o.shape[0]
    s = np.zeros((d, d), dtype=complex)
    ids: dict[str, int] = {}
    meas_list: list = []
    contrib: list = []
    weights = np.zeros(0)
    history, implied = [], []
    ok = True
    exact = False
    for n in range(n_max):
        m = oracle(s)
        mt = normalized_traceless(m)
        y = float(np.vdot(mt, ot).real)
        if y < y0 - tol or y <= 0:
            raise OracleViolation(f"step {n + 1}: contrast {y:.6g} below required {max(y0, 0):.6g}")
        if n and np.vdot(s, mt).real > tol:
            raise OracleViolation(f"step {n + 1}: tr(s M) = {np.vdot(s, mt).real:.3g} > 0")
        delta = mt - (y / n2) * ot
        dn2 = float(np.vdot(delta, delta).real)
        sn2 = float(np.vdot(s, s).real)
        if dn2 <= tol ** 2 or n == 0:
            q = 1.0
        elif weight_rule == "optimal":
            q = sn2 / (dn2 + sn2)
        else:
            q = dn2 / (dn2 + sn2)
        mid = m.id if isinstance(m, MeasurementOperator) else f"m{len(meas_list)}"
        if mid not in ids:
            ids[mid] = len(meas_list)
            meas_list.append(m)
            contrib.append(y)
            weights = np.append(weights, 0.0)
        weights *= 1 - q
        weights[ids[mid]] += q
        new_s = q * delta + (1 - q) * s
        new_n2 = float(np.vdot(new_s, new_s).real)
        if n and sn2 > 0 and dn2 > 0 and new_n2 > 0:
            ok &= 1 / new_n2 >= (1 / dn2 + 1 / sn2) * (1 - 1e-9)
        s = new_s
        history.append(math.sqrt(new_n2))
        implied.append(n2 / float(np.dot(weights, contrib)))
        if dn2 <= tol ** 2:
            # exact single-measurement ensemble
            meas_list, weights, contrib = [m], np.array([1.0]), [y]
            s = np.zeros_like(s)
            history[-1], implied[-1] = 0.0, n2 / y
            exact = True
            break
    return ContrastState(len(history), s, meas_list, weights, history, implied, ok, exact)


def two_qubit_state(lam: float) -> np.ndarray:
    """``sqrt(lam)|00> + sqrt(1 - lam)|11>``."""
    v = np.zeros(4, dtype=complex)
    v[0], v[3] = math.sqrt(lam), math.sqrt(1 - lam)
    return v


def _two_qubit_projectors(lam: float) -> dict:
    a, b = math.sqrt(lam), math.sqrt(1 - lam)
    k0, k1 = np.array([1, 0], dtype=complex), np.array([0, 1], dtype=complex)
    plus, minus = (k0 + k1) / math.sqrt(2), (k0 - k1) / math.sqrt(2)
    ip, im = (k0 + 1j * k1) / math.sqrt(2), (k0 - 1j * k1) / math.sqrt(2)
    xp, xm = a * k0 + b * k1, a * k0 - b * k1
    yp, ym = a * k0 - 1j * b * k1, a * k0 + 1j * b * k1

    def proj(v):
        return np.outer(v, v.conj())

    def pair(u1, v1, u2, v2, swap=False):
        if swap:
            return np.kron(proj(v1), proj(u1)) + np.kron(proj(v2), proj(u2))
        return np.kron(proj(u1), proj(v1)) + np.kron(proj(u2), proj(v2))

    return {
        "z": proj(np.kron(k0, k0)) + proj(np.kron(k1, k1)),
        "x1": pair(plus, xp, minus, xm),
        "x2": pair(plus, xp, minus, xm, swap=True),
        "y1": pair(ip, yp, im, ym),
        "y2": pair(ip, yp, im, ym, swap=True),
    }


def locc_identity_error(lam: float) -> float:
    """Max entry of ``(2M_z + M_x1 + M_x2 + M_y1 + M_y2)/6 - (2M_psi + I)/3``."""
    p = _two_qubit_projectors(lam)
    psi = two_qubit_state(lam)
    lhs = (2 * p["z"] + p["x1"] + p["x2"] + p["y1"] + p["y2"]) / 6
    rhs = (2 * np.outer(psi, psi.conj()) + np.eye(4)) / 3
    return float(np.max(np.abs(lhs - rhs)))


def two_qubit_locc_family(lam: float, check_tol: float = 1e-12) -> MeasurementFamily:
    """Projective LOCC measurements ``M_z, M_x1, M_x2, M_y1, M_y2`` (outcomes 1 / 0)."""
    if not 0.5 <= lam <= 1:
        raise ValueError("Schmidt weight must lie in [1/2, 1]")
    err = locc_identity_error(lam)
    if err > check_tol:
        raise RuntimeError(f"LOCC family identity fails by {err:.3g}")
    members = []
    for name, p in _two_qubit_projectors(lam).items():
        members.append(MeasurementOperator(f"locc:{name}", (p, np.eye(4) - p), np.array([1.0, 0.0]),
                                           "custom", {"lambda": lam}))
    return MeasurementFamily.from_list(f"locc[{lam:g}]", HilbertSpec.qubits(2), members)


def complement(m: MeasurementOperator) -> MeasurementOperator:
    """Same effects with outcome values mirrored inside ``[lambda_min, lambda_max]``."""
    vals = m.lambda_max + m.lambda_min - m.values
    return MeasurementOperator(m.id + "^c", m.effects, vals, m.tag, dict(m.metadata), validate=False)


def locc_decomposition(lam: float) -> Decomposition:
    """``M_psi = (2M_z + M_x1 + M_x2 + M_y1 + M_y2)/4 - I/2`` with cost ``3/2``."""
    fam = two_qubit_locc_family(lam)
    return Decomposition(f"locc_psi[{lam:g}]", -0.5, list(fam), [0.5, 0.25, 0.25, 0.25, 0.25])


def exhaustive_oracle(o, candidates, with_complements: bool = True, tol: float = CONTRACT_TOL):
    """Oracle choosing, among candidates with ``tr(s M) <= 0``, the one of largest contrast."""
    _, ot, _ = _target(o)
    pool = list(candidates)
    if with_complements:
        pool += [complement(m) for m in pool]
    mts = [normalized_traceless(m) for m in pool]
    ys = np.array([np.vdot(mt, ot).real for mt in mts])
    order = np.argsort(-ys, kind="stable")

    def oracle(s):
        for i in order:
            if np.vdot(s, mts[i]).real <= tol:
                return pool[i]
        return pool[order[0]]

    return oracle


def write_trace(path, state: ContrastState) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "varsigma_norm", "implied_z"])
        for row in state.trace_rows():
            w.writerow([row[0], repr(row[1]), repr(row[2])])
