"""Element-wise tomography of a state projected onto a neighborhood basis.

Every matrix element ``rho_jl = <psi_j|rho|psi_l>`` is estimated by DFE of
a Hermitian element operator: the projector ``|psi_j><psi_j|`` on the
diagonal, and for ``j < l`` the pair

    E0 = |psi_j><psi_l| + h.c.,   E1 = i|psi_j><psi_l| + h.c.

with ``rho_jl = <E0>/2 + i <E1>/2`` and ``rho_lj`` its conjugate. The result
is deliberately not renormalized: its trace estimates the population of
the subspace.

Sample counts live in one ``rank x rank`` matrix ``t``: ``t[j, j]`` for the
diagonal, ``t[j, l]`` (``j < l``) for the real part and ``t[l, j]`` for the
imaginary part.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .decomposition import (
    Decomposition,
    DecompositionError,
    l1_min_decompose,
    pauli_decompose,
    stabilizer_outer_decompose,
)
from .measurements import MeasurementOperator, content_id, from_observable, hadamard_expand, trivial_measurement
from .neighborhood import NeighborhoodBasis, element_operator
from .sampler import dfe_estimate, hoeffding_samples
from .wigner import LocalFactor, ProductDecomposition, ProductTerm, WignerGrid, _grid_factor, wigner_decompose

POLICIES = ("analytic_pauli", "pauli_dense", "lp_over_family", "product", "wigner_grid",
            "hadamard_expanded", "hadamard_expanded_lp")


def element_keys(rank: int):
    """``(j, l, c)`` in estimation order: diagonal, then real and imaginary parts."""
    keys = []
    for j in range(rank):
        keys.append((j, j, 0))
        for l in range(j + 1, rank):
            keys.append((j, l, 0))
            keys.append((j, l, 1))
    return keys


def count_index(key) -> tuple[int, int]:
    j, l, c = key
    return (l, j) if c == 1 else (j, l)


def scaled(dec: Decomposition, s: float) -> Decomposition:
    return Decomposition(dec.target_id, dec.constant * s, dec.measurements, dec.coefficients * s, dec.ranges,
                         ids=dec.ids, residual=dec.residual * abs(s), metadata=dec.metadata,
                         midpoints=dec._mid)


# --- routes ------------------------------------------------------------------------


def _qubit_count(dim: int) -> int:
    m = int(round(math.log2(dim)))
    if 2 ** m != dim:
        raise DecompositionError(f"dimension {dim} is not a qubit register")
    return m


def _stabilizer_route(basis: NeighborhoodBasis, j, l, c, tid):
    if basis.stabilizer is None or basis.generators.paulis is None or not basis.orthonormal_raw:
        return None
    dec = stabilizer_outer_decompose(basis.stabilizer, basis.word_pauli(j), basis.word_pauli(l), c, tid)
    if j == l:
        dec = scaled(dec, 0.5)
    # raw vectors carry the base norm
    nrm2 = float(np.vdot(basis.base, basis.base).real)
    if abs(nrm2 - 1) > 1e-12:
        dec = scaled(dec, nrm2)
    return dec


def _parallel(a, b, tol=1e-12) -> bool:
    return abs(np.vdot(a, b)) >= (1 - tol) * np.linalg.norm(a) * np.linalg.norm(b)


def _projector_factor(a, bosonic_site: bool) -> LocalFactor:
    u = a / np.linalg.norm(a)
    p = np.outer(u, u.conj())
    vacuum = bosonic_site and abs(abs(u[0]) - 1) < 1e-12
    tag = "vacuum_projection" if vacuum else "custom"
    mid = "vacuum_projection:0" if vacuum else content_id("projector", {"state": u})
    meas = MeasurementOperator(mid, (p, np.eye(u.size) - p), np.array([1.0, 0.0]), tag, validate=False)
    return LocalFactor.fixed(meas)


def _is_projection(f: LocalFactor) -> bool:
    return f.kind == "fixed" and f.measurement.id.startswith(("vacuum_projection", "projector"))


def _hermitian_factor(h, bosonic_site: bool, grid: WignerGrid, cache: dict):
    key = h.tobytes()
    if key not in cache:
        if bosonic_site:
            cache[key] = _grid_factor(h, grid, h.shape[0])
        else:
            cache[key] = LocalFactor.fixed(from_observable(h, tag="product"))
    return cache[key]


def _product_route(basis: NeighborhoodBasis, j, l, c, tid, bosonic_sites: bool,
                   grid: WignerGrid | None = None):
    """Sum of product terms from raw-vector pairs ``|r_i><r_i'|``.

    Sites where the two local vectors are parallel become local projections;
    the others split into Hermitian and anti-Hermitian parts ``H + iK`` and are
    measured locally (spectrally for qubits, on a Wigner grid for modes).
    """
    if basis.word_factors is None:
        raise DecompositionError("product route needs product-structured base state and local generators")
    grid = grid or WignerGrid()
    b = basis.coeffs
    half = 0.5 if j == l else 1.0
    cache: dict = {}
    terms = []
    for i in range(b.shape[0]):
        for ip in range(b.shape[0]):
            z = (1j ** c) * b[i, j] * np.conj(b[ip, l]) * half
            if abs(z) < 1e-15:
                continue
            fa, fb = basis.word_factors[i], basis.word_factors[ip]
            fixed, moving = {}, []
            for site, (a, bb) in enumerate(zip(fa, fb)):
                if _parallel(a, bb):
                    z *= np.vdot(bb, a)
                    fixed[site] = _projector_factor(a, bosonic_sites)
                else:
                    moving.append((site, a, bb))
            # prod_k (H_k + i K_k) expands over subsets S taking K on S
            n = len(moving)
            for mask in range(1 << n):
                coef = 2 * (z * 1j ** bin(mask).count("1")).real
                if abs(coef) < 1e-15:
                    continue
                factors = dict(fixed)
                for bit, (site, a, bb) in enumerate(moving):
                    op = np.outer(a, bb.conj())
                    h = (op + op.conj().T) / 2 if not mask >> bit & 1 else (op - op.conj().T) / 2j
                    factors[site] = _hermitian_factor(h, bosonic_sites, grid, cache)
                terms.append(ProductTerm(float(coef), [factors[s] for s in range(len(fa))]))
    nontrivial = max(sum(not _is_projection(f) for f in t.factors) for t in terms) if terms else 0
    return ProductDecomposition(tid, terms, metadata={"route": "product", "nontrivial_sites": nontrivial})


def _unitary_word(basis: NeighborhoodBasis, i: int) -> np.ndarray:
    gens = basis.generators
    if not all(gens.is_unitary[g] for g in basis.words[i]):
        raise DecompositionError("Hadamard expansion needs unitary generator words")
    d = basis.dim
    return reduce(lambda acc, g: gens.operators[g] @ acc, basis.words[i], np.eye(d, dtype=complex))


def hadamard_terms(basis: NeighborhoodBasis, j, l, c, base_decomp):
    """Analytic expansion of an element over Hadamard-tested base measurements.

    Returns ``{atom_id: (MeasurementOperator, coefficient)}``. Each raw pair
    contributes ``x E0 + y E1`` with ``E0 = U_i sigma U_i'^dag + h.c.`` and
    ``E1`` its ``i``-rotated partner; both are branch differences of Hadamard
    tests on ``(U_i^dag, U_i'^dag)`` applied to every base measurement and
    to the trivial measurement carrying ``C``.
    """
    b = basis.coeffs
    half = 0.5 if j == l else 1.0
    nrm2 = float(np.vdot(basis.base, basis.base).real)
    sources = [(trivial_measurement(basis.dim), base_decomp.constant)]
    sources += [(base_decomp.measurement(k), f) for k, f in enumerate(base_decomp.coefficients)]
    atoms: dict[str, list] = {}
    for i in range(b.shape[0]):
        for ip in range(b.shape[0]):
            zeta = (1j ** c) * b[i, j] * np.conj(b[ip, l]) * half * nrm2
            if abs(zeta) < 1e-15:
                continue
            va = _unitary_word(basis, i).conj().T
            vb = _unitary_word(basis, ip).conj().T
            for part, signs in ((zeta.real, (1, -1)), (zeta.imag, (1j, -1j))):
                if abs(part) < 1e-15:
                    continue
                for meas, f in sources:
                    if f == 0:
                        continue
                    for s, sgn in zip(signs, (1, -1)):
                        atom = hadamard_expand(meas, [(va, vb)], [s])
                        entry = atoms.setdefault(atom.id, [atom, 0.0])
                        entry[1] += 2 * part * f * sgn
    return atoms


def _sigma_decomposition(basis: NeighborhoodBasis, family):
    psi = basis.base / np.linalg.norm(basis.base)
    sigma = np.outer(psi, psi.conj())
    if family is None:
        return pauli_decompose(sigma, _qubit_count(basis.dim), "base")
    return l1_min_decompose(sigma, family, target_id="base")


def _hadamard_route(basis, j, l, c, family, tid, lp: bool):
    atoms = hadamard_terms(basis, j, l, c, _sigma_decomposition(basis, family))
    items = [(m, f) for m, f in atoms.values() if abs(f) > 1e-14]
    analytic = Decomposition(tid, 0.0, [m for m, _ in items], [f for _, f in items],
                             metadata={"dim": basis.dim, "route": "hadamard_expanded"})
    target = element_operator(basis, j, l, c)
    analytic.residual = analytic.reconstruction_error(target)
    if not lp:
        return analytic
    dec = l1_min_decompose(target, [m for m, _ in items], target_id=tid)
    dec.metadata.update(route="hadamard_expanded_lp", analytic_cost=analytic.cost)
    return dec


def element_route(basis: NeighborhoodBasis, j: int, l: int, c: int, family=None,
                  policy: str = "analytic_pauli", grid: WignerGrid | None = None,
                  cutoff: int | None = None, modes: int | None = None, bosonic_sites: bool | None = None):
    """Decomposition of the ``(j, l, c)`` element operator under ``policy``."""
    if policy not in POLICIES:
        raise ValueError(f"unknown expansion policy {policy!r}")
    if j == l and c == 1:
        raise ValueError("diagonal elements have no imaginary part")
    tid = f"{j},{l},{c}"
    if policy == "analytic_pauli":
        dec = _stabilizer_route(basis, j, l, c, tid)
        if dec is not None:
            return dec
        policy = "pauli_dense"
    if policy == "pauli_dense":
        dec = pauli_decompose(element_operator(basis, j, l, c), _qubit_count(basis.dim), tid)
        dec.metadata["route"] = "pauli_dense"
        return dec
    if policy == "lp_over_family":
        if family is None:
            raise ValueError("lp_over_family needs a finite measurement family")
        return l1_min_decompose(element_operator(basis, j, l, c), family, target_id=tid)
    if policy == "product":
        if bosonic_sites is None:
            bosonic_sites = bool(basis.word_factors) and basis.word_factors[0][0].size > 2
        return _product_route(basis, j, l, c, tid, bosonic_sites=bosonic_sites, grid=grid)
    if policy == "wigner_grid":
        if cutoff is None or modes is None:
            raise ValueError("wigner_grid needs cutoff and modes")
        return wigner_decompose(element_operator(basis, j, l, c), grid, cutoff, modes, tid)
    return _hadamard_route(basis, j, l, c, family, tid, lp=policy == "hadamard_expanded_lp")


# --- planning ------------------------------------------------------------------------


def allocate_budget(costs: dict, total: int) -> dict:
    """Split ``total`` samples proportionally to ``Z^2`` (at least one each)."""
    keys = list(costs)
    z2 = np.array([costs[k] ** 2 for k in keys])
    if z2.sum() == 0:
        share = np.full(len(keys), total / max(len(keys), 1))
    else:
        share = total * z2 / z2.sum()
    return {k: max(1, int(math.floor(s))) for k, s in zip(keys, share)}


@dataclass
class TomographyPlan:
    basis: NeighborhoodBasis
    decompositions: dict
    counts: np.ndarray
    seed: int = 0
    policy: str = "analytic_pauli"
    family_name: str | None = None

    def __post_init__(self):
        r = self.basis.rank
        self.counts = np.asarray(self.counts, dtype=int)
        if self.counts.shape != (r, r):
            raise ValueError(f"sample-count matrix must be {r}x{r}")
        if self.counts.min() < 1:
            raise ValueError("every element needs at least one sample")

    @property
    def rank(self) -> int:
        return self.basis.rank

    def cost_matrix(self) -> np.ndarray:
        z = np.zeros((self.rank, self.rank))
        for key, dec in self.decompositions.items():
            z[count_index(key)] = dec.cost
        return z

    @property
    def total_samples(self) -> int:
        return int(self.counts.sum())


def make_plan(basis: NeighborhoodBasis, policy: str = "analytic_pauli", family=None, *,
              epsilon: float | None = None, delta: float | None = None, split: str = "per_element",
              counts=None, total_budget: int | None = None, seed: int = 0, **route_opts) -> TomographyPlan:
    """Build element decompositions and the sample-count matrix.

    Budgets: explicit ``counts``; per-element Hoeffding counts from
    ``(epsilon, delta)`` (``split="frobenius"`` divides them as
    ``epsilon/rank`` and ``delta/rank^2``); or a ``total_budget`` shared in
    proportion to ``Z^2``.
    """
    r = basis.rank
    decs = {key: element_route(basis, *key, family=family, policy=policy, **route_opts)
            for key in element_keys(r)}
    if counts is not None:
        t = np.asarray(counts, dtype=int)
    elif epsilon is not None and delta is not None:
        eps, dlt = (epsilon / r, delta / r ** 2) if split == "frobenius" else (epsilon, delta)
        t = np.ones((r, r), dtype=int)
        for key, dec in decs.items():
            t[count_index(key)] = hoeffding_samples(dec.cost, eps, dlt) if dec.cost > 0 else 1
    elif total_budget is not None:
        if total_budget < 1:
            raise ValueError("budget must be positive")
        alloc = allocate_budget({k: d.cost for k, d in decs.items()}, int(total_budget))
        t = np.ones((r, r), dtype=int)
        for key, n in alloc.items():
            t[count_index(key)] = n
    else:
        raise ValueError("give counts, (epsilon, delta) or total_budget")
    name = getattr(family, "name", None)
    return TomographyPlan(basis, decs, t, seed, policy, name)


# --- execution ------------------------------------------------------------------------


@dataclass
class TomographyResult:
    rho_hat: np.ndarray
    stderr_re: np.ndarray
    stderr_im: np.ndarray
    trace_estimate: float
    costs: np.ndarray
    counts: np.ndarray
    elements: list = field(default_factory=list)
    sample_logs: dict | None = field(default=None, repr=False)

    @property
    def total_samples(self) -> int:
        return int(self.counts.sum())

    def to_dict(self, basis: NeighborhoodBasis | None = None, projected=None) -> dict:
        doc = {
            "trace_estimate": self.trace_estimate,
            "total_samples": self.total_samples,
            "rho_hat": {"re": self.rho_hat.real.tolist(), "im": self.rho_hat.imag.tolist()},
            "elements": self.elements,
        }
        if basis is not None:
            doc["basis"] = basis.describe()
        if projected is not None:
            doc["projected"] = {"re": projected.real.tolist(), "im": projected.imag.tolist()}
        return doc


def run(plan: TomographyPlan, source, workers: int = 1, log: bool = False) -> TomographyResult:
    """Estimate every element of the projected density matrix."""
    r = plan.rank
    rho = np.zeros((r, r), dtype=complex)
    se_re = np.zeros((r, r))
    se_im = np.zeros((r, r))
    elements, logs = [], {} if log else None
    for key in element_keys(r):
        j, l, c = key
        dec = plan.decompositions[key]
        t = int(plan.counts[count_index(key)])
        est = dfe_estimate(source, dec, t, seed=plan.seed, workers=workers, log=log)
        if log:
            logs[key] = est.sample_log
        if j == l:
            rho[j, j] += est.mean
            se_re[j, j] = est.stderr
        elif c == 0:
            rho[j, l] += 0.5 * est.mean
            rho[l, j] += 0.5 * est.mean
            se_re[j, l] = se_re[l, j] = 0.5 * est.stderr
        else:
            rho[j, l] += 0.5j * est.mean
            rho[l, j] -= 0.5j * est.mean
            se_im[j, l] = se_im[l, j] = 0.5 * est.stderr
        elements.append({"j": j, "l": l, "c": c, "Z": dec.cost, "t": t,
                         "estimate": est.mean, "stderr": est.stderr,
                         "route": dec.metadata.get("route")})
    trace = float(np.trace(rho).real)
    return TomographyResult(rho, se_re, se_im, trace, plan.cost_matrix(), plan.counts.copy(), elements, logs)


def exact_projection(basis: NeighborhoodBasis, rho) -> np.ndarray:
    """``<psi_j|rho|psi_l>`` in the orthonormal basis."""
    s = basis.states
    return s.conj().T @ np.asarray(rho) @ s


def self_verify(result: TomographyResult, z: float = 1.96) -> tuple[float, float]:
    """Subspace population estimate and its confidence radius."""
    ci = z * math.sqrt(float(np.sum(np.diag(result.stderr_re) ** 2)))
    return result.trace_estimate, ci


def nearest_physical(rho_hat, target_trace: float | None = None) -> np.ndarray:
    """Closest PSD matrix with the given trace (eigenvalue redistribution).

    The default target is the input trace clamped to ``[0, 1]``.
    """
    rho_hat = np.asarray(rho_hat, dtype=complex)
    rho_hat = (rho_hat + rho_hat.conj().T) / 2
    if target_trace is None:
        target_trace = min(max(float(np.trace(rho_hat).real), 0.0), 1.0)
    evals, vecs = np.linalg.eigh(rho_hat)
    mu = evals[::-1].copy()
    vecs = vecs[:, ::-1]
    d = mu.size
    mu += (target_trace - mu.sum()) / d
    i, acc = d, 0.0
    while i > 0 and mu[i - 1] + acc / i < 0:
        acc += mu[i - 1]
        mu[i - 1] = 0.0
        i -= 1
    if i > 0:
        mu[:i] += acc / i
    return (vecs * mu) @ vecs.conj().T


def write_matrix(path, mat) -> None:
    """Delimited text: one row per matrix row, entries as ``re+imj``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in np.asarray(mat):
            w.writerow([f"{float(v.real)!r}{float(v.imag):+.17g}j" for v in row.astype(complex)])


def report_json(result: TomographyResult, basis=None, projected=None, config=None) -> str:
    doc = result.to_dict(basis, projected)
    if config is not None:
        doc = {"config": config, **doc}
    return json.dumps(doc, indent=2, sort_keys=True)
