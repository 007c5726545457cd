"""Measurements as POVMs with real outcome values.

A :class:`MeasurementOperator` bundles effects ``Lambda_j`` and outcome values
``lambda_j``; its observable is ``sum_j lambda_j Lambda_j``. Families group
measurements either as a finite (possibly lazily built) collection or as a
parameterized map such as phase-space point -> displaced parity.
"""

from __future__ import annotations

import hashlib
import json
from collections.abc import Callable, Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product as iproduct

import numpy as np

from . import bosonic
from ._validation import check_hermitian, check_operator
from .operators import HilbertSpec, X, Y, Z, I2, tensor_product
from .pauli import PauliString

EFFECT_TOL = 1e-10
TRUNCATION_THRESHOLD = 1e-6
TAGS = ("pauli", "product", "displaced_parity", "vacuum_projection", "hadamard_expanded", "custom")


class TruncationError(ValueError):
    """The Fock cutoff is too small for the requested displacement."""


def content_id(kind: str, params) -> str:
    """Stable id from the defining parameters of a measurement."""
    blob = json.dumps(params, sort_keys=True, default=_jsonable).encode()
    return f"{kind}:{hashlib.blake2b(blob, digest_size=6).hexdigest()}"


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        arr = np.round(np.asarray(obj, dtype=complex), 12)
        return [arr.real.tolist(), arr.imag.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [round(obj.real, 12), round(obj.imag, 12)]
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot hash {type(obj).__name__}")


@dataclass(frozen=True, eq=False)
class MeasurementOperator:
    id: str
    effects: tuple
    values: np.ndarray
    tag: str = "custom"
    metadata: dict = field(default_factory=dict)
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        effects = tuple(check_operator(e, name="effect") for e in self.effects)
        values = np.asarray(self.values, dtype=float)
        if len(effects) != values.size or not effects:
            raise ValueError("need one value per effect")
        if self.tag not in TAGS:
            raise ValueError(f"unknown realization tag {self.tag!r}")
        object.__setattr__(self, "effects", effects)
        object.__setattr__(self, "values", values)
        if self.validate:
            self._check()

    def _check(self):
        d = self.dim
        total = sum(self.effects)
        dev = np.max(np.abs(total - np.eye(d)))
        if dev > EFFECT_TOL:
            raise ValueError(f"effects of {self.id} sum to I only within {dev:.3g}")
        for e in self.effects:
            check_hermitian(e, atol=EFFECT_TOL, name="effect")
            if np.linalg.eigvalsh(e)[0] < -EFFECT_TOL:
                raise ValueError(f"effect of {self.id} is not positive semidefinite")

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @cached_property
    def observable(self) -> np.ndarray:
        obs = sum(v * e for v, e in zip(self.values, self.effects))
        return (obs + obs.conj().T) / 2

    @property
    def lambda_min(self) -> float:
        return float(self.values.min())

    @property
    def lambda_max(self) -> float:
        return float(self.values.max())

    @property
    def range(self) -> float:
        return self.lambda_max - self.lambda_min

    def probabilities(self, rho) -> np.ndarray:
        """Born-rule outcome probabilities ``tr(rho Lambda_j)`` (unnormalized, unclipped)."""
        rho = np.asarray(rho)
        return np.array([np.vdot(e, rho).real for e in self.effects])

    def expectation(self, rho) -> float:
        return float(np.vdot(self.observable, rho).real)

    def __repr__(self):
        return f"MeasurementOperator({self.id!r}, tag={self.tag!r}, outcomes={self.values.size})"


def spectral_effects(obs, tol: float = 1e-9) -> tuple[list[np.ndarray], list[float]]:
    """Group the eigen-decomposition of a Hermitian ``obs`` into projectors per distinct eigenvalue."""
    obs = check_hermitian(obs, atol=1e-10, name="observable")
    vals, vecs = np.linalg.eigh(obs)
    effects, values = [], []
    start = 0
    for i in range(1, vals.size + 1):
        if i == vals.size or vals[i] - vals[start] > tol:
            block = vecs[:, start:i]
            effects.append(block @ block.conj().T)
            values.append(float(np.mean(vals[start:i])))
            start = i
    return effects, values


def from_observable(obs, id: str | None = None, tag: str = "custom", **metadata) -> MeasurementOperator:
    """Projective measurement of ``obs`` with eigenvalues as outcome values."""
    effects, values = spectral_effects(obs)
    if id is None:
        id = content_id("observable", {"obs": np.asarray(obs)})
    return MeasurementOperator(id, tuple(effects), np.array(values), tag, dict(metadata))


def pauli_measurement(p: PauliString | str) -> MeasurementOperator:
    if isinstance(p, str):
        p = PauliString.from_label(p)
    if p.is_identity or p.phase != 0:
        raise ValueError(f"{p.label} is not a nontrivial unsigned Pauli")
    mat = p.to_matrix()
    eye = np.eye(mat.shape[0])
    return MeasurementOperator(
        f"pauli:{p.body}", ((eye + mat) / 2, (eye - mat) / 2), np.array([1.0, -1.0]),
        "pauli", {"pauli": p.body}, validate=False,
    )


def trivial_measurement(dim: int) -> MeasurementOperator:
    """Single-outcome measurement whose observable is the identity."""
    return MeasurementOperator("trivial", (np.eye(dim, dtype=complex),), np.array([1.0]), "custom")


def merge_equal_values(effects, values, tol: float = 1e-12):
    """Combine effects sharing an outcome value; values come back sorted descending."""
    order = np.argsort(values)[::-1]
    merged_e, merged_v = [], []
    for i in order:
        if merged_v and abs(merged_v[-1] - values[i]) <= tol:
            merged_e[-1] = merged_e[-1] + effects[i]
        else:
            merged_e.append(effects[i])
            merged_v.append(float(values[i]))
    return merged_e, merged_v


# --- families -------------------------------------------------------------


class MeasurementFamily(Sequence):
    """Finite family of measurements, built lazily on access.

    ``builder(i)`` returns the ``i``-th member; ``ids`` (when known cheaply)
    allows lookup by id without building every member.
    """

    kind = "finite"

    def __init__(self, name: str, spec: HilbertSpec, size: int,
                 builder: Callable[[int], MeasurementOperator], ids: Sequence[str] | None = None):
        self.name = name
        self.spec = spec
        self._size = int(size)
        self._builder = builder
        self._ids = list(ids) if ids is not None else None
        self._cache: dict[int, MeasurementOperator] = {}

    @classmethod
    def from_list(cls, name: str, spec: HilbertSpec, members: Sequence[MeasurementOperator]):
        members = list(members)
        ids = [m.id for m in members]
        if len(set(ids)) != len(ids):
            raise ValueError("measurement ids in a finite family must be unique")
        return cls(name, spec, len(members), members.__getitem__, ids)

    def __len__(self) -> int:
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

    def __iter__(self) -> Iterator[MeasurementOperator]:
        for i in range(self._size):
            yield self[i]

    @property
    def ids(self) -> list[str]:
        if self._ids is None:
            self._ids = [m.id for m in self]
        return self._ids

    def get(self, id: str) -> MeasurementOperator:
        return self[self.ids.index(id)]

    def __repr__(self):
        return f"MeasurementFamily({self.name!r}, size={self._size}, dim={self.spec.dim})"


class ParameterizedFamily:
    """Family indexed by a continuous parameter (e.g. phase-space points)."""

    kind = "parameterized"

    def __init__(self, name: str, spec: HilbertSpec, build: Callable[..., MeasurementOperator]):
        self.name = name
        self.spec = spec
        self._build = build

    def __call__(self, param) -> MeasurementOperator:
        return self._build(param)

    def __repr__(self):
        return f"ParameterizedFamily({self.name!r}, dim={self.spec.dim})"


def pauli_family(m: int) -> MeasurementFamily:
    """The ``4**m - 1`` nontrivial Hermitian Pauli measurements, in label order."""
    if not 1 <= m <= 12:
        raise ValueError(f"pauli_family supports 1 <= m <= 12, got {m}")

    def label(i: int) -> str:
        digits = []
        for _ in range(m):
            digits.append("IXYZ"[i % 4])
            i //= 4
        return "".join(reversed(digits))

    def build(i: int) -> MeasurementOperator:
        return pauli_measurement(label(i + 1))

    return MeasurementFamily(f"pauli[{m}]", HilbertSpec.qubits(m), 4 ** m - 1, build,
                             ids=None if m > 6 else [f"pauli:{label(i + 1)}" for i in range(4 ** m - 1)])


_MAGIC = (I2 + (X + Y + Z) / np.sqrt(3)) / 2

NAMED_LOCALS = {
    "I": I2,
    "X": X,
    "Y": Y,
    "Z": Z,
    "zero": np.diag([1.0, 0.0]).astype(complex),
    "one": np.diag([0.0, 1.0]).astype(complex),
    "plus": np.full((2, 2), 0.5, dtype=complex),
    "minus": np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex),
    "magic": _MAGIC,
    "magic_perp": I2 - _MAGIC,
}


def magic_projector() -> np.ndarray:
    return _MAGIC.copy()


def product_measurement(local_obs, names=None) -> MeasurementOperator:
    """Tensor product of local projective measurements; outcomes multiply."""
    local_obs = [check_hermitian(o, name="local observable") for o in local_obs]
    per_site = [spectral_effects(o) for o in local_obs]
    effects, values = [], []
    for combo in iproduct(*[range(len(e)) for e, _ in per_site]):
        effects.append(tensor_product(*[per_site[k][0][j] for k, j in enumerate(combo)]))
        values.append(float(np.prod([per_site[k][1][j] for k, j in enumerate(combo)])))
    effects, values = merge_equal_values(effects, values)
    if names is None:
        mid = content_id("product", {"locals": local_obs})
    else:
        mid = "product:" + ",".join(names)
    return MeasurementOperator(mid, tuple(effects), np.array(values), "product",
                               {"locals": list(names) if names else None}, validate=False)


def product_family(locals_per_site) -> MeasurementFamily:
    """All tensor products of one allowed local observable per site.

    ``locals_per_site`` is a list (one entry per site) of either names from
    :data:`NAMED_LOCALS` or ``(name, matrix)`` pairs. The all-identity product
    is skipped since it carries no information.
    """
    sites = []
    for entries in locals_per_site:
        site = []
        for e in entries:
            name, mat = (e, NAMED_LOCALS[e]) if isinstance(e, str) else e
            site.append((name, check_hermitian(mat, name=f"local {name}")))
        sites.append(site)
    combos = []
    for combo in iproduct(*[range(len(s)) for s in sites]):
        mats = [sites[k][j][1] for k, j in enumerate(combo)]
        if all(np.allclose(mt, np.eye(mt.shape[0])) for mt in mats):
            continue
        combos.append(combo)

    def build(i: int) -> MeasurementOperator:
        combo = combos[i]
        names = [sites[k][j][0] for k, j in enumerate(combo)]
        mats = [sites[k][j][1] for k, j in enumerate(combo)]
        # a product of Pauli letters is a Pauli measurement
        if all(n in "IXYZ" and len(n) == 1 for n in names):
            return pauli_measurement("".join(names))
        return product_measurement(mats, names)

    def ident(i: int) -> str:
        names = [sites[k][j][0] for k, j in enumerate(combos[i])]
        if all(n in "IXYZ" and len(n) == 1 for n in names):
            return "pauli:" + "".join(names)
        return "product:" + ",".join(names)

    dims = [s[0][1].shape[0] for s in sites]
    spec = HilbertSpec.qubits(len(sites)) if set(dims) == {2} else HilbertSpec.bosonic(len(sites), dims[0])
    return MeasurementFamily(f"product[{len(sites)}]", spec, len(combos), build,
                             [ident(i) for i in range(len(combos))])


# --- bosonic measurements ---------------------------------------------------


def _mode_alphas(alpha, spec: HilbertSpec) -> np.ndarray:
    if spec.kind != "bosonic":
        raise ValueError("bosonic measurement requires a bosonic Hilbert spec")
    alphas = np.atleast_1d(np.asarray(alpha, dtype=complex))
    if alphas.size != spec.m:
        raise ValueError(f"need one displacement per mode ({spec.m}), got {alphas.size}")
    return alphas


def _truncation_tail(alphas, cutoff: int) -> float:
    return float(sum(bosonic.coherent_tail(a, cutoff) for a in alphas))


def displaced_parity(alpha, spec: HilbertSpec, threshold: float = TRUNCATION_THRESHOLD) -> MeasurementOperator:
    """Displaced parity ``D(alpha) (-1)^N D(alpha)^dag`` on the truncated Fock space.

    The displacement is the matrix exponential of the truncated generator.
    Eigenvalues are snapped to +-1; ``metadata["truncation_quality"]`` is the
    larger of the snap magnitude and the coherent-state mass beyond the cutoff.
    """
    alphas = _mode_alphas(alpha, spec)
    c = spec.cutoff
    obs = tensor_product(*[bosonic.displacement(a, c) @ bosonic.parity(c) @ bosonic.displacement(a, c).conj().T
                           for a in alphas])
    obs = (obs + obs.conj().T) / 2
    vals, vecs = np.linalg.eigh(obs)
    snapped = np.where(vals >= 0, 1.0, -1.0)
    quality = max(float(np.max(np.abs(vals - snapped))), _truncation_tail(alphas, c))
    if quality > threshold:
        raise TruncationError(f"cutoff {c} too small for alpha={alphas.tolist()} (quality {quality:.3g})")
    pos = vecs[:, snapped > 0]
    neg = vecs[:, snapped < 0]
    effects = (pos @ pos.conj().T, neg @ neg.conj().T)
    mid = content_id("displaced_parity", {"alpha": alphas, "cutoff": c})
    return MeasurementOperator(mid, effects, np.array([1.0, -1.0]), "displaced_parity",
                               {"alpha": alphas.tolist(), "truncation_quality": quality})


def vacuum_projection(alpha, spec: HilbertSpec, threshold: float = TRUNCATION_THRESHOLD) -> MeasurementOperator:
    """Projection onto the displaced vacuum ``prod_k D(alpha_k)|0>``; outcomes 1 / 0."""
    alphas = _mode_alphas(alpha, spec)
    c = spec.cutoff
    quality = _truncation_tail(alphas, c)
    if quality > threshold:
        raise TruncationError(f"cutoff {c} too small for alpha={alphas.tolist()} (quality {quality:.3g})")
    vec = tensor_product(*[bosonic.displacement(a, c)[:, 0] for a in alphas])
    proj = np.outer(vec, vec.conj())
    mid = content_id("vacuum_projection", {"alpha": alphas, "cutoff": c})
    return MeasurementOperator(mid, (proj, np.eye(proj.shape[0]) - proj), np.array([1.0, 0.0]),
                               "vacuum_projection", {"alpha": alphas.tolist(), "truncation_quality": quality})


def wigner_family(spec: HilbertSpec, threshold: float = TRUNCATION_THRESHOLD) -> ParameterizedFamily:
    return ParameterizedFamily("wigner", spec, lambda a: displaced_parity(a, spec, threshold))


def husimi_family(spec: HilbertSpec, threshold: float = TRUNCATION_THRESHOLD) -> ParameterizedFamily:
    return ParameterizedFamily("husimi", spec, lambda a: vacuum_projection(a, spec, threshold))


# --- Hadamard-test expansion -----------------------------------------------


def _kraus_for(control, sign, dim: int) -> np.ndarray:
    if isinstance(control, tuple):
        ua, ub = (check_operator(u, dim=dim, name="control unitary") for u in control)
    else:
        ua, ub = check_operator(control, dim=dim, name="control unitary"), np.eye(dim)
    if sign not in (1, -1, 1j, -1j):
        raise ValueError(f"branch sign must be one of +-1, +-i, got {sign}")
    return (ua + sign * ub) / 2


def hadamard_kraus(controls, branch_signs, dim: int) -> np.ndarray:
    """System Kraus operator of one ancilla-outcome branch of a sequence of Hadamard tests.

    Each ancilla starts in ``|+>``; control ``U`` (or the pair ``(U_a, U_b)``)
    applies ``U_a`` on one ancilla branch and ``U_b`` on the other; the
    post-selected ancilla outcome ``s`` contributes ``(U_a + s U_b)/2``.
    Controls act in list order, so the first control is applied first.
    """
    if len(controls) != len(branch_signs):
        raise ValueError("need one branch sign per control")
    k = np.eye(dim, dtype=complex)
    for control, sign in zip(controls, branch_signs):
        k = _kraus_for(control, sign, dim) @ k
    return k


def hadamard_expand(base: MeasurementOperator, controls=(), branch_signs=()) -> MeasurementOperator:
    """Effective system measurement of Hadamard tests followed by ``base``.

    Effects are ``K^dag Lambda_j K`` for the branch Kraus ``K``; the
    complementary ``I - K^dag K`` becomes a null outcome with value 0.
    """
    controls = list(controls)
    if not controls:
        return base
    d = base.dim
    k = hadamard_kraus(controls, list(branch_signs), d)
    effects = [k.conj().T @ e @ k for e in base.effects]
    null = np.eye(d) - k.conj().T @ k
    effects.append((null + null.conj().T) / 2)
    values = list(base.values) + [0.0]
    effects, values = merge_equal_values(effects, values)
    mats = [c if isinstance(c, tuple) else (c,) for c in controls]
    mid = content_id("hadamard", {"base": base.id,
                                  "controls": [[np.asarray(u) for u in c] for c in mats],
                                  "signs": [complex(s) for s in branch_signs]})
    return MeasurementOperator(mid, tuple(effects), np.array(values), "hadamard_expanded",
                               {"base": base.id, "signs": [str(s) for s in branch_signs]})


def rotated(base: MeasurementOperator, u, label: str | None = None) -> MeasurementOperator:
    """Apply unitary ``u`` to the state, then measure ``base`` (effects ``u^dag Lambda u``)."""
    u = check_operator(u, dim=base.dim, name="unitary")
    effects = tuple(u.conj().T @ e @ u for e in base.effects)
    mid = content_id("rotated", {"base": base.id, "u": u}) if label is None else f"{base.id}@{label}"
    return MeasurementOperator(mid, effects, base.values, "custom", {"base": base.id}, validate=False)


# --- config loading -----------------------------------------------------------


def load_family(doc: dict, spec: HilbertSpec | None = None):
    """Build a family from a config mapping.

    Supported kinds::

        {kind: pauli, m: 3}
        {kind: product, locals: [[X, Y, Z, magic], ...]}
        {kind: custom, observables: [{label: H, pauli: {XI: 0.7, ZI: 0.7}}, ...], m: 2}
        {kind: wigner, modes: 1, cutoff: 30}
        {kind: husimi, modes: 1, cutoff: 30}
    """
    kind = doc.get("kind")
    if kind == "pauli":
        m = doc.get("m", spec.m if spec else None)
        return pauli_family(int(m))
    if kind == "product":
        return product_family(doc["locals"])
    if kind == "custom":
        m = int(doc.get("m", spec.m if spec else 1))
        members = []
        for entry in doc["observables"]:
            obs = sum(coef * PauliString.from_label(lbl).to_matrix() for lbl, coef in entry["pauli"].items())
            members.append(from_observable(obs, id=f"custom:{entry['label']}"))
        return MeasurementFamily.from_list(doc.get("name", "custom"), HilbertSpec.qubits(m), members)
    if kind in ("wigner", "husimi"):
        bspec = HilbertSpec.bosonic(int(doc.get("modes", 1)), int(doc.get("cutoff", 30)))
        return wigner_family(bspec) if kind == "wigner" else husimi_family(bspec)
    raise ValueError(f"unknown family kind {kind!r}")
