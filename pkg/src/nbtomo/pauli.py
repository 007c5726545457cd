"""Bit-packed Pauli strings and stabilizer groups.

A :class:`PauliString` on ``m`` qubits stores two ``m``-bit integers and a
phase exponent ``k`` (the overall factor is ``i**k``). Bit ``m-1-q`` of each
mask refers to qubit ``q`` so that the masks coincide with computational
basis indices of the dense ``kron`` ordering (qubit 0 is the most
significant). With ``x`` and ``z`` bits set on the same qubit the local
factor is ``Y``, so phase 0 always denotes a Hermitian string.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from itertools import product

import numpy as np

_PHASES = {0: "", 1: "i", 2: "-", 3: "-i"}


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    m: int
    x: int = 0
    z: int = 0
    phase: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one qubit")
        full = (1 << self.m) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("bit masks exceed qubit count")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse labels such as ``"XZI"``, ``"-YY"``, ``"iXI"`` or ``"-iZ"``."""
        phase = 0
        body = label
        for prefix, k in (("-i", 3), ("+i", 1), ("i", 1), ("-", 2), ("+", 0)):
            if body.startswith(prefix):
                phase, body = k, body[len(prefix):]
                break
        m = len(body)
        x = z = 0
        for q, ch in enumerate(body.upper()):
            bit = 1 << (m - 1 - q)
            if ch == "X":
                x |= bit
            elif ch == "Z":
                z |= bit
            elif ch == "Y":
                x |= bit
                z |= bit
            elif ch != "I":
                raise ValueError(f"bad Pauli label {label!r}")
        return cls(m, x, z, phase)

    @classmethod
    def identity(cls, m: int) -> "PauliString":
        return cls(m)

    @property
    def body(self) -> str:
        chars = []
        for q in range(self.m):
            bit = 1 << (self.m - 1 - q)
            chars.append("IXZY"[bool(self.x & bit) + 2 * bool(self.z & bit)])
        return "".join(chars)

    @property
    def label(self) -> str:
        return _PHASES[self.phase] + self.body

    def __repr__(self):
        return f"PauliString({self.label!r})"

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def support(self) -> tuple[int, ...]:
        mask = self.x | self.z
        return tuple(q for q in range(self.m) if mask >> (self.m - 1 - q) & 1)

    def unsigned(self) -> "PauliString":
        return PauliString(self.m, self.x, self.z, 0)

    def __mul__(self, other: "PauliString") -> "PauliString":
        if not isinstance(other, PauliString):
            return NotImplemented
        if other.m != self.m:
            raise ValueError("qubit counts differ")
        x3, z3 = self.x ^ other.x, self.z ^ other.z
        k = (self.phase + other.phase
             + _popcount(self.x & self.z) + _popcount(other.x & other.z)
             + 2 * _popcount(self.z & other.x)
             - _popcount(x3 & z3))
        return PauliString(self.m, x3, z3, k)

    def __neg__(self) -> "PauliString":
        return PauliString(self.m, self.x, self.z, self.phase + 2)

    def times_i(self, power: int = 1) -> "PauliString":
        return PauliString(self.m, self.x, self.z, self.phase + power)

    def dagger(self) -> "PauliString":
        # hermitian-form body, so only the scalar is conjugated
        return PauliString(self.m, self.x, self.z, -self.phase)

    def commutes(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def matrix_entries(self):
        """``(rows, cols, values)`` of the nonzero entries of the matrix."""
        d = 1 << self.m
        cols = np.arange(d)
        rows = cols ^ self.x
        signs = 1 - 2 * (np.array([_popcount(self.z & c) for c in range(d)]) % 2)
        scalar = 1j ** ((self.phase + _popcount(self.x & self.z)) % 4)
        return rows, cols, scalar * signs

    def to_matrix(self) -> np.ndarray:
        d = 1 << self.m
        rows, cols, vals = self.matrix_entries()
        out = np.zeros((d, d), dtype=complex)
        out[rows, cols] = vals
        return out

    def trace_with(self, o: np.ndarray) -> complex:
        """``tr(P o)`` without forming the dense Pauli matrix."""
        rows, cols, vals = self.matrix_entries()
        return complex(np.sum(vals * o[cols, rows]))


def all_pauli_strings(m: int, include_identity: bool = False):
    """Iterate over the Hermitian Pauli strings on ``m`` qubits, in label order."""
    for letters in product("IXYZ", repeat=m):
        p = PauliString.from_label("".join(letters))
        if p.is_identity and not include_identity:
            continue
        yield p


def _gf2_rank(vectors: list[int]) -> int:
    rows = list(vectors)
    rank = 0
    while rows:
        pivot = rows.pop()
        if pivot == 0:
            continue
        rank += 1
        top = pivot.bit_length() - 1
        rows = [r ^ pivot if r >> top & 1 else r for r in rows]
    return rank


def check_stabilizer_generators(generators: list[PauliString]) -> list[PauliString]:
    """Validate a full-rank stabilizer generating set; return it unchanged."""
    if not generators:
        raise ValueError("no stabilizer generators given")
    m = generators[0].m
    if len(generators) != m:
        raise ValueError(f"need {m} generators for a {m}-qubit stabilizer state, got {len(generators)}")
    for g in generators:
        if g.m != m:
            raise ValueError("generators act on different qubit counts")
        if not g.is_hermitian or g.is_identity:
            raise ValueError(f"generator {g.label} must be a nontrivial Hermitian Pauli")
    for i, a in enumerate(generators):
        for b in generators[i + 1:]:
            if not a.commutes(b):
                raise ValueError(f"generators {a.label} and {b.label} anticommute")
    if _gf2_rank([(g.x << m) | g.z for g in generators]) != m:
        raise ValueError("stabilizer generators are not independent")
    return list(generators)


def stabilizer_group(generators: list[PauliString]) -> list[PauliString]:
    """All ``2**m`` elements of the group generated by ``generators``."""
    gens = check_stabilizer_generators(generators)
    m = gens[0].m
    group = []
    for mask in range(1 << m):
        elems = [g for i, g in enumerate(gens) if mask >> i & 1]
        group.append(reduce(lambda a, b: a * b, elems, PauliString.identity(m)))
    # Hermitian commuting generators never produce an i phase; -I would mean
    # the group is not a stabilizer group of any state
    for s in group:
        if s.is_identity and s.phase != 0:
            raise ValueError("generators produce -I; no stabilized state exists")
    return group


def stabilizer_projector(generators: list[PauliString]) -> np.ndarray:
    group = stabilizer_group(generators)
    m = group[0].m
    return sum(s.to_matrix() for s in group) / 2 ** m


def stabilizer_state(generators: list[PauliString]) -> np.ndarray:
    """State vector stabilized by ``generators``.

    The global phase makes the first largest-magnitude amplitude real positive.
    """
    proj = stabilizer_projector(generators)
    k = int(np.argmax(np.diag(proj).real))
    return proj[:, k] / np.sqrt(proj[k, k].real)
