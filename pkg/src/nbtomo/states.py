"""Named pure states, generator sets and the single-excitation leakage experiment."""

from __future__ import annotations

import math

import numpy as np

from .bosonic import coherent_state, displacement, fock
from .measurements import magic_projector
from .neighborhood import GeneratorSet
from .operators import X, basis_state, embed, tensor_product
from .pauli import PauliString, stabilizer_state
from .sampler import PhysicalStateSource, apply_channel

RAISE = np.array([[0, 0], [1, 0]], dtype=complex)  # |1><0|


def computational(bits: str) -> np.ndarray:
    return basis_state(int(bits, 2), 2 ** len(bits))


def w_state(m: int) -> np.ndarray:
    v = np.zeros(2 ** m, dtype=complex)
    for i in range(m):
        v[1 << i] = 1
    return v / math.sqrt(m)


def ghz_state(m: int) -> np.ndarray:
    v = np.zeros(2 ** m, dtype=complex)
    v[0] = v[-1] = 1 / math.sqrt(2)
    return v


def magic_state(m: int = 1) -> np.ndarray:
    """Product of the single-qubit state projected by ``(I + (X+Y+Z)/sqrt3)/2``."""
    evals, vecs = np.linalg.eigh(magic_projector())
    one = vecs[:, -1]
    return tensor_product(*[one] * m) if m > 1 else one


def vacuum(modes: int, cutoff: int) -> np.ndarray:
    return tensor_product(*[fock(0, cutoff)] * modes) if modes > 1 else fock(0, cutoff)


def excitation_projector(m: int, max_weight: int = 1) -> np.ndarray:
    """Projector onto computational states with Hamming weight ``<= max_weight``."""
    diag = np.array([bin(i).count("1") <= max_weight for i in range(2 ** m)], dtype=float)
    return np.diag(diag).astype(complex)


def pauli_generators(labels) -> GeneratorSet:
    return GeneratorSet.from_paulis(labels)


def single_x_generators(m: int) -> GeneratorSet:
    """``{X_1, ..., X_m}`` as Pauli strings."""
    return GeneratorSet.from_paulis(["I" * i + "X" + "I" * (m - i - 1) for i in range(m)])


def single_x_local(m: int) -> GeneratorSet:
    """``{X_i}`` with local structure, for the product route."""
    return GeneratorSet.local_ops([(i, X) for i in range(m)], [2] * m, [f"X{i}" for i in range(m)])


def displacement_generators(alphas, modes: int, cutoff: int) -> GeneratorSet:
    """Single-mode displacements ``D(alpha)`` on each mode."""
    ops, labels = [], []
    for site in range(modes):
        for a in alphas:
            ops.append((site, displacement(complex(a), cutoff)))
            labels.append(f"D{site}({complex(a):g})")
    return GeneratorSet.local_ops(ops, [cutoff] * modes, labels)


def raising_jumps(m: int) -> list:
    return [embed(RAISE, i, [2] * m) for i in range(m)]


def single_excitation_source(m: int, gamma_t: float, steps: int = 8) -> PhysicalStateSource:
    """``|0...0>`` evolved under ``sigma^+`` jumps on every qubit."""
    return apply_channel(computational("0" * m), raising_jumps(m), gamma_t, steps,
                         labels=[f"sigma+_{i}" for i in range(m)])


def leakage(m: int, gamma_t: float, steps: int = 8) -> float:
    """``1 - tr(Pi_1 rho_t)`` for the single-excitation experiment."""
    rho = single_excitation_source(m, gamma_t, steps).rho
    return float(1 - np.trace(excitation_projector(m) @ rho).real)


def leakage_slope(gammas=(1e-2, 5e-3, 2.5e-3), m: int = 3, steps: int = 8) -> float:
    """Log-log slope of leakage against ``gamma t``."""
    y = [leakage(m, g, steps) for g in gammas]
    return float(np.polyfit(np.log(gammas), np.log(y), 1)[0])


def build_state(doc: dict) -> np.ndarray:
    """Pure state from a config mapping (see the config schema for kinds)."""
    kind = doc["kind"]
    if kind == "basis":
        return computational(doc["bits"])
    if kind == "w":
        return w_state(int(doc["m"]))
    if kind == "ghz":
        return ghz_state(int(doc["m"]))
    if kind == "magic":
        return magic_state(int(doc.get("m", 1)))
    if kind == "stabilizer":
        return stabilizer_state([PauliString.from_label(g) for g in doc["generators"]])
    if kind == "vacuum":
        return vacuum(int(doc.get("modes", 1)), int(doc["cutoff"]))
    if kind == "coherent":
        cutoff = int(doc["cutoff"])
        alphas = doc["alpha"] if isinstance(doc["alpha"], list) else [doc["alpha"]]
        return tensor_product(*[coherent_state(complex(a), cutoff) for a in alphas])
    if kind == "two_qubit":
        lam = float(doc["lambda"])
        v = np.zeros(4, dtype=complex)
        v[0], v[3] = math.sqrt(lam), math.sqrt(1 - lam)
        return v
    if kind == "amplitudes":
        v = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc.get("im", [0.0] * len(doc["re"])))
        return v / np.linalg.norm(v)
    raise ValueError(f"unknown state kind {kind!r}")
