"""Run configuration: YAML documents validated against a JSON schema.

A run document names the Hilbert space, states, generators, family,
expansion policy, budgets and outputs. Every subcommand reads the keys it
needs; unknown top-level keys are rejected so typos fail loudly.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import jsonschema
import numpy as np
import yaml

from .measurements import load_family, magic_projector
from .neighborhood import GeneratorSet, generate
from .operators import HilbertSpec, tensor_product
from .pauli import PauliString, stabilizer_projector
from .sampler import PhysicalStateSource
from .states import (build_state, displacement_generators, magic_state, single_excitation_source,
                     single_x_local)
from .tomography import POLICIES
from .wigner import WignerGrid


class ConfigError(ValueError):
    """Schema or cross-reference failure in a run document."""


_state = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["basis", "w", "ghz", "magic", "stabilizer", "vacuum", "coherent",
                          "two_qubit", "amplitudes"]},
        "bits": {"type": "string", "pattern": "^[01]+$"},
        "m": {"type": "integer", "minimum": 1, "maximum": 12},
        "modes": {"type": "integer", "minimum": 1, "maximum": 2},
        "cutoff": {"type": "integer", "minimum": 2, "maximum": 80},
        "generators": {"type": "array", "items": {"type": "string"}},
        "alpha": {},
        "lambda": {"type": "number", "minimum": 0.5, "maximum": 1},
        "re": {"type": "array", "items": {"type": "number"}},
        "im": {"type": "array", "items": {"type": "number"}},
    },
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "hilbert": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["qubits", "bosonic"]},
                "m": {"type": "integer", "minimum": 1, "maximum": 12},
                "modes": {"type": "integer", "minimum": 1, "maximum": 2},
                "cutoff": {"type": "integer", "minimum": 2, "maximum": 80},
            },
        },
        "base": _state,
        "source": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["pure", "maximally_mixed", "single_excitation"]},
                "state": _state,
                "gamma_t": {"type": "number", "minimum": 0, "maximum": 0.1},
                "steps": {"type": "integer", "minimum": 1},
            },
        },
        "target": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["state", "stabilizer", "magic", "pauli_sum", "vacuum"]},
                "state": _state,
                "generators": {"type": "array", "items": {"type": "string"}},
                "m": {"type": "integer", "minimum": 1},
                "modes": {"type": "integer", "minimum": 1, "maximum": 4},
                "cutoff": {"type": "integer", "minimum": 2},
                "terms": {"type": "object", "additionalProperties": {"type": "number"}},
            },
        },
        "generators": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["pauli", "local_x", "displacement"]},
                "labels": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "m": {"type": "integer", "minimum": 1},
                "alphas": {"type": "array", "minItems": 1},
            },
        },
        "k": {"type": "integer", "minimum": 0, "maximum": 6},
        "family": {"type": "object", "required": ["kind"]},
        "policy": {"enum": list(POLICIES)},
        "method": {"enum": ["auto", "analytic", "lp", "wigner"]},
        "grid": {
            "type": "object",
            "properties": {"alpha_max": {"type": "number", "exclusiveMinimum": 0},
                           "step": {"type": "number", "exclusiveMinimum": 0}},
        },
        "budget": {
            "type": "object",
            "properties": {
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "split": {"enum": ["per_element", "frobenius"]},
                "total": {"type": "integer", "minimum": 1},
                "counts": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "floor": {"type": "number"},
        "project": {"type": "boolean"},
        "bound_method": {"enum": ["tight", "crude"]},
        "contrast": {
            "type": "object",
            "properties": {
                "lambda": {"type": "number", "minimum": 0.5, "maximum": 1},
                "n_max": {"type": "integer"},
                "y0": {"type": "number", "minimum": 0},
            },
        },
        "outputs": {
            "type": "object",
            "properties": {"sample_log": {"type": "string"}, "trace": {"type": "string"},
                           "matrix": {"type": "string"}},
            "additionalProperties": False,
        },
    },
}

DEFAULTS = {"k": 1, "policy": "analytic_pauli", "seed": 0, "workers": 1, "floor": 0.9,
            "project": False, "method": "auto", "bound_method": "tight"}


@dataclass
class RunConfig:
    doc: dict

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a mapping")
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{path}: {exc.message}") from None
        return cls(copy.deepcopy(doc))

    @classmethod
    def from_yaml(cls, text: str) -> "RunConfig":
        try:
            doc = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed YAML: {exc}") from None
        return cls.from_dict(doc or {})

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_yaml(fh.read())

    def get(self, key, default=None):
        return self.doc.get(key, DEFAULTS.get(key, default))

    def require(self, *keys):
        missing = [k for k in keys if k not in self.doc]
        if missing:
            raise ConfigError(f"config is missing required section(s): {', '.join(missing)}")

    def with_overrides(self, **kw) -> "RunConfig":
        doc = copy.deepcopy(self.doc)
        doc.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig.from_dict(doc)

    def resolved(self) -> dict:
        """The document with defaults filled in (embedded in reports)."""
        out = dict(DEFAULTS)
        out.update(self.doc)
        return out

    # builders
    def hilbert(self) -> HilbertSpec:
        self.require("hilbert")
        h = self.doc["hilbert"]
        if h["kind"] == "qubits":
            return HilbertSpec.qubits(int(h.get("m", 1)))
        return HilbertSpec.bosonic(int(h.get("modes", 1)), int(h.get("cutoff", 30)))

    def grid(self) -> WignerGrid:
        g = self.doc.get("grid", {})
        return WignerGrid(float(g.get("alpha_max", 4.0)), float(g.get("step", 0.05)))

    def family(self):
        fam = self.doc.get("family")
        if fam is None:
            spec = self.hilbert()
            fam = {"kind": "pauli", "m": spec.m} if spec.kind == "qubits" else {
                "kind": "wigner", "modes": spec.m, "cutoff": spec.cutoff}
        try:
            return load_family(fam, self.hilbert() if "hilbert" in self.doc else None)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"family: {exc}") from None

    def target(self):
        """``(operator or per-mode factor list, target id, stabilizer generators or None)``."""
        self.require("target")
        t = self.doc["target"]
        kind = t["kind"]
        if kind == "stabilizer":
            gens = [PauliString.from_label(g) for g in t["generators"]]
            return stabilizer_projector(gens), "stabilizer", gens
        if kind == "magic":
            m = int(t.get("m", 1))
            return tensor_product(*[magic_projector()] * m) if m > 1 else magic_projector(), f"magic{m}", None
        if kind == "pauli_sum":
            ops = [c * PauliString.from_label(lbl).to_matrix() for lbl, c in t["terms"].items()]
            return sum(ops), "pauli_sum", None
        if kind == "vacuum":
            cutoff = int(t.get("cutoff", self.hilbert().cutoff if "hilbert" in self.doc else 30))
            vac = np.zeros((cutoff, cutoff), dtype=complex)
            vac[0, 0] = 1
            return [vac] * int(t.get("modes", 1)), f"vacuum{t.get('modes', 1)}", None
        psi = self._state(t.get("state"), "target.state")
        return np.outer(psi, psi.conj()), "state", None

    def _state(self, doc, where):
        if doc is None:
            raise ConfigError(f"{where} is required")
        try:
            return build_state(doc)
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None

    def base_state(self) -> np.ndarray:
        self.require("base")
        return self._state(self.doc["base"], "base")

    def base_stabilizer(self):
        b = self.doc["base"]
        if b["kind"] == "stabilizer":
            return list(b["generators"])
        if b["kind"] == "basis":
            m = len(b["bits"])
            return [("-" if bit == "1" else "") + "I" * q + "Z" + "I" * (m - q - 1)
                    for q, bit in enumerate(b["bits"])]
        return None

    def base_factors(self):
        """Per-site vectors of a product base state, when available."""
        b = self.doc["base"]
        if b["kind"] == "basis":
            return [np.eye(2, dtype=complex)[int(bit)] for bit in b["bits"]]
        if b["kind"] == "vacuum":
            v = np.zeros(int(b["cutoff"]), dtype=complex)
            v[0] = 1
            return [v] * int(b.get("modes", 1))
        if b["kind"] == "magic":
            return [magic_state(1)] * int(b.get("m", 1))
        return None

    def generator_set(self) -> GeneratorSet:
        self.require("generators")
        g = self.doc["generators"]
        if g["kind"] == "pauli":
            return GeneratorSet.from_paulis(g["labels"])
        if g["kind"] == "local_x":
            return single_x_local(int(g.get("m", self.hilbert().m)))
        spec = self.hilbert()
        if spec.kind != "bosonic":
            raise ConfigError("displacement generators need a bosonic hilbert space")
        return displacement_generators([complex(a) for a in g["alphas"]], spec.m, spec.cutoff)

    def basis(self):
        gens = self.generator_set()
        base = self.base_state()
        if base.size != gens.dim:
            raise ConfigError(f"base state dimension {base.size} != generator dimension {gens.dim}")
        stab = self.base_stabilizer() if gens.paulis is not None else None
        factors = self.base_factors() if gens.local is not None else None
        return generate(base, gens, int(self.get("k")), stabilizer=stab, base_factors=factors)

    def source(self) -> PhysicalStateSource:
        self.require("source")
        s = self.doc["source"]
        if s["kind"] == "pure":
            return PhysicalStateSource.from_pure(self._state(s.get("state"), "source.state"))
        if s["kind"] == "maximally_mixed":
            d = self.hilbert().dim
            return PhysicalStateSource(np.eye(d) / d, "exact_density", {"label": "maximally_mixed"})
        m = self.hilbert().m
        return single_excitation_source(m, float(s.get("gamma_t", 0.01)), int(s.get("steps", 8)))

    def route_options(self) -> dict:
        policy = self.get("policy")
        if policy in ("product", "wigner_grid"):
            opts = {"grid": self.grid()}
            spec = self.hilbert()
            if policy == "wigner_grid":
                opts.update(cutoff=spec.cutoff, modes=spec.m)
            return opts
        return {}

    def budget(self) -> dict:
        b = self.doc.get("budget")
        if not b:
            raise ConfigError("budget section is required (epsilon/delta, total or counts)")
        if "counts" in b:
            return {"counts": b["counts"]}
        if "total" in b:
            return {"total_budget": int(b["total"])}
        if "epsilon" in b and "delta" in b:
            return {"epsilon": float(b["epsilon"]), "delta": float(b["delta"]),
                    "split": b.get("split", "per_element")}
        raise ConfigError("budget needs epsilon and delta, total, or counts")
