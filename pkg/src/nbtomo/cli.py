"""Command line front end: ``nbtomo <subcommand> --config run.yaml``.

Exit codes: 0 success, 1 I/O error, 2 validation failure, 3 infeasible
decomposition or oracle violation, 4 self-verification below the floor.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time

import numpy as np

from .config import ConfigError, RunConfig
from .contrast import (OracleViolation, exhaustive_oracle, iterative_ensemble, locc_decomposition,
                       locc_identity_error, two_qubit_locc_family, two_qubit_state, write_trace)
from .decomposition import Decomposition, DecompositionError, l1_min_decompose, pauli_decompose
from .measurements import ParameterizedFamily, magic_projector
from .neighborhood import generate, superposition_cost_bound
from .operators import tensor_product
from .pauli import PauliString, stabilizer_projector
from .sampler import write_sample_log
from .states import computational, single_x_generators, w_state
from .tomography import (element_keys, element_route, exact_projection, make_plan, nearest_physical, run,
                         self_verify, write_matrix)
from .wigner import ProductDecomposition, vacuum_cost, wigner_decompose

EXIT_OK, EXIT_IO, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_FLOOR = 0, 1, 2, 3, 4

log = logging.getLogger("nbtomo")


def _matrix(mat) -> dict:
    mat = np.asarray(mat, dtype=complex)
    return {"re": mat.real.tolist(), "im": mat.imag.tolist()}


# --- decomposition commands ---------------------------------------------------------


def _decompose_target(cfg: RunConfig):
    target, tid, _ = cfg.target()
    family = cfg.family()
    method = cfg.get("method")
    if isinstance(family, ParameterizedFamily) or method == "wigner":
        spec = cfg.hilbert()
        return wigner_decompose(target, cfg.grid(), spec.cutoff, spec.m, tid)
    if isinstance(target, list):
        raise ConfigError("per-mode targets need a wigner family")
    if family.name.startswith("pauli") and method in ("auto", "analytic"):
        m = int(round(math.log2(target.shape[0])))
        return pauli_decompose(target, m, tid)
    if method == "analytic":
        raise ConfigError("analytic method is only available for the Pauli family")
    return l1_min_decompose(target, family, target_id=tid)


def _summary(dec) -> dict:
    out = {"target_id": dec.target_id, "Z": dec.cost, "constant": dec.constant,
           "residual": dec.residual, "route": dec.metadata.get("route")}
    if isinstance(dec, ProductDecomposition):
        out["n_terms"] = len(dec.terms_)
        out["n_sites"] = dec.n_sites
        if "refined_cost" in dec.metadata:
            out["refined_Z"] = dec.metadata["refined_cost"]
    else:
        out["n_terms"] = len(dec)
    return out


def cmd_cost(cfg: RunConfig, args=None):
    dec = _decompose_target(cfg)
    return {"command": "cost", "config": cfg.resolved(), "decomposition": _summary(dec)}, EXIT_OK


def cmd_decompose(cfg: RunConfig, args=None):
    dec = _decompose_target(cfg)
    report = {"command": "decompose", "config": cfg.resolved(), "decomposition": _summary(dec)}
    if isinstance(dec, Decomposition):
        report["terms"] = dec.to_dict()["terms"]
    else:
        report["terms"] = [{"coef": t.coef, "factors": [{"kind": f.kind, "size": f.size, "l1": f.l1}
                                                        for f in t.factors]} for t in dec.terms_]
    return report, EXIT_OK


# --- neighborhood and tomography ------------------------------------------------------


def cmd_neighborhood(cfg: RunConfig, args=None):
    basis = cfg.basis()
    n_gen = len(basis.generators)
    report = {"command": "neighborhood", "config": cfg.resolved(), "basis": basis.describe(),
              "rank_bound": (n_gen + 1) ** basis.k}
    if basis.rank <= 16:
        family = cfg.family() if cfg.get("policy") in ("lp_over_family", "hadamard_expanded",
                                                          "hadamard_expanded_lp") else None
        costs = {}
        for key in element_keys(basis.rank):
            dec = element_route(basis, *key, family=family, policy=cfg.get("policy"), **cfg.route_options())
            costs[key] = dec.cost
        report["element_costs"] = [{"j": j, "l": l, "c": c, "Z": z} for (j, l, c), z in costs.items()]
        report["superposition_bound"] = superposition_cost_bound(basis, costs, cfg.get("bound_method"))
    return report, EXIT_OK


def _tomography(cfg: RunConfig, want_log: bool):
    basis = cfg.basis()
    source = cfg.source()
    family = cfg.family() if cfg.get("policy") in ("lp_over_family", "hadamard_expanded",
                                                      "hadamard_expanded_lp") else None
    plan = make_plan(basis, cfg.get("policy"), family, seed=int(cfg.get("seed")), **cfg.budget(),
                     **cfg.route_options())
    result = run(plan, source, workers=int(cfg.get("workers")), log=want_log)
    return basis, source, result


def cmd_tomo(cfg: RunConfig, args=None):
    outputs = cfg.doc.get("outputs", {})
    basis, source, result = _tomography(cfg, "sample_log" in outputs)
    population, ci = self_verify(result)
    floor = float(cfg.get("floor"))
    report = {"command": "tomo", "config": cfg.resolved(), "basis": basis.describe(), **result.to_dict()}
    if cfg.get("project"):
        report["projected"] = _matrix(nearest_physical(result.rho_hat))
    exact = exact_projection(basis, source.rho)
    report["reference"] = {"frobenius_error": float(np.linalg.norm(result.rho_hat - exact)),
                           "exact_population": float(np.trace(exact).real)}
    evals, vecs = np.linalg.eigh(result.rho_hat)
    top = vecs[:, -1] * np.exp(-1j * np.angle(vecs[np.argmax(np.abs(vecs[:, -1])), -1]))
    report["dominant_eigenvector"] = {"re": top.real.tolist(), "im": top.imag.tolist()}
    report["dominant_eigenvalue"] = float(evals[-1])
    report["self_verification"] = {"population": population, "ci": ci, "floor": floor,
                                   "passed": population >= floor}
    if "sample_log" in outputs:
        rows = [r for key in element_keys(basis.rank) for r in result.sample_logs[key]]
        write_sample_log(outputs["sample_log"], rows)
    if "matrix" in outputs:
        write_matrix(outputs["matrix"], result.rho_hat)
    no_floor = bool(getattr(args, "no_floor", False))
    code = EXIT_OK if population >= floor or no_floor else EXIT_FLOOR
    return report, code


def cmd_verify(cfg: RunConfig | None, args=None):
    """Replay a report's embedded config, or run the self-verification check alone."""
    path = getattr(args, "report", None)
    if path:
        with open(path) as fh:
            old = json.load(fh)
        replay_cfg = RunConfig.from_dict(old["config"])
        new, _ = COMMANDS[old["command"]](replay_cfg, args)
        same = _dumps(new) == _dumps(old)
        return {"command": "verify", "report": path, "reproduced": same}, EXIT_OK if same else EXIT_VALIDATION
    report, code = cmd_tomo(cfg, args)
    sv = report["self_verification"]
    return {"command": "verify", "config": report["config"], "self_verification": sv}, code


# --- contrast -------------------------------------------------------------------------


def cmd_contrast(cfg: RunConfig, args=None):
    c = cfg.doc.get("contrast", {})
    lam = float(c.get("lambda", 0.5))
    n_max = int(c.get("n_max", 1000))
    family = two_qubit_locc_family(lam)
    psi = two_qubit_state(lam)
    target = np.outer(psi, psi.conj())
    state = iterative_ensemble(target, exhaustive_oracle(target, family), n_max, float(c.get("y0", 0.0)))
    d = target.shape[0]
    n = np.arange(1, state.n + 1)
    report = {
        "command": "contrast",
        "config": cfg.resolved(),
        "lambda": lam,
        "identity_error": locc_identity_error(lam),
        "steps": state.n,
        "final_deviation_norm": state.history[-1],
        "implied_Z": state.final_z,
        "bound_holds": bool(np.all(np.asarray(state.history) < np.sqrt(d / n))),
        "inverse_square_holds": state.inverse_square_ok,
        "decomposition_Z": locc_decomposition(lam).cost,
        "ensemble": [{"id": m.id, "p": float(p)} for m, p in state.ensemble],
    }
    trace = cfg.doc.get("outputs", {}).get("trace")
    if trace:
        write_trace(trace, state)
    return report, EXIT_OK


# --- bench ----------------------------------------------------------------------------


def cmd_bench(cfg: RunConfig | None, args=None):
    """Wall-clock timings of the core kernels (not part of the determinism contract)."""
    timings = {}

    def timed(name, fn):
        t0 = time.perf_counter()
        value = fn()
        timings[name] = {"seconds": time.perf_counter() - t0, "value": value}

    for m in range(1, 6):
        gens = [PauliString.from_label("I" * i + "Z" + "I" * (m - i - 1)) for i in range(m)]
        timed(f"stabilizer_Z_m{m}", lambda g=gens, m=m: pauli_decompose(stabilizer_projector(g), m).cost)
        mp = tensor_product(*[magic_projector()] * m) if m > 1 else magic_projector()
        timed(f"magic_Z_m{m}", lambda mp=mp, m=m: pauli_decompose(mp, m).cost)
    timed("vacuum_Z_m1", lambda: vacuum_cost(1))
    timed("vacuum_Z_m2", lambda: vacuum_cost(2))
    psi = two_qubit_state(0.5)
    target = np.outer(psi, psi.conj())
    fam = two_qubit_locc_family(0.5)
    timed("contrast_1e4", lambda: iterative_ensemble(target, exhaustive_oracle(target, fam), 10_000).final_z)

    def tomo():
        basis = generate(computational("000"), single_x_generators(3), 1, stabilizer=["ZII", "IZI", "IIZ"])
        plan = make_plan(basis, epsilon=0.02, delta=1e-3)
        return run(plan, np.outer(w_state(3), w_state(3).conj())).trace_estimate

    timed("w_state_tomography", tomo)
    return {"command": "bench", "timings": timings}, EXIT_OK


COMMANDS = {"cost": cmd_cost, "decompose": cmd_decompose, "tomo": cmd_tomo, "verify": cmd_verify,
            "neighborhood": cmd_neighborhood, "contrast": cmd_contrast, "bench": cmd_bench}


def _dumps(report) -> str:
    return json.dumps(report, indent=2, sort_keys=True, default=str)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nbtomo", description="Generalized DFE and neighborhood tomography")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="YAML run document")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--no-floor", action="store_true", help="ignore the self-verification floor")
        if name == "verify":
            sp.add_argument("--report", help="replay this report's embedded config")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = None
        if args.config:
            cfg = RunConfig.load(args.config).with_overrides(seed=args.seed, workers=args.workers)
        elif args.command not in ("bench", "verify") or (args.command == "verify" and not args.report):
            raise ConfigError("--config is required")
        report, code = COMMANDS[args.command](cfg, args)
        text = _dumps(report)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DecompositionError, OracleViolation) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


__all__ = ["COMMANDS", "build_parser", "main"]
