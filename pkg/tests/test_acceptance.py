"""Acceptance criteria 1-10. Each test records one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest
from scipy.stats import binom

from nbtomo.contrast import exhaustive_oracle, iterative_ensemble, locc_identity_error, two_qubit_locc_family, two_qubit_state
from nbtomo.decomposition import l1_min_decompose, pauli_decompose, stabilizer_outer_decompose
from nbtomo.contrast import locc_decomposition
from nbtomo.measurements import from_observable, magic_projector, pauli_family
from nbtomo.neighborhood import GeneratorSet, element_operator, generate
from nbtomo.operators import random_density_matrix, random_hermitian, random_unitary, tensor_product
from nbtomo.pauli import PauliString, stabilizer_projector, stabilizer_state
from nbtomo.sampler import PhysicalStateSource, dfe_estimate, exact_moments, hoeffding_samples
from nbtomo.states import computational, leakage, single_x_generators, w_state
from nbtomo.tomography import element_keys, element_route, exact_projection, make_plan, run, self_verify
from nbtomo.wigner import WignerGrid, wigner_decompose
from nbtomo.bosonic import fock

from conftest import dm
from oracles import hoeffding, magic_cost, stabilizer_cost, vertex_enumeration

RESULTS: list[str] = []
P = PauliString.from_label


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def ghz_generators(m):
    return [P("X" * m)] + [P("I" * i + "ZZ" + "I" * (m - i - 2)) for i in range(m - 1)]


def test_criterion_1_pauli_closed_forms():
    t0 = time.perf_counter()
    stab_err, magic_err = 0.0, 0.0
    for m in range(1, 6):
        z = pauli_decompose(stabilizer_projector(ghz_generators(m)), m).cost
        stab_err = max(stab_err, abs(z - stabilizer_cost(m)))
        zm = pauli_decompose(tensor_product(*[magic_projector()] * m), m).cost
        magic_err = max(magic_err, abs(zm - magic_cost(m)) / magic_cost(m))
    elapsed = time.perf_counter() - t0
    ok = stab_err <= 1e-12 and magic_err <= 1e-10 and elapsed < 1
    record(1, ok, f"stabilizer abs err {stab_err:.1e}, magic rel err {magic_err:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_2_wigner_vacuum():
    t0 = time.perf_counter()
    out = []
    for modes, cutoff, tol in ((1, 30, 0.02), (2, 20, 0.03)):
        vac = tensor_product(*[dm(fock(0, cutoff))] * modes)
        d = wigner_decompose(vac, WignerGrid(4.0, 0.05), cutoff=cutoff, modes=modes)
        target = 2 ** (modes + 1)
        rel = abs(d.cost - target) / target
        refined = d.metadata["refined_cost"]
        refine = abs(refined - d.cost) / d.cost
        out.append((modes, d.cost, rel, refine, rel <= tol and refine < 0.01 and d.residual < 0.01))
    elapsed = time.perf_counter() - t0
    ok = all(o[-1] for o in out) and elapsed < 60
    record(2, ok, ", ".join(f"m={m} Z={z:.4f} (rel {r:.1e}, refine {f:.1e})" for m, z, r, f, _ in out)
           + f", {elapsed:.1f}s")
    assert ok


def _branch_moments(decomp, rho):
    """Branch sum of the centered sample w_i (lambda_j - mid_i), mid_i the midpoint of M_i's range.

    The estimate adds back C + sum_i f_i mid_i, so every sample lies in [-Z/2, Z/2].
    """
    shift, first, second = decomp.constant, 0.0, 0.0
    for meas, f, p, w in zip(decomp.measurements, decomp.coefficients, decomp.probabilities, decomp.weights):
        mid = (max(meas.values) + min(meas.values)) / 2
        shift += f * mid
        for v, e in zip(meas.values, meas.effects):
            q = p * np.trace(rho @ e).real
            first += q * w * (v - mid)
            second += q * (w * (v - mid)) ** 2
    return shift + first, second - first ** 2


def test_criterion_3_estimator_exactness():
    rng = np.random.default_rng(3)
    pairs = []
    for m in (1, 2, 3):
        for _ in range(10):
            pairs.append((pauli_decompose(random_hermitian(2 ** m, rng), m), random_density_matrix(2 ** m, rng)))
    for _ in range(8):
        atoms = [from_observable(random_hermitian(2, rng), id=f"a{i}") for i in range(5)]
        pairs.append((l1_min_decompose(random_hermitian(2, rng), atoms), random_density_matrix(2, rng)))
    gens = ghz_generators(3)
    for a, b, c in (("XII", "III", 0), ("IZX", "YII", 1), ("ZZZ", "XYI", 0), ("III", "IIX", 1)):
        for _ in range(2):
            pairs.append((stabilizer_outer_decompose(gens, P(a), P(b), c), random_density_matrix(8, rng)))
    for lam in (0.5, 0.8):
        for _ in range(3):
            pairs.append((locc_decomposition(lam), random_density_matrix(4, rng)))
    worst_mean, var_ok = 0.0, True
    for d, rho in pairs:
        truth = np.trace(rho @ d.reconstruct()).real
        mean, var = _branch_moments(d, rho)
        pkg_mean, pkg_var = exact_moments(PhysicalStateSource(rho), d)
        worst_mean = max(worst_mean, abs(mean - truth), abs(pkg_mean - truth))
        var_ok &= var <= d.cost ** 2 / 4 + 1e-12 and abs(pkg_var - var) <= 1e-10
    ok = len(pairs) >= 50 and worst_mean <= 1e-10 and var_ok
    record(3, ok, f"{len(pairs)} pairs, max mean err {worst_mean:.1e}, variance bound {'held' if var_ok else 'broken'}")
    assert ok


def _coverage(eps, delta, t, runs, seed0=0):
    d = pauli_decompose(dm(computational("0")), 1)
    src = PhysicalStateSource(np.eye(2) / 2)
    fails = sum(abs(dfe_estimate(src, d, t, seed=seed0 + s).mean - 0.5) > eps for s in range(runs))
    # one-sided 99% test of H0: failure rate <= delta
    return fails, binom.sf(fails - 1, runs, delta) >= 0.01


def test_criterion_4_hoeffding_coverage():
    # t = 185 is the Hoeffding count for (Z=1, eps=0.1, delta=0.05); eps=0.05 needs t = 738
    t0 = time.perf_counter()
    assert hoeffding_samples(1, 0.1, 0.05) == hoeffding(1, 0.1, 0.05) == 185
    assert hoeffding_samples(1, 0.05, 0.05) == hoeffding(1, 0.05, 0.05) == 738
    f1, ok1 = _coverage(0.1, 0.05, 185, 500)
    f2, ok2 = _coverage(0.05, 0.05, 738, 500, seed0=10_000)
    elapsed = time.perf_counter() - t0
    ok = ok1 and ok2 and elapsed < 60
    record(4, ok, f"t=185 eps=0.1: {f1}/500 fail; t=738 eps=0.05: {f2}/500 fail; {elapsed:.1f}s "
                  "(literal eps=0.05 with t=185 checked separately)")
    assert ok


@pytest.mark.xfail(strict=True, reason="t=185 is the Hoeffding count for eps=0.1; at eps=0.05 the "
                   "exact binomial failure probability on I/2 is 0.186")
def test_criterion_4_literal_parameters():
    fails, ok = _coverage(0.05, 0.05, 185, 500)
    RESULTS.append(f"criterion 4 (literal eps=0.05, t=185): {fails}/500 fail, expected infeasible")
    assert ok


def test_criterion_5_w_state_tomography():
    t0 = time.perf_counter()
    basis = generate(computational("000"), single_x_generators(3), 1,
                     stabilizer=[P("ZII"), P("IZI"), P("IIZ")])
    truth = exact_projection(basis, dm(w_state(3)))
    src = PhysicalStateSource.from_pure(w_state(3))
    good, traces = 0, []
    for seed in range(100):
        plan = make_plan(basis, epsilon=0.02, delta=1e-3, seed=seed)
        res = run(plan, src)
        good += np.linalg.norm(res.rho_hat - truth) <= 0.1
        traces.append(self_verify(res)[0])
    elapsed = time.perf_counter() - t0
    in_range = sum(0.97 <= t <= 1.03 for t in traces)
    ok = good >= 95 and in_range == 100 and elapsed < 300
    record(5, ok, f"{good}/100 within 0.1, traces in [{min(traces):.4f}, {max(traces):.4f}], {elapsed:.1f}s")
    assert ok


def test_criterion_6_stabilizer_fast_path():
    cases = [
        (["ZII", "IZI", "IIZ"], ["XII", "IXI", "IIX"]),
        (["XXX", "ZZI", "IZZ"], ["ZII", "IXI", "IIY"]),
        (["XZI", "ZXZ", "IZX"], ["XII", "IIZ"]),
        (["YYI", "XXX", "ZZI"], ["IZI", "XIX"]),
    ]
    worst, checked = 0.0, 0
    for grp, gl in cases:
        gens = [P(g) for g in grp]
        for k in (1, 2):
            b = generate(stabilizer_state(gens), GeneratorSet.from_paulis(gl), k, stabilizer=gens)
            for j, l, c in element_keys(b.rank):
                fast = element_route(b, j, l, c)
                assert fast.metadata["route"] == "stabilizer"
                dense = pauli_decompose(element_operator(b, j, l, c), 3)
                fa = dict(zip(fast.ids, fast.coefficients))
                fr = dict(zip(dense.ids, dense.coefficients))
                diff = max([abs(fa.get(key, 0) - fr.get(key, 0)) for key in set(fa) | set(fr)] + [0.0])
                worst = max(worst, diff, abs(fast.constant - dense.constant))
                checked += 1
    ok = worst <= 1e-12
    record(6, ok, f"{checked} elements, max coefficient diff {worst:.1e}")
    assert ok


def test_criterion_7_rank_bound():
    rng = np.random.default_rng(7)
    worst = 0.0
    for trial in range(100):
        m = int(rng.integers(1, 5))
        k = int(rng.integers(0, 4))
        ng = int(rng.integers(1, 4))
        kind = trial % 3
        if kind == 0:
            labels = ["".join(rng.choice(list("IXYZ"), m)) for _ in range(ng)]
            gens = GeneratorSet.from_paulis([l if set(l) != {"I"} else "Z" * m for l in labels])
        elif kind == 1:
            gens = GeneratorSet([random_unitary(2 ** m, rng) for _ in range(ng)])
        else:
            gens = GeneratorSet([rng.normal(size=(2 ** m, 2 ** m)) for _ in range(ng)])
        base = rng.normal(size=2 ** m) + 1j * rng.normal(size=2 ** m)
        b = generate(base / np.linalg.norm(base), gens, k)
        worst = max(worst, b.rank / (ng + 1) ** k)
        assert b.rank <= (ng + 1) ** k
    record(7, worst <= 1, f"100 generator sets, max rank/(|K|+1)^k = {worst:.3f}")


def test_criterion_8_lp_optimality():
    rng = np.random.default_rng(8)
    pauli_err = 0.0
    for m in (1, 2):
        for _ in range(5):
            o = random_hermitian(2 ** m, rng)
            pauli_err = max(pauli_err, abs(l1_min_decompose(o, pauli_family(m)).cost - pauli_decompose(o, m).cost))
    enum_err = 0.0
    for trial in range(24):
        size = 3 + trial % 4
        obs = [random_hermitian(2, rng) for _ in range(size)]
        atoms = [from_observable(a, id=f"atom{i}") for i, a in enumerate(obs)]
        o = random_hermitian(2, rng)
        lp = l1_min_decompose(o, atoms).cost
        ref = vertex_enumeration(o, [a.observable for a in atoms], [a.range for a in atoms])
        enum_err = max(enum_err, abs(lp - ref))
    ok = pauli_err <= 1e-8 and enum_err <= 1e-6
    record(8, ok, f"Pauli dictionary err {pauli_err:.1e}, vertex enumeration err {enum_err:.1e} over 24 dictionaries")
    assert ok


def test_criterion_9_contrast_convergence():
    o = dm(two_qubit_state(0.5))
    state = iterative_ensemble(o, exhaustive_oracle(o, two_qubit_locc_family(0.5)), 10_000)
    n = np.arange(1, state.n + 1)
    bound_ok = state.n == 10_000 and bool(np.all(np.asarray(state.history) < np.sqrt(4 / n)))
    z_ok = state.final_z <= 1.5 + 1e-6
    lams = np.random.default_rng(9).uniform(0.5, 1.0, 20)
    ident = max(locc_identity_error(lam) for lam in lams)
    ok = bound_ok and z_ok and ident <= 1e-12 and state.inverse_square_ok
    record(9, ok, f"final |s| {state.history[-1]:.2e}, implied Z {state.final_z:.6f}, identity err {ident:.1e}")
    assert ok


def test_criterion_10_lindblad_slope():
    gammas = np.array([1e-2, 5e-3, 2.5e-3])
    y = np.array([leakage(3, g) for g in gammas])
    slope = np.polyfit(np.log(gammas), np.log(y), 1)[0]
    ok = abs(slope - 2) <= 0.2
    record(10, ok, f"log-log slope {slope:.3f}")
    assert ok


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
