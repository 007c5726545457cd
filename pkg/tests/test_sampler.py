import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import binom

from nbtomo.decomposition import Decomposition, pauli_decompose
from nbtomo.measurements import pauli_family, pauli_measurement, vacuum_projection
from nbtomo.bosonic import fock
from nbtomo.operators import HilbertSpec, random_density_matrix, random_hermitian
from nbtomo.sampler import (PhysicalStateSource, SampleStream, apply_channel, dfe_estimate,
                            exact_moments, hoeffding_epsilon, hoeffding_samples, merge_moments,
                            read_sample_log, simulate_measure, write_sample_log)

from conftest import dm, ket
from oracles import hoeffding


def test_hoeffding_values():
    assert hoeffding_samples(2, 0.05, 0.01) == hoeffding(2, 0.05, 0.01) == 4239
    assert hoeffding_samples(1, 0.1, 0.05) == hoeffding(1, 0.1, 0.05) == 185
    # 600 ln 200 = 3178.96..., so the ceiling is 3179
    assert hoeffding_samples(math.sqrt(3), 0.05, 0.01) == hoeffding(math.sqrt(3), 0.05, 0.01) == 3179
    assert hoeffding_epsilon(1, 185, 0.05) <= 0.1


@settings(max_examples=60, deadline=None)
@given(st.floats(0.1, 10), st.floats(0.01, 0.5), st.floats(1e-4, 0.5))
def test_hoeffding_inverse(z, eps, delta):
    t = hoeffding_samples(z, eps, delta)
    assert t == hoeffding(z, eps, delta)
    assert hoeffding_epsilon(z, t, delta) <= eps + 1e-12


def test_simulate_examples():
    src = PhysicalStateSource(dm(ket("0")))
    assert np.all(simulate_measure(src, pauli_measurement("Z"), np.random.default_rng(0), size=50) == 1)
    mixed = PhysicalStateSource(np.eye(2) / 2)
    out = simulate_measure(mixed, pauli_measurement("X"), np.random.default_rng(0), size=20000)
    assert set(out) == {-1.0, 1.0}
    assert abs(out.mean()) < 4 / math.sqrt(20000)


def test_simulate_vacuum_projection():
    src = PhysicalStateSource(dm(fock(0, 25)))
    m = vacuum_projection(1.0, HilbertSpec.bosonic(1, 25))
    probs = m.probabilities(src.rho)
    assert probs[list(m.values).index(1)] == pytest.approx(math.exp(-1), abs=1e-10)


def test_invalid_source():
    with pytest.raises(ValueError):
        PhysicalStateSource(np.diag([1.5, -0.5]))


def test_dfe_examples():
    d = pauli_decompose(dm(ket("0")), 1)
    r = dfe_estimate(PhysicalStateSource(dm(ket("0"))), d, 200, seed=1)
    assert r.mean == 1 and r.stderr == 0
    r = dfe_estimate(PhysicalStateSource(dm(ket("1"))), d, 200, seed=1)
    assert r.mean == 0
    r = dfe_estimate(PhysicalStateSource(np.eye(2) / 2), d, 100_000, seed=2)
    assert abs(r.mean - 0.5) <= 3 * r.stderr
    assert r.stderr == pytest.approx(0.5 / math.sqrt(100_000), rel=0.02)


def test_constant_decomposition():
    d = pauli_decompose(np.eye(2) * 0.3, 1)
    r = dfe_estimate(PhysicalStateSource(np.eye(2) / 2), d, 10, seed=0)
    assert r.mean == pytest.approx(0.3) and r.stderr == 0


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 2), st.integers(0, 2 ** 31))
def test_unbiased_branch_sum(m, seed):
    rng = np.random.default_rng(seed)
    o = random_hermitian(2 ** m, rng)
    rho = random_density_matrix(2 ** m, rng)
    d = pauli_decompose(o, m)
    src = PhysicalStateSource(rho)
    # independent branch sum over outcomes
    total = d.constant
    for meas, f in zip(d.measurements, d.coefficients):
        total += f * sum(v * np.trace(rho @ e).real for v, e in zip(meas.values, meas.effects))
    mean, var = exact_moments(src, d)
    assert mean == pytest.approx(np.trace(rho @ o).real, abs=1e-10)
    assert total == pytest.approx(mean, abs=1e-10)
    assert var <= d.cost ** 2 / 4 + 1e-12


def test_coverage_binomial():
    # Z = 1 target on I/2 at the Hoeffding sample count; one-sided 99% test of rate <= delta
    d = pauli_decompose(dm(ket("0")), 1)
    src = PhysicalStateSource(np.eye(2) / 2)
    eps, delta = 0.1, 0.05
    t = hoeffding_samples(d.cost, eps, delta)
    runs = 300
    fails = sum(abs(dfe_estimate(src, d, t, seed=s).mean - 0.5) > eps for s in range(runs))
    assert binom.sf(fails - 1, runs, delta) >= 0.01


def test_seed_reproducible_and_workers():
    d = pauli_decompose(random_hermitian(4, np.random.default_rng(3)), 2)
    src = PhysicalStateSource(random_density_matrix(4, np.random.default_rng(4)))
    a = dfe_estimate(src, d, 5001, seed=9, log=True)
    b = dfe_estimate(src, d, 5001, seed=9, log=True)
    c = dfe_estimate(src, d, 5001, seed=9, workers=4, log=True)
    assert a.sample_log == b.sample_log == c.sample_log
    assert a.mean == b.mean
    assert abs(a.mean - c.mean) <= 1e-12
    assert dfe_estimate(src, d, 5001, seed=10).mean != a.mean


def test_stream_counter_based():
    s = SampleStream(7, "t")
    whole = s.uniforms(0, 100)
    assert np.array_equal(whole[40:60], s.uniforms(40, 20))
    assert not np.array_equal(whole, SampleStream(7, "u").uniforms(0, 100))


def test_merge_moments_associative():
    rng = np.random.default_rng(0)
    xs = rng.normal(size=1000)
    parts = [(len(c), c.mean(), ((c - c.mean()) ** 2).sum()) for c in np.array_split(xs, 7)]
    n, mean, m2 = merge_moments(parts)
    assert n == 1000 and mean == pytest.approx(xs.mean(), abs=1e-12)
    assert m2 == pytest.approx(((xs - xs.mean()) ** 2).sum(), rel=1e-12)


def test_sample_log_roundtrip(tmp_path):
    d = pauli_decompose(dm(ket("0")), 1)
    r = dfe_estimate(PhysicalStateSource(np.eye(2) / 2), d, 20, seed=1, log=True)
    path = tmp_path / "log.csv"
    write_sample_log(path, r.sample_log)
    assert read_sample_log(path) == r.sample_log
    assert path.read_text().splitlines()[0] == "target_id,sample_index,measurement_id,outcome,weight"


def test_channel():
    base = ket("0")
    s = apply_channel(base, [np.array([[0, 0], [1, 0]])], 0.0)
    assert np.allclose(s.rho, dm(base))
    s = apply_channel(base, [np.array([[0, 0], [1, 0]])], 0.01, labels=["up"])
    assert np.trace(s.rho).real == pytest.approx(1)
    assert s.metadata["gamma_t"] == 0.01 and s.metadata["jumps"] == ["up"]
    with pytest.raises(ValueError):
        apply_channel(base, [np.array([[0, 0], [1, 0]])], 0.5)
