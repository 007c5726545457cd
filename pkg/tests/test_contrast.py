import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbtomo.contrast import (OracleViolation, complement, effective_contrast, exhaustive_oracle,
                             iterative_ensemble, locc_decomposition, locc_identity_error,
                             mixture_measurement, normalized_traceless, two_qubit_locc_family,
                             two_qubit_state, write_trace)
from nbtomo.measurements import pauli_measurement
from nbtomo.operators import traceless_part

from conftest import Z, dm


def bell():
    return dm(two_qubit_state(0.5))


def test_contrast_z():
    assert effective_contrast(Z, pauli_measurement("Z"), np.zeros((2, 2))) == pytest.approx(1)


def test_contrast_positive_overlap_is_zero():
    o = np.diag([1.0, 0, 0, 0])
    m = pauli_measurement("XX")
    s = m.observable  # orthogonal to I and to Ot, tr(M s) = 4 > 0
    assert effective_contrast(o, m, s) == 0


def test_contrast_bell_mixture():
    fam = list(two_qubit_locc_family(0.5))
    mix = mixture_measurement(fam, [2 / 6, 1 / 6, 1 / 6, 1 / 6, 1 / 6])
    o = bell()
    assert effective_contrast(o, mix, np.zeros((4, 4))) == pytest.approx(0.5, abs=1e-12)


def test_degenerate_target():
    with pytest.raises(ValueError):
        effective_contrast(np.eye(2), pauli_measurement("Z"), np.zeros((2, 2)))


@pytest.mark.parametrize("lam", [0.5, 0.7, 1.0])
def test_identity(lam):
    assert locc_identity_error(lam) <= 1e-12
    fam = two_qubit_locc_family(lam)
    assert len(fam) == 5
    for m in fam:
        assert m.range == 1


@settings(max_examples=20, deadline=None)
@given(st.floats(0.5, 1.0))
def test_identity_random(lam):
    assert locc_identity_error(lam) <= 1e-12


def test_lambda_out_of_range():
    with pytest.raises(ValueError):
        two_qubit_locc_family(0.3)


def test_locc_decomposition():
    d = locc_decomposition(0.5)
    assert d.cost == pytest.approx(1.5)
    assert np.allclose(d.reconstruct(), bell(), atol=1e-12)


def test_complement():
    m = pauli_measurement("ZZ")
    c = complement(m)
    assert np.allclose(c.observable, -m.observable)


def test_bell_convergence():
    fam = two_qubit_locc_family(0.5)
    o = bell()
    state = iterative_ensemble(o, exhaustive_oracle(o, fam), 2000)
    n = np.arange(1, state.n + 1)
    assert np.all(np.asarray(state.history) < np.sqrt(4 / n))
    assert state.final_z <= 1.5 + 1e-6
    assert state.inverse_square_ok
    assert abs(state.weights.sum() - 1) <= 1e-12
    ot = traceless_part(o)
    assert abs(np.trace(state.varsigma)) <= 1e-10
    assert abs(np.vdot(state.varsigma, ot)) <= 1e-10
    # weighted observable approaches a multiple of Ot
    mts = [normalized_traceless(m) for m in state.measurements]
    avg = sum(p * mt for p, mt in zip(state.weights, mts))
    coef = np.vdot(ot, avg).real / np.vdot(ot, ot).real
    assert np.linalg.norm(avg - coef * ot) <= math.sqrt(4 / state.n)


def test_invariants_every_step():
    o = dm(two_qubit_state(0.7))
    fam = two_qubit_locc_family(0.7)
    oracle = exhaustive_oracle(o, fam)
    ot = traceless_part(o)
    seen = []

    def watching(s):
        assert abs(np.trace(s)) <= 1e-10
        assert abs(np.vdot(s, ot)) <= 1e-10
        seen.append(np.linalg.norm(s))
        return oracle(s)

    state = iterative_ensemble(o, watching, 300)
    assert len(seen) == state.n
    assert state.inverse_square_ok
    assert np.all(np.asarray(state.history) < np.sqrt(4 / np.arange(1, state.n + 1)))


def test_orthogonal_oracle_rejected():
    o = bell()
    bad = pauli_measurement("XI")
    with pytest.raises(OracleViolation):
        iterative_ensemble(o, lambda s: bad, 10)


def test_exact_termination():
    o = np.diag([1.0, -1.0])
    state = iterative_ensemble(o, lambda s: pauli_measurement("Z"), 50)
    assert state.exact and state.n == 1
    assert state.final_z == pytest.approx(2)


def test_swapped_rule_loses_bound():
    o = bell()
    state = iterative_ensemble(o, exhaustive_oracle(o, two_qubit_locc_family(0.5)), 400,
                               weight_rule="swapped")
    assert not state.inverse_square_ok


def test_n_max_rejected():
    with pytest.raises(ValueError):
        iterative_ensemble(bell(), lambda s: None, 0)


def test_trace_file(tmp_path):
    o = bell()
    state = iterative_ensemble(o, exhaustive_oracle(o, two_qubit_locc_family(0.5)), 5)
    p = tmp_path / "trace.csv"
    write_trace(p, state)
    lines = p.read_text().splitlines()
    assert lines[0] == "n,varsigma_norm,implied_z" and len(lines) == 6
