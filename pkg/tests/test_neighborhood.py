import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nbtomo.neighborhood import GeneratorSet, element_operator, generate, superposition_cost_bound
from nbtomo.operators import random_unitary
from nbtomo.states import computational, single_x_generators

from conftest import X, Y, ket


def test_k1_two_qubits():
    b = generate(computational("00"), single_x_generators(2), 1)
    assert b.rank == 3
    assert np.allclose(b.gram, np.eye(3))
    assert b.gram_pinv_norm == pytest.approx(1)
    proj = b.projector()
    want = sum(np.outer(ket(s), ket(s)) for s in ("00", "10", "01"))
    assert np.allclose(proj, want)


def test_k2_two_qubits():
    b = generate(computational("00"), single_x_generators(2), 2)
    assert b.rank == 4 <= 9
    assert np.allclose(b.projector(), np.eye(4))


def test_rotation_gram():
    th = 0.4
    r = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    b = generate(ket("0"), GeneratorSet([r], ["R"]), 1)
    assert np.allclose(b.gram, [[1, math.cos(th)], [math.cos(th), 1]])
    assert b.gram_pinv_norm == pytest.approx(1 / (1 - math.cos(th)), rel=1e-10)
    c = b.coeffs
    assert np.allclose(c.conj().T @ b.gram @ c, np.eye(b.rank), atol=1e-10)


def test_element_examples():
    b = generate(ket("0"), GeneratorSet([X], ["X"]), 1)
    assert np.allclose(b.states, np.eye(2))
    assert np.allclose(element_operator(b, 1, 0, 0), X)
    assert np.allclose(element_operator(b, 1, 0, 1), Y)
    assert np.allclose(element_operator(b, 1, 1, 0), np.diag([0, 1]))
    with pytest.raises(ValueError):
        element_operator(b, 0, 0, 1)


def test_element_properties():
    b = generate(computational("000"), single_x_generators(3), 2)
    for a in range(b.rank):
        for c in range(a):
            for ph in (0, 1):
                e = element_operator(b, a, c, ph)
                assert np.allclose(e, e.conj().T)
                assert abs(np.trace(e)) < 1e-12
                assert np.linalg.norm(e) == pytest.approx(math.sqrt(2))


def test_superposition_bounds():
    assert superposition_cost_bound(1, {(0, 0, 0): 1.0}) == pytest.approx(1)
    full = {(0, 0, 0): 2, (1, 1, 0): 2, (0, 1, 0): 2, (0, 1, 1): 2}
    assert superposition_cost_bound(2, full, method="crude") == pytest.approx(6)
    assert superposition_cost_bound(2, full) <= 6
    diag_only = {(0, 0, 0): 2, (1, 1, 0): 1, (0, 1, 0): 0, (0, 1, 1): 0}
    assert superposition_cost_bound(2, diag_only) == pytest.approx(2)
    with pytest.raises(KeyError):
        superposition_cost_bound(2, {(0, 0, 0): 1})


gen_sets = st.tuples(st.integers(1, 3), st.integers(1, 3), st.integers(0, 3), st.integers(0, 2 ** 31))


@settings(max_examples=40, deadline=None)
@given(gen_sets)
def test_rank_bound_and_orthonormality(args):
    m, ng, k, seed = args
    rng = np.random.default_rng(seed)
    labels = ["".join(rng.choice(list("IXYZ"), m)) for _ in range(ng)]
    labels = [l if set(l) != {"I"} else "X" + l[1:] for l in labels]
    gens = GeneratorSet.from_paulis(labels)
    b = generate(computational("0" * m), gens, k)
    assert b.rank <= (ng + 1) ** k
    c = b.coeffs
    assert np.allclose(c.conj().T @ b.gram @ c, np.eye(b.rank), atol=1e-10)
    raw = b.raw
    assert np.allclose(raw.conj().T @ raw, b.gram, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 2), st.integers(1, 2), st.integers(0, 2 ** 31))
def test_rank_bound_random_unitaries(ng, k, seed):
    rng = np.random.default_rng(seed)
    gens = GeneratorSet([random_unitary(8, rng) for _ in range(ng)])
    b = generate(computational("000"), gens, k)
    assert b.rank <= (ng + 1) ** k
