"""Independent reference computations used by several test modules."""

import itertools
import math

import numpy as np


def hoeffding(z, eps, delta):
    return math.ceil(z * z / (2 * eps * eps) * math.log(2 / delta))


def magic_cost(m):
    return 2 ** (1 - m) * ((1 + math.sqrt(3)) ** m - 1)


def stabilizer_cost(m):
    return 2 - 2 ** (1 - m)


def real_dof(o):
    """Real coordinates of a Hermitian matrix (diag, Re upper, Im upper)."""
    o = np.asarray(o)
    iu = np.triu_indices(o.shape[0], 1)
    return np.concatenate([o.diagonal().real, o[iu].real, o[iu].imag])


def vertex_enumeration(target, observables, ranges):
    """min sum r|f| s.t. C I + sum f M = target, by enumerating basic supports.

    An optimum of the split LP sits at a vertex whose nonzero columns are
    linearly independent; every such support is tried and solved exactly.
    """
    d = target.shape[0]
    b = real_dof(target)
    cols = [real_dof(np.eye(d))] + [real_dof(m) for m in observables]
    n = len(observables)
    best = math.inf
    for size in range(0, min(n, len(b)) + 1):
        for sub in itertools.combinations(range(n), size):
            a = np.stack([cols[0]] + [cols[i + 1] for i in sub], axis=1)
            if np.linalg.matrix_rank(a, tol=1e-10) < a.shape[1]:
                continue
            x, *_ = np.linalg.lstsq(a, b, rcond=None)
            if np.linalg.norm(a @ x - b) > 1e-9:
                continue
            cost = sum(ranges[i] * abs(x[j + 1]) for j, i in enumerate(sub))
            best = min(best, cost)
    return best
