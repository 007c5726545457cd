"""scikit-learn style front ends.

Each estimator stores its constructor arguments untouched and exposes
fitted quantities through trailing-underscore attributes, so ``get_params``
/ ``set_params`` / ``clone`` work as usual. ``fit`` takes the physical
state (a :class:`PhysicalStateSource` or a density matrix) as ``X``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .contrast import exhaustive_oracle, iterative_ensemble, two_qubit_locc_family, two_qubit_state
from .decomposition import l1_min_decompose, pauli_decompose
from .neighborhood import generate
from .sampler import PhysicalStateSource, dfe_estimate, hoeffding_samples
from .tomography import make_plan, nearest_physical, run, self_verify


def _as_source(X) -> PhysicalStateSource:
    if isinstance(X, PhysicalStateSource):
        return X
    arr = np.asarray(X, dtype=complex)
    if arr.ndim == 1:
        return PhysicalStateSource.from_pure(arr)
    return PhysicalStateSource(arr)


class DirectFidelityEstimator(BaseEstimator):
    """Monte Carlo estimate of ``tr(rho O)`` for a fixed target.

    Either pass a ready ``decomposition`` or a ``target`` matrix; targets are
    decomposed over Pauli strings (``family="pauli"``) or by linear
    programming over a finite family.
    """

    def __init__(self, target=None, decomposition=None, family="pauli", epsilon=0.05, delta=0.05,
                 n_samples=None, seed=0, workers=1):
        self.target = target
        self.decomposition = decomposition
        self.family = family
        self.epsilon = epsilon
        self.delta = delta
        self.n_samples = n_samples
        self.seed = seed
        self.workers = workers

    def _decompose(self):
        if self.decomposition is not None:
            return self.decomposition
        if self.target is None:
            raise ValueError("give a target operator or a decomposition")
        o = np.asarray(self.target, dtype=complex)
        if isinstance(self.family, str):
            if self.family != "pauli":
                raise ValueError(f"unknown family shorthand {self.family!r}")
            return pauli_decompose(o, int(round(np.log2(o.shape[0]))))
        return l1_min_decompose(o, self.family)

    def fit(self, X, y=None):
        source = _as_source(X)
        self.decomposition_ = self._decompose()
        self.cost_ = self.decomposition_.cost
        if self.n_samples is not None:
            self.n_samples_ = int(self.n_samples)
        elif self.cost_ > 0:
            self.n_samples_ = hoeffding_samples(self.cost_, self.epsilon, self.delta)
        else:
            self.n_samples_ = 1
        self.result_ = dfe_estimate(source, self.decomposition_, self.n_samples_, seed=self.seed,
                                    workers=self.workers, delta=self.delta)
        self.estimate_ = self.result_.mean
        self.stderr_ = self.result_.stderr
        return self


class NeighborhoodTomography(BaseEstimator):
    """Estimate ``P rho P`` in an orthonormal basis of ``N_k(base, generators)``."""

    def __init__(self, base=None, generators=None, k=1, policy="analytic_pauli", family=None,
                 epsilon=None, delta=None, split="per_element", total_budget=None, seed=0,
                 workers=1, project=False, stabilizer=None, base_factors=None, route_options=None):
        self.base = base
        self.generators = generators
        self.k = k
        self.policy = policy
        self.family = family
        self.epsilon = epsilon
        self.delta = delta
        self.split = split
        self.total_budget = total_budget
        self.seed = seed
        self.workers = workers
        self.project = project
        self.stabilizer = stabilizer
        self.base_factors = base_factors
        self.route_options = route_options

    def fit(self, X, y=None):
        source = _as_source(X)
        if self.base is None or self.generators is None:
            raise ValueError("base state and generators are required")
        self.basis_ = generate(self.base, self.generators, self.k, stabilizer=self.stabilizer,
                               base_factors=self.base_factors)
        if self.epsilon is not None and self.delta is not None:
            budget = {"epsilon": self.epsilon, "delta": self.delta, "split": self.split}
        elif self.total_budget is not None:
            budget = {"total_budget": self.total_budget}
        else:
            raise ValueError("set (epsilon, delta) or total_budget")
        self.plan_ = make_plan(self.basis_, self.policy, self.family, seed=self.seed, **budget,
                               **(self.route_options or {}))
        self.result_ = run(self.plan_, source, workers=self.workers)
        self.rho_hat_ = self.result_.rho_hat
        self.population_, self.population_ci_ = self_verify(self.result_)
        self.costs_ = self.result_.costs
        self.projected_ = nearest_physical(self.rho_hat_) if self.project else None
        return self

    def embedded(self, projected: bool = False) -> np.ndarray:
        """The estimate as an operator on the full space, ``S rho_hat S^dag``."""
        check_is_fitted(self, "rho_hat_")
        mat = self.projected_ if projected and self.projected_ is not None else self.rho_hat_
        s = self.basis_.states
        return s @ mat @ s.conj().T


class ContrastEnsemble(BaseEstimator):
    """Iterative measurement ensemble for ``sqrt(lam)|00> + sqrt(1-lam)|11>``."""

    def __init__(self, lam=0.5, n_max=1000, y0=0.0):
        self.lam = lam
        self.n_max = n_max
        self.y0 = y0

    def fit(self, X=None, y=None):
        psi = two_qubit_state(self.lam)
        target = np.outer(psi, psi.conj()) if X is None else np.asarray(X, dtype=complex)
        self.family_ = two_qubit_locc_family(self.lam)
        self.state_ = iterative_ensemble(target, exhaustive_oracle(target, self.family_), self.n_max, self.y0)
        self.deviation_norms_ = np.asarray(self.state_.history)
        self.implied_z_ = self.state_.final_z
        return self
