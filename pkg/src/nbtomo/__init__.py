"""Generalized direct fidelity estimation and neighborhood-subspace tomography.

The package is organized bottom-up: dense operators and Pauli algebra,
measurement families, decompositions ``O = C I + sum f_i M_i`` with their
sampling tables, neighborhood bases, the Monte Carlo sampler, the
element-by-element tomography driver and the measurement-contrast
construction. :mod:`nbtomo.estimators` wraps the common workflows in
scikit-learn style estimators and :mod:`nbtomo.cli` exposes them as batch
commands.
"""

from .contrast import ContrastState, OracleViolation, effective_contrast, iterative_ensemble, two_qubit_locc_family
from .decomposition import (Decomposition, DecompositionError, dfe_cost, l1_min_decompose, pauli_decompose,
                            stabilizer_outer_decompose)
from .estimators import ContrastEnsemble, DirectFidelityEstimator, NeighborhoodTomography
from .measurements import MeasurementFamily, MeasurementOperator, pauli_family, product_family
from .neighborhood import GeneratorSet, NeighborhoodBasis, element_operator, generate, superposition_cost_bound
from .operators import HilbertSpec
from .pauli import PauliString
from .sampler import EstimatorResult, PhysicalStateSource, apply_channel, dfe_estimate, hoeffding_samples
from .tomography import TomographyPlan, TomographyResult, element_route, make_plan, nearest_physical, run, self_verify
from .wigner import WignerGrid, wigner_decompose

__version__ = "0.1.0"

__all__ = [
    "ContrastEnsemble", "ContrastState", "Decomposition", "DecompositionError", "DirectFidelityEstimator",
    "EstimatorResult", "GeneratorSet", "HilbertSpec", "MeasurementFamily", "MeasurementOperator",
    "NeighborhoodBasis", "NeighborhoodTomography", "OracleViolation", "PauliString", "PhysicalStateSource",
    "TomographyPlan", "TomographyResult", "WignerGrid", "apply_channel", "dfe_cost", "dfe_estimate",
    "effective_contrast", "element_operator", "element_route", "generate", "hoeffding_samples",
    "iterative_ensemble", "l1_min_decompose", "make_plan", "nearest_physical", "pauli_decompose",
    "pauli_family", "product_family", "run", "self_verify", "stabilizer_outer_decompose",
    "superposition_cost_bound", "two_qubit_locc_family", "wigner_decompose",
]
