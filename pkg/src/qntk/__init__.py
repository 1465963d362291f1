"""Classical estimation of neural tangent kernels for Clifford circuits with
Pauli rotations, and kernel regression for the trained mean.

Submodules
----------
pauli       signed Pauli group elements in the binary symplectic form
clifford    tableaux, conjugation, discrete-angle rotations
circuit     templates, observables, model evaluation and gradients
estimator   Monte-Carlo kernel estimates and sample-size bounds
regression  Gram inversion, trained mean and covariance
oracle      dense statevector ground truth
verify      oracle cross-check suite
bench       scaling benchmarks
"""

from .errors import CapExceededError, PhaseError, PreconditionError, SingularGramError
from .pauli import PauliElement, commutes, expectation_zero_state, from_pauli_string, pauli_mul, to_string
from .clifford import CliffordTableau, DiscreteAngle, compose, conjugate, inverse, rotation_conjugate
from .circuit import (
    CircuitTemplate,
    Gate,
    Layer,
    Observable,
    evaluate_model,
    gradient,
    load_template,
    template_from_dict,
)
from .estimator import (
    FullEnumeration,
    GramEstimate,
    KernelEstimate,
    SampleSet,
    bernstein_tail,
    empirical_ntk,
    estimate_gram,
    estimate_k0,
    estimate_mean_f,
    estimate_ntk,
    full_enumeration,
    sample_parameters,
    sample_size_mu,
    sample_size_ntk,
)
from .regression import (
    INFINITY,
    TrainingDynamicsConfig,
    TrainingSet,
    covariance_t,
    fit_mu_infinity,
    invert_gram,
    mu_infinity,
    mu_t,
)

__version__ = "0.1.0"

__all__ = [
    "CapExceededError",
    "PhaseError",
    "PreconditionError",
    "SingularGramError",
    "PauliElement",
    "commutes",
    "expectation_zero_state",
    "from_pauli_string",
    "pauli_mul",
    "to_string",
    "CliffordTableau",
    "DiscreteAngle",
    "compose",
    "conjugate",
    "inverse",
    "rotation_conjugate",
    "CircuitTemplate",
    "Gate",
    "Layer",
    "Observable",
    "evaluate_model",
    "gradient",
    "load_template",
    "template_from_dict",
    "FullEnumeration",
    "GramEstimate",
    "KernelEstimate",
    "SampleSet",
    "bernstein_tail",
    "empirical_ntk",
    "estimate_gram",
    "estimate_k0",
    "estimate_mean_f",
    "estimate_ntk",
    "full_enumeration",
    "sample_parameters",
    "sample_size_mu",
    "sample_size_ntk",
    "INFINITY",
    "TrainingDynamicsConfig",
    "TrainingSet",
    "covariance_t",
    "fit_mu_infinity",
    "invert_gram",
    "mu_infinity",
    "mu_t",
]
