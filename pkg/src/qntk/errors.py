"""Exception types shared across the package."""

import numpy as np


class PreconditionError(ValueError):
    """A numeric precondition of a bound or calculator is violated.

    The message always names the violated bound.
    """


class SingularGramError(np.linalg.LinAlgError):
    """The kernel Gram matrix on the training inputs is not invertible.

    Kernel regression requires the restricted analytic NTK to be invertible
    (strictly positive definite); an estimate that is singular or indefinite
    cannot be used to form the trained mean.
    """


class CapExceededError(ValueError):
    """An oracle workload exceeds its configured size cap."""


class PhaseError(RuntimeError):
    """Internal phase bookkeeping produced an impossible Pauli element.

    This never signals user error; it means a phase bit was lost upstream.
    """
