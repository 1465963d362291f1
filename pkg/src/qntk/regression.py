"""Kernel regression for the infinite-width trained mean.

Given training data ``(X_train, Y)`` and (estimated or exact) kernels,

    mu_inf(x)  = K(x, X) K^-1 Y
    mu_t(x)    = K(x, X) K^-1 (1 - exp(-t eta K)) Y
    Cov_t(x,x') = K0(x,x') - K(x,X) A K0(X,x') - K0(x,X) A K(X,x')
                  + K(x,X) A K0(X,X) A K(X,x')

with ``A = K^-1 (1 - exp(-t eta K))``. ``K0`` is the second moment
``E f(x) f(x')`` at initialisation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
import json
import math
import warnings

import numpy as np
import scipy.linalg

from .circuit import CircuitTemplate
from .errors import SingularGramError
from .estimator import GramEstimate, estimate_kernels

__all__ = [
    "INFINITY",
    "CONDITION_WARNING",
    "TrainingSet",
    "TrainingDynamicsConfig",
    "GramInverse",
    "RegressionResult",
    "KernelTable",
    "IllConditionedGramWarning",
    "load_training_csv",
    "invert_gram",
    "mu_infinity",
    "mu_t",
    "covariance_t",
    "fit_mu_infinity",
    "kernel_table_exact",
]

INFINITY = math.inf
CONDITION_WARNING = 1e10


class IllConditionedGramWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class TrainingSet:
    inputs: tuple[str, ...]
    labels: np.ndarray

    def __init__(self, inputs, labels):
        inputs = tuple(str(x) for x in inputs)
        labels = np.asarray(labels, dtype=float).reshape(-1)
        if not inputs:
            raise ValueError("training set is empty")
        if len(inputs) != labels.shape[0]:
            raise ValueError(f"{len(inputs)} inputs but {labels.shape[0]} labels")
        if len(set(len(x) for x in inputs)) != 1:
            raise ValueError("training inputs have different bit lengths")
        if len(set(inputs)) != len(inputs):
            seen = set()
            dup = next(x for x in inputs if x in seen or seen.add(x))
            raise ValueError(f"duplicate training input {dup!r} makes the Gram matrix singular")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    @property
    def d(self) -> int:
        return len(self.inputs)


def load_training_csv(path) -> TrainingSet:
    """Read ``bitstring,label`` rows; a non-numeric first row is taken as a header.

    Raises ``ValueError`` whose message carries the offending line number.
    """
    inputs, labels = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 2:
                raise ValueError(f"line {lineno}, column 1: expected 2 fields, got {len(row)}")
            bits, label = row[0].strip(), row[1].strip()
            try:
                value = float(label)
            except ValueError:
                if lineno == 1 and not inputs:
                    continue
                raise ValueError(f"line {lineno}, column 2: label {label!r} is not a number") from None
            if not bits or set(bits) - {"0", "1"}:
                raise ValueError(f"line {lineno}, column 1: {bits!r} is not a bitstring")
            inputs.append(bits)
            labels.append(value)
    if not inputs:
        raise ValueError(f"line 1, column 1: no training rows in {path}")
    return TrainingSet(inputs, labels)


@dataclass(frozen=True)
class TrainingDynamicsConfig:
    """Gradient-flow learning rate ``eta`` and time ``t`` (``INFINITY`` allowed)."""

    eta: float = 1.0
    t: float = INFINITY

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.t >= 0:
            raise ValueError(f"t must be nonnegative, got {self.t}")


@dataclass(frozen=True)
class GramInverse:
    inverse: np.ndarray
    eigenvalues: np.ndarray
    condition_number: float
    residual: float
    method: str
    ridge: float = 0.0
    warnings: tuple[str, ...] = ()

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    @property
    def norm(self) -> float:
        """Operator norm of the inverse."""
        return float(np.abs(1.0 / self.eigenvalues).max())


def invert_gram(gram, ridge: float = 0.0, threshold: float = CONDITION_WARNING, symmetry_tol: float = 1e-9) -> GramInverse:
    """Invert a symmetric kernel matrix.

    Cholesky is tried first; if it fails the symmetric eigendecomposition is
    used, which still succeeds for nonsingular indefinite matrices. A
    positive ``ridge`` adds ``ridge * I`` first (regularised, off the plain
    estimator). A condition number above ``threshold`` is reported through
    :class:`IllConditionedGramWarning`.

    Raises
    ------
    SingularGramError
        If the matrix is (numerically) singular, i.e. the training Gram
        matrix is not invertible as the regression requires.
    """
    K = np.asarray(gram.matrix if isinstance(gram, GramEstimate) else gram, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"Gram matrix must be square, got shape {K.shape}")
    if not np.allclose(K, K.T, rtol=0, atol=symmetry_tol * max(1.0, np.abs(K).max())):
        raise ValueError("Gram matrix is not symmetric")
    if ridge < 0:
        raise ValueError("ridge must be nonnegative")
    K = (K + K.T) / 2 + ridge * np.eye(K.shape[0])
    d = K.shape[0]
    eig = np.linalg.eigvalsh(K)
    scale = max(abs(eig[0]), abs(eig[-1]))
    if scale == 0 or np.abs(eig).min() <= d * np.finfo(float).eps * scale:
        raise SingularGramError(
            "training Gram matrix is singular (smallest |eigenvalue| "
            f"{np.abs(eig).min():.3g}); the kernel regression requires it to be invertible"
        )
    try:
        factor = scipy.linalg.cho_factor(K)
        inverse = scipy.linalg.cho_solve(factor, np.eye(d))
        method = "cholesky"
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(K)
        inverse = (V / w) @ V.T
        method = "eigh"
    inverse = (inverse + inverse.T) / 2
    abs_eig = np.abs(eig)
    condition = float(abs_eig.max() / abs_eig.min())
    notes = []
    if eig[0] < 0:
        notes.append("Gram matrix is indefinite")
    if condition > threshold:
        msg = f"Gram condition number {condition:.3g} exceeds {threshold:.3g}"
        notes.append(msg)
        warnings.warn(msg, IllConditionedGramWarning, stacklevel=2)
    residual = float(np.linalg.norm(K @ inverse - np.eye(d), 2))
    return GramInverse(inverse, eig, condition, residual, method, ridge, tuple(notes))


def _relaxation(K: np.ndarray, config: TrainingDynamicsConfig) -> np.ndarray:
    """``K^-1 (1 - exp(-t eta K))``, exact through ``eigh``; ``K^-1`` at t = inf."""
    w, V = np.linalg.eigh((K + K.T) / 2)
    if config.t == INFINITY:
        return (V / w) @ V.T
    # -expm1 keeps (1 - e^{-u}) / w accurate for small u
    factor = -np.expm1(-config.t * config.eta * w) / w
    return (V * factor) @ V.T


@dataclass(frozen=True)
class KernelTable:
    """Kernels among training inputs and a list of queries.

    ``train`` is ``K(X, X)``, ``cross`` is ``K(Q, X)`` (one row per query) and
    ``query`` is ``K(Q, Q)``. ``k0_*`` hold the same blocks for ``K0`` when
    available.
    """

    queries: tuple[str, ...]
    train: np.ndarray
    cross: np.ndarray
    query: np.ndarray
    k0_train: np.ndarray | None = None
    k0_cross: np.ndarray | None = None
    k0_query: np.ndarray | None = None

    @classmethod
    def from_full(cls, queries, d_train: int, ntk: np.ndarray, k0: np.ndarray | None = None) -> "KernelTable":
        """Split matrices over ``training inputs + queries`` into blocks."""
        d = d_train
        blocks = lambda M: (M[:d, :d], M[d:, :d], M[d:, d:])
        k0_blocks = blocks(k0) if k0 is not None else (None, None, None)
        return cls(tuple(queries), *blocks(ntk), *k0_blocks)

    def index(self, x: str) -> int:
        try:
            return self.queries.index(x)
        except ValueError:
            raise KeyError(f"{x!r} is not among the tabulated queries") from None


def _joint_inputs(training: TrainingSet, queries) -> tuple[list[str], list[int]]:
    """Distinct inputs (training first) and, per query, its position."""
    inputs = list(training.inputs)
    pos = []
    for q in queries:
        if q in inputs:
            pos.append(inputs.index(q))
        else:
            inputs.append(q)
            pos.append(len(inputs) - 1)
    return inputs, pos


def _table_from_joint(training, queries, ntk, k0=None) -> KernelTable:
    inputs, pos = _joint_inputs(training, queries)
    d = training.d
    idx = np.array(pos, dtype=int)
    take = lambda M: None if M is None else (M[:d, :d], M[np.ix_(idx, np.arange(d))], M[np.ix_(idx, idx)])
    t_ntk = take(ntk)
    t_k0 = take(k0) or (None, None, None)
    return KernelTable(tuple(queries), *t_ntk, *t_k0)


def kernel_table_exact(template: CircuitTemplate, training: TrainingSet, queries, k0: bool = False) -> KernelTable:
    """Kernels from full enumeration of the discrete angles (exact expectations)."""
    from .oracle import exact_kernel_matrices

    inputs, _ = _joint_inputs(training, queries)
    ntk, k0m = exact_kernel_matrices(template, inputs, k0=k0)
    return _table_from_joint(training, queries, ntk, k0m)


def mu_t(table: KernelTable, training: TrainingSet, config: TrainingDynamicsConfig, x: str) -> float:
    """Trained mean at time ``config.t``; ``INFINITY`` gives the closed-form limit."""
    if config.t == 0:
        return 0.0
    row = table.cross[table.index(x)]
    return float(row @ (_relaxation(table.train, config) @ training.labels))


def mu_infinity(table: KernelTable, training: TrainingSet, x: str) -> float:
    return mu_t(table, training, TrainingDynamicsConfig(1.0, INFINITY), x)


def covariance_t(table: KernelTable, training: TrainingSet, config: TrainingDynamicsConfig, x: str, x2: str) -> float:
    """Four-term covariance of the trained network output at time ``config.t``."""
    if table.k0_train is None:
        raise ValueError("covariance needs K0 kernels; build the table with k0=True")
    i, j = table.index(x), table.index(x2)
    k0_xx = float(table.k0_query[i, j])
    if config.t == 0:
        return k0_xx
    A = _relaxation(table.train, config)
    kx, kx2 = table.cross[i], table.cross[j]
    k0x, k0x2 = table.k0_cross[i], table.k0_cross[j]
    return float(
        k0_xx
        - kx @ A @ k0x2
        - k0x @ A @ kx2
        + kx @ A @ table.k0_train @ A @ kx2
    )


@dataclass
class RegressionResult:
    gram: np.ndarray
    inverse: np.ndarray
    condition_number: float
    residual: float
    mu_values: dict[str, float]
    lambda_min: float
    lambda_max: float
    N: int | None
    seed: int | None
    ridge: float = 0.0
    method: str = "cholesky"
    std_errors: np.ndarray | None = None
    mu_std_errors: dict[str, float] | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "mu": dict(self.mu_values),
            "gram": self.gram.tolist(),
            "inverse_residual": self.residual,
            "condition_number": self.condition_number,
            "lambda_min": self.lambda_min,
            "lambda_max": self.lambda_max,
            "N": self.N,
            "seed": self.seed,
            "inversion": self.method,
        }
        if self.mu_std_errors is not None:
            out["mu_std_error"] = dict(self.mu_std_errors)
        if self.std_errors is not None:
            out["gram_std_errors"] = self.std_errors.tolist()
        if self.ridge:
            out["ridge"] = self.ridge
            out["regularized"] = "ridge term added to the Gram matrix; not the plain estimator"
        if self.notes:
            out["notes"] = list(self.notes)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def fit_mu_infinity(
    template: CircuitTemplate,
    training: TrainingSet,
    queries,
    samples,
    ridge: float = 0.0,
    workers: int = 1,
) -> RegressionResult:
    """Estimate ``mu_inf`` at each query from one shared set of angle samples.

    The training Gram and the query-training kernels come from the same
    pass over ``samples`` (a :class:`~qntk.estimator.SampleSet` or a
    :class:`~qntk.estimator.FullEnumeration`).
    """
    queries = list(queries)
    inputs, pos = _joint_inputs(training, queries)
    out = estimate_kernels(template, inputs, samples, ntk=True, workers=workers, covariance=True)
    est = out["ntk"]
    table = _table_from_joint(training, queries, est.matrix)
    inv = invert_gram(table.train, ridge=ridge)
    weights = inv.inverse @ training.labels
    mu = {q: float(table.cross[i] @ weights) for i, q in enumerate(queries)}
    mu_se = {
        q: _delta_method_se(inv.inverse, weights, table.cross[i], pos[i], len(inputs), out["ntk_covariance"], est.N)
        for i, q in enumerate(queries)
    }
    d = training.d
    return RegressionResult(
        gram=table.train,
        inverse=inv.inverse,
        condition_number=inv.condition_number,
        residual=inv.residual,
        mu_values=mu,
        lambda_min=inv.lambda_min,
        lambda_max=inv.lambda_max,
        N=est.N,
        seed=getattr(samples, "seed", None),
        ridge=ridge,
        method=inv.method,
        std_errors=est.std_errors[:d, :d],
        mu_std_errors=mu_se,
        notes=list(inv.warnings),
    )


def _delta_method_se(inverse, weights, cross_row, q_pos, size, covariance, N) -> float:
    """First-order standard error of ``k_q . K^-1 Y`` from the entry covariance.

    With ``w = K^-1 Y`` and ``v = K^-1 k_q`` the derivatives are ``w_i`` for
    the entry ``K(q, x_i)`` and ``-(v_a w_b + v_b w_a)`` for ``K(x_a, x_b)``.
    """
    d = weights.shape[0]
    v = inverse @ cross_row
    grad = np.zeros((size, size))
    grad[q_pos, :d] += weights
    grad[:d, :d] -= np.outer(v, weights)
    iu = np.triu_indices(size)
    # fold the lower triangle onto the stored upper-triangular entries
    g = grad + grad.T - np.diag(np.diag(grad))
    g_tri = g[iu]
    var = float(g_tri @ covariance @ g_tri) / N
    return math.sqrt(max(var, 0.0))
