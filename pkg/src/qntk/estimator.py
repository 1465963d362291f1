"""Monte-Carlo estimation of the analytic NTK from discrete-angle samples.

Angles are drawn uniformly from {0, pi/2, pi, 3pi/2}; at those values every
rotation is Clifford, so each sample is simulated exactly on the stabilizer
path, and averaging over the four points reproduces the continuous-uniform
expectation of the NTK, of ``f`` and of ``f(x) f(x')``.

Samples are produced in fixed blocks of :data:`BLOCK_SIZE` rows, each drawn
from its own stream keyed by ``(seed, block)``; row ``j`` is therefore a pure
function of ``(seed, j)`` and estimates do not depend on how blocks are
spread over worker processes. Sums are accumulated with :func:`math.fsum`
per block and combined in block order.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from .circuit import CircuitTemplate, check_input, evaluate_batch, gradient, gradient_batch
from .errors import PreconditionError

__all__ = [
    "BLOCK_SIZE",
    "SampleSet",
    "FullEnumeration",
    "sample_parameters",
    "full_enumeration",
    "KernelEstimate",
    "GramEstimate",
    "empirical_ntk",
    "estimate_ntk",
    "estimate_gram",
    "estimate_kernels",
    "estimate_mean_f",
    "estimate_k0",
    "mean_is_nonzero",
    "sample_size_ntk",
    "hyponew_bound",
    "sample_size_mu",
    "bernstein_tail",
    "gram_deviation_bound",
    "gram_bernstein_parameters",
]

BLOCK_SIZE = 4096


@dataclass(frozen=True)
class SampleSet:
    """``N`` i.i.d. angle vectors in {0,1,2,3}^L (units of pi/2)."""

    seed: int
    N: int
    L: int

    def __post_init__(self):
        if self.L < 1 or self.N < 1:
            raise ValueError("need L >= 1 and N >= 1")

    @property
    def n_blocks(self) -> int:
        return -(-self.N // BLOCK_SIZE)

    def block(self, b: int) -> np.ndarray:
        ss = np.random.SeedSequence(self.seed, spawn_key=(b,))
        rng = np.random.Generator(np.random.PCG64(ss))
        rows = rng.integers(0, 4, size=(BLOCK_SIZE, self.L), dtype=np.uint8)
        return rows[: min(BLOCK_SIZE, self.N - b * BLOCK_SIZE)]

    def __getitem__(self, j: int) -> np.ndarray:
        if not 0 <= j < self.N:
            raise IndexError(j)
        return self.block(j // BLOCK_SIZE)[j % BLOCK_SIZE]

    def thetas(self) -> np.ndarray:
        return np.concatenate([self.block(b) for b in range(self.n_blocks)])


@dataclass(frozen=True)
class FullEnumeration:
    """All ``4**L`` angle vectors; averages over it are exact expectations."""

    L: int
    seed = None

    @property
    def N(self) -> int:
        return 4 ** self.L

    @property
    def n_blocks(self) -> int:
        return -(-self.N // BLOCK_SIZE)

    def block(self, b: int) -> np.ndarray:
        idx = np.arange(b * BLOCK_SIZE, min((b + 1) * BLOCK_SIZE, self.N))
        shifts = 2 * np.arange(self.L - 1, -1, -1)
        return ((idx[:, None] >> shifts[None, :]) & 3).astype(np.uint8)

    def thetas(self) -> np.ndarray:
        return np.concatenate([self.block(b) for b in range(self.n_blocks)])


def sample_parameters(L: int, N: int, seed: int) -> SampleSet:
    return SampleSet(seed=int(seed), N=int(N), L=int(L))


def full_enumeration(L: int) -> FullEnumeration:
    if L < 1:
        raise ValueError("need L >= 1")
    return FullEnumeration(L)


@dataclass(frozen=True)
class KernelEstimate:
    value: float
    N: int
    variance: float
    std_error: float
    seed: int | None = None


@dataclass(frozen=True)
class GramEstimate:
    """Symmetric ``d x d`` kernel estimate with per-entry standard errors."""

    matrix: np.ndarray
    N: int
    std_errors: np.ndarray
    seed: int | None = None

    @property
    def max_std_error(self) -> float:
        return float(self.std_errors.max())

    @property
    def d(self) -> int:
        return self.matrix.shape[0]


# ---------------------------------------------------------------------------
# per-sample quantities


def empirical_ntk(template: CircuitTemplate, x: str, x2: str, theta) -> float:
    """``grad f(x) . grad f(x')`` at discrete ``theta`` (scalar stabilizer path)."""
    g1 = gradient(template, x, theta)
    g2 = g1 if x2 == x else gradient(template, x2, theta)
    return float(g1 @ g2)


def _fsum_rows(values: np.ndarray) -> np.ndarray:
    """Exactly rounded sums over axis 0 of a ``(B, k)`` array."""
    return np.array([math.fsum(col) for col in values.T])


@dataclass
class _Moments:
    """Count, mean and centred sums of squares per column (Chan's merge).

    ``comoment`` optionally holds the full centred cross-product matrix of
    the first ``comoment.shape[0]`` columns.
    """

    count: int
    mean: np.ndarray
    m2: np.ndarray
    comoment: np.ndarray | None = None

    @classmethod
    def of(cls, values: np.ndarray, cov_cols: int = 0) -> "_Moments":
        count = values.shape[0]
        mean = _fsum_rows(values) / count
        centred = values - mean
        m2 = _fsum_rows(centred ** 2)
        comoment = None
        if cov_cols:
            head = centred[:, :cov_cols]
            comoment = head.T @ head
        return cls(count, mean, m2, comoment)

    def merge(self, other: "_Moments") -> "_Moments":
        count = self.count + other.count
        delta = other.mean - self.mean
        weight = self.count * other.count / count
        mean = self.mean + delta * (other.count / count)
        m2 = self.m2 + other.m2 + delta ** 2 * weight
        comoment = None
        if self.comoment is not None:
            head = delta[: self.comoment.shape[0]]
            comoment = self.comoment + other.comoment + np.outer(head, head) * weight
        return _Moments(count, mean, m2, comoment)

    @property
    def variance(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.m2)
        return self.m2 / (self.count - 1)

    @property
    def covariance(self) -> np.ndarray | None:
        if self.comoment is None:
            return None
        return self.comoment / max(self.count - 1, 1)


def _block_quantities(template, inputs, samples, b, want_ntk, want_f, want_cov=False):
    """Per-sample NTK entries and/or ``f`` products for one block.

    Returns a ``(B, k)`` array whose columns are the upper-triangular NTK
    entries, then the upper-triangular ``f f`` products, then the ``f``
    values, as requested.
    """
    thetas = samples.block(b)
    d = len(inputs)
    iu = np.triu_indices(d)
    cols = []
    if want_ntk:
        grads = np.stack([gradient_batch(template, x, thetas) for x in inputs], axis=1)
        cols.append(np.einsum("bil,bjl->bij", grads, grads)[:, iu[0], iu[1]])
    if want_f:
        fs = np.stack([evaluate_batch(template, x, thetas) for x in inputs], axis=1)
        cols.append((fs[:, :, None] * fs[:, None, :])[:, iu[0], iu[1]])
        cols.append(fs)
    cov_cols = len(iu[0]) if (want_cov and want_ntk) else 0
    return _Moments.of(np.concatenate(cols, axis=1), cov_cols)


def _block_task(args):
    return _block_quantities(*args)


def _accumulate(template, inputs, samples, want_ntk, want_f, workers, want_cov=False):
    for x in inputs:
        check_input(template, x)
    if samples.L != template.L:
        raise ValueError(f"samples have L={samples.L}, template has L={template.L}")
    tasks = [(template, inputs, samples, b, want_ntk, want_f, want_cov) for b in range(samples.n_blocks)]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_task, tasks))
    else:
        parts = [_block_task(t) for t in tasks]
    total = parts[0]
    for part in parts[1:]:
        total = total.merge(part)
    return total


def _symmetric(values: np.ndarray, d: int) -> np.ndarray:
    out = np.zeros((d, d))
    iu = np.triu_indices(d)
    out[iu] = values
    out[(iu[1], iu[0])] = values
    return out


def estimate_kernels(
    template, inputs, samples, ntk: bool = True, k0: bool = False, workers: int = 1, covariance: bool = False
):
    """One pass over ``samples`` producing any of the NTK Gram, K0 Gram and means.

    Returns a dict with keys ``"ntk"`` and ``"k0"`` (:class:`GramEstimate`) and
    ``"mean_f"`` (list of :class:`KernelEstimate`), for whatever was requested.
    All quantities share the same angle samples. With ``covariance=True``
    the key ``"ntk_covariance"`` holds the sample covariance of the
    per-sample NTK entries, ordered as ``numpy.triu_indices(d)``.
    """
    inputs = list(inputs)
    if not inputs:
        raise ValueError("need at least one input")
    d = len(inputs)
    mom = _accumulate(template, inputs, samples, ntk, k0, workers, covariance)
    var = mom.variance
    se = np.sqrt(var / mom.count)
    n_tri = d * (d + 1) // 2
    out = {}
    offset = 0
    if ntk:
        out["ntk"] = GramEstimate(
            _symmetric(mom.mean[:n_tri], d), mom.count, _symmetric(se[:n_tri], d), samples.seed
        )
        offset = n_tri
        if covariance:
            out["ntk_covariance"] = mom.covariance
    if k0:
        out["k0"] = GramEstimate(
            _symmetric(mom.mean[offset:offset + n_tri], d),
            mom.count,
            _symmetric(se[offset:offset + n_tri], d),
            samples.seed,
        )
        offset += n_tri
        out["mean_f"] = [
            KernelEstimate(float(mom.mean[offset + i]), mom.count, float(var[offset + i]),
                           float(se[offset + i]), samples.seed)
            for i in range(d)
        ]
    return out


def estimate_gram(template, inputs, samples, workers: int = 1) -> GramEstimate:
    """Estimated NTK Gram matrix over ``inputs``; one gradient per input and sample."""
    return estimate_kernels(template, inputs, samples, ntk=True, workers=workers)["ntk"]


def _pair_estimate(gram: GramEstimate, samples, i: int, j: int) -> KernelEstimate:
    se = float(gram.std_errors[i, j])
    return KernelEstimate(float(gram.matrix[i, j]), gram.N, se * se * gram.N, se, samples.seed)


def estimate_ntk(template, x: str, x2: str, samples, workers: int = 1) -> KernelEstimate:
    """Mean of the empirical NTK over ``samples``."""
    if x == x2:
        return _pair_estimate(estimate_gram(template, [x], samples, workers), samples, 0, 0)
    return _pair_estimate(estimate_gram(template, [x, x2], samples, workers), samples, 0, 1)


def estimate_mean_f(template, x: str, samples, workers: int = 1) -> KernelEstimate:
    """Estimate of ``E_theta f_theta(x)``."""
    return estimate_kernels(template, [x], samples, ntk=False, k0=True, workers=workers)["mean_f"][0]


def estimate_k0(template, x: str, x2: str, samples, workers: int = 1) -> KernelEstimate:
    """Estimate of ``E_theta f_theta(x) f_theta(x')``."""
    inputs = [x] if x == x2 else [x, x2]
    gram = estimate_kernels(template, inputs, samples, ntk=False, k0=True, workers=workers)["k0"]
    return _pair_estimate(gram, samples, 0, len(inputs) - 1)


def mean_is_nonzero(estimate: KernelEstimate, z: float = 4.0, atol: float = 1e-12) -> bool:
    """Whether an estimated mean of ``f`` is significantly away from zero."""
    return abs(estimate.value) > z * estimate.std_error + atol


# ---------------------------------------------------------------------------
# sample sizes and tail bounds


def _check_eps_delta(epsilon: float, delta: float) -> None:
    if not epsilon > 0:
        raise PreconditionError(f"epsilon must be positive, got {epsilon}")
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0, 1), got {delta}")


def sample_size_ntk(epsilon: float, delta: float, L: int, m: int) -> int:
    """``ceil(8 L^2 m^2 / (3 eps^2) * ln(2/delta))`` samples for one kernel entry."""
    _check_eps_delta(epsilon, delta)
    if L < 1 or m < 1:
        raise PreconditionError("L and m must be at least 1")
    return math.ceil(8 * L**2 * m**2 / (3 * epsilon**2) * math.log(2 / delta))


def hyponew_bound(L: int, m: int, d_train: int, norm_y: float, norm_kinv: float) -> float:
    """Largest admissible accuracy ``(L/2) sqrt(d_train) m^2 |Y|_2 |K_train^-1|_op``."""
    return L / 2 * math.sqrt(d_train) * m**2 * norm_y * norm_kinv


def sample_size_mu(
    epsilon: float,
    delta: float,
    L: int,
    m: int,
    d_train: int,
    norm_kinv: float,
    norm_y: float,
    norm_kinv_y: float,
    feature_space_size: int = 1,
) -> int:
    """Samples for the trained mean to be within ``epsilon`` w.p. ``1 - delta``.

    ``norm_kinv`` is the operator norm of the inverse training Gram matrix,
    ``norm_y`` and ``norm_kinv_y`` are Euclidean norms. With
    ``feature_space_size > 1`` the guarantee holds uniformly over that many
    inputs (``delta`` is split across them).
    """
    _check_eps_delta(epsilon, delta)
    if min(L, m, d_train, feature_space_size) < 1:
        raise PreconditionError("L, m, d_train and feature_space_size must be at least 1")
    if min(norm_kinv, norm_y, norm_kinv_y) <= 0:
        raise PreconditionError("norms must be positive")
    bound = hyponew_bound(L, m, d_train, norm_y, norm_kinv)
    if not epsilon < bound:
        raise PreconditionError(
            f"epsilon={epsilon} violates 0 < epsilon < (L/2) sqrt(d_train) m^2 |Y|_2 |K_train^-1|_op = {bound}"
        )
    X = feature_space_size
    R = 2 * L * math.sqrt(d_train) * m**2 * norm_kinv_y
    first = (24 * R**2 + 4 * R * epsilon) / (3 * epsilon**2) * math.log(2 * X * (1 + d_train) / delta)
    second = (
        2 * (1 + math.sqrt(2)) ** 4 * L**4 * d_train**3 * m**8 * norm_kinv**4 * norm_y**2
        / (3 * epsilon**2)
        * math.log(4 * X * d_train / delta)
    )
    return math.ceil(first + second)


def bernstein_tail(t: float, N: int, R: float, nu: float, d1: int, d2: int) -> float:
    """Matrix Bernstein bound on ``P(|mean of N summands|_op >= t)``.

    Summands are i.i.d. ``d1 x d2``, centred, with ``|X_k|_op <= R`` and
    per-summand variance statistic ``nu``. The result is clamped to [0, 1].
    """
    if t < 0 or N < 1 or R <= 0 or nu < 0 or d1 < 1 or d2 < 1:
        raise ValueError("need t >= 0, N >= 1, R > 0, nu >= 0 and positive dimensions")
    if t == 0:
        return 1.0
    value = (d1 + d2) * math.exp(-(N * t * t / 2) / (nu + R * t / 3))
    return min(1.0, max(0.0, value))


def gram_bernstein_parameters(L: int, d_train: int, f_sup: float) -> tuple[float, float]:
    """``(R, nu)`` for the centred per-sample Gram summands.

    Each summand is bounded by ``L d_train |f|_inf^2`` in operator norm, and
    the variance statistic by its square.
    """
    R = L * d_train * f_sup**2
    return R, R * R


def gram_deviation_bound(t: float, N: int, L: int, d_train: int, f_sup: float) -> float:
    """``2 d exp(-3 N t^2 / (8 L^2 d^2 |f|^4))`` for ``0 < t <= |f|_inf^2``, clamped to 1."""
    if not 0 < t <= f_sup**2:
        raise ValueError(f"t must lie in (0, |f|_inf^2 = {f_sup**2}]")
    value = 2 * d_train * math.exp(-3 * N * t * t / (8 * L**2 * d_train**2 * f_sup**4))
    return min(1.0, value)
