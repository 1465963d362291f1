"""Brute-force ground truth for the stabilizer estimator.

Three independent routes:

* dense statevector evaluation of ``f_theta(x)`` at arbitrary real angles,
* exact NTK / mean / second moment by enumerating all of {0, pi/2, pi, 3pi/2}^L
  (on the scalar stabilizer path),
* continuous-uniform expectations by a P-point equispaced grid per angle on the
  statevector path. ``f`` and its parameter-shift gradient contain harmonics
  ``e^{i l theta}`` with ``|l| <= 2`` in every angle, which any grid with
  ``P >= 5`` integrates exactly without reference to the four-point result.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np

from .circuit import (
    CircuitTemplate,
    Gate,
    Layer,
    Observable,
    check_input,
    gradient,
    evaluate_model,
)
from .errors import CapExceededError, SingularGramError
from .pauli import PauliElement, from_pauli_string, hermitian_from_bits

__all__ = [
    "oracle_qubit_cap",
    "dense_pauli",
    "statevector",
    "statevector_model",
    "statevector_gradient",
    "finite_difference_gradient",
    "exact_ntk_enumeration",
    "exact_mean_enumeration",
    "exact_k0_enumeration",
    "exact_ntk_quadrature",
    "exact_mean_quadrature",
    "exact_k0_quadrature",
    "exact_kernel_matrices",
    "exact_mu_infinity",
    "random_template",
    "random_input",
    "template_family",
    "ENUMERATION_CAP",
    "QUADRATURE_CAP",
]

ENUMERATION_CAP = 4 ** 8
QUADRATURE_CAP = 2 ** 20
_CHUNK = 4096

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_S = np.diag([1, 1j])
_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_CZ = np.diag([1, 1, 1, -1]).astype(complex)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
_ONE_QUBIT = {"h": _H, "s": _S, "x": _X, "y": _Y, "z": _Z}
_TWO_QUBIT = {"cnot": _CNOT, "cz": _CZ, "swap": _SWAP}


def oracle_qubit_cap() -> int:
    return int(os.environ.get("QNTK_ORACLE_CAP_N", "10"))


def _check_n(n: int) -> None:
    cap = oracle_qubit_cap()
    if n > cap:
        raise CapExceededError(f"{n} qubits exceeds the oracle cap of {cap} (QNTK_ORACLE_CAP_N)")


def dense_pauli(p: PauliElement) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of ``i**delta (-1)**epsilon tau_a``.

    Qubit 0 is the leftmost Kronecker factor.
    """
    mat = np.array([[1.0 + 0j]])
    for j in range(p.n):
        f = _I2
        if (p.z >> j) & 1:
            f = _Z @ (_X if (p.x >> j) & 1 else _I2)
        elif (p.x >> j) & 1:
            f = _X
        mat = np.kron(mat, f)
    return (1j ** p.delta) * (-1) ** p.epsilon * mat


# ---------------------------------------------------------------------------
# batched state manipulation; states have shape (B, 2, ..., 2)


def _apply_1q(state: np.ndarray, u: np.ndarray, q: int) -> np.ndarray:
    out = np.tensordot(u, state, axes=([1], [q + 1]))
    return np.moveaxis(out, 0, q + 1)


def _apply_2q(state: np.ndarray, u: np.ndarray, q1: int, q2: int) -> np.ndarray:
    out = np.tensordot(u.reshape(2, 2, 2, 2), state, axes=([2, 3], [q1 + 1, q2 + 1]))
    return np.moveaxis(out, [0, 1], [q1 + 1, q2 + 1])


def _apply_pauli(state: np.ndarray, p: PauliElement) -> np.ndarray:
    for j in range(p.n):
        if (p.x >> j) & 1:
            state = _apply_1q(state, _X, j)
        if (p.z >> j) & 1:
            state = _apply_1q(state, _Z, j)
    return (1j ** p.delta) * (-1) ** p.epsilon * state


def _dense_from_images(n: int, images: list[PauliElement]) -> np.ndarray:
    """A unitary ``U`` with ``U tau_{e_k} U^dagger = images[k]`` (up to phase).

    Uses sum_b U tau_b U^dagger A tau_b^dagger = 2^n tr(U^dagger A) U.
    """
    if n > 5:
        raise CapExceededError("dense synthesis of tableau gates is limited to 5 qubits")
    dim = 2 ** n
    gens = [dense_pauli(hermitian_from_bits(n, 1 << j, 0)) for j in range(n)]
    gens += [dense_pauli(hermitian_from_bits(n, 0, 1 << j)) for j in range(n)]
    imgs = [dense_pauli(p) for p in images]
    rng = np.random.default_rng(12345)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    acc = np.zeros((dim, dim), dtype=complex)
    for bits in itertools.product((0, 1), repeat=2 * n):
        tau = np.eye(dim, dtype=complex)
        img = np.eye(dim, dtype=complex)
        for k, b in enumerate(bits):
            if b:
                tau = tau @ gens[k]
                img = img @ imgs[k]
        acc += img @ a @ tau.conj().T
    scale = math.sqrt(abs((acc @ acc.conj().T)[0, 0]))
    return acc / scale


def _apply_gate(state: np.ndarray, gate: Gate, n: int) -> np.ndarray:
    name = gate.name
    if name in _ONE_QUBIT:
        return _apply_1q(state, _ONE_QUBIT[name], gate.qubits[0])
    if name in _TWO_QUBIT:
        return _apply_2q(state, _TWO_QUBIT[name], *gate.qubits)
    if name == "pauli":
        return _apply_pauli(state, from_pauli_string(gate.pauli))
    u = _dense_from_images(n, [from_pauli_string(s) for s in gate.images])
    rows = state.shape[0]
    return (state.reshape(rows, -1) @ u.T).reshape(state.shape)


def _check_norm(state: np.ndarray) -> None:
    norms = np.sum(np.abs(state.reshape(state.shape[0], -1)) ** 2, axis=1)
    if np.max(np.abs(norms - 1.0)) > 1e-12:
        raise AssertionError(f"state norm drifted by {np.max(np.abs(norms - 1.0)):.3e}")


def _apply_layer(state, layer: Layer, x: str, n: int):
    for g in layer.gates:
        if g.active(x):
            state = _apply_gate(state, g, n)
            _check_norm(state)
    return state


def statevector(template: CircuitTemplate, x: str, theta) -> np.ndarray:
    """Output states ``U_{x,theta}|0^n>`` for each row of ``theta`` (radians).

    Returns an array of shape ``(B, 2**n)``.
    """
    n = template.n
    _check_n(n)
    check_input(template, x)
    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    if theta.shape[1] != template.L:
        raise ValueError(f"expected {template.L} angles per row")
    rows = theta.shape[0]
    state = np.zeros((rows,) + (2,) * n, dtype=complex)
    state[(slice(None),) + (0,) * n] = 1.0
    state = _apply_layer(state, template.layers[0], x, n)
    bshape = (rows,) + (1,) * n
    for ell, p in enumerate(template.generators):
        half = theta[:, ell] / 2
        rotated = _apply_pauli(state, p)
        state = np.cos(half).reshape(bshape) * state - 1j * np.sin(half).reshape(bshape) * rotated
        _check_norm(state)
        state = _apply_layer(state, template.layers[ell + 1], x, n)
    return state.reshape(rows, -1)


def _expectation(template: CircuitTemplate, states: np.ndarray) -> np.ndarray:
    n = template.n
    rows = states.shape[0]
    shaped = states.reshape((rows,) + (2,) * n)
    total = np.zeros(rows, dtype=complex)
    for c, p in template.observable.terms:
        applied = _apply_pauli(shaped, p).reshape(rows, -1)
        total += c * np.einsum("bi,bi->b", states.conj(), applied)
    if np.max(np.abs(total.imag), initial=0.0) > 1e-10:
        raise AssertionError("observable expectation has a non-negligible imaginary part")
    return total.real


def statevector_model(template: CircuitTemplate, x: str, theta):
    """``f_theta(x)`` by direct state evolution; scalar for 1-D ``theta``."""
    theta = np.asarray(theta, dtype=float)
    values = _expectation(template, statevector(template, x, theta))
    return float(values[0]) if theta.ndim == 1 else values


def statevector_gradient(template: CircuitTemplate, x: str, theta) -> np.ndarray:
    """Parameter-shift gradient at real angles, shape ``(B, L)`` (or ``(L,)``)."""
    theta = np.asarray(theta, dtype=float)
    rows = np.atleast_2d(theta)
    B, L = rows.shape
    shift = (math.pi / 2) * np.eye(L)
    stacked = np.concatenate([
        (rows[:, None, :] + shift[None]).reshape(-1, L),
        (rows[:, None, :] - shift[None]).reshape(-1, L),
    ])
    values = _expectation(template, statevector(template, x, stacked))
    plus, minus = values[: B * L].reshape(B, L), values[B * L:].reshape(B, L)
    grad = 0.5 * (plus - minus)
    return grad[0] if theta.ndim == 1 else grad


def finite_difference_gradient(template: CircuitTemplate, x: str, theta, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(theta + h e_i) - f(theta - h e_i)) / 2h``."""
    theta = np.asarray(theta, dtype=float)
    L = theta.shape[0]
    shift = h * np.eye(L)
    values = _expectation(
        template, statevector(template, x, np.concatenate([theta + shift, theta - shift]))
    )
    return (values[:L] - values[L:]) / (2 * h)


# ---------------------------------------------------------------------------
# exact expectations


def _check_enumeration(L: int, cap: int) -> None:
    if 4 ** L > cap:
        raise CapExceededError(f"4^{L} angle combinations exceed the enumeration cap {cap}")


def exact_ntk_enumeration(template: CircuitTemplate, x: str, x2: str, cap: int = ENUMERATION_CAP) -> float:
    """Mean of the empirical NTK over all of {0, pi/2, pi, 3pi/2}^L."""
    L = template.L
    _check_enumeration(L, cap)
    terms = []
    for theta in itertools.product(range(4), repeat=L):
        g1 = gradient(template, x, theta)
        g2 = g1 if x2 == x else gradient(template, x2, theta)
        terms.extend((g1 * g2).tolist())
    return math.fsum(terms) / 4 ** L


def exact_mean_enumeration(template: CircuitTemplate, x: str, cap: int = ENUMERATION_CAP) -> float:
    _check_enumeration(template.L, cap)
    values = [evaluate_model(template, x, th) for th in itertools.product(range(4), repeat=template.L)]
    return math.fsum(values) / 4 ** template.L


def exact_k0_enumeration(template: CircuitTemplate, x: str, x2: str, cap: int = ENUMERATION_CAP) -> float:
    _check_enumeration(template.L, cap)
    values = []
    for th in itertools.product(range(4), repeat=template.L):
        values.append(evaluate_model(template, x, th) * evaluate_model(template, x2, th))
    return math.fsum(values) / 4 ** template.L


def _grid_chunks(L: int, points: int, cap: int):
    if points < 5:
        raise ValueError("quadrature needs at least 5 points per angle")
    if points ** L > cap:
        raise CapExceededError(f"{points}^{L} grid points exceed the quadrature cap {cap}")
    angles = 2 * math.pi * np.arange(points) / points
    total = points ** L
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        digits = np.stack([(idx // points ** (L - 1 - j)) % points for j in range(L)], axis=1)
        yield angles[digits]


def exact_ntk_quadrature(
    template: CircuitTemplate, x: str, x2: str, points: int = 8, cap: int = QUADRATURE_CAP
) -> float:
    """Continuous-uniform NTK from a ``points``-per-angle equispaced grid."""
    terms = []
    for grid in _grid_chunks(template.L, points, cap):
        g1 = statevector_gradient(template, x, grid)
        g2 = g1 if x2 == x else statevector_gradient(template, x2, grid)
        terms.extend((g1 * g2).ravel().tolist())
    return math.fsum(terms) / points ** template.L


def exact_mean_quadrature(template: CircuitTemplate, x: str, points: int = 8, cap: int = QUADRATURE_CAP) -> float:
    terms = []
    for grid in _grid_chunks(template.L, points, cap):
        terms.extend(statevector_model(template, x, grid).tolist())
    return math.fsum(terms) / points ** template.L


def exact_k0_quadrature(
    template: CircuitTemplate, x: str, x2: str, points: int = 8, cap: int = QUADRATURE_CAP
) -> float:
    terms = []
    for grid in _grid_chunks(template.L, points, cap):
        f1 = statevector_model(template, x, grid)
        f2 = f1 if x2 == x else statevector_model(template, x2, grid)
        terms.extend((f1 * f2).tolist())
    return math.fsum(terms) / points ** template.L


def exact_kernel_matrices(template: CircuitTemplate, inputs, k0: bool = False, cap: int = ENUMERATION_CAP):
    """Enumeration-exact NTK (and optionally K0) matrices over ``inputs``.

    Returns ``(ntk, k0_matrix_or_None)``; both are symmetric ``d x d`` arrays.
    """
    inputs = list(inputs)
    L = template.L
    _check_enumeration(L, cap)
    d = len(inputs)
    ntk_terms = [[[] for _ in range(d)] for _ in range(d)]
    k0_terms = [[[] for _ in range(d)] for _ in range(d)]
    for theta in itertools.product(range(4), repeat=L):
        grads = [gradient(template, x, theta) for x in inputs]
        fs = [evaluate_model(template, x, theta) for x in inputs] if k0 else None
        for i in range(d):
            for j in range(i, d):
                ntk_terms[i][j].extend((grads[i] * grads[j]).tolist())
                if k0:
                    k0_terms[i][j].append(fs[i] * fs[j])
    ntk = np.zeros((d, d))
    k0m = np.zeros((d, d)) if k0 else None
    for i in range(d):
        for j in range(i, d):
            ntk[i, j] = ntk[j, i] = math.fsum(ntk_terms[i][j]) / 4 ** L
            if k0:
                k0m[i, j] = k0m[j, i] = math.fsum(k0_terms[i][j]) / 4 ** L
    return ntk, k0m


def exact_mu_infinity(template: CircuitTemplate, query: str, training) -> float:
    """``K(x, X_train) K_train^{-1} Y`` with enumeration-exact kernels.

    ``training`` is any object with ``inputs`` and ``labels`` attributes.
    """
    inputs = list(training.inputs)
    labels = np.asarray(training.labels, dtype=float)
    ntk, _ = exact_kernel_matrices(template, inputs + [query])
    d = len(inputs)
    k_train = ntk[:d, :d]
    eig = np.linalg.eigvalsh(k_train)
    if eig[0] <= 1e-12 * max(eig[-1], 1e-300):
        raise SingularGramError(
            "exact training Gram matrix is singular; the instance violates the invertibility assumption"
        )
    return float(ntk[d, :d] @ np.linalg.solve(k_train, labels))


# ---------------------------------------------------------------------------
# random templates

_RANDOM_GATES = ("h", "s", "cnot", "cz", "swap", "x", "y", "z")


def _random_pauli(rng, n: int, allow_identity: bool) -> str:
    while True:
        letters = "".join(rng.choice(list("IXYZ"), size=n))
        if allow_identity or set(letters) != {"I"}:
            return letters


def random_template(
    rng,
    n: int,
    L: int,
    m: int,
    width: int | None = None,
    input_bits: int = 0,
    guard_prob: float = 0.3,
) -> CircuitTemplate:
    """Seed-deterministic random template.

    Layer gates are drawn uniformly from H, S, CNOT, CZ, SWAP, X, Y, Z; with
    ``input_bits > 0`` each gate is guarded by a random input bit with
    probability ``guard_prob``. Generators are random non-identity Pauli
    strings with random sign; observable coefficients are uniform on [-1, 1].
    """
    rng = np.random.default_rng(rng)
    width = 2 * n if width is None else width
    gates_1q = ("h", "s", "x", "y", "z")
    layers = []
    for _ in range(L + 1):
        gates = []
        for _ in range(width):
            name = str(rng.choice(_RANDOM_GATES if n > 1 else gates_1q))
            if name in ("cnot", "cz", "swap"):
                qubits = tuple(int(q) for q in rng.choice(n, size=2, replace=False))
            else:
                qubits = (int(rng.integers(n)),)
            guard = None
            if input_bits and rng.random() < guard_prob:
                guard = int(rng.integers(input_bits))
            gates.append(Gate(name, qubits, if_bit=guard))
        layers.append(Layer(tuple(gates)))
    generators = []
    for _ in range(L):
        p = from_pauli_string(_random_pauli(rng, n, False))
        generators.append(-p if rng.random() < 0.5 else p)
    terms = tuple(
        (float(rng.uniform(-1, 1)), from_pauli_string(_random_pauli(rng, n, True))) for _ in range(m)
    )
    return CircuitTemplate(
        n, tuple(layers), tuple(generators), Observable(terms), input_bits if input_bits else None
    )


def random_input(rng, template: CircuitTemplate) -> str:
    bits = template.input_bits or 0
    return "".join(str(int(b)) for b in np.random.default_rng(rng).integers(0, 2, size=bits))


def template_family(seed: int, count: int, max_n: int, max_L: int, max_m: int, input_bits: int = 2):
    """``count`` random templates with sizes drawn up to the given maxima.

    Yields ``(template, x, x2)`` with two random inputs per template. The
    stream depends only on ``seed``.
    """
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(1, max_n + 1))
        L = int(rng.integers(1, max_L + 1))
        m = int(rng.integers(1, max_m + 1))
        t = random_template(rng, n, L, m, input_bits=input_bits)
        yield t, random_input(rng, t), random_input(rng, t)
