"""Clifford unitaries as binary tableaux, in the Heisenberg picture.

A tableau stores, for each hermitian generator ``tau_{e_k}`` (``Z_0 ..
Z_{n-1}`` then ``X_0 .. X_{n-1}``), its image ``i**d_k (-1)**h_k tau_{c_k}``
under ``H -> Q H Q^dagger``. The Clifford ``Q`` is thereby fixed up to a
global phase, which is all a conjugation needs.

Images of arbitrary elements follow from the generator images:

    b2 = C b1
    delta2 = delta1 + d.b1
    eps2 = eps1 + h.b1 + b1^T lows(C^T U C + d d^T) b1 + delta1 d.b1

with ``lows`` the strictly lower triangular part. The matrix under
``lows`` is built once per tableau.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
import math

import numpy as np

from .pauli import (
    PauliArray,
    PauliElement,
    commutes,
    hermitian_from_bits,
    int_to_words,
    is_hermitian,
    n_words,
    parity,
    parity_rows,
    pauli_mul,
    times_i,
)

__all__ = [
    "DiscreteAngle",
    "CliffordTableau",
    "from_images",
    "conjugate",
    "compose",
    "compose_local",
    "inverse",
    "identity",
    "hadamard",
    "phase_s",
    "cnot",
    "cz",
    "swap",
    "pauli_gate",
    "rotation_conjugate",
    "is_symplectic",
    "conjugate_array",
    "rotation_conjugate_array",
]


class DiscreteAngle(IntEnum):
    """Rotation angles at which a Pauli rotation is Clifford, in units of pi/2."""

    ZERO = 0
    HALF_PI = 1
    PI = 2
    THREE_HALVES_PI = 3

    @property
    def radians(self) -> float:
        return self.value * math.pi / 2


@dataclass(frozen=True)
class CliffordTableau:
    """Clifford unitary up to global phase.

    ``columns[k]`` is ``c_k`` as a 2n-bit integer (Z-part in the low ``n``
    bits); ``d`` and ``h`` are 2n-bit masks with bit ``k`` holding
    ``d_k``/``h_k``.
    """

    n: int
    columns: tuple[int, ...]
    d: int
    h: int

    def __post_init__(self):
        if len(self.columns) != 2 * self.n:
            raise ValueError(f"expected {2 * self.n} columns, got {len(self.columns)}")

    def image(self, k: int) -> PauliElement:
        """Image of the ``k``-th hermitian generator."""
        return PauliElement.from_a(self.n, self.columns[k], (self.d >> k) & 1, (self.h >> k) & 1)

    def matrix(self) -> np.ndarray:
        """The 2n x 2n binary matrix C (column k = c_k)."""
        size = 2 * self.n
        out = np.zeros((size, size), dtype=np.uint8)
        for k, col in enumerate(self.columns):
            for r in range(size):
                out[r, k] = (col >> r) & 1
        return out

    @cached_property
    def lows(self) -> tuple[int, ...]:
        """Rows of lows(C^T U C + d d^T) as bit masks over generator index."""
        n = self.n
        low = (1 << n) - 1
        rows = []
        for k, ck in enumerate(self.columns):
            row = 0
            zk = ck & low
            dk = (self.d >> k) & 1
            for j in range(k):
                cj = self.columns[j]
                bit = parity(zk & (cj >> n)) ^ (dk & (self.d >> j) & 1)
                row |= bit << j
            rows.append(row)
        return tuple(rows)

    @cached_property
    def packed(self) -> "_PackedTableau":
        return _PackedTableau.build(self)

    def __matmul__(self, other: "CliffordTableau") -> "CliffordTableau":
        return compose(self, other)


def _check_same_n(a, b) -> None:
    if a.n != b.n:
        raise ValueError(f"qubit count mismatch: {a.n} != {b.n}")


def _generator_a(n: int, k: int) -> int:
    return 1 << k


def _pack_images(n: int, images) -> CliffordTableau:
    d = h = 0
    for k, img in enumerate(images):
        d |= img.delta << k
        h |= img.epsilon << k
    return CliffordTableau(n, tuple(img.a for img in images), d, h)


def from_images(n: int, images) -> CliffordTableau:
    """Tableau from the images of ``Z_0..Z_{n-1}, X_0..X_{n-1}``.

    Images must be hermitian and must reproduce the generators' commutation
    relations, otherwise no Clifford unitary realises them.
    """
    images = list(images)
    if len(images) != 2 * n:
        raise ValueError(f"need {2 * n} generator images, got {len(images)}")
    d = h = 0
    for k, img in enumerate(images):
        if img.n != n:
            raise ValueError("image acts on the wrong number of qubits")
        if not is_hermitian(img):
            raise ValueError(f"image of generator {k} is not hermitian")
        d |= img.delta << k
        h |= img.epsilon << k
    t = CliffordTableau(n, tuple(img.a for img in images), d, h)
    if not is_symplectic(t):
        raise ValueError("generator images do not preserve commutation relations")
    return t


def is_symplectic(t: CliffordTableau) -> bool:
    """Check C^T J C = J, i.e. images commute exactly like the generators."""
    n = t.n
    imgs = [t.image(k) for k in range(2 * n)]
    for j in range(2 * n):
        for k in range(j + 1, 2 * n):
            expected = abs(j - k) != n
            if commutes(imgs[j], imgs[k]) != expected:
                return False
    return all(
        t.d >> k & 1 == parity(imgs[k].z & imgs[k].x) for k in range(2 * n)
    )


def conjugate(t: CliffordTableau, p: PauliElement) -> PauliElement:
    """Image ``Q p Q^dagger`` of ``p`` under the tableau's Clifford."""
    _check_same_n(t, p)
    b = p.a
    cols = t.columns
    lows = t.lows
    b2 = 0
    quad = 0
    rest = b
    while rest:
        low = rest & -rest
        k = low.bit_length() - 1
        b2 ^= cols[k]
        quad ^= (lows[k] & b).bit_count()
        rest ^= low
    db = parity(t.d & b)
    eps = p.epsilon ^ parity(t.h & b) ^ (quad & 1) ^ (p.delta & db)
    return PauliElement.from_a(t.n, b2, p.delta ^ db, eps)


def compose(outer: CliffordTableau, inner: CliffordTableau) -> CliffordTableau:
    """Tableau of ``outer . inner`` (``inner`` acts first on states)."""
    _check_same_n(outer, inner)
    images = [conjugate(outer, inner.image(k)) for k in range(2 * inner.n)]
    return from_images(inner.n, images)


def compose_local(local: CliffordTableau, qubits, inner: CliffordTableau) -> CliffordTableau:
    """:func:`compose` for a gate that acts only on ``qubits``.

    ``local`` is the gate's tableau on ``len(qubits)`` qubits, with local
    qubit ``j`` standing for ``qubits[j]``. Each image of ``inner`` splits as
    ``tau_(a on qubits) tau_(rest)`` with no phase and only the first factor
    moves, so the cost per image is independent of ``n``.
    """
    n = inner.n
    if local.n != len(qubits):
        raise ValueError(f"local tableau acts on {local.n} qubits, {len(qubits)} given")
    _check_qubits(n, *qubits)
    mask = 0
    for q in qubits:
        mask |= 1 << q
    rest_mask = ((1 << n) - 1) ^ mask
    columns, d, h = [], 0, 0
    for k in range(2 * n):
        p = inner.image(k)
        lz = lx = 0
        for j, q in enumerate(qubits):
            lz |= ((p.z >> q) & 1) << j
            lx |= ((p.x >> q) & 1) << j
        core = conjugate(local, PauliElement(local.n, 0, 0, lz, lx))
        z, x = p.z & rest_mask, p.x & rest_mask
        for j, q in enumerate(qubits):
            z |= ((core.z >> j) & 1) << q
            x |= ((core.x >> j) & 1) << q
        columns.append(z | (x << n))
        d |= (p.delta ^ core.delta) << k
        h |= (p.epsilon ^ core.epsilon ^ (p.delta & core.delta)) << k
    return CliffordTableau(n, tuple(columns), d, h)


def inverse(t: CliffordTableau) -> CliffordTableau:
    """Tableau of ``Q^dagger``; uses C^{-1} = J C^T J over F2."""
    n = t.n
    size = 2 * n
    images = []
    for k in range(size):
        # column k of J C^T J is row (k +- n) of C, with halves swapped
        r = (k + n) % size
        row = 0
        for j, col in enumerate(t.columns):
            row |= ((col >> r) & 1) << j
        b = ((row >> n) | (row << n)) & ((1 << size) - 1)
        candidate = hermitian_from_bits(n, b & ((1 << n) - 1), b >> n)
        back = conjugate(t, candidate)
        if back.a != 1 << k or back.delta:
            raise ValueError("tableau is not symplectic; no inverse exists")
        images.append(-candidate if back.epsilon else candidate)
    return from_images(n, images)


def identity(n: int) -> CliffordTableau:
    return CliffordTableau(n, tuple(1 << k for k in range(2 * n)), 0, 0)


def _generators(n: int):
    return [hermitian_from_bits(n, 1 << j, 0) for j in range(n)] + [
        hermitian_from_bits(n, 0, 1 << j) for j in range(n)
    ]


def _check_qubits(n: int, *qubits: int) -> None:
    for q in qubits:
        if not 0 <= q < n:
            raise ValueError(f"qubit index {q} out of range for {n} qubits")
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"repeated qubit index in {qubits}")


def _z(n, q):
    return hermitian_from_bits(n, 1 << q, 0)


def _x(n, q):
    return hermitian_from_bits(n, 0, 1 << q)


def hadamard(n: int, q: int) -> CliffordTableau:
    _check_qubits(n, q)
    images = _generators(n)
    images[q], images[n + q] = _x(n, q), _z(n, q)
    return _pack_images(n, images)


def phase_s(n: int, q: int) -> CliffordTableau:
    """S = diag(1, i): X -> Y, Z -> Z."""
    _check_qubits(n, q)
    images = _generators(n)
    images[n + q] = hermitian_from_bits(n, 1 << q, 1 << q)
    return _pack_images(n, images)


def cnot(n: int, control: int, target: int) -> CliffordTableau:
    _check_qubits(n, control, target)
    images = _generators(n)
    images[n + control] = hermitian_from_bits(n, 0, (1 << control) | (1 << target))
    images[target] = hermitian_from_bits(n, (1 << control) | (1 << target), 0)
    return _pack_images(n, images)


def cz(n: int, a: int, b: int) -> CliffordTableau:
    _check_qubits(n, a, b)
    images = _generators(n)
    images[n + a] = hermitian_from_bits(n, 1 << b, 1 << a)
    images[n + b] = hermitian_from_bits(n, 1 << a, 1 << b)
    return _pack_images(n, images)


def swap(n: int, a: int, b: int) -> CliffordTableau:
    _check_qubits(n, a, b)
    images = _generators(n)
    images[a], images[b] = _z(n, b), _z(n, a)
    images[n + a], images[n + b] = _x(n, b), _x(n, a)
    return _pack_images(n, images)


def pauli_gate(p: PauliElement) -> CliffordTableau:
    """Conjugation by a Pauli operator: generators flip sign iff they anticommute."""
    images = [g if commutes(p, g) else -g for g in _generators(p.n)]
    return _pack_images(p.n, images)


def rotation_conjugate(P: PauliElement, theta: int, Q: PauliElement) -> PauliElement:
    """``exp(i theta/2 P) Q exp(-i theta/2 P)`` for ``theta = k pi/2``.

    Returns ``Q`` when ``P`` and ``Q`` commute, otherwise ``Q, iPQ, -Q, -iPQ``
    for ``k = 0, 1, 2, 3``.
    """
    if not is_hermitian(P):
        raise ValueError("rotation generator must be hermitian")
    k = int(theta) % 4
    if k == 0 or commutes(P, Q):
        return Q
    if k == 2:
        return -Q
    return times_i(pauli_mul(P, Q), k)


# ---------------------------------------------------------------------------
# batched kernels


@dataclass
class _PackedTableau:
    col_z: np.ndarray  # (2n, W)
    col_x: np.ndarray
    low_z: np.ndarray  # (2n, W)
    low_x: np.ndarray
    d_z: np.ndarray  # (W,)
    d_x: np.ndarray
    h_z: np.ndarray
    h_x: np.ndarray

    @classmethod
    def build(cls, t: CliffordTableau) -> "_PackedTableau":
        n, w = t.n, n_words(t.n)
        low = (1 << n) - 1

        def split(v):
            return int_to_words(v & low, w), int_to_words(v >> n, w)

        cols = [split(c) for c in t.columns]
        lows = [split(r) for r in t.lows]
        return cls(
            np.stack([c[0] for c in cols]),
            np.stack([c[1] for c in cols]),
            np.stack([r[0] for r in lows]),
            np.stack([r[1] for r in lows]),
            *split(t.d),
            *split(t.h),
        )


def _bit(words: np.ndarray, j: int) -> np.ndarray:
    return (words[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


def conjugate_array(t: CliffordTableau, arr: PauliArray) -> PauliArray:
    """Vectorised :func:`conjugate` over a batch."""
    _check_same_n(t, arr)
    pk = t.packed
    n = t.n
    zb, xb = arr.z, arr.x
    out_z = np.zeros_like(zb)
    out_x = np.zeros_like(xb)
    quad = np.zeros(len(arr), dtype=np.uint8)
    for k in range(2 * n):
        bit = _bit(zb, k) if k < n else _bit(xb, k - n)
        if not bit.any():
            continue
        out_z ^= bit[:, None] * pk.col_z[k]
        out_x ^= bit[:, None] * pk.col_x[k]
        if k:
            par = parity_rows((zb & pk.low_z[k]) ^ (xb & pk.low_x[k]))
            quad ^= par & bit.astype(np.uint8)
    db = parity_rows((zb & pk.d_z) ^ (xb & pk.d_x))
    hb = parity_rows((zb & pk.h_z) ^ (xb & pk.h_x))
    eps = arr.epsilon ^ hb ^ quad ^ (arr.delta & db)
    return PauliArray(n, arr.delta ^ db, eps, out_z, out_x)


def rotation_conjugate_array(P: PauliElement, theta: np.ndarray, arr: PauliArray) -> PauliArray:
    """Vectorised :func:`rotation_conjugate`; ``theta`` holds one angle index per row."""
    if not is_hermitian(P):
        raise ValueError("rotation generator must be hermitian")
    _check_same_n(P, arr)
    w = n_words(P.n)
    pz, px = int_to_words(P.z, w), int_to_words(P.x, w)
    k = np.asarray(theta, dtype=np.uint8) & 3
    anti = parity_rows((arr.z & px) ^ (arr.x & pz)).astype(bool)
    flip = anti & (k == 2)
    odd = anti & (k & 1).astype(bool)
    eps = arr.epsilon ^ flip.astype(np.uint8)
    if not odd.any():
        return PauliArray(arr.n, arr.delta, eps, arr.z, arr.x)
    # P * Q, then times i (k=1) or -i (k=3)
    pd = np.uint8(P.delta)
    m_delta = pd ^ arr.delta
    m_eps = np.uint8(P.epsilon) ^ arr.epsilon ^ (pd & arr.delta) ^ parity_rows(arr.z & px)
    r_delta = m_delta ^ 1
    r_eps = m_eps ^ m_delta ^ (k == 3).astype(np.uint8)
    delta = np.where(odd, r_delta, arr.delta)
    eps = np.where(odd, r_eps, eps)
    z = np.where(odd[:, None], arr.z ^ pz, arr.z)
    x = np.where(odd[:, None], arr.x ^ px, arr.x)
    return PauliArray(arr.n, delta, eps, z, x)
