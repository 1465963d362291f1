"""Exact arithmetic in the n-qubit Pauli group.

Every element is written as ``i**delta * (-1)**epsilon * tau_a`` where
``a = (z | x)`` is a length-2n bit vector and

    tau_a = Z**z_0 X**x_0  (x)  ...  (x)  Z**z_{n-1} X**x_{n-1}.

Note that ``tau`` of a qubit with ``z = x = 1`` is ``ZX = iY``, not ``Y``.
The Z-part and X-part are stored as Python integers used as bit vectors
(bit ``j`` belongs to qubit ``j``), so XOR is addition over F2 and
``int.bit_count`` of an AND is an inner product. Qubit ``j`` is the
``j``-th character of the string form.

:class:`PauliArray` holds a batch of elements with the bit vectors packed
into ``uint64`` words, for the vectorised estimator path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "PauliElement",
    "PauliArray",
    "pauli_mul",
    "commutes",
    "is_hermitian",
    "expectation_zero_state",
    "from_pauli_string",
    "to_string",
    "identity",
    "times_i",
    "hermitian_from_bits",
    "parity",
]

_WORD = 64
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class PauliElement:
    """Signed n-qubit Pauli operator ``i**delta (-1)**epsilon tau_(z|x)``."""

    n: int
    delta: int
    epsilon: int
    z: int
    x: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"qubit count must be positive, got {self.n}")
        if self.delta not in (0, 1) or self.epsilon not in (0, 1):
            raise ValueError("phase bits must be 0 or 1")
        limit = 1 << self.n
        if not (0 <= self.z < limit and 0 <= self.x < limit):
            raise ValueError(f"bit vectors do not fit in {self.n} qubits")

    @property
    def a(self) -> int:
        """The 2n-bit vector ``(z | x)`` as one integer (z in the low bits)."""
        return self.z | (self.x << self.n)

    @classmethod
    def from_a(cls, n: int, a: int, delta: int = 0, epsilon: int = 0) -> "PauliElement":
        low = (1 << n) - 1
        return cls(n, delta, epsilon, a & low, a >> n)

    @property
    def weight(self) -> int:
        return (self.z | self.x).bit_count()

    def __mul__(self, other: "PauliElement") -> "PauliElement":
        return pauli_mul(self, other)

    def __neg__(self) -> "PauliElement":
        return PauliElement(self.n, self.delta, self.epsilon ^ 1, self.z, self.x)

    def __str__(self) -> str:
        return to_string(self)


def parity(v: int) -> int:
    return v.bit_count() & 1


def _check_same_n(p: PauliElement, q: PauliElement) -> None:
    if p.n != q.n:
        raise ValueError(f"qubit count mismatch: {p.n} != {q.n}")


def identity(n: int) -> PauliElement:
    return PauliElement(n, 0, 0, 0, 0)


def pauli_mul(p: PauliElement, q: PauliElement) -> PauliElement:
    """Group product ``p * q``.

    ``delta = d1 + d2``, ``epsilon = e1 + e2 + d1 d2 + v2.w1`` and
    ``a = a1 + a2``, all mod 2, where ``v2.w1`` counts the Z's of ``q`` that
    have to move past X's of ``p`` on the same qubit.
    """
    _check_same_n(p, q)
    return PauliElement(
        p.n,
        p.delta ^ q.delta,
        p.epsilon ^ q.epsilon ^ (p.delta & q.delta) ^ parity(q.z & p.x),
        p.z ^ q.z,
        p.x ^ q.x,
    )


def times_i(p: PauliElement, k: int = 1) -> PauliElement:
    """Multiply ``p`` by ``i**k``."""
    delta, epsilon = p.delta, p.epsilon
    for _ in range(k % 4):
        delta, epsilon = delta ^ 1, epsilon ^ delta
    return PauliElement(p.n, delta, epsilon, p.z, p.x)


def commutes(p: PauliElement, q: PauliElement) -> bool:
    """True iff the symplectic form ``z_p.x_q + x_p.z_q`` vanishes mod 2."""
    _check_same_n(p, q)
    return parity((p.z & q.x) ^ (p.x & q.z)) == 0


def is_hermitian(p: PauliElement) -> bool:
    # tau_a^dagger = (-1)^(z.x) tau_a, so self-adjointness forces delta = z.x
    return p.delta == parity(p.z & p.x)


def hermitian_from_bits(n: int, z: int, x: int, negative: bool = False) -> PauliElement:
    """``+-`` the Pauli string (in sigma matrices) with support ``(z | x)``.

    A qubit with both bits set carries sigma_2, so ``(1, 1)`` gives ``+Y``.
    """
    phase = (3 * (z & x).bit_count() + (2 if negative else 0)) % 4
    return PauliElement(n, phase & 1, phase >> 1, z, x)


def expectation_zero_state(p: PauliElement) -> int:
    """``<0^n| p |0^n>`` for a hermitian ``p``; one of -1, 0, +1."""
    if not is_hermitian(p):
        raise ValueError(f"expectation requested for non-hermitian element {p!r}")
    if p.x:
        return 0
    return -1 if p.epsilon else 1


_LETTER_BITS = {"I": (0, 0), "X": (0, 1), "Z": (1, 0), "Y": (1, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}


def from_pauli_string(s: str, sign: int = 1, imaginary: int = 0) -> PauliElement:
    """Parse text such as ``"XIZY"``, ``"-ZZ"`` or ``"+iXY"``.

    Letters denote the usual (self-adjoint) Pauli matrices, so ``"Y"`` is
    sigma_2. An optional ``+``/``-`` prefix and ``i`` multiply the result,
    on top of the ``sign`` and ``imaginary`` arguments.
    """
    text = s.strip()
    if text[:1] in ("+", "-", "−"):
        if text[0] != "+":
            sign = -sign
        text = text[1:]
    if text[:1] == "i":
        imaginary ^= 1
        text = text[1:]
    if not text:
        raise ValueError(f"empty Pauli string: {s!r}")
    if sign not in (1, -1) or imaginary not in (0, 1):
        raise ValueError("sign must be +-1 and imaginary must be 0 or 1")
    z = x = 0
    for j, ch in enumerate(text):
        try:
            zb, xb = _LETTER_BITS[ch]
        except KeyError:
            raise ValueError(f"illegal character {ch!r} in Pauli string {s!r}") from None
        z |= zb << j
        x |= xb << j
    return times_i(hermitian_from_bits(len(text), z, x, sign < 0), imaginary)


def to_string(p: PauliElement) -> str:
    """Canonical text form: optional ``-``, optional ``i``, then letters."""
    phase = (p.delta + 2 * p.epsilon + (p.z & p.x).bit_count()) % 4
    prefix = ("-" if phase >= 2 else "") + ("i" if phase & 1 else "")
    letters = "".join(
        _BITS_LETTER[((p.z >> j) & 1, (p.x >> j) & 1)] for j in range(p.n)
    )
    return prefix + letters


# ---------------------------------------------------------------------------
# packed batches


def n_words(n: int) -> int:
    return (n + _WORD - 1) // _WORD


def int_to_words(v: int, words: int) -> np.ndarray:
    return np.array([(v >> (_WORD * k)) & _MASK64 for k in range(words)], dtype=np.uint64)


def words_to_int(w: np.ndarray) -> int:
    return sum(int(word) << (_WORD * k) for k, word in enumerate(w))


def parity_rows(words: np.ndarray) -> np.ndarray:
    """Parity of the popcount of each row of a ``(B, W)`` word array."""
    # parity(a) ^ parity(b) == parity(a ^ b): fold the words first
    folded = words[:, 0]
    for k in range(1, words.shape[1]):
        folded = folded ^ words[:, k]
    return (np.bitwise_count(folded) & 1).astype(np.uint8)


@dataclass
class PauliArray:
    """A batch of ``B`` Pauli elements on ``n`` qubits.

    ``delta``/``epsilon`` have shape ``(B,)`` (uint8); ``z``/``x`` have shape
    ``(B, W)`` (uint64) with qubit ``j`` at bit ``j % 64`` of word ``j // 64``.
    """

    n: int
    delta: np.ndarray
    epsilon: np.ndarray
    z: np.ndarray
    x: np.ndarray

    def __len__(self) -> int:
        return self.delta.shape[0]

    @classmethod
    def broadcast(cls, p: PauliElement, size: int) -> "PauliArray":
        w = n_words(p.n)
        return cls(
            p.n,
            np.full(size, p.delta, dtype=np.uint8),
            np.full(size, p.epsilon, dtype=np.uint8),
            np.tile(int_to_words(p.z, w), (size, 1)),
            np.tile(int_to_words(p.x, w), (size, 1)),
        )

    @classmethod
    def from_elements(cls, elements) -> "PauliArray":
        elements = list(elements)
        n = elements[0].n
        w = n_words(n)
        if any(e.n != n for e in elements):
            raise ValueError("all elements must act on the same number of qubits")
        return cls(
            n,
            np.array([e.delta for e in elements], dtype=np.uint8),
            np.array([e.epsilon for e in elements], dtype=np.uint8),
            np.stack([int_to_words(e.z, w) for e in elements]),
            np.stack([int_to_words(e.x, w) for e in elements]),
        )

    def element(self, i: int) -> PauliElement:
        return PauliElement(
            self.n,
            int(self.delta[i]),
            int(self.epsilon[i]),
            words_to_int(self.z[i]),
            words_to_int(self.x[i]),
        )

    def expectation_zero_state(self) -> np.ndarray:
        """Vectorised :func:`expectation_zero_state`, as int8 values."""
        diagonal = ~self.x.any(axis=1)
        if np.any(self.delta[diagonal]):
            raise ValueError("expectation requested for a non-hermitian element")
        sign = 1 - 2 * self.epsilon.astype(np.int8)
        return np.where(diagonal, sign, 0).astype(np.int8)
