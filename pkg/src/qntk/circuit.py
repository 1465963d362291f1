"""Circuit templates and model evaluation at discrete angles.

A template describes

    U_{x,theta} = U_x^(L) R_L(theta_L) ... U_x^(1) R_1(theta_1) U_x^(0),
    R_l(theta) = exp(-i theta/2 P_l),

with Clifford layers built from gates that may be switched on by input bits,
and an observable ``O = sum_k c_k P_k``. The model function
``f_theta(x) = <0^n| U^dagger O U |0^n>`` is evaluated in the Heisenberg
picture: each ``P_k`` is pulled back through the inverse layers and the
rotations, then read off on ``|0^n>``.

Angles on this path are integers 0..3 (multiples of pi/2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
import json
from typing import Sequence

import numpy as np

from . import clifford
from .clifford import CliffordTableau
from .pauli import (
    PauliArray,
    PauliElement,
    expectation_zero_state,
    from_pauli_string,
    is_hermitian,
    to_string,
)

__all__ = [
    "Gate",
    "Layer",
    "Observable",
    "CircuitTemplate",
    "check_input",
    "instantiate",
    "heisenberg_layers",
    "clear_cache",
    "evaluate_model",
    "gradient",
    "evaluate_batch",
    "gradient_batch",
    "template_from_dict",
    "template_to_dict",
    "load_template",
    "dump_template",
]

GATE_ARITY = {
    "h": 1, "s": 1, "x": 1, "y": 1, "z": 1,
    "cnot": 2, "cz": 2, "swap": 2,
    "pauli": 0, "tableau": 0,
}


@dataclass(frozen=True)
class Gate:
    """One gate application inside a Clifford layer.

    ``if_bit`` makes the gate conditional on input bit ``if_bit`` being 1;
    ``if_input`` makes it conditional on the whole input being equal to a
    given bitstring. ``pauli`` is the operator string for ``"pauli"`` gates
    and ``images`` lists the 2n generator images for ``"tableau"`` gates.
    """

    name: str
    qubits: tuple[int, ...] = ()
    if_bit: int | None = None
    if_input: str | None = None
    pauli: str | None = None
    images: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.name not in GATE_ARITY:
            raise ValueError(f"unknown gate {self.name!r}")
        arity = GATE_ARITY[self.name]
        if arity and len(self.qubits) != arity:
            raise ValueError(f"gate {self.name!r} takes {arity} qubit(s), got {list(self.qubits)}")
        if self.name == "pauli" and self.pauli is None:
            raise ValueError("pauli gate needs a 'pauli' string")
        if self.name == "tableau" and self.images is None:
            raise ValueError("tableau gate needs 'images'")
        if self.if_bit is not None and self.if_bit < 0:
            raise ValueError("if_bit must be non-negative")

    def active(self, x: str) -> bool:
        if self.if_bit is not None and x[self.if_bit] != "1":
            return False
        if self.if_input is not None and x != self.if_input:
            return False
        return True

    def local_tableau(self) -> CliffordTableau:
        """The gate on its own qubits, relabelled ``0..arity-1``."""
        return _local_tableau(self.name)

    def tableau(self, n: int) -> CliffordTableau:
        q = self.qubits
        name = self.name
        if name == "h":
            return clifford.hadamard(n, *q)
        if name == "s":
            return clifford.phase_s(n, *q)
        if name == "cnot":
            return clifford.cnot(n, *q)
        if name == "cz":
            return clifford.cz(n, *q)
        if name == "swap":
            return clifford.swap(n, *q)
        if name in ("x", "y", "z"):
            if not 0 <= q[0] < n:
                raise ValueError(f"qubit index {q[0]} out of range for {n} qubits")
            text = "".join(name.upper() if j == q[0] else "I" for j in range(n))
            return clifford.pauli_gate(from_pauli_string(text))
        if name == "pauli":
            p = from_pauli_string(self.pauli)
            if p.n != n:
                raise ValueError(f"pauli gate {self.pauli!r} does not act on {n} qubits")
            return clifford.pauli_gate(p)
        images = [from_pauli_string(s) for s in self.images]
        if any(img.n != n for img in images):
            raise ValueError("tableau gate images act on the wrong number of qubits")
        return clifford.from_images(n, images)


@lru_cache(maxsize=None)
def _local_tableau(name: str) -> CliffordTableau:
    arity = GATE_ARITY[name]
    if not arity:
        raise ValueError(f"gate {name!r} has no fixed support")
    return Gate(name, tuple(range(arity))).tableau(arity)


@dataclass(frozen=True)
class Layer:
    """An ordered gate list; the first gate acts first on the state."""

    gates: tuple[Gate, ...] = ()


@dataclass(frozen=True)
class Observable:
    """``O = sum_k c_k P_k`` with hermitian ``P_k`` and ``|c_k| <= 1``.

    Pass ``strict=False`` to accept coefficients outside [-1, 1]; the
    sample-size bounds then no longer apply.
    """

    terms: tuple[tuple[float, PauliElement], ...]
    strict: bool = field(default=True, compare=False)

    def __post_init__(self):
        if not self.terms:
            raise ValueError("observable needs at least one term")
        n = self.terms[0][1].n
        for c, p in self.terms:
            if p.n != n:
                raise ValueError("observable terms act on different qubit counts")
            if not is_hermitian(p):
                raise ValueError(f"observable term {to_string(p)} is not hermitian")
            if self.strict and not -1.0 <= c <= 1.0:
                raise ValueError(f"coefficient {c} outside [-1, 1]")

    @classmethod
    def from_strings(cls, terms, strict: bool = True) -> "Observable":
        return cls(tuple((float(c), from_pauli_string(s)) for c, s in terms), strict)

    @property
    def m(self) -> int:
        return len(self.terms)

    @property
    def n(self) -> int:
        return self.terms[0][1].n

    @property
    def l1_norm(self) -> float:
        return float(sum(abs(c) for c, _ in self.terms))


@dataclass(frozen=True)
class CircuitTemplate:
    n: int
    layers: tuple[Layer, ...]
    generators: tuple[PauliElement, ...]
    observable: Observable
    input_bits: int | None = None

    def __post_init__(self):
        if len(self.layers) != len(self.generators) + 1:
            raise ValueError(
                f"need L+1 layers for L generators, got {len(self.layers)} and {len(self.generators)}"
            )
        if not self.generators:
            raise ValueError("template needs at least one parametrised rotation")
        for p in self.generators:
            if p.n != self.n:
                raise ValueError("generator acts on the wrong number of qubits")
            if not is_hermitian(p):
                raise ValueError(f"generator {to_string(p)} is not hermitian")
        if self.observable.n != self.n:
            raise ValueError("observable acts on the wrong number of qubits")
        for layer in self.layers:
            for g in layer.gates:
                if any(not 0 <= q < self.n for q in g.qubits):
                    raise ValueError(f"gate {g.name} uses a qubit outside 0..{self.n - 1}")
                if self.input_bits is not None:
                    if g.if_bit is not None and g.if_bit >= self.input_bits:
                        raise ValueError(f"if_bit {g.if_bit} exceeds input bit-length {self.input_bits}")
                    if g.if_input is not None and len(g.if_input) != self.input_bits:
                        raise ValueError(f"if_input {g.if_input!r} has the wrong length")

    @property
    def L(self) -> int:
        return len(self.generators)

    @property
    def m(self) -> int:
        return self.observable.m

    @property
    def min_input_bits(self) -> int:
        needed = 0
        for layer in self.layers:
            for g in layer.gates:
                if g.if_bit is not None:
                    needed = max(needed, g.if_bit + 1)
                if g.if_input is not None:
                    needed = max(needed, len(g.if_input))
        return needed


def check_input(template: CircuitTemplate, x: str) -> None:
    if any(ch not in "01" for ch in x):
        raise ValueError(f"input {x!r} is not a bitstring")
    if template.input_bits is not None:
        if len(x) != template.input_bits:
            raise ValueError(f"input {x!r} has {len(x)} bits, template expects {template.input_bits}")
    elif len(x) < template.min_input_bits:
        raise ValueError(f"input {x!r} is shorter than the {template.min_input_bits} bits the gates reference")


@lru_cache(maxsize=4096)
def instantiate(template: CircuitTemplate, x: str) -> tuple[CliffordTableau, ...]:
    """Resolve the input-conditioned layers into L+1 concrete tableaux."""
    check_input(template, x)
    n = template.n
    out = []
    for layer in template.layers:
        t = clifford.identity(n)
        for g in layer.gates:
            if not g.active(x):
                continue
            if g.name in ("pauli", "tableau"):
                t = clifford.compose(g.tableau(n), t)
            else:
                t = clifford.compose_local(g.local_tableau(), g.qubits, t)
        out.append(t)
    return tuple(out)


@lru_cache(maxsize=4096)
def heisenberg_layers(template: CircuitTemplate, x: str) -> tuple[CliffordTableau, ...]:
    """Inverse layer tableaux, i.e. the maps ``H -> U^dagger H U``."""
    return tuple(clifford.inverse(t) for t in instantiate(template, x))


def clear_cache() -> None:
    instantiate.cache_clear()
    heisenberg_layers.cache_clear()


def _check_theta(template: CircuitTemplate, theta) -> tuple[int, ...]:
    theta = tuple(int(t) for t in theta)
    if len(theta) != template.L:
        raise ValueError(f"expected {template.L} angles, got {len(theta)}")
    if any(not 0 <= t <= 3 for t in theta):
        raise ValueError("discrete angles must be integers 0..3 (multiples of pi/2)")
    return theta


def _evaluate(template: CircuitTemplate, layers, theta) -> float:
    L = template.L
    total = 0.0
    for coeff, p in template.observable.terms:
        q = clifford.conjugate(layers[L], p)
        for ell in range(L - 1, -1, -1):
            q = clifford.rotation_conjugate(template.generators[ell], theta[ell], q)
            q = clifford.conjugate(layers[ell], q)
        total += coeff * expectation_zero_state(q)
    return total


def evaluate_model(template: CircuitTemplate, x: str, theta: Sequence[int]) -> float:
    """``f_theta(x)`` for angles ``theta_l = theta[l] * pi/2``."""
    theta = _check_theta(template, theta)
    return _evaluate(template, heisenberg_layers(template, x), theta)


def gradient(template: CircuitTemplate, x: str, theta: Sequence[int]) -> np.ndarray:
    """Parameter-shift gradient, ``(f(theta + pi/2 e_i) - f(theta - pi/2 e_i)) / 2``."""
    theta = _check_theta(template, theta)
    layers = heisenberg_layers(template, x)
    out = np.empty(template.L)
    for i in range(template.L):
        plus = list(theta)
        minus = list(theta)
        plus[i] = (theta[i] + 1) % 4
        minus[i] = (theta[i] - 1) % 4
        out[i] = 0.5 * (_evaluate(template, layers, plus) - _evaluate(template, layers, minus))
    return out


def evaluate_batch(template: CircuitTemplate, x: str, thetas: np.ndarray) -> np.ndarray:
    """Vectorised :func:`evaluate_model` over the rows of ``thetas`` (shape ``(B, L)``).

    Terms are accumulated in the same order as the scalar path, so results
    agree bit for bit.
    """
    thetas = np.asarray(thetas, dtype=np.uint8)
    if thetas.ndim != 2 or thetas.shape[1] != template.L:
        raise ValueError(f"thetas must have shape (B, {template.L})")
    layers = heisenberg_layers(template, x)
    L = template.L
    rows = thetas.shape[0]
    total = np.zeros(rows)
    for coeff, p in template.observable.terms:
        arr = clifford.conjugate_array(layers[L], PauliArray.broadcast(p, rows))
        for ell in range(L - 1, -1, -1):
            arr = clifford.rotation_conjugate_array(template.generators[ell], thetas[:, ell], arr)
            arr = clifford.conjugate_array(layers[ell], arr)
        total += coeff * arr.expectation_zero_state()
    return total


def shifted_thetas(thetas: np.ndarray) -> np.ndarray:
    """Rows ``theta + e_i`` and ``theta - e_i`` for every row and every ``i``.

    Output shape is ``(B, L, 2, L)`` flattened to ``(B * 2L, L)``.
    """
    thetas = np.asarray(thetas, dtype=np.uint8)
    rows, L = thetas.shape
    eye = np.eye(L, dtype=np.uint8)
    plus = (thetas[:, None, :] + eye[None]) & 3
    minus = (thetas[:, None, :] + 3 * eye[None]) & 3
    return np.stack([plus, minus], axis=2).reshape(rows * 2 * L, L)


def gradient_batch(template: CircuitTemplate, x: str, thetas: np.ndarray) -> np.ndarray:
    """Parameter-shift gradients for each row of ``thetas``; shape ``(B, L)``."""
    thetas = np.asarray(thetas, dtype=np.uint8)
    rows, L = thetas.shape
    values = evaluate_batch(template, x, shifted_thetas(thetas)).reshape(rows, L, 2)
    return 0.5 * (values[:, :, 0] - values[:, :, 1])


# ---------------------------------------------------------------------------
# JSON description


def _gate_from_dict(obj: dict) -> Gate:
    if not isinstance(obj, dict) or "gate" not in obj:
        raise ValueError(f"gate entry must be an object with a 'gate' field, got {obj!r}")
    known = {"gate", "qubits", "if_bit", "if_input", "pauli", "images"}
    extra = set(obj) - known
    if extra:
        raise ValueError(f"unknown gate field(s) {sorted(extra)}")
    images = obj.get("images")
    return Gate(
        name=str(obj["gate"]).lower(),
        qubits=tuple(int(q) for q in obj.get("qubits", ())),
        if_bit=None if obj.get("if_bit") is None else int(obj["if_bit"]),
        if_input=obj.get("if_input"),
        pauli=obj.get("pauli"),
        images=None if images is None else tuple(images),
    )


def _gate_to_dict(g: Gate) -> dict:
    out: dict = {"gate": g.name}
    if g.qubits:
        out["qubits"] = list(g.qubits)
    if g.pauli is not None:
        out["pauli"] = g.pauli
    if g.images is not None:
        out["images"] = list(g.images)
    if g.if_bit is not None:
        out["if_bit"] = g.if_bit
    if g.if_input is not None:
        out["if_input"] = g.if_input
    return out


def template_from_dict(obj: dict, strict: bool = True) -> CircuitTemplate:
    for key in ("n", "layers", "generators", "observable"):
        if key not in obj:
            raise ValueError(f"circuit description is missing {key!r}")
    n = int(obj["n"])
    layers = tuple(Layer(tuple(_gate_from_dict(g) for g in layer)) for layer in obj["layers"])
    generators = tuple(from_pauli_string(s) for s in obj["generators"])
    observable = Observable(
        tuple((float(t["coeff"]), from_pauli_string(t["pauli"])) for t in obj["observable"]),
        strict=strict,
    )
    for p in generators + tuple(p for _, p in observable.terms):
        if p.n != n:
            raise ValueError(f"Pauli string {to_string(p)} does not act on {n} qubits")
    bits = obj.get("input_bits")
    return CircuitTemplate(n, layers, generators, observable, None if bits is None else int(bits))


def template_to_dict(t: CircuitTemplate) -> dict:
    out: dict = {"n": t.n}
    if t.input_bits is not None:
        out["input_bits"] = t.input_bits
    out["layers"] = [[_gate_to_dict(g) for g in layer.gates] for layer in t.layers]
    out["generators"] = [to_string(p) for p in t.generators]
    out["observable"] = [{"coeff": c, "pauli": to_string(p)} for c, p in t.observable.terms]
    return out


def load_template(path, strict: bool = True) -> CircuitTemplate:
    with open(path) as fh:
        return template_from_dict(json.load(fh), strict=strict)


def dump_template(t: CircuitTemplate, path) -> None:
    with open(path, "w") as fh:
        json.dump(template_to_dict(t), fh, indent=2)
        fh.write("\n")
