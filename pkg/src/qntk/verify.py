"""Cross-checks of the stabilizer path against the dense oracle.

:func:`run_verification` runs every check at default sizes and returns one
:class:`CheckResult` per check. ``fault=True`` corrupts a phase bit in the
rotation step first, as a negative control.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
import time
from unittest import mock

import numpy as np

from . import clifford
from .circuit import Gate, evaluate_model, gradient
from .estimator import estimate_gram, full_enumeration
from .oracle import (
    _RANDOM_GATES,
    dense_pauli,
    exact_ntk_enumeration,
    exact_ntk_quadrature,
    finite_difference_gradient,
    statevector,
    statevector_gradient,
    statevector_model,
    template_family,
)
from .pauli import (
    PauliElement,
    commutes,
    expectation_zero_state,
    hermitian_from_bits,
    is_hermitian,
)

__all__ = ["CheckResult", "run_verification", "format_table", "random_tableau", "random_pauli", "phase_fault"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    failures: int
    worst: float
    tolerance: float
    seconds: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


def random_pauli(rng, n: int, hermitian: bool = False) -> PauliElement:
    z = int(rng.integers(0, 1 << n))
    x = int(rng.integers(0, 1 << n))
    if hermitian:
        return hermitian_from_bits(n, z, x, bool(rng.integers(2)))
    return PauliElement(n, int(rng.integers(2)), int(rng.integers(2)), z, x)


def random_tableau(rng, n: int, depth: int = 12) -> clifford.CliffordTableau:
    """Product of ``depth`` random H, S, CNOT, CZ, SWAP, X, Y, Z gates."""
    t = clifford.identity(n)
    for _ in range(depth):
        name = str(rng.choice(_RANDOM_GATES if n > 1 else ("h", "s", "x", "y", "z")))
        size = 2 if name in ("cnot", "cz", "swap") else 1
        qubits = tuple(int(q) for q in rng.choice(n, size=size, replace=False))
        t = clifford.compose(Gate(name, qubits).tableau(n), t)
    return t


def _faulty(original):
    def wrapped(P, theta, Q):
        out = original(P, theta, Q)
        if theta % 2 == 1 and not commutes(P, Q):
            return -out
        return out
    return wrapped


@contextmanager
def phase_fault():
    """Flip the sign bit of every non-trivial odd-angle rotation image."""
    with mock.patch.object(clifford, "rotation_conjugate", _faulty(clifford.rotation_conjugate)):
        yield


class _Check:
    def __init__(self, name: str, tolerance: float):
        self.name = name
        self.tolerance = tolerance
        self.cases = 0
        self.failures = 0
        self.worst = 0.0
        self.first = ""
        self.start = time.perf_counter()

    def record(self, error: float, where: str = "") -> None:
        self.cases += 1
        self.worst = max(self.worst, float(error))
        if not error <= self.tolerance:
            self.failures += 1
            if not self.first:
                self.first = f"{where}: discrepancy {error:.3g}"

    def result(self) -> CheckResult:
        return CheckResult(
            self.name, self.cases, self.failures, self.worst, self.tolerance,
            time.perf_counter() - self.start, self.first,
        )


def check_algebra(seed: int = 0, cases: int = 10_000) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    assoc = _Check("pauli associativity", 0)
    sympl = _Check("tableau symplectic", 0)
    herm = _Check("hermiticity preserved", 0)
    comm = _Check("commutation preserved", 0)
    expz = _Check("zero-state expectation vs dense", 1e-12)
    for i in range(cases):
        n = int(rng.integers(1, 7))
        p, q, r = (random_pauli(rng, n) for _ in range(3))
        assoc.record(float((p * q) * r != p * (q * r)), f"case {i}")
        t = random_tableau(rng, n, depth=int(rng.integers(1, 3 * n + 2)))
        sympl.record(float(not clifford.is_symplectic(t)), f"case {i}")
        hp, hq = random_pauli(rng, n, True), random_pauli(rng, n, True)
        ip, iq = clifford.conjugate(t, hp), clifford.conjugate(t, hq)
        herm.record(float(not (is_hermitian(ip) and is_hermitian(iq))), f"case {i}")
        comm.record(float(commutes(hp, hq) != commutes(ip, iq)), f"case {i}")
        if n <= 4:
            expz.record(abs(expectation_zero_state(hp) - dense_pauli(hp)[0, 0]), f"case {i}")
    return [c.result() for c in (assoc, sympl, herm, comm, expz)]


def check_cross_engine(seed: int = 1, templates: int = 1000) -> CheckResult:
    """Stabilizer ``f`` equals the dense statevector value at discrete angles."""
    check = _Check("stabilizer vs statevector", 1e-12)
    rng = np.random.default_rng(seed + 10_000)
    for i, (t, x, _) in enumerate(template_family(seed, templates, 5, 6, 4)):
        theta = rng.integers(0, 4, size=t.L)
        dense = statevector_model(t, x, theta * (np.pi / 2))
        check.record(abs(evaluate_model(t, x, theta) - dense), f"template {i}")
    return check.result()


def check_enumeration_vs_quadrature(seed: int = 2, templates: int = 50) -> CheckResult:
    check = _Check("enumeration vs quadrature (P=8)", 1e-9)
    for i, (t, x, x2) in enumerate(template_family(seed, templates, 3, 4, 3)):
        check.record(abs(exact_ntk_enumeration(t, x, x2) - exact_ntk_quadrature(t, x, x2, 8)), f"template {i}")
    return check.result()


def check_estimator_enumeration(seed: int = 3, templates: int = 30) -> CheckResult:
    check = _Check("estimator full enumeration vs oracle", 1e-12)
    for i, (t, x, x2) in enumerate(template_family(seed, templates, 3, 4, 3)):
        g = estimate_gram(t, [x, x2], full_enumeration(t.L)).matrix
        check.record(abs(g[0, 1] - exact_ntk_enumeration(t, x, x2)), f"template {i}")
    return check.result()


def check_bandlimit(seed: int = 4, templates: int = 10) -> CheckResult:
    check = _Check("quadrature P in {5, 8, 16}", 1e-10)
    for i, (t, x, x2) in enumerate(template_family(seed, templates, 3, 3, 3)):
        values = [exact_ntk_quadrature(t, x, x2, p) for p in (5, 8, 16)]
        check.record(max(values) - min(values), f"template {i}")
    return check.result()


def check_parameter_shift(seed: int = 5, points: int = 200) -> CheckResult:
    check = _Check("parameter shift vs finite difference", 1e-6)
    rng = np.random.default_rng(seed + 10_000)
    family = template_family(seed, points, 3, 4, 3)
    for i, (t, x, _) in enumerate(family):
        theta = rng.uniform(0, 2 * np.pi, size=t.L)
        err = np.abs(statevector_gradient(t, x, theta) - finite_difference_gradient(t, x, theta)).max()
        check.record(err, f"point {i}")
    return check.result()


def check_discrete_gradient(seed: int = 6, templates: int = 200) -> CheckResult:
    check = _Check("stabilizer vs dense gradient", 1e-12)
    rng = np.random.default_rng(seed + 10_000)
    for i, (t, x, _) in enumerate(template_family(seed, templates, 4, 5, 3)):
        theta = rng.integers(0, 4, size=t.L)
        dense = statevector_gradient(t, x, theta * (np.pi / 2))
        check.record(np.abs(gradient(t, x, theta) - dense).max(), f"template {i}")
    return check.result()


def check_unitarity(seed: int = 7, templates: int = 100) -> CheckResult:
    # statevector() also asserts the norm after every gate
    check = _Check("state norm", 1e-12)
    rng = np.random.default_rng(seed + 10_000)
    for i, (t, x, _) in enumerate(template_family(seed, templates, 5, 4, 2)):
        psi = statevector(t, x, rng.uniform(0, 2 * np.pi, size=t.L))
        check.record(abs(np.linalg.norm(psi) - 1), f"template {i}")
    return check.result()


def run_verification(fault: bool = False, quick: bool = False) -> list[CheckResult]:
    """Run every check; ``quick`` shrinks the case counts (for tests)."""
    scale = 10 if quick else 1
    checks = [
        lambda: check_algebra(cases=10_000 // scale),
        lambda: [check_cross_engine(templates=1000 // scale)],
        lambda: [check_discrete_gradient(templates=200 // scale)],
        lambda: [check_enumeration_vs_quadrature(templates=max(5, 50 // scale))],
        lambda: [check_estimator_enumeration(templates=max(5, 30 // scale))],
        lambda: [check_bandlimit(templates=max(2, 10 // scale))],
        lambda: [check_parameter_shift(points=200 // scale)],
        lambda: [check_unitarity(templates=100 // scale)],
    ]
    results = []
    if fault:
        from .circuit import clear_cache
        clear_cache()
        with phase_fault():
            for c in checks:
                results.extend(c())
        clear_cache()
    else:
        for c in checks:
            results.extend(c())
    return results


def format_table(results) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'cases':>6}  {'fail':>5}  {'worst':>9}  {'tol':>7}  {'sec':>6}  status"]
    for r in results:
        status = "PASS" if r.passed else f"FAIL ({r.detail})"
        lines.append(
            f"{r.name:<{width}}  {r.cases:>6}  {r.failures:>5}  {r.worst:>9.2e}  "
            f"{r.tolerance:>7.0e}  {r.seconds:>6.2f}  {status}"
        )
    return "\n".join(lines)
