"""Wall-time scaling of model evaluation and NTK estimation.

Each sweep varies one of ``n``, ``L``, ``m`` or ``N`` with the others fixed,
records the best of a few repeats, and fits the exponent of a power law
``time ~ value**k`` by least squares on the logs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
import time

import numpy as np

from .circuit import evaluate_batch, heisenberg_layers
from .estimator import estimate_ntk, sample_parameters
from .oracle import random_input, random_template

__all__ = ["BenchRow", "fit_exponent", "time_evaluation", "time_estimate", "run_bench", "write_csv", "DEFAULT_SWEEPS"]

DEFAULT_SWEEPS = {
    "n": [8, 16, 32, 64, 128],
    "L": [4, 8, 16, 32, 64],
    "m": [1, 2, 4, 8, 16],
    "N": [4096, 8192, 16384, 32768, 65536],
}
BASE = {"n": 16, "L": 8, "m": 2, "N": 8192}


@dataclass(frozen=True)
class BenchRow:
    sweep: str
    n: int
    L: int
    m: int
    N: int
    seconds: float


def fit_exponent(values, seconds) -> float:
    """Slope of ``log(seconds)`` against ``log(values)``."""
    slope, _ = np.polyfit(np.log(np.asarray(values, float)), np.log(np.asarray(seconds, float)), 1)
    return float(slope)


def _setup(n: int, L: int, m: int, seed: int):
    rng = np.random.default_rng(seed)
    t = random_template(rng, n, L, m, input_bits=4)
    x = random_input(rng, t)
    heisenberg_layers(t, x)  # build tableaux outside the timed region
    return t, x, rng


def time_evaluation(n: int, L: int, m: int, rows: int = 2048, repeats: int = 3, seed: int = 0) -> float:
    """Seconds per single evaluation of ``f``, batched over ``rows`` angle vectors."""
    t, x, rng = _setup(n, L, m, seed)
    thetas = rng.integers(0, 4, size=(rows, L), dtype=np.uint8)
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        evaluate_batch(t, x, thetas)
        best = min(best, time.perf_counter() - start)
    return best / rows


def time_estimate(n: int, L: int, m: int, N: int, repeats: int = 3, seed: int = 0) -> float:
    """Seconds for one NTK estimate from ``N`` samples (serial)."""
    t, x, _ = _setup(n, L, m, seed)
    samples = sample_parameters(L, N, seed)
    best = np.inf
    for _ in range(repeats):
        start = time.perf_counter()
        estimate_ntk(t, x, x, samples)
        best = min(best, time.perf_counter() - start)
    return best


def run_bench(sweeps=None, repeats: int = 3, seed: int = 0, base=None):
    """Run the sweeps; returns ``(rows, exponents)``.

    ``sweeps`` maps any of ``"n"``, ``"L"``, ``"m"``, ``"N"`` to the values to
    try. ``n``, ``L`` and ``m`` time single evaluations; ``N`` times the whole
    estimator, which costs ``2L`` evaluations per sample.
    """
    sweeps = DEFAULT_SWEEPS if sweeps is None else sweeps
    base = {**BASE, **(base or {})}
    rows, exponents = [], {}
    for key, values in sweeps.items():
        times = []
        for v in values:
            p = {**base, key: int(v)}
            if key == "N":
                s = time_estimate(p["n"], p["L"], p["m"], p["N"], repeats, seed)
            else:
                s = time_evaluation(p["n"], p["L"], p["m"], repeats=repeats, seed=seed)
            times.append(s)
            rows.append(BenchRow(key, p["n"], p["L"], p["m"], p["N"], s))
        exponents[key] = fit_exponent(values, times)
    return rows, exponents


def write_csv(rows, path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(["sweep", "n", "L", "m", "N", "seconds"])
        for r in rows:
            w.writerow([r.sweep, r.n, r.L, r.m, r.N, repr(r.seconds)])
    finally:
        if own:
            fh.close()
