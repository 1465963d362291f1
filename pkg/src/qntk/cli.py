"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 unreadable input (bad
JSON/CSV, bad arguments), 3 violated precondition (epsilon/delta range,
accuracy bound, missing norms), 4 singular training Gram matrix.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from .circuit import check_input, template_from_dict
from .errors import PreconditionError, SingularGramError
from .estimator import (
    estimate_gram,
    full_enumeration,
    sample_parameters,
    sample_size_mu,
    sample_size_ntk,
)
from .regression import TrainingSet, fit_mu_infinity, invert_gram, load_training_csv

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_PARSE = 2
EXIT_PRECONDITION = 3
EXIT_SINGULAR = 4

DEFAULT_PILOT = 4096
DEFAULT_MAX_SAMPLES = 10**8


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def default_workers() -> int:
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except AttributeError:
        return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# input handling


def load_circuit(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"{path}: cannot read circuit file: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    try:
        return template_from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(EXIT_PARSE, f"{path}: invalid circuit description: {exc}") from None


def load_training(path) -> TrainingSet:
    try:
        return load_training_csv(path)
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"{path}: cannot read dataset: {exc.strerror}") from None
    except ValueError as exc:
        msg = str(exc)
        if msg.startswith("duplicate"):
            raise CliError(EXIT_SINGULAR, f"{path}: {msg}; the training Gram matrix must be invertible") from None
        raise CliError(EXIT_PARSE, f"{path}: {msg}") from None


def _check_inputs(template, inputs):
    for x in inputs:
        try:
            check_input(template, x)
        except ValueError as exc:
            raise CliError(EXIT_PARSE, f"query {x!r}: {exc}") from None


def _check_eps_delta(args, need: bool) -> None:
    if args.epsilon is None or args.delta is None:
        if need:
            raise CliError(EXIT_PRECONDITION, "--epsilon and --delta are required unless --samples or --enumerate is given")
        return
    if not args.epsilon > 0:
        raise CliError(EXIT_PRECONDITION, f"epsilon must be positive (got {args.epsilon})")
    if not 0 < args.delta < 1:
        raise CliError(EXIT_PRECONDITION, f"delta must lie in (0, 1) (got {args.delta})")


def _samples(args, L: int, n_required):
    """Explicit N, full enumeration, or the calculator's N (in that order)."""
    if getattr(args, "enumerate", False):
        return full_enumeration(L)
    if args.samples is not None:
        if args.samples < 1:
            raise CliError(EXIT_PRECONDITION, f"--samples must be at least 1 (got {args.samples})")
        return sample_parameters(L, args.samples, args.seed)
    N = n_required()
    if N > args.max_samples:
        raise CliError(
            EXIT_PRECONDITION,
            f"the sample-size bound requires N = {N} > --max-samples {args.max_samples}; pass --samples to override",
        )
    return sample_parameters(L, N, args.seed)


def _write(args, payload: dict) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)


def _queries(args, count=None):
    q = list(args.query or [])
    if count is not None and not 1 <= len(q) <= count:
        raise CliError(EXIT_PARSE, f"expected 1 to {count} --query inputs, got {len(q)}")
    return q


def _feature_space_size(args, template, training) -> int:
    if args.uniform_over_X is None:
        return 1
    if args.uniform_over_X > 0:
        return args.uniform_over_X
    return 2 ** len(training.inputs[0])


# ---------------------------------------------------------------------------
# subcommands


def cmd_estimate_ntk(args) -> int:
    template = load_circuit(args.circuit)
    queries = _queries(args, 2)
    x = queries[0]
    x2 = queries[-1]
    _check_inputs(template, [x, x2])
    _check_eps_delta(args, need=args.samples is None and not args.enumerate)
    samples = _samples(args, template.L, lambda: sample_size_ntk(args.epsilon, args.delta, template.L, template.m))
    start = time.perf_counter()
    inputs = [x] if x == x2 else [x, x2]
    gram = estimate_gram(template, inputs, samples, workers=args.workers)
    j = len(inputs) - 1
    _write(args, {
        "value": float(gram.matrix[0, j]),
        "N": gram.N,
        "std_error": float(gram.std_errors[0, j]),
        "seed": samples.seed,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "x": x,
        "x_prime": x2,
        "m": template.m,
        "sum_abs_coefficients": template.observable.l1_norm,
        "elapsed_ms": (time.perf_counter() - start) * 1e3,
    })
    return EXIT_OK


def cmd_estimate_gram(args) -> int:
    template = load_circuit(args.circuit)
    inputs = list(load_training(args.data).inputs) if args.data else []
    inputs += [q for q in _queries(args) if q not in inputs]
    if not inputs:
        raise CliError(EXIT_PARSE, "estimate-gram needs --data or at least one --query")
    _check_inputs(template, inputs)
    _check_eps_delta(args, need=args.samples is None and not args.enumerate)
    samples = _samples(args, template.L, lambda: sample_size_ntk(args.epsilon, args.delta, template.L, template.m))
    start = time.perf_counter()
    gram = estimate_gram(template, inputs, samples, workers=args.workers)
    _write(args, {
        "inputs": inputs,
        "gram": gram.matrix.tolist(),
        "std_errors": gram.std_errors.tolist(),
        "min_eigenvalue": float(np.linalg.eigvalsh(gram.matrix)[0]),
        "N": gram.N,
        "seed": samples.seed,
        "epsilon": args.epsilon,
        "delta": args.delta,
        "elapsed_ms": (time.perf_counter() - start) * 1e3,
    })
    return EXIT_OK


def _pilot_norms(template, training, pilot_n: int, seed: int, workers: int) -> dict:
    gram = estimate_gram(template, list(training.inputs), sample_parameters(template.L, pilot_n, seed), workers)
    inv = invert_gram(gram)
    return {
        "N": pilot_n,
        "norm_kinv": inv.norm,
        "norm_y": float(np.linalg.norm(training.labels)),
        "norm_kinv_y": float(np.linalg.norm(inv.inverse @ training.labels)),
        "condition_number": inv.condition_number,
    }


def _mu_sample_size(args, template, training, norms) -> int:
    return sample_size_mu(
        args.epsilon, args.delta, template.L, template.m, training.d,
        norms["norm_kinv"], norms["norm_y"], norms["norm_kinv_y"],
        _feature_space_size(args, template, training),
    )


def cmd_estimate_mu(args) -> int:
    template = load_circuit(args.circuit)
    if not args.data:
        raise CliError(EXIT_PARSE, "estimate-mu needs --data")
    training = load_training(args.data)
    queries = _queries(args)
    if not queries:
        raise CliError(EXIT_PARSE, "estimate-mu needs at least one --query")
    _check_inputs(template, list(training.inputs) + queries)
    _check_eps_delta(args, need=args.samples is None and not args.enumerate)
    pilot = None
    start = time.perf_counter()

    def required():
        nonlocal pilot
        pilot = _pilot_norms(template, training, args.pilot or DEFAULT_PILOT, args.seed, args.workers)
        return _mu_sample_size(args, template, training, pilot)

    samples = _samples(args, template.L, required)
    result = fit_mu_infinity(template, training, queries, samples, ridge=args.ridge, workers=args.workers)
    payload = result.to_dict()
    payload.update({
        "epsilon": args.epsilon,
        "delta": args.delta,
        "feature_space_size": _feature_space_size(args, template, training),
        "enumerated": bool(args.enumerate),
    })
    if pilot is not None:
        payload["pilot"] = pilot
    payload["elapsed_ms"] = (time.perf_counter() - start) * 1e3
    _write(args, payload)
    return EXIT_OK


def cmd_sample_size(args) -> int:
    _check_eps_delta(args, need=True)
    template = load_circuit(args.circuit) if args.circuit else None
    L = args.L if args.L is not None else (template.L if template else None)
    m = args.m if args.m is not None else (template.m if template else None)
    if L is None or m is None:
        raise CliError(EXIT_PRECONDITION, "sample-size needs --circuit or both --L and --m")
    out = {"epsilon": args.epsilon, "delta": args.delta, "L": L, "m": m}
    if args.kind == "ntk":
        out["N"] = sample_size_ntk(args.epsilon, args.delta, L, m)
    else:
        training = load_training(args.data) if args.data else None
        if args.pilot:
            if template is None or training is None:
                raise CliError(EXIT_PRECONDITION, "--pilot needs --circuit and --data")
            _check_inputs(template, training.inputs)
            norms = _pilot_norms(template, training, args.pilot, args.seed, args.workers)
            out["pilot"] = norms
            d_train = training.d
        else:
            given = (args.norm_kinv, args.norm_y, args.norm_kinv_y)
            d_train = args.d_train if args.d_train is not None else (training.d if training else None)
            if any(v is None for v in given) or d_train is None:
                raise CliError(
                    EXIT_PRECONDITION,
                    "mu sample size needs --norm-kinv, --norm-y, --norm-kinv-y and --d-train (or --data), or --pilot",
                )
            norms = {"norm_kinv": args.norm_kinv, "norm_y": args.norm_y, "norm_kinv_y": args.norm_kinv_y}
        X = 1
        if args.uniform_over_X is not None:
            X = args.uniform_over_X if args.uniform_over_X > 0 else (
                2 ** len(training.inputs[0]) if training else None)
            if X is None:
                raise CliError(EXIT_PRECONDITION, "--uniform-over-X without a size needs --data")
        out.update({"d_train": d_train, "feature_space_size": X})
        out["N"] = sample_size_mu(
            args.epsilon, args.delta, L, m, d_train,
            norms["norm_kinv"], norms["norm_y"], norms["norm_kinv_y"], X,
        )
    if args.out or "pilot" in out:
        _write(args, out)
    else:
        print(out["N"])
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import format_table, run_verification

    results = run_verification(fault=args.inject_phase_fault, quick=args.quick)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    for r in failed:
        print(f"FAILED {r.name}: {r.failures}/{r.cases} cases, {r.detail}", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def cmd_bench(args) -> int:
    from .bench import DEFAULT_SWEEPS, run_bench, write_csv

    sweeps = {}
    for key, value in (("n", args.n_values), ("L", args.L_values), ("m", args.m_values), ("N", args.N_values)):
        sweeps[key] = value if value is not None else DEFAULT_SWEEPS[key]
    rows, exponents = run_bench(sweeps, repeats=args.repeats, seed=args.seed)
    if args.out:
        write_csv(rows, args.out)
    else:
        write_csv(rows, sys.stdout)
    for key, k in exponents.items():
        print(f"exponent[{key}] = {k:.3f}", file=sys.stderr if not args.out else sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_common(p, samples=True):
    p.add_argument("--circuit", required=True, help="circuit description (JSON)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out", help="output file (default: stdout)")
    if samples:
        p.add_argument("--epsilon", type=float)
        p.add_argument("--delta", type=float)
        p.add_argument("--samples", type=int, help="explicit N, overriding the sample-size bound")
        p.add_argument("--enumerate", action="store_true", help="average over all 4^L discrete angles")
        p.add_argument("--max-samples", type=int, default=DEFAULT_MAX_SAMPLES)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qntk", description="Classical NTK estimation for Clifford + Pauli-rotation circuits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate-ntk", help="estimate K(x, x')")
    _add_common(p)
    p.add_argument("--query", action="append", help="input bitstring; give once for x = x'")
    p.set_defaults(func=cmd_estimate_ntk)

    p = sub.add_parser("estimate-gram", help="estimate the kernel matrix over several inputs")
    _add_common(p)
    p.add_argument("--data", help="training CSV whose inputs are included")
    p.add_argument("--query", action="append")
    p.set_defaults(func=cmd_estimate_gram)

    p = sub.add_parser("estimate-mu", help="estimate the trained mean at query inputs")
    _add_common(p)
    p.add_argument("--data", help="training CSV (bitstring,label)")
    p.add_argument("--query", action="append")
    p.add_argument("--uniform-over-X", type=int, nargs="?", const=0, default=None, metavar="SIZE",
                   help="hold uniformly over a feature space of SIZE inputs (default 2^bits)")
    p.add_argument("--pilot", type=int, help=f"pilot sample count for the norm estimates (default {DEFAULT_PILOT})")
    p.add_argument("--ridge", type=float, default=0.0, help="add ridge*I to the Gram matrix (regularised, off the plain estimator)")
    p.set_defaults(func=cmd_estimate_mu)

    p = sub.add_parser("sample-size", help="print the required number of samples")
    p.add_argument("--kind", choices=("ntk", "mu"), default="ntk")
    p.add_argument("--circuit")
    p.add_argument("--data")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--L", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--d-train", type=int)
    p.add_argument("--norm-kinv", type=float)
    p.add_argument("--norm-y", type=float)
    p.add_argument("--norm-kinv-y", type=float)
    p.add_argument("--uniform-over-X", type=int, nargs="?", const=0, default=None, metavar="SIZE")
    p.add_argument("--pilot", type=int, metavar="N", help="estimate the norms from a pilot Gram with N samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample_size)

    p = sub.add_parser("verify", help="cross-check the stabilizer path against the dense oracle")
    p.add_argument("--quick", action="store_true", help="fewer cases per check")
    p.add_argument("--inject-phase-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="timing sweeps with fitted scaling exponents")
    p.add_argument("--n-values", type=_int_list)
    p.add_argument("--L-values", type=_int_list)
    p.add_argument("--m-values", type=_int_list)
    p.add_argument("--N-values", type=_int_list)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV output (default: stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except PreconditionError as exc:
        print(f"error: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except SingularGramError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SINGULAR


if __name__ == "__main__":
    sys.exit(main())
