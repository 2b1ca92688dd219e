"""Batch command-line front end.

Every run prints one JSON document ``{"manifest": ..., "result": ...}`` on
standard output.  Exit status: 0 when all checks pass, 1 when a mathematical
check fails, 2 on usage or input errors.  Logs go to standard error.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .acceptance import DEFAULT_SEED, run_all
from .coherent_sim import (CoherentFunction, KernelSpec, exponent_kernel, forward_witness_search,
                           kernel_pd_report, log_matrix_element, small_t_generator_check)
from .cpd import DEFAULT_TOL, CpdReport, cpd_check, dissipator_pd_check
from .dilation import (DEFAULT_RANK_TOL, DilationError, assemble_pseudo_hilbert, build_dilation,
                       reconstruction_residual)
from .germ import BirthForm, GeneratorModel, ModelError
from .jsonio import (InputError, decode_birth_spec, decode_element, decode_kernel_spec,
                     decode_model, decode_sample, dumps, encode_element, encode_kernel_spec)
from .poisson_mc import SIGMA_BAND, martingale_check, mean_exponent_check, sample_poisson_counts
from .pseudo_poisson import (eval_birth_solution, martingale_condition_check, norm_bounds_check)
from .semigroup import FiniteGroup, MatrixBall, random_contraction

log = logging.getLogger("itodilate")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_KERNEL_TOL = 1e-8
DEFAULT_SAMPLE_COUNT = 6


class UsageError(Exception):
    pass


# -- input loading ------------------------------------------------------------------

def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None


def _file_digest(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_model(args) -> GeneratorModel:
    if not args.model:
        raise UsageError("--model is required")
    return decode_model(_read_json(args.model))


def _load_sample(args, model: GeneratorModel) -> list:
    S = model.semigroup
    if args.sample:
        return decode_sample(S, _read_json(args.sample))
    if isinstance(S, FiniteGroup):
        return S.elements()
    return S.sample_elements(args.count, args.seed)


def _encode_report(report: CpdReport, S) -> dict:
    return {"verdict": report.verdict, "min_eigenvalue": report.min_eigenvalue,
            "scale": report.scale, "tolerance": report.tolerance,
            "threshold": report.threshold, "hermitian_residual": report.hermitian_residual,
            "witness": report.witness,
            "sample": [encode_element(S, y) for y in report.sample],
            "matrix": report.matrix}


# -- commands -----------------------------------------------------------------------

def cmd_check_cpd(args):
    model = _load_model(args)
    sample = _load_sample(args, model)
    report = cpd_check(model, sample, args.tol)
    result = _encode_report(report, model.semigroup)
    if not report.verdict and args.forward:
        found = forward_witness_search(model, sample, report.witness, tol=args.tol)
        result["forward"] = None if found is None else {
            "t": found.spec.t, "weights": found.weights, "quadratic_form": found.quadratic_form,
            "kernel_min_eigenvalue": found.report.min_eigenvalue,
            "spec": encode_kernel_spec(found.spec, model.semigroup)}
    return report.verdict, result, {"tol": args.tol}


def cmd_dissipator_pd(args):
    model = _load_model(args)
    report = dissipator_pd_check(model, _load_sample(args, model), args.tol)
    return report.verdict, _encode_report(report, model.semigroup), {"tol": args.tol}


def _dilate(args):
    model = _load_model(args)
    sample = _load_sample(args, model)
    dd = build_dilation(model, sample, rank_tol=args.rank_tol, tol=args.tol)
    return model, dd, assemble_pseudo_hilbert(dd, model)


def cmd_dilate(args):
    model, dd, ph = _dilate(args)
    S = model.semigroup
    entries = [{"element": encode_element(S, y), "j": dd.j[k], "k": dd.k[k], "l": dd.l[k]}
               for y, k in zip(dd.elements, dd.keys)]
    result = {"K_dim": dd.K_dim, "d": dd.d, "gram": dd.gram, "L_circ": dd.L_circ,
              "L_minus": dd.L_minus, "entries": entries, "residuals": dd.residuals,
              "flat_representation_residual": ph.flat_residual, "metric": ph.G}
    tols = {"tol": args.tol, "rank_tol": args.rank_tol}
    return ph.flat_residual <= 1e-6, result, tols


def cmd_reconstruct(args):
    model, dd, ph = _dilate(args)
    residual = reconstruction_residual(ph, model, dd.elements)
    limit = args.residual_limit
    result = {"K_dim": dd.K_dim, "reconstruction_residual": residual, "limit": limit,
              "elements": len(dd.elements)}
    return residual <= limit, result, {"tol": args.tol, "rank_tol": args.rank_tol,
                                       "residual_limit": limit}


def _kernel_spec(args, model: GeneratorModel) -> KernelSpec:
    if not args.spec:
        raise UsageError("--spec is required")
    spec = decode_kernel_spec(_read_json(args.spec), model)
    if args.t is not None:
        spec = KernelSpec(args.t, spec.pairs)
    return spec


def cmd_kernel(args):
    model = _load_model(args)
    spec = _kernel_spec(args, model)
    tol = args.tol if args.tol_given else DEFAULT_KERNEL_TOL
    M = exponent_kernel(model, spec)
    report = kernel_pd_report(M, tol)
    result = _encode_report(report, model.semigroup)
    result["matrix"] = M
    result["t"] = spec.t
    return report.verdict, result, {"tol": tol}


def cmd_small_t(args):
    model = _load_model(args)
    spec = _kernel_spec(args, model)
    t_small = args.t_small
    a = small_t_generator_check(model, spec, t_small)
    b = small_t_generator_check(model, spec, t_small / 2)
    ratio = a / b if b > 0 else (1.0 if a == 0 else float("inf"))
    first_order = a == 0 or 2 / 1.5 <= ratio <= 2 * 1.5
    result = {"t_small": t_small, "deviation": a, "deviation_half": b, "ratio": ratio,
              "first_order": first_order}
    return first_order, result, {"ratio_band": [2 / 1.5, 3.0]}


def cmd_poisson_mc(args):
    model = _load_model(args)
    t = 1.0 if args.t is None else args.t
    y = model.semigroup.unit if args.y is None else decode_element(model.semigroup, json.loads(args.y))
    mean = mean_exponent_check(model, y, t, args.paths, args.seed)
    counts = sample_poisson_counts(t, args.paths, args.seed).counts
    p0 = float(np.mean(counts == 0))
    p0_exact = float(np.exp(-t))
    p0_err = float(np.sqrt(p0_exact * (1 - p0_exact) / args.paths))
    p0_dev = abs(p0 - p0_exact) / p0_err if p0_err > 0 else (0.0 if p0 == p0_exact else float("inf"))
    result = {"t": t, "paths": args.paths, "estimate": mean.estimate, "exact": mean.exact,
              "std_error": mean.std_error, "deviation": mean.deviation,
              "count_mean": float(counts.mean()), "zero_fraction": p0,
              "zero_fraction_exact": p0_exact, "zero_fraction_deviation": p0_dev}
    passed = mean.passed and p0_dev <= SIGMA_BAND
    return passed, result, {"sigma_band": SIGMA_BAND}


def cmd_martingale(args):
    model = _load_model(args)
    t = 0.5 if args.t is None else args.t
    rep = martingale_check(model, t, args.s, args.paths, args.seed, args.bins)
    result = {"t": rep.t, "s": rep.s, "max_deviation": rep.max_deviation, "bins": rep.bins,
              "skipped_bins": rep.skipped, "unconditional_mean": rep.unconditional_mean,
              "unconditional_std_error": rep.unconditional_std_error}
    return rep.passed, result, {"sigma_band": SIGMA_BAND}


def cmd_birth_verify(args):
    if args.spec:
        spec = decode_birth_spec(_read_json(args.spec))
    else:
        model = _load_model(args)
        if not isinstance(model.form, BirthForm):
            raise InputError("birth-verify needs a birth model or --spec")
        spec = model.form.spec
    model = GeneratorModel(MatrixBall(spec.d), spec.n_modes, BirthForm(spec))
    cond = martingale_condition_check(spec)
    bounds = norm_bounds_check(spec, args.samples, args.seed)
    rng = np.random.default_rng(args.seed)
    n = spec.n_modes
    worst = 0.0
    for _ in range(args.draws):
        f = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        h = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        y = random_contraction(spec.d, rng)
        t = float(rng.uniform(0.05, 2.0))
        a = eval_birth_solution(spec, f, h, y, t)
        b = log_matrix_element(model, CoherentFunction.constant(f), y, CoherentFunction.constant(h), t)
        worst = max(worst, abs(a - b) / max(abs(b), 1.0))
    t = 1.0 if args.t is None else args.t
    vacuum = abs(eval_birth_solution(spec, np.zeros(n), np.zeros(n), np.eye(spec.d), t))
    passed = bounds.passed and worst <= args.oracle_tol and (
        cond.mode != "martingale" or vacuum <= args.oracle_tol)
    result = {"martingale_condition": cond.to_dict(), "norm_bounds": bounds.to_dict(),
              "cross_oracle_draws": args.draws, "cross_oracle_max_relative_error": worst,
              "vacuum_log": vacuum, "vacuum_t": t}
    return passed, result, {"oracle_tol": args.oracle_tol, "bound_tol": bounds.tolerance}


def cmd_selftest(args):
    results = run_all(args.seed, log=lambda line: print(line, file=sys.stderr))
    failures = [r.number for r in results if not r.passed]
    result = {"criteria": [r.payload() for r in results], "failures": failures,
              "passed": len(results) - len(failures), "total": len(results)}
    return not failures, result, {}


COMMANDS = {
    "check-cpd": cmd_check_cpd,
    "dissipator-pd": cmd_dissipator_pd,
    "dilate": cmd_dilate,
    "reconstruct": cmd_reconstruct,
    "kernel": cmd_kernel,
    "small-t": cmd_small_t,
    "poisson-mc": cmd_poisson_mc,
    "martingale": cmd_martingale,
    "birth-verify": cmd_birth_verify,
    "selftest": cmd_selftest,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="itodilate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--model", help="model JSON file")
    parser.add_argument("--sample", help="sample JSON file (list of elements)")
    parser.add_argument("--spec", help="kernel spec or birth spec JSON file")
    parser.add_argument("--tol", type=float, default=None, help=f"eigenvalue tolerance (default {DEFAULT_TOL:g})")
    parser.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    parser.add_argument("--residual-limit", type=float, default=1e-9)
    parser.add_argument("--t", type=float, default=None, help="time horizon")
    parser.add_argument("--s", type=float, default=1.0, help="later time for martingale")
    parser.add_argument("--t-small", type=float, default=1e-3)
    parser.add_argument("--y", default=None, help="element as a JSON literal")
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--bins", type=int, default=8)
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED)
    parser.add_argument("--count", type=int, default=DEFAULT_SAMPLE_COUNT,
                        help="sample size for infinite semigroups without --sample")
    parser.add_argument("--samples", type=int, default=200, help="contractions for birth-verify")
    parser.add_argument("--draws", type=int, default=200, help="cross-oracle draws for birth-verify")
    parser.add_argument("--oracle-tol", type=float, default=1e-12)
    parser.add_argument("--forward", action="store_true",
                        help="on a failed CPD check, search a failing coherent kernel")
    parser.add_argument("--out", help="also write the report to this file")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _manifest(argv, args, tolerances, duration, summary) -> dict:
    inputs = {}
    for name in ("model", "sample", "spec"):
        path = getattr(args, name, None) if args is not None else None
        if path:
            try:
                inputs[name] = {"path": path, "sha256": _file_digest(path)}
            except OSError:
                inputs[name] = {"path": path}
    return {"command": getattr(args, "command", None), "argv": list(argv), "inputs": inputs,
            "seed": getattr(args, "seed", None), "tolerances": tolerances,
            "version": __version__, "duration_seconds": duration, "summary": summary}


def execute(argv) -> tuple[int, str]:
    """Run one command; returns ``(exit code, JSON document)``."""
    start = time.perf_counter()
    args = None
    tolerances: dict = {}
    try:
        args = build_parser().parse_args(list(argv))
        args.tol_given = args.tol is not None
        if args.tol is None:
            args.tol = DEFAULT_TOL
        for name in ("tol", "rank_tol"):
            if not getattr(args, name) > 0:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")
        if args.paths < 1:
            raise UsageError("--paths must be at least 1")
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            passed, result, tolerances = COMMANDS[args.command](args)
        code = EXIT_OK if passed else EXIT_FAIL
        doc = {"result": result}
        summary = {"passed": bool(passed)}
    except (UsageError, InputError, ModelError) as exc:
        code, doc, summary = EXIT_USAGE, {"error": str(exc)}, {"error": type(exc).__name__}
    except DilationError as exc:
        code, doc, summary = EXIT_FAIL, {"error": str(exc)}, {"passed": False}
    except (ValueError, TypeError) as exc:
        code, doc, summary = EXIT_USAGE, {"error": str(exc)}, {"error": type(exc).__name__}
    summary["exit_code"] = code
    manifest = _manifest(argv, args, tolerances, time.perf_counter() - start, summary)
    return code, dumps({"manifest": manifest, **doc})


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    verbose = "-v" in argv or "--verbose" in argv
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.captureWarnings(True)
    code, text = execute(argv)
    sys.stdout.write(text)
    try:
        out = build_parser().parse_known_args(list(argv))[0].out
    except UsageError:
        out = None
    if out:
        Path(out).write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
