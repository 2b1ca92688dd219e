"""End-to-end acceptance checks, shared by the ``selftest`` command and the tests.

Each ``criterion_*`` function returns a :class:`CriterionResult` whose
``details`` hold only deterministic numbers, so two runs with the same seed
serialize to identical bytes.
"""
from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .coherent_sim import (CoherentFunction, KernelSpec, exponent_kernel, kernel_pd_report,
                           log_matrix_element, random_kernel_spec, small_t_generator_check)
from .cpd import cpd_check, dissipator_pd_check, rank_one_negative_perturbation
from .dilation import assemble_pseudo_hilbert, build_dilation, reconstruction_residual
from .germ import BirthForm, GeneratorModel, ScalarPoissonForm, random_dilated_model, scalar_table_model
from .ito_algebra import (ItoQuadruple, embed_extended, flat_via_metric, ito_flat,
                          minkowski_metric)
from .jsonio import dumps
from .krein import krein_flat
from .poisson_mc import SIGMA_BAND, martingale_check, mean_exponent_check, sample_poisson_counts
from .pseudo_poisson import (BirthSpec, eval_birth_solution, martingale_condition_check, norm_bounds_check,
                             random_birth_spec)
from .semigroup import FiniteGroup, MatrixBall, random_contraction

DEFAULT_SEED = 20240


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] criterion {self.number}: {self.name}"

    def payload(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": self.passed,
                "details": self.details}


def _rel(diff: np.ndarray, scale: float) -> float:
    return float(np.linalg.norm(diff) / max(scale, 1e-300))


def criterion_1(seed: int = DEFAULT_SEED, count: int = 1000) -> CriterionResult:
    """Associativity, ♭ anti-homomorphism, embedding functoriality, ``g² = I``."""
    rng = np.random.default_rng(seed)
    assoc = flat = embed = metric = 0.0
    for i in range(count):
        n = i % 5
        a, b, c = (ItoQuadruple.random(n, rng) for _ in range(3))
        Ea, Eb, Ec = embed_extended(a), embed_extended(b), embed_extended(c)
        norms = np.linalg.norm(Ea) * np.linalg.norm(Eb) * np.linalg.norm(Ec)
        assoc = max(assoc, _rel(embed_extended((a * b) * c) - embed_extended(a * (b * c)), norms))
        pair = np.linalg.norm(Ea) * np.linalg.norm(Eb)
        flat = max(flat, _rel(embed_extended(ito_flat(a * b)) - embed_extended(ito_flat(b) * ito_flat(a)), pair))
        flat = max(flat, _rel(embed_extended(ito_flat(a)) - flat_via_metric(Ea), np.linalg.norm(Ea)))
        embed = max(embed, _rel(embed_extended(a * b) - Ea @ Eb, pair))
        g = minkowski_metric(n)
        metric = max(metric, float(np.max(np.abs(g @ g - np.eye(n + 2)))))
    passed = assoc <= 1e-12 and flat <= 1e-12 and embed <= 1e-12 and metric == 0.0
    return CriterionResult(1, "Ito algebra laws", passed, {
        "quadruples": count, "associativity": assoc, "flat_antihomomorphism": flat,
        "embedding": embed, "metric_square": metric})


def criterion_2(seed: int = DEFAULT_SEED) -> CriterionResult:
    """The two-element group with ``λ(s) = -1``."""
    Z2 = FiniteGroup.cyclic(2)
    model = scalar_table_model(Z2, {1: -1.0})
    el = Z2.elements()
    cpd = cpd_check(model, el)
    diss = dissipator_pd_check(model, el)
    dd = build_dilation(model)
    ph = assemble_pseudo_hilbert(dd, model)
    js = ph.jmath[1]
    flat_unitarity = float(np.max(np.abs(krein_flat(js, dd.d) @ js - np.eye(js.shape[0]))))
    recon = reconstruction_residual(ph, model, el)
    j_s = complex(dd.j[1][0, 0])
    checks = {
        "compressed": float(np.max(np.abs(cpd.matrix - np.array([[1.0]])))),
        "dissipator": float(np.max(np.abs(diss.matrix - np.diag([0.0, 2.0])))),
        "gram": float(np.max(np.abs(dd.gram - np.diag([0.0, 2.0])))),
        "j_s": abs(abs(j_s) - 1.0) + abs(j_s + 1.0),
        "l_s": abs(dd.l[1] + 1.0),
        "flat_unitarity": flat_unitarity,
        "reconstruction": recon,
    }
    passed = dd.K_dim == 1 and cpd.verdict and diss.verdict and all(v <= 1e-12 for v in checks.values())
    return CriterionResult(2, "two-element worked example", passed, {
        "K_dim": dd.K_dim, "j_s": j_s, "l_s": dd.l[1], "min_eigenvalue": cpd.min_eigenvalue,
        "errors": checks})


def dilated_suite(seed: int = DEFAULT_SEED, count: int = 100) -> list[GeneratorModel]:
    """Random Dilated models on ``Z_5, Z_6, Z_7`` and ``Q8`` with ``K <= 3``, ``n <= 2``."""
    rng = np.random.default_rng(seed)
    groups = [FiniteGroup.cyclic(5), FiniteGroup.cyclic(6), FiniteGroup.cyclic(7),
              FiniteGroup.quaternion()]
    return [random_dilated_model(groups[i % 4], rng, K_max=3, n_modes=int(rng.integers(0, 3)))
            for i in range(count)]


def criterion_3(seed: int = DEFAULT_SEED, count: int = 100) -> CriterionResult:
    """CPD and dissipator positivity agree on random dilated models and their flips."""
    worst_cpd = worst_diss = worst_recon = 0.0
    failures = []
    for i, model in enumerate(dilated_suite(seed, count)):
        el = model.semigroup.elements()
        a, b = cpd_check(model, el), dissipator_pd_check(model, el)
        ph = assemble_pseudo_hilbert(build_dilation(model), model)
        rec = reconstruction_residual(ph, model, el)
        pert = rank_one_negative_perturbation(model, el)
        a2, b2 = cpd_check(pert.model, el), dissipator_pd_check(pert.model, el)
        worst_cpd = min(worst_cpd, a.min_eigenvalue / max(a.scale, 1.0))
        worst_diss = min(worst_diss, b.min_eigenvalue / max(b.scale, 1.0))
        worst_recon = max(worst_recon, rec)
        if not (a.verdict and b.verdict and rec <= 1e-9 and not a2.verdict and not b2.verdict):
            failures.append(i)
    return CriterionResult(3, "CPD / dissipator equivalence on dilated models", not failures, {
        "models": count, "min_scaled_cpd_eigenvalue": worst_cpd,
        "min_scaled_dissipator_eigenvalue": worst_diss, "max_reconstruction": worst_recon,
        "failures": failures})


def criterion_4(seed: int = DEFAULT_SEED, count: int = 100) -> CriterionResult:
    """Closed-form 2x2 kernel and PSD kernels for random dilated models."""
    # λ(y) = y - 1 on the unit disc
    model = GeneratorModel(MatrixBall(1), 0, BirthForm(BirthSpec(1, 1, [np.array([1.0])], (), 1.0)))
    zero = CoherentFunction.constant(np.zeros(0))
    M = exponent_kernel(model, KernelSpec(1.0, [(zero, 0.0), (zero, 1.0)]))
    e1 = np.exp(-1.0)
    closed = float(np.max(np.abs(M - np.array([[e1, e1], [e1, 1.0]]))))
    small = kernel_pd_report(M)
    rng = np.random.default_rng(seed + 4)
    worst = 0.0
    failures = []
    for i, m in enumerate(dilated_suite(seed, count)):
        for t in (0.1, 1.0):
            spec = random_kernel_spec(rng, m, m.semigroup.elements(), int(rng.integers(1, 7)), t)
            rep = kernel_pd_report(exponent_kernel(m, spec), 1e-8)
            worst = min(worst, rep.min_eigenvalue / max(rep.scale, 1.0))
            if not rep.verdict:
                failures.append([i, t])
    passed = closed <= 1e-12 and small.verdict and not failures
    return CriterionResult(4, "exponent kernels", passed, {
        "closed_form_error": closed, "closed_form_min_eigenvalue": small.min_eigenvalue,
        "min_scaled_eigenvalue": worst, "failures": failures})


def criterion_5(seed: int = DEFAULT_SEED, cases: int = 24, t_small: float = 1e-3) -> CriterionResult:
    """First-order convergence of ``(φ_t - 1)/t`` to the germ."""
    rng = np.random.default_rng(seed + 5)
    models = dilated_suite(seed, cases)
    ratios = []
    for m in models:
        spec = random_kernel_spec(rng, m, m.semigroup.elements(), 3, 1.0)
        a = small_t_generator_check(m, spec, t_small)
        b = small_t_generator_check(m, spec, t_small / 2)
        ratios.append(a / b if b > 0 else float("inf"))
    passed = all(2 / 1.5 <= r <= 2 * 1.5 for r in ratios)
    return CriterionResult(5, "small-time generator limit", passed, {
        "cases": cases, "t_small": t_small, "min_ratio": min(ratios), "max_ratio": max(ratios)})


def criterion_6(seed: int = DEFAULT_SEED, paths: int = 100_000) -> CriterionResult:
    """Poisson exponent with ``α = 1``, ``λ = -1``."""
    start = time.perf_counter()
    model = GeneratorModel(FiniteGroup.cyclic(1), 0, ScalarPoissonForm(lambda y: 1.0, lambda y: -1.0))
    mean = mean_exponent_check(model, 0, 1.0, paths, seed)
    mart = martingale_check(model, 0.5, 1.0, paths, seed + 1)
    counts = sample_poisson_counts(1.0, paths, seed + 2).counts
    p0 = float(np.mean(counts == 0))
    p0_err = float(np.sqrt(np.exp(-1.0) * (1 - np.exp(-1.0)) / paths))
    p0_dev = abs(p0 - np.exp(-1.0)) / p0_err
    seconds = time.perf_counter() - start
    passed = mean.passed and mart.passed and p0_dev <= SIGMA_BAND and seconds < 10.0
    return CriterionResult(6, "classical Poisson exponent", passed, {
        "paths": paths, "mean": mean.estimate, "mean_std_error": mean.std_error,
        "mean_deviation": mean.deviation, "martingale_max_deviation": mart.max_deviation,
        "martingale_bins": len(mart.bins), "zero_fraction": p0, "zero_deviation": p0_dev,
        "under_10s": seconds < 10.0})


def criterion_7(seed: int = DEFAULT_SEED, draws: int = 200) -> CriterionResult:
    """Explicit birth solution against the coherent-vector ODE."""
    rng = np.random.default_rng(seed + 7)
    worst = vacuum = 0.0
    for i in range(draws):
        d, K, n = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(0, 3))
        spec = random_birth_spec(rng, d, K, n, martingale=bool(i % 2 == 0))
        model = GeneratorModel(MatrixBall(d), n, BirthForm(spec))
        f = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        h = 0.5 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
        y = random_contraction(d, rng)
        t = float(rng.uniform(0.05, 2.0))
        a = eval_birth_solution(spec, f, h, y, t)
        b = log_matrix_element(model, CoherentFunction.constant(f), y, CoherentFunction.constant(h), t)
        worst = max(worst, abs(a - b) / max(abs(b), 1.0))
        if martingale_condition_check(spec).mode == "martingale":
            vacuum = max(vacuum, abs(eval_birth_solution(spec, np.zeros(n), np.zeros(n), np.eye(d), t)))
    passed = worst <= 1e-12 and vacuum <= 1e-12
    return CriterionResult(7, "explicit birth solution cross-check", passed, {
        "draws": draws, "max_relative_error": worst, "max_vacuum_log": vacuum})


def criterion_8(seed: int = DEFAULT_SEED, specs: int = 12, samples: int = 200) -> CriterionResult:
    """Exchange-block norm bound over random contractions."""
    rng = np.random.default_rng(seed + 8)
    violations = 0
    worst_margin = -np.inf
    for i in range(specs):
        d, K, n = int(rng.integers(1, 4)), int(rng.integers(1, 4)), int(rng.integers(1, 3))
        rep = norm_bounds_check(random_birth_spec(rng, d, K, n), samples, seed=seed + i)
        violations += rep.violations
        worst_margin = max(worst_margin, rep.exchange_sup - rep.exchange_bound)
    return CriterionResult(8, "birth norm bounds", violations == 0, {
        "specs": specs, "samples": samples, "violations": violations,
        "max_excess": float(worst_margin)})


CRITERIA: dict[int, Callable[..., CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4,
    5: criterion_5, 6: criterion_6, 7: criterion_7, 8: criterion_8,
}


def run_criterion(number: int, seed: int = DEFAULT_SEED) -> CriterionResult:
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            result = CRITERIA[number](seed)
        except Exception as exc:  # a crash counts as a failed criterion
            result = CriterionResult(number, CRITERIA[number].__doc__.splitlines()[0], False,
                                     {"error": f"{type(exc).__name__}: {exc}"})
    result.seconds = time.perf_counter() - start
    return result


def criterion_9(first: dict[int, CriterionResult], seed: int = DEFAULT_SEED) -> CriterionResult:
    """Rerun every component and compare the serialized payloads byte for byte."""
    mismatched = []
    for number, result in first.items():
        again = run_criterion(number, seed)
        if dumps(again.payload()) != dumps(result.payload()):
            mismatched.append(number)
    return CriterionResult(9, "determinism", not mismatched, {
        "components": sorted(first), "mismatched": mismatched})


def run_all(seed: int = DEFAULT_SEED, log: Callable[[str], None] | None = None) -> list[CriterionResult]:
    results = {}
    for number in CRITERIA:
        results[number] = run_criterion(number, seed)
        if log:
            log(results[number].line())
    start = time.perf_counter()
    last = criterion_9(results, seed)
    last.seconds = time.perf_counter() - start
    if log:
        log(last.line())
    return list(results.values()) + [last]
