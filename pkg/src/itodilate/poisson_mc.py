"""Monte-Carlo checks for the classical Poisson exponent.

With ``p(t)`` a unit-rate Poisson process the scalar exponent is
``φ_t(y) = (1 + α(y))^{p(t)} e^{t λ(y)}``.  Its mean is ``e^{t(α(y) + λ(y))}``
and, when ``α(1) + λ(1) = 0``, ``m_t = φ_t(1)`` is a martingale.

Counts are drawn by inverting the Poisson cdf with one uniform per time piece.
All uniforms for a run come from one counter-based stream laid out path by
path, so path ``i`` always consumes the same positions of the stream.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coherent_sim import kernel_pd_report
from .germ import GeneratorModel, ModelError, ScalarPoissonForm

log = logging.getLogger(__name__)

MAX_PIECE = 30.0
SIGMA_BAND = 5.0
# Bins with fewer paths have no reliable standard error for a normal band.
MIN_BIN_PATHS = 30


@dataclass
class PoissonRun:
    t: float
    paths: int
    seed: int
    counts: np.ndarray


def _pieces(duration: float) -> list[float]:
    if duration <= 0:
        return []
    n = max(1, math.ceil(duration / MAX_PIECE))
    return [duration / n] * n


def _invert(u: np.ndarray, mu: float) -> np.ndarray:
    """Poisson(mu) quantiles of ``u`` by walking the cdf."""
    k = np.zeros(u.shape, dtype=np.int64)
    p = math.exp(-mu)
    cdf = np.full(u.shape, p)
    active = u > cdf
    j = 0
    while active.any():
        j += 1
        p *= mu / j
        if p == 0.0:
            # The remaining mass is below double precision; stop at the current count.
            break
        k[active] += 1
        cdf[active] += p
        active &= u > cdf
    return k


def _uniforms(seed: int, paths: int, width: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=int(seed)))
    return gen.random((paths, width))


def sample_poisson_increments(times: Sequence[float], M: int, seed: int) -> np.ndarray:
    """Counts ``p(t_1), ..., p(t_m)`` on each of ``M`` paths for increasing ``times``."""
    if M < 1:
        raise ValueError("need at least one path")
    times = [float(x) for x in times]
    if any(x < 0 for x in times) or any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("times must be nonnegative and increasing")
    prev = 0.0
    plan = []
    for x in times:
        plan.append(_pieces(x - prev))
        prev = x
    width = sum(len(p) for p in plan)
    u = _uniforms(seed, M, width) if width else np.zeros((M, 0))
    out = np.zeros((M, len(times)), dtype=np.int64)
    col = 0
    running = np.zeros(M, dtype=np.int64)
    for i, pieces in enumerate(plan):
        for mu in pieces:
            running = running + _invert(u[:, col], mu)
            col += 1
        out[:, i] = running
    return out


def sample_poisson_counts(t: float, M: int, seed: int) -> PoissonRun:
    if t < 0:
        raise ValueError("t must be nonnegative")
    counts = sample_poisson_increments([t], M, seed)[:, 0]
    return PoissonRun(float(t), int(M), int(seed), counts)


def _scalar_maps(model: GeneratorModel):
    if not isinstance(model.form, ScalarPoissonForm):
        raise ModelError("Poisson checks need a scalar Poisson model")
    return model.scalar_functions()


@dataclass
class MeanExponent:
    estimate: complex
    exact: complex
    std_error: float

    @property
    def deviation(self) -> float:
        diff = abs(self.estimate - self.exact)
        if self.std_error == 0:
            return 0.0 if diff <= 1e-12 * max(1.0, abs(self.exact)) else math.inf
        return diff / self.std_error

    @property
    def passed(self) -> bool:
        return self.deviation <= SIGMA_BAND


def _mean_and_error(x: np.ndarray) -> tuple[complex, float]:
    mean = x.mean()
    err = float(np.sqrt(np.mean(np.abs(x - mean) ** 2) / x.size))
    return complex(mean), err


def mean_exponent_check(model: GeneratorModel, y, t: float, M: int, seed: int) -> MeanExponent:
    alpha, lam = _scalar_maps(model)
    a, l = alpha(y), lam(y)
    run = sample_poisson_counts(t, M, seed)
    values = (1 + a) ** run.counts * np.exp(t * l)
    estimate, err = _mean_and_error(values)
    return MeanExponent(estimate, complex(np.exp(t * (a + l))), err)


@dataclass
class MartingaleReport:
    t: float
    s: float
    max_deviation: float
    bins: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    unconditional_mean: complex = 0.0
    unconditional_std_error: float = 0.0
    zero_fraction: float = 0.0
    zero_fraction_std_error: float = 0.0

    @property
    def passed(self) -> bool:
        return self.max_deviation <= SIGMA_BAND


def _standardized(diff: float, err: float) -> float:
    if err > 0:
        return diff / err
    return 0.0 if diff <= 1e-12 else math.inf


def martingale_check(model: GeneratorModel, t: float, s: float, M: int, seed: int,
                     bins: int = 8, min_paths: int = MIN_BIN_PATHS) -> MartingaleReport:
    """Compare ``E[m_s | p(t) = k]`` with ``m_t = (1+α(1))^k e^{t λ(1)}`` per bin ``k``."""
    if not s > t >= 0:
        raise ValueError("need s > t >= 0")
    alpha, lam = _scalar_maps(model)
    unit = model.semigroup.unit
    a, l = alpha(unit), lam(unit)
    if abs(a + l) > 1e-12:
        warnings.warn(f"α(1) + λ(1) = {a + l:.6g} != 0: m_t is not a martingale", stacklevel=2)
    counts = sample_poisson_increments([t, s], M, seed)
    pt, ps = counts[:, 0], counts[:, 1]
    m_s = (1 + a) ** ps * np.exp(s * l)
    worst = 0.0
    rows, skipped = [], []
    for k in range(bins):
        mask = pt == k
        c = int(mask.sum())
        if c < max(min_paths, 2):
            skipped.append(k)
            continue
        mean, err = _mean_and_error(m_s[mask])
        expected = complex((1 + a) ** k * np.exp(t * l))
        dev = _standardized(abs(mean - expected), err)
        worst = max(worst, dev)
        rows.append({"k": k, "count": c, "mean": mean, "expected": expected,
                     "std_error": err, "deviation": dev})
    if skipped:
        log.info("martingale_check skipped sparse bins %s", skipped)
    m_t = (1 + a) ** pt * np.exp(t * l)
    u_mean, u_err = _mean_and_error(m_t)
    zero = float(np.mean(pt == 0))
    zero_err = math.sqrt(max(zero * (1 - zero), 0.0) / M)
    return MartingaleReport(float(t), float(s), worst, rows, skipped, u_mean, u_err, zero, zero_err)


@dataclass
class MeanKernelReport:
    alpha_pd: bool
    kappa: float | None
    estimate: np.ndarray
    max_std_error: float
    min_eigenvalue: float
    passed: bool


def pd_in_mean_check(model: GeneratorModel, elements: Sequence, t: float, M: int, seed: int,
                     kappa_steps: int = 5, tol: float = 1e-9) -> MeanKernelReport:
    """Empirical mean kernel ``[E φ_t(y_i★y_k)]`` against the PD-in-mean criterion.

    ``κ`` is searched over ``{0, |λ(1)|, 2|λ(1)|, ...}``; the first value making
    ``κ + λ`` PD on the sample is reported.
    """
    alpha, lam = _scalar_maps(model)
    S = model.semigroup
    pairs = [[S.star_compose(x, z) for z in elements] for x in elements]
    A = np.array([[1 + alpha(y) for y in row] for row in pairs])
    Lm = np.array([[lam(y) for y in row] for row in pairs])
    alpha_pd = kernel_pd_report(A, tol).verdict
    step = abs(lam(S.unit))
    kappa = None
    for i in range(kappa_steps + 1):
        if kernel_pd_report(i * step + Lm, tol).verdict:
            kappa = i * step
            break
        if step == 0:
            break
    counts = sample_poisson_counts(t, M, seed).counts
    N = len(elements)
    est = np.empty((N, N), dtype=complex)
    worst_err = 0.0
    for i in range(N):
        for k in range(N):
            mean, err = _mean_and_error(A[i, k] ** counts * np.exp(t * Lm[i, k]))
            est[i, k] = mean
            worst_err = max(worst_err, err)
    H = 0.5 * (est + est.conj().T)
    min_eig = float(np.linalg.eigvalsh(H)[0])
    passed = min_eig >= -SIGMA_BAND * worst_err - tol
    return MeanKernelReport(alpha_pd, kappa, est, worst_err, min_eig, bool(passed))
