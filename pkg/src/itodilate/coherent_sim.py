"""Coherent-vector matrix elements of stochastic exponents.

For coherent functions ``f`` and ``h`` the normalized matrix element
``φ_t(f, y, h)`` of the exponent solves a scalar linear ODE whose log-derivative
is ``⟨(1, f(s)) | λ(y) | (1, h(s))⟩``.  Coherent functions here are piecewise
constant, so the log is integrated segment by segment in closed form.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cpd import DEFAULT_TOL, CpdReport, psd_report
from .germ import GeneratorModel

DEFAULT_T_GRID = (0.1, 0.5, 1.0)


@dataclass(frozen=True, eq=False)
class CoherentFunction:
    """Piecewise-constant ``[0, ∞) -> C^n``: ``(duration, value)`` segments then a tail."""

    segments: tuple
    tail: np.ndarray

    def __post_init__(self):
        tail = np.array(self.tail, dtype=complex).reshape(-1)
        segs = []
        for duration, value in self.segments:
            value = np.array(value, dtype=complex).reshape(-1)
            if not duration > 0:
                raise ValueError("segment durations must be positive")
            if value.shape != tail.shape:
                raise ValueError("segment values must match the tail dimension")
            segs.append((float(duration), value))
        object.__setattr__(self, "segments", tuple(segs))
        object.__setattr__(self, "tail", tail)

    @classmethod
    def constant(cls, value) -> "CoherentFunction":
        return cls((), value)

    @property
    def n_modes(self) -> int:
        return self.tail.size

    def breakpoints(self) -> list[float]:
        out, s = [], 0.0
        for duration, _ in self.segments:
            s += duration
            out.append(s)
        return out

    def value_at(self, s: float) -> np.ndarray:
        start = 0.0
        for duration, value in self.segments:
            if start <= s < start + duration:
                return value
            start += duration
        return self.tail


@dataclass
class KernelSpec:
    t: float
    pairs: list  # (CoherentFunction, element)

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("t must be positive")
        dims = {f.n_modes for f, _ in self.pairs}
        if len(dims) > 1:
            raise ValueError("all coherent functions must share a mode count")


def log_matrix_element(model: GeneratorModel, f: CoherentFunction, y, h: CoherentFunction,
                       t: float) -> complex:
    """``∫_0^t ⟨(1, f(s)) | λ(y) | (1, h(s))⟩ ds``; its exponential is ``φ_t(f, y, h)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    n = model.n_modes
    if f.n_modes != n or h.n_modes != n:
        raise ValueError(f"coherent functions must have {n} components")
    lam = model.germ(y)
    cuts = sorted({0.0, float(t)} | {b for b in f.breakpoints() + h.breakpoints() if b < t})
    total = 0.0 + 0.0j
    for a, b in zip(cuts[:-1], cuts[1:]):
        zf = np.concatenate(([1.0], f.value_at(a)))
        zh = np.concatenate(([1.0], h.value_at(a)))
        total += (b - a) * (zf.conj() @ lam @ zh)
    return complex(total)


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    return max(1, int(os.environ.get("ITODILATE_THREADS", "1")))


def exponent_kernel(model: GeneratorModel, spec: KernelSpec, workers: int | None = None) -> np.ndarray:
    """``M_ik = φ_t(f_i, y_i★y_k, f_k)``."""
    S = model.semigroup
    pairs = spec.pairs

    def row(i):
        fi, yi = pairs[i]
        return [np.exp(log_matrix_element(model, fi, S.star_compose(yi, yk), fk, spec.t))
                for fk, yk in pairs]

    nw = _workers(workers)
    if nw == 1:
        rows = [row(i) for i in range(len(pairs))]
    else:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            rows = list(pool.map(row, range(len(pairs))))
    return np.array(rows, dtype=complex).reshape(len(pairs), len(pairs))


def kernel_pd_report(M: np.ndarray, tol: float = DEFAULT_TOL) -> CpdReport:
    M = np.asarray(M, dtype=complex)
    scale = float(np.max(np.abs(M), initial=0.0))
    asym = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    if asym > 1e-8 * max(scale, 1.0):
        raise ValueError(f"kernel is not Hermitian (asymmetry {asym:.3e})")
    return psd_report(M, tol)


def small_t_generator_check(model: GeneratorModel, spec: KernelSpec, t_small: float) -> float:
    """Largest ``|(φ_t - 1)/t - ⟨ζ_f(0)|λ(y)|ζ_h(0)⟩|`` over the kernel pairs."""
    if not 0 < t_small <= 1e-3:
        raise ValueError("t_small must lie in (0, 1e-3]")
    S = model.semigroup
    worst = 0.0
    for fi, yi in spec.pairs:
        for fk, yk in spec.pairs:
            y = S.star_compose(yi, yk)
            log_phi = log_matrix_element(model, fi, y, fk, t_small)
            generator = np.expm1(log_phi) / t_small
            zf = np.concatenate(([1.0], fi.value_at(0.0)))
            zh = np.concatenate(([1.0], fk.value_at(0.0)))
            worst = max(worst, abs(generator - zf.conj() @ model.germ(y) @ zh))
    return float(worst)


def random_coherent_function(rng: np.random.Generator, n: int, segments: int = 2,
                             min_duration: float = 0.01, scale: float = 0.5) -> CoherentFunction:
    def cn():
        return scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)

    segs = [(float(rng.uniform(min_duration, 1.0)), cn()) for _ in range(segments)]
    return CoherentFunction(tuple(segs), cn())


def random_kernel_spec(rng: np.random.Generator, model: GeneratorModel, elements: Sequence,
                       N: int, t: float, segments: int = 2) -> KernelSpec:
    idx = rng.integers(len(elements), size=N)
    pairs = [(random_coherent_function(rng, model.n_modes, segments), elements[i]) for i in idx]
    return KernelSpec(t, pairs)


@dataclass
class ForwardWitness:
    spec: KernelSpec
    weights: np.ndarray
    quadratic_form: float
    report: CpdReport


def forward_witness_search(model: GeneratorModel, elements: Sequence, witness: np.ndarray,
                           t_values: Sequence[float] = (1e-1, 1e-2, 1e-3),
                           tol: float = DEFAULT_TOL) -> ForwardWitness | None:
    """Turn a CPD witness into a kernel over coherent vectors that fails PSD.

    The witness component ``ζ_j = (c_j, v_j)`` at ``y_j`` is spread over the
    constant functions ``0`` (weight ``c_j - Σ_n v_j^n``) and ``e_n`` (weight
    ``v_j^n``); for small ``t`` the kernel form is ``t`` times the CPD form.
    """
    n = model.n_modes
    block = n + 1
    witness = np.asarray(witness, dtype=complex).reshape(len(elements), block)
    funcs = [CoherentFunction.constant(np.zeros(n))] + \
        [CoherentFunction.constant(np.eye(n)[m]) for m in range(n)]
    pairs, weights = [], []
    for y, zeta in zip(elements, witness):
        c, v = zeta[0], zeta[1:]
        pairs.append((funcs[0], y))
        weights.append(c - v.sum())
        for m in range(n):
            pairs.append((funcs[m + 1], y))
            weights.append(v[m])
    weights = np.array(weights)
    for t in t_values:
        spec = KernelSpec(t, pairs)
        M = exponent_kernel(model, spec)
        report = kernel_pd_report(M, tol)
        q = float(np.real(weights.conj() @ M @ weights))
        if not report.verdict:
            return ForwardWitness(spec, weights, q, report)
    return None
