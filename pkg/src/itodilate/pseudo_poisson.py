"""Linear birth generators over operator-ball semigroups.

A :class:`BirthSpec` fixes vectors ``ς^k`` and ``ς_n^k`` in the tensor powers
``h^{⊗k}`` of ``h = C^d``.  With ``J(y) = ⊕_k y^{⊗k}`` the birth map is the
Gram-type block matrix

    φ(y) = S† J(y) S,   S = [ς, ς_1, ..., ς_n]   (ς has no k = 0 part)

and the germ is ``λ(y) = φ(y) - [[κ, κ_•], [κ_•†, 0]]``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import block_diag

from .semigroup import random_contraction

MAX_TENSOR_POWER = 4
MAX_BASE_DIM = 3


@dataclass(frozen=True, eq=False)
class BirthSpec:
    """Tensor-power birth data.

    ``sigma[k-1]`` is ``ς^k`` (length ``d**k``) for ``k = 1..K_max``;
    ``sigma_modes[n][k]`` is ``ς_n^k`` for ``k = 0..K_max``.
    """

    d: int
    K_max: int
    sigma: tuple
    sigma_modes: tuple = ()
    kappa: float = 0.0
    kappa_modes: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        if self.K_max < 1:
            raise ValueError("K_max must be at least 1")
        if self.d < 1:
            raise ValueError("base dimension must be positive")
        if self.K_max > MAX_TENSOR_POWER or self.d > MAX_BASE_DIM:
            raise ValueError(f"tensor powers limited to K_max <= {MAX_TENSOR_POWER}, "
                             f"d <= {MAX_BASE_DIM}")
        sigma = tuple(np.array(s, dtype=complex).reshape(-1) for s in self.sigma)
        if len(sigma) != self.K_max:
            raise ValueError(f"need {self.K_max} vectors sigma^k, got {len(sigma)}")
        for k, s in enumerate(sigma, start=1):
            if s.shape != (self.d ** k,):
                raise ValueError(f"sigma^{k} must have length {self.d ** k}")
        modes = []
        for n, row in enumerate(self.sigma_modes):
            row = tuple(np.array(s, dtype=complex).reshape(-1) for s in row)
            if len(row) != self.K_max + 1:
                raise ValueError(f"mode {n} needs sigma_n^k for k = 0..{self.K_max}")
            for k, s in enumerate(row):
                if s.shape != (self.d ** k,):
                    raise ValueError(f"sigma_{n}^{k} must have length {self.d ** k}")
            modes.append(row)
        kappa_modes = np.array(self.kappa_modes, dtype=complex).reshape(-1)
        if kappa_modes.shape != (len(modes),):
            raise ValueError("kappa_modes must have one entry per mode")
        if not np.isreal(self.kappa):
            raise ValueError("kappa must be real")
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "sigma_modes", tuple(modes))
        object.__setattr__(self, "kappa_modes", kappa_modes)
        object.__setattr__(self, "kappa", float(np.real(self.kappa)))

    @property
    def n_modes(self) -> int:
        return len(self.sigma_modes)

    def stacked(self, k: int) -> np.ndarray:
        """Columns ``[ς^k, ς_1^k, ..., ς_n^k]`` of length ``d**k``."""
        first = np.zeros(1, dtype=complex) if k == 0 else self.sigma[k - 1]
        cols = [first] + [row[k] for row in self.sigma_modes]
        return np.stack(cols, axis=1)


def tensor_powers(y: np.ndarray, K_max: int) -> list[np.ndarray]:
    y = np.asarray(y, dtype=complex)
    out = [np.ones((1, 1), dtype=complex)]
    for _ in range(K_max):
        out.append(np.kron(out[-1], y))
    return out


def _check_contraction(spec: BirthSpec, y) -> np.ndarray:
    y = np.asarray(y, dtype=complex)
    if y.ndim == 0:
        y = y.reshape(1, 1)
    if y.shape != (spec.d, spec.d):
        raise ValueError(f"expected a {spec.d}x{spec.d} matrix, got {y.shape}")
    if np.linalg.norm(y, 2) > 1 + 1e-12:
        raise ValueError("argument must be a contraction")
    return y


def birth_phi(spec: BirthSpec, y) -> np.ndarray:
    """The ``(1+n) x (1+n)`` birth matrix ``φ(y)``."""
    y = _check_contraction(spec, y)
    powers = tensor_powers(y, spec.K_max)
    return sum(spec.stacked(k).conj().T @ powers[k] @ spec.stacked(k)
               for k in range(spec.K_max + 1))


def kappa_matrix(spec: BirthSpec) -> np.ndarray:
    n = spec.n_modes
    kap = np.zeros((n + 1, n + 1), dtype=complex)
    kap[0, 0] = spec.kappa
    kap[0, 1:] = spec.kappa_modes
    kap[1:, 0] = spec.kappa_modes.conj()
    return kap


def germ_from_birth(spec: BirthSpec, y) -> np.ndarray:
    return birth_phi(spec, y) - kappa_matrix(spec)


def birth_dilation(spec: BirthSpec):
    """Cocycle data on ``K = ⊕_{k=0}^{K_max} h^{⊗k}``.

    Returns ``(j, sigma, L_circ)`` with ``j`` a callable ``y -> ⊕ y^{⊗k}``.
    """
    sigma = np.concatenate([np.zeros(1, dtype=complex)] + list(spec.sigma))
    L_circ = np.stack([np.concatenate(row) for row in spec.sigma_modes], axis=1) \
        if spec.n_modes else np.zeros((sigma.size, 0), dtype=complex)

    def j(y):
        return block_diag(*tensor_powers(_check_contraction(spec, y), spec.K_max))

    return j, sigma, L_circ


def eval_birth_solution(spec: BirthSpec, f, h, y, t: float, detail: bool = False):
    """Log of the normalized coherent matrix element of the explicit solution.

    The solution is the ordered product ``V_t† exp[A_•^+ φ^•] φ_•^•^{A_•^•}
    exp[φ_• A_-^•] V_t exp[t φ]``.  Between exponential vectors of the constant
    functions ``f`` and ``h`` on ``[0, t]`` each factor acts in closed form:
    annihilation exponentials multiply by ``exp(t c·h)``, creation exponentials
    shift the ket, second quantization maps ``h`` to ``X h``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    n = spec.n_modes
    f = np.asarray(f, dtype=complex).reshape(-1)
    h = np.asarray(h, dtype=complex).reshape(-1)
    if f.shape != (n,) or h.shape != (n,):
        raise ValueError("eval_birth_solution supports constant coherent functions only")
    phi = birth_phi(spec, y)
    phi_scalar, phi_row, phi_col, phi_ex = phi[0, 0], phi[0, 1:], phi[1:, 0], phi[1:, 1:]
    kap, kap_row = spec.kappa, spec.kappa_modes
    parts = {
        # V_t e(h) = exp(-t κ_• h - t κ / 2) e(h)
        "V": -t * (kap_row @ h) - 0.5 * t * kap,
        # exp[φ_• A_-^•(t)] e(h) = exp(t φ_• h) e(h)
        "annihilation": t * (phi_row @ h),
        # φ_•^•^{A_•^•(t)} e(h) = e(φ_•^• h on [0, t]); overlap change relative to e(h)
        "second_quantization": t * (f.conj() @ phi_ex @ h - f.conj() @ h),
        # exp[A_•^+(t) φ^•] shifts the ket by φ^• on [0, t]
        "creation": t * (f.conj() @ phi_col),
        # ⟨e(f)| V_t† = conj of V_t e(f)
        "V_dagger": -t * (f.conj() @ kap_row.conj()) - 0.5 * t * kap,
        # overlap ⟨e(f)|e(h)⟩ restricted to [0, t]
        "overlap": t * (f.conj() @ h),
        "scalar": t * phi_scalar,
    }
    total = complex(sum(parts.values()))
    if detail:
        return total, {k: complex(v) for k, v in parts.items()}
    return total


@dataclass
class MartingaleCondition:
    lhs: float
    rhs: float
    mode: str

    def to_dict(self):
        return {"lhs": self.lhs, "rhs": self.rhs, "mode": self.mode}


def martingale_condition_check(spec: BirthSpec, rtol: float = 1e-12) -> MartingaleCondition:
    """Compare ``Σ_k ‖ς^k‖²`` with ``κ``."""
    lhs = float(sum(np.vdot(s, s).real for s in spec.sigma))
    rhs = spec.kappa
    if abs(lhs - rhs) <= rtol * max(1.0, abs(rhs)):
        mode = "martingale"
    elif lhs <= rhs:
        mode = "submartingale"
    else:
        mode = "none"
    return MartingaleCondition(lhs, rhs, mode)


@dataclass
class NormBoundsReport:
    samples: int
    exchange_bound: float
    exchange_sup: float
    scalar_sup: float
    row_sup: float
    violations: int
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.violations == 0 and np.isfinite(self.scalar_sup)

    def to_dict(self):
        return {"samples": self.samples, "exchange_bound": self.exchange_bound,
                "exchange_sup": self.exchange_sup, "scalar_sup": self.scalar_sup,
                "row_sup": self.row_sup, "violations": self.violations,
                "tolerance": self.tolerance, "passed": self.passed}


def norm_bounds_check(spec: BirthSpec, sample_count: int, seed: int = 0,
                      tol: float = 1e-9) -> NormBoundsReport:
    """Sample contractions and check ``‖λ_•^•(y)‖ <= ‖λ_•^•(1)‖``."""
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)

    def opnorm(m):
        return float(np.linalg.norm(m, 2)) if m.size else 0.0

    bound = opnorm(germ_from_birth(spec, np.eye(spec.d))[1:, 1:])
    ex_sup = scalar_sup = row_sup = 0.0
    violations = 0
    for _ in range(sample_count):
        lam = germ_from_birth(spec, random_contraction(spec.d, rng))
        ex = opnorm(lam[1:, 1:])
        ex_sup = max(ex_sup, ex)
        scalar_sup = max(scalar_sup, abs(lam[0, 0]))
        row_sup = max(row_sup, float(np.linalg.norm(lam[0, 1:])))
        violations += ex > bound + tol
    return NormBoundsReport(sample_count, bound, ex_sup, scalar_sup, row_sup,
                            int(violations), tol)


def random_birth_spec(rng: np.random.Generator, d: int, K_max: int, n_modes: int,
                      martingale: bool = True, scale: float = 0.6) -> BirthSpec:
    def cn(size):
        return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) \
            * scale / np.sqrt(2 * size)

    sigma = [cn(d ** k) for k in range(1, K_max + 1)]
    modes = [[cn(d ** k) for k in range(K_max + 1)] for _ in range(n_modes)]
    norm2 = float(sum(np.vdot(s, s).real for s in sigma))
    kappa = norm2 if martingale else norm2 + rng.uniform(0.0, 1.0)
    return BirthSpec(d, K_max, sigma, modes, kappa, cn(n_modes) if n_modes else np.zeros(0))


def birth_phi_block_kernel(spec: BirthSpec, elements: Sequence[np.ndarray]) -> np.ndarray:
    """Block matrix ``[φ(y_i† y_k)]`` over a sample of contractions."""
    rows = [np.hstack([birth_phi(spec, yi.conj().T @ yk) for yk in elements]) for yi in elements]
    return np.vstack(rows) if rows else np.zeros((0, 0))
