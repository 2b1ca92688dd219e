"""Constructive dilation of a CPD germ.

:func:`build_dilation` factorizes the dissipator kernel ``[Δ(x, z)]`` over a
★-closed sample as a Gram matrix ``V(x)† V(z)`` with
``V(z) = [k(z) | j(z) L°]``.  This yields the cocycle ``k``, the mode vectors
``L°`` and, by solving ``j(x)† V(z) = V(x★z) - [k(x★) | 0]``, the
representation ``j``.  :func:`assemble_pseudo_hilbert` packs the result into
block operators on ``C ⊕ K ⊕ C`` with the indefinite metric ``G``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .cpd import DEFAULT_TOL
from .germ import BirthForm, DilatedForm, GeneratorModel, dissipator_kernel
from .krein import L_flat, L_matrix, jmath_matrix, krein_flat, krein_metric
from .pseudo_poisson import birth_dilation
from .semigroup import MatrixBall, is_star_closed, star_closure

log = logging.getLogger(__name__)

DEFAULT_RANK_TOL = 1e-10
RESIDUAL_LIMIT = 1e-6
CLOSURE_CAP = 512


class DilationError(ValueError):
    """The sample or the model does not admit a dilation."""


@dataclass
class DilationData:
    K_dim: int
    d: float
    elements: list
    j: dict
    k: dict
    l: dict
    L_circ: np.ndarray
    L_minus: np.ndarray
    gram: np.ndarray
    residuals: dict = field(default_factory=dict)
    keys: list = field(default_factory=list)

    def kstar(self, semigroup, y) -> np.ndarray:
        return self.k[semigroup.key(semigroup.star(y))].conj()

    def as_form(self) -> DilatedForm:
        return DilatedForm(self.d, self.j, self.k, self.l, self.L_circ, self.L_minus)


@dataclass
class PseudoHilbert:
    E_dim: int
    d: float
    G: np.ndarray
    jmath: dict
    L: np.ndarray
    flat_residual: float

    def L_flat(self) -> np.ndarray:
        return L_flat(self.L, self.d)


def _closed_sample(model: GeneratorModel, sample: Sequence | None, cap: int) -> list:
    S = model.semigroup
    if sample is None:
        if not hasattr(S, "elements"):
            raise DilationError("a sample is required for infinite semigroups")
        sample = S.elements()
    sample = [S.validate(y) for y in sample]
    if is_star_closed(S, sample) and any(S.equal(y, S.unit) for y in sample):
        return sample
    try:
        closed = star_closure(S, sample, cap)
    except ValueError as exc:
        raise DilationError(str(exc)) from None
    log.info("closed sample of %d elements to %d", len(sample), len(closed))
    return closed


def build_dilation(model: GeneratorModel, sample: Sequence | None = None,
                   rank_tol: float = DEFAULT_RANK_TOL, tol: float = DEFAULT_TOL,
                   cap: int = CLOSURE_CAP) -> DilationData:
    S = model.semigroup
    elements = _closed_sample(model, sample, cap)
    keys = [S.key(y) for y in elements]
    N = len(elements)
    n = model.n_modes
    block = n + 1

    germs = {k: model.germ(y) for k, y in zip(keys, elements)}
    lam1 = germs[S.key(S.unit)]
    d = float(lam1[0, 0].real)
    l_tab = {k: complex(germs[k][0, 0] - d) for k in keys}
    gram = np.array([[l_tab[S.key(S.star_compose(x, z))] - l_tab[S.key(S.star(x))] - l_tab[kz]
                      for kz, z in zip(keys, elements)] for x in elements])

    D = dissipator_kernel(model, elements)
    D = 0.5 * (D + D.conj().T)
    w, U = np.linalg.eigh(D)
    scale = max(float(np.max(np.abs(D), initial=0.0)), 1.0)
    if w.size and w[0] < -tol * scale:
        raise DilationError(f"dissipator kernel not PSD (min eigenvalue {w[0]:.3e}); "
                            "model is not CPD on this sample")
    top = float(w[-1]) if w.size else 0.0
    keep = w > max(rank_tol * top, 0.0) if top > 0 else np.zeros_like(w, dtype=bool)
    w_r = w[keep][::-1]
    U_r = U[:, keep][:, ::-1]
    for c in range(U_r.shape[1]):
        col = U_r[:, c]
        p = np.flatnonzero(np.abs(col) > 1e-8 * np.abs(col).max())[0]
        U_r[:, c] = col * (abs(col[p]) / col[p])
    K = int(keep.sum())
    F = np.sqrt(w_r)[:, None] * U_r.conj().T  # K x N(1+n), F† F = D on the kept spectrum
    V = {k: F[:, i * block:(i + 1) * block] for i, k in enumerate(keys)}
    k_tab = {k: V[k][:, 0].copy() for k in keys}
    unit_key = S.key(S.unit)
    L_circ = V[unit_key][:, 1:].copy()
    L_minus = lam1[0, 1:].copy()

    j_tab = {}
    F_pinv = F.conj().T / w_r[None, :] if K else np.zeros((N * block, 0))
    for x, kx in zip(elements, keys):
        ks = S.key(S.star(x))
        R = np.empty_like(F)
        for i, z in enumerate(elements):
            Vxz = V[S.key(S.star_compose(x, z))].copy()
            Vxz[:, 0] -= k_tab[ks]
            R[:, i * block:(i + 1) * block] = Vxz
        j_adj = R @ F_pinv
        j_tab[kx] = j_adj.conj().T

    dd = DilationData(K, d, elements, j_tab, k_tab, l_tab, L_circ, L_minus, gram, keys=keys)
    dd.residuals = dilation_residuals(dd, S)
    worst = max(dd.residuals.values(), default=0.0)
    if worst > RESIDUAL_LIMIT:
        raise DilationError(f"dilation residuals too large: {dd.residuals}")
    log.info("dilation K_dim=%d residuals=%s", K, dd.residuals)
    return dd


def dilation_residuals(dd: DilationData, S) -> dict:
    """Representation, cocycle and coboundary residuals over the sample."""
    rep = cocycle = coboundary = 0.0
    K = dd.K_dim
    unit = S.key(S.unit)
    rep = float(np.linalg.norm(dd.j[unit] - np.eye(K))) if K else 0.0
    for x in dd.elements:
        kx, ks = S.key(x), S.key(S.star(x))
        for z in dd.elements:
            kz, kxz = S.key(z), S.key(S.star_compose(x, z))
            if K:
                rep = max(rep, float(np.linalg.norm(dd.j[kxz] - dd.j[kx].conj().T @ dd.j[kz])))
                cocycle = max(cocycle, float(np.linalg.norm(
                    dd.k[kxz] - dd.j[kx].conj().T @ dd.k[kz] - dd.k[ks])))
            # k*(x★) = k(x)†
            coboundary = max(coboundary, abs(
                dd.l[kxz] - dd.l[kz] - dd.l[ks] - dd.k[kx].conj() @ dd.k[kz]))
    return {"rep": rep, "cocycle": cocycle, "coboundary": coboundary}


def assemble_pseudo_hilbert(dd: DilationData, model: GeneratorModel) -> PseudoHilbert:
    S = model.semigroup
    G = krein_metric(dd.K_dim, dd.d)
    jm = {}
    for y, key in zip(dd.elements, dd.keys):
        jm[key] = jmath_matrix(dd.j[key], dd.k[key], dd.kstar(S, y), dd.l[key])
    worst = 0.0
    for x in dd.elements:
        for z in dd.elements:
            lhs = jm[S.key(S.star_compose(x, z))]
            rhs = krein_flat(jm[S.key(x)], dd.d) @ jm[S.key(z)]
            worst = max(worst, float(np.linalg.norm(lhs - rhs)))
    L = L_matrix(dd.L_circ, dd.L_minus)
    return PseudoHilbert(dd.K_dim + 2, dd.d, G, jm, L, worst)


def reconstruction_residual(ph: PseudoHilbert, model: GeneratorModel, sample: Sequence) -> float:
    """``max_y ‖L♭ ȷ(y) L - λ(y)‖`` over the sample."""
    S = model.semigroup
    Lf = ph.L_flat()
    worst = 0.0
    for y in sample:
        approx = Lf @ ph.jmath[S.key(y)] @ ph.L
        worst = max(worst, float(np.linalg.norm(approx - model.germ(y))))
    return worst


def dilated_model(dd: DilationData, model: GeneratorModel) -> GeneratorModel:
    """The Dilated-form model carried by a built dilation."""
    return GeneratorModel(model.semigroup, model.n_modes, dd.as_form())


@dataclass
class BirthDecomposition:
    kappa: np.ndarray
    elements: list
    phi: list
    phi_zero_residual: float
    pd_min_eigenvalue: float
    pd_verdict: bool
    coboundary_residual: float | None = None


def birth_decomposition(model: GeneratorModel, sample: Sequence | None = None,
                        count: int = 8, seed: int = 0,
                        tol: float = DEFAULT_TOL) -> BirthDecomposition:
    """Split ``λ = φ - κ`` with ``κ = -λ(0)`` so that ``φ(0) = 0``."""
    S = model.semigroup
    if not isinstance(S, MatrixBall):
        raise ValueError("birth decomposition needs a semigroup with a zero element")
    kappa = -model.germ(S.zero)
    if sample is None:
        sample = S.sample_elements(count, seed) + [S.zero]
    phi = [model.germ(y) + kappa for y in sample]
    phi_zero = float(np.linalg.norm(model.germ(S.zero) + kappa))
    blocks = np.block([[model.germ(S.star_compose(x, z)) + kappa for z in sample] for x in sample])
    blocks = 0.5 * (blocks + blocks.conj().T)
    min_eig = float(np.linalg.eigvalsh(blocks)[0])
    scale = max(float(np.max(np.abs(blocks))), 1.0)
    cob = None
    if isinstance(model.form, BirthForm):
        cob = birth_coboundary_residual(model, sample)
    return BirthDecomposition(kappa, list(sample), phi, phi_zero, min_eig,
                              bool(min_eig >= -tol * scale), cob)


def birth_coboundary_residual(model: GeneratorModel, sample: Sequence) -> float:
    """``max_y |l(y) - (ς† j(y) ς - ς† ς)|`` with ``l = λ - λ(1)`` for birth models."""
    spec = model.form.spec
    j, sigma, _ = birth_dilation(spec)
    d = model.germ(model.semigroup.unit)[0, 0]
    worst = 0.0
    for y in sample:
        l = model.germ(y)[0, 0] - d
        expected = sigma.conj() @ j(y) @ sigma - sigma.conj() @ sigma
        worst = max(worst, abs(l - expected))
    return worst


def gram_spectrum(gram: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(0.5 * (gram + gram.conj().T))


def source_gram(form: DilatedForm, semigroup, elements: Sequence) -> np.ndarray:
    """``[k(x)† k(z)]`` from the cocycle of a Dilated model."""
    return np.array([[form.k[semigroup.key(x)].conj() @ form.k[semigroup.key(z)]
                      for z in elements] for x in elements])


def summarize(dd: DilationData) -> dict[str, Any]:
    return {"K_dim": dd.K_dim, "d": dd.d, "residuals": dict(dd.residuals)}
