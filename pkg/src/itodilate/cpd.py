"""Positive and conditionally positive definiteness tests on finite samples."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .germ import GeneratorModel, dissipator_kernel, germ_kernel, perturbed_table_model
from .semigroup import FiniteGroup

DEFAULT_TOL = 1e-9


@dataclass
class CpdReport:
    verdict: bool
    min_eigenvalue: float
    scale: float
    tolerance: float
    witness: np.ndarray
    sample: list = field(default_factory=list)
    hermitian_residual: float = 0.0
    matrix: np.ndarray | None = None

    @property
    def threshold(self) -> float:
        return -self.tolerance * max(self.scale, 1.0)


def psd_report(M: np.ndarray, tol: float = DEFAULT_TOL, basis: np.ndarray | None = None,
               sample: Sequence = (), scale: float | None = None) -> CpdReport:
    """PSD verdict for ``M`` (optionally compressed to the columns of ``basis``).

    The verdict uses the smallest eigenvalue of the Hermitian part; the
    witness is returned in the coordinates of ``M``.
    """
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    M = np.asarray(M, dtype=complex)
    herm_res = float(np.max(np.abs(M - M.conj().T), initial=0.0))
    if scale is None:
        scale = float(np.max(np.abs(M), initial=0.0))
    C = M if basis is None else basis.conj().T @ M @ basis
    C = 0.5 * (C + C.conj().T)
    if C.shape[0] == 0:
        witness = np.zeros(M.shape[0], dtype=complex)
        return CpdReport(True, 0.0, scale, tol, witness, list(sample), herm_res, C)
    w, V = np.linalg.eigh(C)
    witness = V[:, 0] if basis is None else basis @ V[:, 0]
    # Deterministic phase: first largest component real and positive.
    p = np.argmax(np.round(np.abs(witness), 12))
    witness = witness * (abs(witness[p]) / witness[p])
    min_eig = float(w[0])
    verdict = bool(min_eig >= -tol * max(scale, 1.0))
    return CpdReport(verdict, min_eig, scale, tol, witness, list(sample), herm_res, C)


def constraint_basis(N: int, n_modes: int) -> np.ndarray:
    """Orthonormal basis of ``{ζ : Σ_j ζ_j^scalar = 0}`` in ``C^{N(1+n)}``.

    Scalar part: orthonormalized differences ``(δ_j - δ_{j+1})/√2``; mode
    coordinates are free.
    """
    block = n_modes + 1
    dim = N * block
    cols = []
    if N > 1:
        diffs = np.zeros((N, N - 1))
        for j in range(N - 1):
            diffs[j, j] = 1 / np.sqrt(2)
            diffs[j + 1, j] = -1 / np.sqrt(2)
        Q, _ = np.linalg.qr(diffs)
        for c in range(N - 1):
            col = np.zeros(dim)
            col[0::block] = Q[:, c]
            cols.append(col)
    for i in range(N):
        for m in range(1, block):
            col = np.zeros(dim)
            col[i * block + m] = 1.0
            cols.append(col)
    return np.array(cols).T.reshape(dim, len(cols)).astype(complex)


def cpd_check(model: GeneratorModel, elements: Sequence, tol: float = DEFAULT_TOL) -> CpdReport:
    """CPD test of the germ kernel ``[λ(y_i★y_k)]`` under ``Σ_j e ζ_j = 0``."""
    if len(elements) == 0:
        raise ValueError("sample must be nonempty")
    Lam = germ_kernel(model, elements)
    basis = constraint_basis(len(elements), model.n_modes)
    return psd_report(Lam, tol, basis, elements)


def dissipator_pd_check(model: GeneratorModel, elements: Sequence,
                        tol: float = DEFAULT_TOL) -> CpdReport:
    """Unconstrained PSD test of the dissipator kernel ``[Δ(y_k, y_l)]``."""
    if len(elements) == 0:
        raise ValueError("sample must be nonempty")
    return psd_report(dissipator_kernel(model, elements), tol, None, elements)


@dataclass
class Perturbation:
    model: GeneratorModel
    epsilon: float
    character: int
    direction: np.ndarray
    overlap: float
    target_depth: float


def rank_one_negative_perturbation(model: GeneratorModel, elements: Sequence,
                                   factor: float = 10.0, tol: float = DEFAULT_TOL) -> Perturbation:
    """Subtract ``ε χ(y) u u†`` from the germ so that the CPD form dips to
    ``-factor * tol * scale`` on a near-null direction.

    ``χ`` runs over the one-dimensional characters of the group and ``u`` over
    ``C^{1+n}``; the pair with the largest overlap with the near-null space of
    the compressed CPD matrix is chosen.  The block kernel of the perturbation,
    ``[χ(y_i)‾ χ(y_k) u u†]``, has rank one.
    """
    group = model.semigroup
    if not isinstance(group, FiniteGroup) or not group.characters():
        raise ValueError("rank-one perturbations need a finite group with characters")
    base = cpd_check(model, elements, tol)
    diss = dissipator_pd_check(model, elements, tol)
    scale = max(base.scale, diss.scale, 1.0)
    block = model.n_modes + 1
    basis = constraint_basis(len(elements), model.n_modes)
    w, V = np.linalg.eigh(base.matrix)
    near = w <= tol * scale
    if not near.any():
        near[0] = True
    W = basis @ V[:, near]
    top_null = float(w[near].max())
    best = None
    for c, chi in enumerate(group.characters()):
        vals = np.array([chi[y] for y in elements])
        # The perturbation kernel is -ε a a† with a_i = conj(χ(y_i)) u, so the form
        # drops by ε |Σ_i χ(y_i) u† w_i|² = ε ‖u† B c‖² on w = W c.
        B = np.einsum("i,imr->mr", vals, W.reshape(len(elements), block, -1))
        U, s, _ = np.linalg.svd(B)
        sigma = float(s[0] ** 2) if s.size else 0.0
        if best is None or sigma > best[0] + 1e-12:
            best = (sigma, c, U[:, 0])
    sigma, c, u = best
    if sigma < 1e-8:
        raise ValueError("no character direction overlaps the near-null space")
    depth = factor * tol * scale
    eps = (max(top_null, 0.0) + depth) / sigma
    chi = group.characters()[c]
    uu = np.outer(u, u.conj())
    perturbed = perturbed_table_model(model, group.elements(), lambda y: -eps * chi[y] * uu)
    return Perturbation(perturbed, eps, c, u, sigma, depth)
