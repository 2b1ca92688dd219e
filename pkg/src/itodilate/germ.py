"""Generator models, germ matrices and stochastic dissipators.

A :class:`GeneratorModel` pairs a star-semigroup with a structure map
``α : B -> Itô algebra``.  The germ matrix of an element is the
``(1+n) x (1+n)`` block matrix

    λ(y) = [[α_+^-(y), α_•^-(y)],
            [α_+^•(y), I + α_•^•(y)]]

(scalar in the top-left corner, annihilation row, creation column, shifted
exchange block).  Four model forms are supported; see the ``*Form`` classes.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence, Union

import numpy as np
from scipy.linalg import block_diag

from .ito_algebra import ItoQuadruple, embed_extended, ito_flat
from .krein import L_flat, L_matrix, jmath_matrix
from .pseudo_poisson import BirthSpec, germ_from_birth
from .semigroup import FiniteGroup, StarSemigroup


class ModelError(ValueError):
    """Raised when a model cannot be evaluated at the requested element."""


@dataclass(frozen=True, eq=False)
class TableForm:
    """Per-element structure quadruples keyed by ``semigroup.key``."""

    alpha: Mapping[Any, ItoQuadruple]


@dataclass(frozen=True, eq=False)
class DilatedForm:
    """Germ ``L♭ ȷ(y) L`` from cocycle data ``(j, k, l)`` keyed by element.

    The functional ``k*`` is not stored; it is ``k*(y) = k(y★)†``.
    """

    d: float
    j: Mapping[Any, np.ndarray]
    k: Mapping[Any, np.ndarray]
    l: Mapping[Any, complex]
    L_circ: np.ndarray
    L_minus: np.ndarray

    @property
    def K_dim(self) -> int:
        return self.L_circ.shape[0]


@dataclass(frozen=True, eq=False)
class BirthForm:
    spec: BirthSpec


@dataclass(frozen=True, eq=False)
class ScalarPoissonForm:
    """Scalar functions ``α`` and ``λ`` on ``B``, either callables or tables."""

    alpha: Union[Callable, Mapping[Any, complex]]
    lam: Union[Callable, Mapping[Any, complex]]


Form = Union[TableForm, DilatedForm, BirthForm, ScalarPoissonForm]


class GeneratorModel:
    def __init__(self, semigroup: StarSemigroup, n_modes: int, form: Form):
        self.semigroup = semigroup
        self.n_modes = int(n_modes)
        self.form = form
        if isinstance(form, ScalarPoissonForm) and self.n_modes != 0:
            raise ValueError("scalar Poisson models have no modes")
        if isinstance(form, BirthForm):
            if getattr(semigroup, "d", None) != form.spec.d:
                raise ValueError("birth models live on MatrixBall(d) with matching d")
            if form.spec.n_modes != self.n_modes:
                raise ValueError("birth spec mode count differs from model")
        if isinstance(form, DilatedForm) and form.L_circ.shape[1] != self.n_modes:
            raise ValueError("L_circ must have one column per mode")
        self._warned_d = False

    @property
    def form_type(self) -> str:
        return {TableForm: "table", DilatedForm: "dilated", BirthForm: "birth",
                ScalarPoissonForm: "scalar_poisson"}[type(self.form)]

    def _lookup(self, table: Mapping, y, what: str):
        key = self.semigroup.key(y)
        try:
            return table[key]
        except KeyError:
            raise ModelError(f"{what} not tabulated at element {y!r}") from None

    def alpha(self, y) -> ItoQuadruple:
        """The structure quadruple ``α(y)``."""
        if isinstance(self.form, TableForm):
            return self._lookup(self.form.alpha, y, "structure map")
        return quadruple_from_germ(self.germ(y))

    def germ(self, y) -> np.ndarray:
        y = self.semigroup.validate(y)
        form = self.form
        if isinstance(form, TableForm):
            return germ_from_quadruple(self._lookup(form.alpha, y, "structure map"))
        if isinstance(form, DilatedForm):
            j = self._lookup(form.j, y, "j")
            k = self._lookup(form.k, y, "k")
            l = self._lookup(form.l, y, "l")
            kstar = self._lookup(form.k, self.semigroup.star(y), "k").conj()
            L = L_matrix(form.L_circ, form.L_minus)
            return L_flat(L, form.d) @ jmath_matrix(j, k, kstar, l) @ L
        if isinstance(form, BirthForm):
            return germ_from_birth(form.spec, y)
        raise ModelError("scalar Poisson models have no germ matrix; use poisson_mc")

    @property
    def d(self) -> float:
        """``d = α_+^-(1)``, the scalar germ at the unit."""
        value = self.germ(self.semigroup.unit)[0, 0]
        if abs(value.imag) > 1e-10 * max(1.0, abs(value)):
            raise ModelError(f"germ at the unit has non-real scalar {value}")
        d = float(value.real)
        if d > 0 and not self._warned_d:
            warnings.warn(f"d = {d:.6g} > 0: exponent is not a (sub)martingale", stacklevel=2)
            self._warned_d = True
        return d

    def scalar_functions(self):
        if not isinstance(self.form, ScalarPoissonForm):
            raise ModelError("model is not in scalar Poisson form")

        def wrap(fn):
            if callable(fn):
                return lambda y: complex(fn(self.semigroup.validate(y)))
            return lambda y: complex(self._lookup(fn, y, "scalar function"))

        return wrap(self.form.alpha), wrap(self.form.lam)


def germ_from_quadruple(a: ItoQuadruple) -> np.ndarray:
    n = a.n_modes
    lam = np.empty((n + 1, n + 1), dtype=complex)
    lam[0, 0] = a.scalar
    lam[0, 1:] = a.annihilation
    lam[1:, 0] = a.creation
    lam[1:, 1:] = np.eye(n) + a.exchange
    return lam


def quadruple_from_germ(lam: np.ndarray) -> ItoQuadruple:
    n = lam.shape[0] - 1
    return ItoQuadruple(lam[1:, 1:] - np.eye(n), lam[1:, 0], lam[0, 1:], lam[0, 0])


def germ_of(model: GeneratorModel, y) -> np.ndarray:
    return model.germ(y)


def projector_e(n: int) -> np.ndarray:
    e = np.zeros((n + 1, n + 1))
    e[0, 0] = 1.0
    return e


def dissipator_of(model: GeneratorModel, x, z) -> np.ndarray:
    """``Δ(x, z) = λ(x★z) - e λ(z) - λ(x★) e + e λ(1) e``."""
    S = model.semigroup
    lam_xz = model.germ(S.star_compose(x, z))
    lam_z = model.germ(z)
    lam_xs = model.germ(S.star(x))
    lam_1 = model.germ(S.unit)
    out = lam_xz.copy()
    out[0, :] -= lam_z[0, :]
    out[:, 0] -= lam_xs[:, 0]
    out[0, 0] += lam_1[0, 0]
    return out


def dissipator_kernel(model: GeneratorModel, elements: Sequence) -> np.ndarray:
    """The full block matrix ``[Δ(y_i, y_k)]``."""
    return np.block([[dissipator_of(model, x, z) for z in elements] for x in elements])


def germ_kernel(model: GeneratorModel, elements: Sequence) -> np.ndarray:
    """The full block matrix ``[λ(y_i★y_k)]``."""
    S = model.semigroup
    return np.block([[model.germ(S.star_compose(x, z)) for z in elements] for x in elements])


def flat_symmetry_residual(model: GeneratorModel, sample: Sequence) -> float:
    """``max_y ‖α(y★) - α(y)♭‖`` in Frobenius norm of the extended matrices."""
    if len(sample) == 0:
        raise ValueError("sample must be nonempty")
    S = model.semigroup
    worst = 0.0
    for y in sample:
        diff = embed_extended(model.alpha(S.star(y))) - embed_extended(ito_flat(model.alpha(y)))
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


# -- model construction helpers ------------------------------------------------------

def table_model(semigroup: StarSemigroup, n_modes: int, entries) -> GeneratorModel:
    """Table model from ``{element: value}`` or a sequence of ``(element, value)``.

    Values may be quadruples or ``(1+n) x (1+n)`` germ matrices.
    """
    pairs = entries.items() if isinstance(entries, Mapping) else entries
    table = {}
    for y, value in pairs:
        q = value if isinstance(value, ItoQuadruple) else quadruple_from_germ(
            np.asarray(value, dtype=complex).reshape(n_modes + 1, n_modes + 1))
        if q.n_modes != n_modes:
            raise ValueError("quadruple mode count differs from model")
        table[semigroup.key(y)] = q
    return GeneratorModel(semigroup, n_modes, TableForm(table))


def scalar_table_model(group: FiniteGroup, values: Mapping[int, complex]) -> GeneratorModel:
    """n = 0 table model with ``λ(y) = values[y]`` (missing elements get 0)."""
    entries = {y: np.array([[values.get(y, 0.0)]]) for y in group.elements()}
    return table_model(group, 0, entries)


def zero_model(semigroup: StarSemigroup, n_modes: int, elements: Sequence | None = None) -> GeneratorModel:
    """The zero structure map, tabulated on ``elements`` (whole group by default)."""
    if elements is None:
        if not isinstance(semigroup, FiniteGroup):
            raise ValueError("zero model on an infinite semigroup needs an element list")
        elements = semigroup.elements()
    zero = ItoQuadruple.zero(n_modes)
    return GeneratorModel(semigroup, n_modes,
                          TableForm({semigroup.key(y): zero for y in elements}))


def perturbed_table_model(model: GeneratorModel, elements: Sequence,
                          delta: Callable[[Any], np.ndarray]) -> GeneratorModel:
    """Table model with germ ``λ(y) + delta(y)`` on ``elements``."""
    return table_model(model.semigroup, model.n_modes,
                       [(y, model.germ(y) + delta(y)) for y in elements])


def random_dilated_model(group: FiniteGroup, rng: np.random.Generator, K_max: int = 3,
                         n_modes: int = 1, d: float | None = None) -> GeneratorModel:
    """A random Dilated model on a finite group.

    ``j`` is a random unitary conjugate of a direct sum of the group's irreps,
    ``k(y) = j(y)ς - ς`` and ``l(y) = ς†j(y)ς - ς†ς``.
    """
    if not group.irreps:
        raise ValueError("group carries no irreducible representations")
    one_dim = [r for r in group.irreps if r.shape[1] == 1]
    nontrivial_chars = [r for r in one_dim if not np.allclose(r, 1)]
    while True:
        chosen = []
        size = 0
        target = int(rng.integers(1, K_max + 1))
        while size < target:
            fits = [r for r in group.irreps if r.shape[1] <= target - size]
            r = fits[int(rng.integers(len(fits)))]
            chosen.append(r)
            size += r.shape[1]
        # Avoid a sum of all nontrivial characters of a non-abelian group: its cocycle
        # span then exhausts the characters and no rank-one flip exists (used in tests).
        picked = {id(r) for r in chosen}
        degenerate = (len(one_dim) < group.order and len(nontrivial_chars) > 0
                      and all(id(c) in picked for c in nontrivial_chars))
        if not degenerate:
            break
    K = size
    z = rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K))
    U, _ = np.linalg.qr(z)
    sigma = (rng.standard_normal(K) + 1j * rng.standard_normal(K)) / np.sqrt(2)
    j_tab, k_tab, l_tab = {}, {}, {}
    for y in group.elements():
        blocks = [r[y] for r in chosen]
        jy = U @ block_diag(*blocks) @ U.conj().T
        j_tab[y] = jy
        k_tab[y] = jy @ sigma - sigma
        l_tab[y] = complex(sigma.conj() @ jy @ sigma - sigma.conj() @ sigma)
    if d is None:
        d = -float(rng.uniform(0.0, 1.0))
    L_circ = (rng.standard_normal((K, n_modes)) + 1j * rng.standard_normal((K, n_modes))) / np.sqrt(2)
    L_minus = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)) / np.sqrt(2)
    form = DilatedForm(d, j_tab, k_tab, l_tab, L_circ, L_minus)
    return GeneratorModel(group, n_modes, form)
