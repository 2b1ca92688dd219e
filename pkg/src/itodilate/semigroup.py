"""Star-semigroups over which exponents are defined.

Three concrete kinds are provided:

* :class:`FiniteGroup` -- elements are indices into a Cayley table, ``y★ = y⁻¹``.
* :class:`MatrixBall` -- ``d x d`` complex contractions, ``y★ = y†``.
* :class:`UnitalNilpotent` -- the unital semigroup ``1 ⊕ b`` of a ★-algebra given
  by structure constants; elements are coefficient vectors of ``b`` and
  ``(1 ⊕ a)(1 ⊕ c) = 1 ⊕ (a + c + ac)``.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Any, Sequence

import numpy as np

NORM_SLACK = 1e-12


class StarSemigroup(ABC):
    kind: str

    @property
    @abstractmethod
    def unit(self) -> Any: ...

    @abstractmethod
    def compose(self, x, z): ...

    @abstractmethod
    def star(self, x): ...

    @abstractmethod
    def validate(self, x): ...

    @abstractmethod
    def key(self, x) -> Any:
        """A hashable key identifying ``x``; used for element tables."""

    @abstractmethod
    def sample_elements(self, count: int, seed: int = 0) -> list: ...

    def star_compose(self, x, z):
        """``x★z``: the argument of every PD and CPD kernel."""
        return self.compose(self.star(x), z)

    def equal(self, x, z) -> bool:
        return self.key(x) == self.key(z)


class FiniteGroup(StarSemigroup):
    """A finite group given by its Cayley table ``cayley[x, z] = index of xz``.

    ``irreps`` optionally lists unitary irreducible representations as arrays of
    shape ``(order, dim, dim)``; random dilated models are built from them.
    """

    kind = "finite_group"

    def __init__(self, cayley, star_table=None, unit: int | None = None,
                 labels: Sequence[str] | None = None, name: str = "G",
                 irreps: Sequence[np.ndarray] | None = None):
        cayley = np.asarray(cayley, dtype=int)
        order = cayley.shape[0]
        if cayley.shape != (order, order) or cayley.min() < 0 or cayley.max() >= order:
            raise ValueError("Cayley table must be a square table of element indices")
        if unit is None:
            rows = [i for i in range(order) if np.array_equal(cayley[i], np.arange(order))]
            if not rows:
                raise ValueError("Cayley table has no identity")
            unit = rows[0]
        if star_table is None:
            star_table = [int(np.flatnonzero(cayley[x] == unit)[0]) for x in range(order)]
        self.cayley = cayley
        self.star_table = np.asarray(star_table, dtype=int)
        self._unit = int(unit)
        self.order = order
        self.labels = list(labels) if labels is not None else [str(i) for i in range(order)]
        self.name = name
        self.irreps = [np.asarray(r, dtype=complex) for r in (irreps or [])]

    @classmethod
    def cyclic(cls, m: int) -> "FiniteGroup":
        if m < 1:
            raise ValueError("cyclic group order must be positive")
        idx = np.arange(m)
        cayley = (idx[:, None] + idx[None, :]) % m
        irreps = [np.exp(2j * np.pi * q * idx / m).reshape(m, 1, 1) for q in range(m)]
        labels = ["1"] + [f"s^{k}" if k > 1 else "s" for k in range(1, m)]
        return cls(cayley, (-idx) % m, 0, labels, name=f"Z{m}", irreps=irreps)

    @classmethod
    def quaternion(cls) -> "FiniteGroup":
        one = np.eye(2, dtype=complex)
        qi = np.array([[1j, 0], [0, -1j]])
        qj = np.array([[0, 1], [-1, 0]], dtype=complex)
        qk = qi @ qj
        base = [one, qi, qj, qk]
        mats = base + [-m for m in base]
        labels = ["1", "i", "j", "k", "-1", "-i", "-j", "-k"]

        def index(m):
            for r, cand in enumerate(mats):
                if np.allclose(cand, m):
                    return r
            raise AssertionError("quaternion table not closed")

        cayley = np.array([[index(a @ b) for b in mats] for a in mats])
        # One-dimensional characters factor through Q8/{±1} = Z2 x Z2.
        signs = {"i": [1, 1, -1, -1], "j": [1, -1, 1, -1], "k": [1, -1, -1, 1]}
        irreps = [np.ones((8, 1, 1), dtype=complex)]
        for s in signs.values():
            irreps.append(np.array(s + s, dtype=complex).reshape(8, 1, 1))
        irreps.append(np.array(mats))
        return cls(cayley, None, 0, labels, name="Q8", irreps=irreps)

    @property
    def unit(self) -> int:
        return self._unit

    def validate(self, x):
        if isinstance(x, (bool, np.bool_)) or not isinstance(x, (int, np.integer)):
            raise TypeError(f"element of {self.name} must be an index, got {x!r}")
        if not 0 <= x < self.order:
            raise ValueError(f"index {x} outside {self.name} of order {self.order}")
        return int(x)

    def compose(self, x, z):
        return int(self.cayley[self.validate(x), self.validate(z)])

    def star(self, x):
        return int(self.star_table[self.validate(x)])

    def key(self, x):
        return self.validate(x)

    def elements(self) -> list[int]:
        return [self.unit] + [i for i in range(self.order) if i != self.unit]

    def sample_elements(self, count: int, seed: int = 0) -> list[int]:
        if count < 1:
            raise ValueError("count must be at least 1")
        return self.elements()[:count]

    def characters(self) -> list[np.ndarray]:
        """One-dimensional irreps as value arrays over element indices."""
        return [r[:, 0, 0] for r in self.irreps if r.shape[1] == 1]


class MatrixBall(StarSemigroup):
    """Closed unit ball of ``d x d`` complex matrices in operator norm."""

    kind = "matrix_ball"

    def __init__(self, d: int):
        if d < 1:
            raise ValueError("dimension must be positive")
        self.d = d

    @property
    def unit(self) -> np.ndarray:
        return np.eye(self.d, dtype=complex)

    @property
    def zero(self) -> np.ndarray:
        return np.zeros((self.d, self.d), dtype=complex)

    def validate(self, x):
        x = np.asarray(x, dtype=complex)
        if x.ndim == 0 and self.d == 1:
            x = x.reshape(1, 1)
        if x.shape != (self.d, self.d):
            raise ValueError(f"expected a {self.d}x{self.d} matrix, got shape {x.shape}")
        norm = np.linalg.norm(x, 2)
        if norm > 1 + NORM_SLACK:
            raise ValueError(f"element has operator norm {norm:.6g} > 1")
        return x

    def compose(self, x, z):
        return self.validate(x) @ self.validate(z)

    def star(self, x):
        return self.validate(x).conj().T

    def key(self, x):
        x = self.validate(x)
        # Round so that products landing on the same matrix share a key.
        r = np.round(x, 12) + 0.0
        return ("M", self.d, r.tobytes())

    def sample_elements(self, count: int, seed: int = 0) -> list[np.ndarray]:
        if count < 1:
            raise ValueError("count must be at least 1")
        rng = np.random.default_rng(seed)
        out = [self.unit]
        for _ in range(count - 1):
            out.append(random_contraction(self.d, rng))
        return out


def random_contraction(d: int, rng: np.random.Generator) -> np.ndarray:
    """Gaussian matrix scaled strictly inside the unit ball."""
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return g / (np.linalg.norm(g, 2) * rng.uniform(1.0, 2.0))


class UnitalNilpotent(StarSemigroup):
    """The semigroup ``1 ⊕ b`` over a finite-dimensional ★-algebra ``b``.

    ``structure[i, j, k]`` holds the coefficient of ``e_k`` in ``e_i e_j``;
    ``star_matrix[i, k]`` that of ``e_k`` in ``e_i★``.  When ``star_matrix`` is
    None the algebra has no involution and :meth:`star` raises.
    """

    kind = "unital_nilpotent"

    def __init__(self, structure, star_matrix=None):
        c = np.asarray(structure, dtype=complex)
        m = c.shape[0]
        if c.shape != (m, m, m):
            raise ValueError("structure constants must have shape (m, m, m)")
        self.structure = c
        self.dim = m
        self.star_matrix = None if star_matrix is None else np.asarray(star_matrix, dtype=complex)
        if self.star_matrix is not None and self.star_matrix.shape != (m, m):
            raise ValueError("star matrix must have shape (m, m)")

    @classmethod
    def from_matrices(cls, basis: Sequence[np.ndarray]) -> "UnitalNilpotent":
        """Structure constants of the matrix algebra spanned by ``basis``."""
        basis = [np.asarray(b, dtype=complex) for b in basis]
        flat = np.array([b.reshape(-1) for b in basis]).T

        def coords(mat):
            sol, *_ = np.linalg.lstsq(flat, mat.reshape(-1), rcond=None)
            if not np.allclose(flat @ sol, mat.reshape(-1), atol=1e-10):
                return None
            return sol

        m = len(basis)
        c = np.zeros((m, m, m), dtype=complex)
        for i, bi in enumerate(basis):
            for j, bj in enumerate(basis):
                sol = coords(bi @ bj)
                if sol is None:
                    raise ValueError("basis does not span a subalgebra")
                c[i, j] = sol
        star_rows = [coords(b.conj().T) for b in basis]
        star = None if any(s is None for s in star_rows) else np.array(star_rows)
        obj = cls(c, star)
        obj.basis = basis
        return obj

    @property
    def unit(self) -> np.ndarray:
        return np.zeros(self.dim, dtype=complex)

    def validate(self, x):
        x = np.asarray(x, dtype=complex).reshape(-1)
        if x.shape != (self.dim,):
            raise ValueError(f"expected {self.dim} coefficients, got {x.shape}")
        return x

    def product(self, a, c):
        """The algebra product ``ac`` of two base elements."""
        return np.einsum("i,j,ijk->k", self.validate(a), self.validate(c), self.structure)

    def compose(self, x, z):
        x, z = self.validate(x), self.validate(z)
        return x + z + self.product(x, z)

    def star(self, x):
        if self.star_matrix is None:
            raise ValueError("this algebra carries no involution")
        return self.validate(x).conj() @ self.star_matrix

    def key(self, x):
        return ("B", self.dim, (np.round(self.validate(x), 12) + 0.0).tobytes())

    def sample_elements(self, count: int, seed: int = 0) -> list[np.ndarray]:
        if count < 1:
            raise ValueError("count must be at least 1")
        rng = np.random.default_rng(seed)
        out = [self.unit]
        for _ in range(count - 1):
            out.append(0.5 * (rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)))
        return out


def star_closure(S: StarSemigroup, elements: Sequence, cap: int = 512) -> list:
    """Smallest superset of ``elements`` (plus the unit) closed under ★ and products."""
    out: list = []
    seen: set = set()

    def add(y) -> bool:
        k = S.key(y)
        if k in seen:
            return False
        seen.add(k)
        out.append(y)
        if len(out) > cap:
            raise ValueError(f"star-closure exceeds cap of {cap} elements")
        return True

    add(S.unit)
    for y in elements:
        add(S.validate(y))
    changed = True
    while changed:
        changed = False
        current = list(out)
        for x in current:
            changed |= add(S.star(x))
            for z in current:
                changed |= add(S.compose(x, z))
    return out


def is_star_closed(S: StarSemigroup, elements: Sequence) -> bool:
    keys = {S.key(y) for y in elements}
    return all(S.key(S.star(x)) in keys and S.key(S.compose(x, z)) in keys
               for x in elements for z in elements)


def check_semigroup_laws(S: StarSemigroup, elements: Sequence) -> float:
    """Largest violation of the ★-semigroup laws over ``elements``."""
    def dist(a, b):
        return float(np.max(np.abs(np.asarray(a, dtype=complex) - np.asarray(b, dtype=complex)),
                            initial=0.0))

    worst = 0.0
    u = S.unit
    worst = max(worst, dist(S.star(u), u))
    for x in elements:
        worst = max(worst, dist(S.star(S.star(x)), x))
        worst = max(worst, dist(S.compose(u, x), x), dist(S.compose(x, u), x))
        for z in elements:
            worst = max(worst, dist(S.star(S.star_compose(x, z)), S.star_compose(z, x)))
    return worst
