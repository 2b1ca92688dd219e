"""Finite-mode Itô algebra of quadruples.

An element is a quadruple ``a = (a_•^•, a_+^•, a_•^-, a_+^-)`` of an ``n x n``
exchange block, an ``n``-column creation block, an ``n``-row annihilation block
and a complex scalar.  The product is ``(b a)_ν^μ = b_•^μ a_ν^•``; the scalar
blocks of the factors never enter a product (``dt dt = 0``).

Extended matrices use the row/column index order ``(-, 1..n, +)``::

    [[0, a_•^-, a_+^-],
     [0, a_•^•, a_+^•],
     [0,   0,     0  ]]

so the algebra product is the ordinary matrix product and the involution is
``g a^† g`` with the Minkowski metric ``g`` that swaps ``-`` and ``+``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_MODES = 4


@dataclass(frozen=True, eq=False)
class ItoQuadruple:
    exchange: np.ndarray
    creation: np.ndarray
    annihilation: np.ndarray
    scalar: complex

    def __post_init__(self):
        ex = np.array(self.exchange, dtype=complex, ndmin=2)
        if ex.size == 0:
            ex = ex.reshape(0, 0)
        cr = np.array(self.creation, dtype=complex).reshape(-1)
        an = np.array(self.annihilation, dtype=complex).reshape(-1)
        n = ex.shape[0]
        if ex.shape != (n, n) or cr.shape != (n,) or an.shape != (n,):
            raise ValueError(
                f"inconsistent block shapes: exchange {ex.shape}, "
                f"creation {cr.shape}, annihilation {an.shape}"
            )
        sc = complex(self.scalar)
        if not (np.isfinite(ex).all() and np.isfinite(cr).all()
                and np.isfinite(an).all() and np.isfinite(sc)):
            raise ValueError("quadruple entries must be finite")
        for arr in (ex, cr, an):
            arr.setflags(write=False)
        object.__setattr__(self, "exchange", ex)
        object.__setattr__(self, "creation", cr)
        object.__setattr__(self, "annihilation", an)
        object.__setattr__(self, "scalar", sc)

    @property
    def n_modes(self) -> int:
        return self.exchange.shape[0]

    @classmethod
    def zero(cls, n: int) -> "ItoQuadruple":
        return cls(np.zeros((n, n)), np.zeros(n), np.zeros(n), 0.0)

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "ItoQuadruple":
        def cn(*shape):
            return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

        return cls(cn(n, n), cn(n), cn(n), complex(cn(1)[0]))

    def __mul__(self, other: "ItoQuadruple") -> "ItoQuadruple":
        return ito_mul(self, other)

    def allclose(self, other: "ItoQuadruple", rtol=1e-12, atol=0.0) -> bool:
        return np.allclose(embed_extended(self), embed_extended(other), rtol=rtol, atol=atol)

    def __repr__(self):
        return (f"ItoQuadruple(n={self.n_modes}, exchange={self.exchange.tolist()}, "
                f"creation={self.creation.tolist()}, annihilation={self.annihilation.tolist()}, "
                f"scalar={self.scalar})")


def ito_mul(b: ItoQuadruple, a: ItoQuadruple) -> ItoQuadruple:
    """Product ``b a`` in the Itô algebra."""
    if b.n_modes != a.n_modes:
        raise ValueError(f"mode-count mismatch: {b.n_modes} vs {a.n_modes}")
    return ItoQuadruple(
        exchange=b.exchange @ a.exchange,
        creation=b.exchange @ a.creation,
        annihilation=b.annihilation @ a.exchange,
        scalar=b.annihilation @ a.creation,
    )


def ito_flat(a: ItoQuadruple) -> ItoQuadruple:
    """The ♭-involution: pseudo-Hermitian conjugation under the Minkowski metric."""
    return ItoQuadruple(
        exchange=a.exchange.conj().T,
        creation=a.annihilation.conj(),
        annihilation=a.creation.conj(),
        scalar=a.scalar.conjugate(),
    )


def embed_extended(a: ItoQuadruple) -> np.ndarray:
    n = a.n_modes
    m = np.zeros((n + 2, n + 2), dtype=complex)
    m[0, 1:n + 1] = a.annihilation
    m[0, n + 1] = a.scalar
    m[1:n + 1, 1:n + 1] = a.exchange
    m[1:n + 1, n + 1] = a.creation
    return m


def extract_quadruple(m: np.ndarray) -> ItoQuadruple:
    """Inverse of :func:`embed_extended`; rejects matrices outside the algebra."""
    m = np.asarray(m, dtype=complex)
    size = m.shape[0]
    if m.ndim != 2 or m.shape != (size, size) or size < 2:
        raise ValueError(f"expected a square matrix of size >= 2, got {m.shape}")
    if np.any(m[:, 0] != 0) or np.any(m[-1, :] != 0):
        raise ValueError("first column and last row of an extended matrix must vanish")
    n = size - 2
    return ItoQuadruple(
        exchange=m[1:n + 1, 1:n + 1],
        creation=m[1:n + 1, n + 1],
        annihilation=m[0, 1:n + 1],
        scalar=m[0, n + 1],
    )


def minkowski_metric(n: int) -> np.ndarray:
    """``g_{μν} = 1`` iff ``μ = -ν``: antidiagonal on (-, +), identity on modes."""
    if n < 0:
        raise ValueError("number of modes must be nonnegative")
    g = np.zeros((n + 2, n + 2))
    g[0, n + 1] = g[n + 1, 0] = 1.0
    g[1:n + 1, 1:n + 1] = np.eye(n)
    return g


def flat_via_metric(m: np.ndarray) -> np.ndarray:
    g = minkowski_metric(m.shape[0] - 2)
    return g @ m.conj().T @ g
