"""Block matrices on the pseudo-Hilbert space ``E = C ⊕ K ⊕ C``.

Coordinates are ordered ``(-, ∘, +)`` with ``∘`` spanning ``K``.  The metric

    G = [[0, 0, 1],
         [0, I, 0],
         [1, 0, d]]

defines ``(ξ|ξ) = 2 Re(conj(ξ⁻) ξ⁺) + ‖ξ°‖² + d |ξ⁺|²`` and the conjugation
``A♭ = G⁻¹ A† G``.
"""
from __future__ import annotations

import numpy as np


def krein_metric(K_dim: int, d: float) -> np.ndarray:
    E = K_dim + 2
    G = np.zeros((E, E))
    G[0, -1] = G[-1, 0] = 1.0
    G[1:-1, 1:-1] = np.eye(K_dim)
    G[-1, -1] = d
    return G


def krein_metric_inverse(K_dim: int, d: float) -> np.ndarray:
    E = K_dim + 2
    Gi = np.zeros((E, E))
    Gi[0, -1] = Gi[-1, 0] = 1.0
    Gi[1:-1, 1:-1] = np.eye(K_dim)
    Gi[0, 0] = -d
    return Gi


def krein_flat(A: np.ndarray, d: float) -> np.ndarray:
    K_dim = A.shape[0] - 2
    return krein_metric_inverse(K_dim, d) @ A.conj().T @ krein_metric(K_dim, d)


def jmath_matrix(j: np.ndarray, k: np.ndarray, kstar: np.ndarray, l: complex) -> np.ndarray:
    """``[[1, k*, l], [0, j, k], [0, 0, 1]]`` for one element."""
    K_dim = j.shape[0]
    A = np.zeros((K_dim + 2, K_dim + 2), dtype=complex)
    A[0, 0] = A[-1, -1] = 1.0
    A[0, 1:-1] = kstar
    A[0, -1] = l
    A[1:-1, 1:-1] = j
    A[1:-1, -1] = k
    return A


def L_matrix(L_circ: np.ndarray, L_minus: np.ndarray) -> np.ndarray:
    """The map ``C ⊕ C^n -> E``; the scalar input goes to ``+``, mode ``n`` to
    ``(L_n^-, L_n°, 0)``."""
    K_dim, n = L_circ.shape
    L = np.zeros((K_dim + 2, n + 1), dtype=complex)
    L[-1, 0] = 1.0
    L[0, 1:] = L_minus
    L[1:-1, 1:] = L_circ
    return L


def L_flat(L: np.ndarray, d: float) -> np.ndarray:
    return L.conj().T @ krein_metric(L.shape[0] - 2, d)
