"""Orientation tensor storage, index maps and fourth-order algebra.

A symmetric, unit-trace second-order orientation tensor ``a`` is stored as the
five independent components ``v = (a11, a12, a13, a22, a23)``; ``a33`` follows
from ``tr(a) = 1``.  Derivatives "with respect to a component" are directional
derivatives along the trace-free basis tensors returned by :func:`basis`, so a
unit change of ``v[r]`` moves ``a`` by exactly ``BASIS[r]``.

Every derivative array in the package keeps the direction index first, e.g. a
second-order quantity has derivative shape ``(5, 3, 3)``.
"""

from __future__ import annotations

import itertools

import numpy as np

PACK_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2))


def _basis_tensors():
    out = np.zeros((5, 3, 3))
    for r, (i, j) in enumerate(PACK_INDEX):
        out[r, i, j] = out[r, j, i] = 1.0
        if i == j:
            out[r, 2, 2] = -1.0
    return out


BASIS = _basis_tensors()
BASIS.setflags(write=False)

_PERMS = tuple(itertools.permutations(range(4)))


def pack(a):
    """Return the 5-vector of independent components of ``a``."""
    a = np.asarray(a, dtype=float)
    return np.array([a[0, 0], a[0, 1], a[0, 2], a[1, 1], a[1, 2]])


def unpack(v):
    """Rebuild the symmetric unit-trace tensor from its 5-vector."""
    v = np.asarray(v, dtype=float)
    if v.shape != (5,):
        raise ValueError(f"expected 5 components, got shape {v.shape}")
    a11, a12, a13, a22, a23 = v
    return np.array([[a11, a12, a13],
                     [a12, a22, a23],
                     [a13, a23, 1.0 - a11 - a22]])


def basis(r):
    """Trace-free basis tensor for direction ``r`` (1-based, 1..5)."""
    if not 1 <= r <= 5:
        raise ValueError(f"basis index must lie in 1..5, got {r}")
    return BASIS[r - 1].copy()


def contracted_index(i, j):
    """Contracted (Voigt-style) index of the pair ``(i, j)``, 1-based.

    Diagonal pairs map to ``1..3`` and off-diagonal pairs to ``9 - i - j``
    (``23 -> 4``, ``13 -> 5``, ``12 -> 6``).
    """
    if not (1 <= i <= 3 and 1 <= j <= 3):
        raise ValueError(f"indices must lie in 1..3, got ({i}, {j})")
    return i if i == j else 9 - i - j


def packed_index(m, n):
    """Position of ``a_mn`` (``m <= n``, 1-based) inside the packed 5-vector."""
    if (m, n) not in ((1, 1), (1, 2), (1, 3), (2, 2), (2, 3)):
        raise ValueError(f"a_{m}{n} is not an independent component")
    return int(n - (m - 1) * (m - 6) / 2)


def jacobian_columns(dX):
    """Pack a stack of five directional derivatives into a 5x5 Jacobian.

    Column ``r`` holds ``pack(dX[r])``.
    """
    dX = np.asarray(dX)
    return np.stack([pack(dX[r]) for r in range(5)], axis=1)


def sym24(T):
    """Average a fourth-order tensor over all 24 index permutations.

    Leading batch axes are allowed; the last four axes are symmetrised.
    """
    T = np.asarray(T, dtype=float)
    lead = tuple(range(T.ndim - 4))
    off = T.ndim - 4
    acc = np.zeros_like(T)
    for p in _PERMS:
        acc += np.transpose(T, lead + tuple(off + q for q in p))
    return acc / 24.0


def ddot42(A, B):
    """Double contraction ``A_ijkl B_kl`` (batch axes allowed on ``A``)."""
    return np.einsum("...ijkl,kl->...ij", A, B)


def ddot44(A, B):
    """Double contraction ``A_ijmn B_mnkl``."""
    return np.einsum("ijmn,mnkl->ijkl", A, B)


def outer(x, y):
    """Dyadic product of two second-order tensors."""
    return np.multiply.outer(np.asarray(x), np.asarray(y))


def rotate4(Abar, Q):
    """Rotate a fourth-order tensor: ``Q_ip Q_jq Q_kr Q_ls Abar_pqrs``."""
    T = np.einsum("ip,pqrs->iqrs", Q, Abar)
    T = np.einsum("jq,iqrs->ijrs", Q, T)
    T = np.einsum("kr,ijrs->ijks", Q, T)
    return np.einsum("ls,ijks->ijkl", Q, T)


def is_physical(a, tol=1e-9):
    """True if ``a`` is symmetric, unit trace and positive semi-definite."""
    a = np.asarray(a, dtype=float)
    if a.shape != (3, 3) or not np.all(np.isfinite(a)):
        return False
    if np.max(np.abs(a - a.T)) > tol or abs(np.trace(a) - 1.0) > tol:
        return False
    return bool(np.linalg.eigvalsh(a).min() >= -tol)


def fourth_order_normalization_error(A, a):
    """Max-norm of ``A_ijkk - a_ij``."""
    return float(np.max(np.abs(np.einsum("ijkk->ij", A) - a)))


def exact_isotropic_a4():
    """The exact fourth moment of an isotropic distribution."""
    I = np.eye(3)
    return sym24(outer(I, I)) * (3.0 / 15.0)


class Invariants:
    """Second and third invariants of ``a`` with their five directional derivatives.

    ``II = l1 l2 + l2 l3 + l3 l1`` and ``III = l1 l2 l3`` are formed from the
    eigenvalues; their derivatives follow from the eigenvalue sensitivities.
    """

    __slots__ = ("I", "II", "III", "dII", "dIII")

    def __init__(self, I, II, III, dII, dIII):
        self.I, self.II, self.III, self.dII, self.dIII = I, II, III, dII, dIII

    def __repr__(self):
        return f"Invariants(I={self.I:.6g}, II={self.II:.6g}, III={self.III:.6g})"


def invariants(a, es=None):
    """Invariants of ``a`` and their derivatives via eigenvalue sensitivities."""
    from .spectral import eig_desc, eig_sensitivities

    a = np.asarray(a, dtype=float)
    es = eig_desc(a) if es is None else es
    l1, l2, l3 = es.values
    dl = eig_sensitivities(a, es, vectors=False).dlam
    II = l1 * l2 + l2 * l3 + l3 * l1
    III = l1 * l2 * l3
    dII = (l2 + l3) * dl[:, 0] + (l1 + l3) * dl[:, 1] + (l1 + l2) * dl[:, 2]
    dIII = l2 * l3 * dl[:, 0] + l1 * l3 * dl[:, 1] + l1 * l2 * dl[:, 2]
    return Invariants(l1 + l2 + l3, II, III, dII, dIII)
