"""Closures built from isotropic combinations of ``delta`` and ``a``.

The general form carries eight scalar weights ``b1..b8`` multiplying

    b1 d_ij d_kl
    b2 (d_ik d_jl + d_il d_jk)
    b3 (d_ij a_kl + a_ij d_kl)
    b4 (a_ik d_jl + a_jl d_ik + a_il d_jk + a_jk d_il)
    b5 a_ij a_kl
    b6 (a_ik a_jl + a_il a_jk)
    b7 (d_ij a2_kl + a2_ij d_kl)
    b8 a2_ij a2_kl

with ``a2 = a.a``.  The isotropic, linear, quadratic, strong-flow and the two
Hinch-Leal closures are particular choices of the weights; the hybrid closures
blend the quadratic and linear ones.
"""

from __future__ import annotations

import numpy as np

from ..errors import ClosureSingularity
from ..tensors import BASIS

_I = np.eye(3)


def _dyad(x, y):
    return np.einsum("...ij,...kl->...ijkl", x, y)


def _pair(x, y):
    # x_ik y_jl + x_il y_jk
    return (np.einsum("...ik,...jl->...ijkl", x, y)
            + np.einsum("...il,...jk->...ijkl", x, y))


def generator_terms(a):
    """The eight generator tensors, shape (8, 3, 3, 3, 3)."""
    a2 = a @ a
    return np.stack([
        _dyad(_I, _I),
        _pair(_I, _I),
        _dyad(_I, a) + _dyad(a, _I),
        _pair(a, _I) + _pair(_I, a),
        _dyad(a, a),
        _pair(a, a),
        _dyad(_I, a2) + _dyad(a2, _I),
        _dyad(a2, a2),
    ])


def generator_derivatives(a):
    """Directional derivatives of the generators, shape (5, 8, 3, 3, 3, 3)."""
    E = BASIS
    a2 = a @ a
    dA2 = a @ E + E @ a
    Ib = np.broadcast_to(_I, (5, 3, 3))
    ab = np.broadcast_to(a, (5, 3, 3))
    a2b = np.broadcast_to(a2, (5, 3, 3))
    zero = np.zeros((5, 3, 3, 3, 3))
    return np.stack([
        zero,
        zero,
        _dyad(Ib, E) + _dyad(E, Ib),
        _pair(E, Ib) + _pair(Ib, E),
        _dyad(E, ab) + _dyad(ab, E),
        _pair(E, ab) + _pair(ab, E),
        _dyad(Ib, dA2) + _dyad(dA2, Ib),
        _dyad(dA2, a2b) + _dyad(a2b, dA2),
    ], axis=1)


def _weights(kind, a):
    """Weights ``b1..b8`` and their directional derivatives (5, 8)."""
    b = np.zeros(8)
    db = np.zeros((5, 8))
    s = float(np.sum(a * a))
    ds = 2.0 * np.einsum("ij,rij->r", a, BASIS)
    if kind == "ISO":
        b[:2] = 1.0 / 15.0
    elif kind == "LIN":
        b[:4] = (-1.0 / 35.0, -1.0 / 35.0, 1.0 / 7.0, 1.0 / 7.0)
    elif kind == "QDR":
        b[4] = 1.0
    elif kind == "SF2":
        b[4] = b[5] = 1.0
        b[7] = -2.0 / s
        db[:, 7] = 2.0 / s ** 2 * ds
    elif kind == "HL1":
        b[:] = (0.0, 0.0, 2.0 / 5.0, 0.0, -1.0 / 5.0, 3.0 / 5.0, -2.0 / 5.0, 0.0)
    elif kind == "HL2":
        if s >= 1.0 - 1e-14:
            alpha, dalpha = 0.0, np.zeros(5)
        else:
            alpha = np.exp(2.0 * (1.0 - 3.0 * s) / (1.0 - s))
            dalpha = -4.0 * alpha / (1.0 - s) ** 2 * ds
        w = np.array([26.0 / 315.0, 26.0 / 315.0, 16.0 / 63.0, -4.0 / 21.0])
        b[:4] = w * alpha
        db[:, :4] = np.outer(dalpha, w)
        b[4] = b[5] = 1.0
        b[7] = -2.0 / s
        db[:, 7] = 2.0 / s ** 2 * ds
    else:
        raise KeyError(kind)
    return b, db


WEIGHTED_KINDS = ("ISO", "LIN", "QDR", "SF2", "HL1", "HL2")


def weighted_closure(kind, a, derivatives=True):
    """Evaluate one of the weighted generator closures."""
    if not np.all(np.isfinite(a)):
        raise ClosureSingularity("non-finite orientation tensor")
    b, db = _weights(kind, a)
    G = generator_terms(a)
    A = np.tensordot(b, G, axes=1)
    if not derivatives:
        return A, None
    dG = generator_derivatives(a)
    dA = np.einsum("rm,mijkl->rijkl", db, G) + np.einsum("m,rmijkl->rijkl", b, dG)
    return A, dA


def _cofactor(a):
    return np.array([
        [a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1], a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2],
         a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]],
        [a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2], a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0],
         a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]],
        [a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1], a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2],
         a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]],
    ])


def hybrid_closure(kind, a, derivatives=True):
    """Blend of quadratic and linear closures, ``f QDR + (1 - f) LIN``.

    ``HYB1`` uses ``f = 3/2 a:a - 1/2``; ``HYB2`` uses ``f = 1 - 27 det(a)``.
    """
    Aq, dAq = weighted_closure("QDR", a, derivatives)
    Al, dAl = weighted_closure("LIN", a, derivatives)
    if kind == "HYB1":
        f = 1.5 * np.sum(a * a) - 0.5
        df = 3.0 * np.einsum("ij,rij->r", a, BASIS)
    elif kind == "HYB2":
        f = 1.0 - 27.0 * np.linalg.det(a)
        df = -27.0 * np.einsum("ij,rij->r", _cofactor(a), BASIS)
    else:
        raise KeyError(kind)
    A = f * Aq + (1.0 - f) * Al
    if not derivatives:
        return A, None
    dA = (df[:, None, None, None, None] * (Aq - Al)
          + f * dAq + (1.0 - f) * dAl)
    return A, dA
