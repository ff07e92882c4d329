"""Invariant-based fitted closure.

The fourth moment is the fully symmetric part of a weighted sum of six
generators built from ``delta``, ``a`` and ``a.a``.  Three weights are fitted
fifth-order polynomials in the invariants ``II`` and ``III``; the other three
follow from the normalisation condition.
"""

from __future__ import annotations

import numpy as np

from ..tensors import BASIS, invariants, sym24
from .tables import load_table, poly_eval

_I = np.eye(3)


def _dyad(x, y):
    return np.einsum("...ij,...kl->...ijkl", x, y)


def _generators(a):
    a2 = a @ a
    return np.stack([_dyad(_I, _I), _dyad(_I, a), _dyad(a, a),
                     _dyad(_I, a2), _dyad(a, a2), _dyad(a2, a2)])


def _generator_derivatives(a):
    E = BASIS
    a2 = a @ a
    dA2 = a @ E + E @ a
    Ib = np.broadcast_to(_I, (5, 3, 3))
    ab = np.broadcast_to(a, (5, 3, 3))
    a2b = np.broadcast_to(a2, (5, 3, 3))
    return np.stack([np.zeros((5, 3, 3, 3, 3)),
                     _dyad(Ib, E),
                     _dyad(E, ab) + _dyad(ab, E),
                     _dyad(Ib, dA2),
                     _dyad(E, a2b) + _dyad(ab, dA2),
                     _dyad(dA2, a2b) + _dyad(a2b, dA2)], axis=1)


def ibof_weights(II, III):
    """The six weights and their partials with respect to ``II`` and ``III``.

    Returns ``(b, b_II, b_III)``, each of length 6.
    """
    table = load_table("ibof.txt")
    f, f2, f3 = poly_eval(table.num_exps, table.num, II, III)
    b3, b4, b6 = f
    b3_2, b4_2, b6_2 = f2
    b3_3, b4_3, b6_3 = f3

    p1 = (1.0 / 7.0 + 4.0 / 7.0 * II + 8.0 / 3.0 * III) / 5.0
    p1_2, p1_3 = 4.0 / 35.0, 8.0 / 15.0
    q1 = 1.0 / 5.0 - 8.0 / 15.0 * II - 14.0 / 15.0 * III
    q1_2, q1_3 = -8.0 / 15.0, -14.0 / 15.0
    r1 = (1.0 / 35.0 - 24.0 / 105.0 * III - 4.0 / 35.0 * II
          + 16.0 / 15.0 * II * III + 8.0 / 35.0 * II ** 2)
    r1_2 = -4.0 / 35.0 + 16.0 / 15.0 * III + 16.0 / 35.0 * II
    r1_3 = -24.0 / 105.0 + 16.0 / 15.0 * II
    b1 = 0.6 * (-1.0 / 7.0 + b3 * p1 - b4 * q1 - b6 * r1)
    b1_2 = 0.6 * (b3_2 * p1 + b3 * p1_2 - b4_2 * q1 - b4 * q1_2
                  - b6_2 * r1 - b6 * r1_2)
    b1_3 = 0.6 * (b3_3 * p1 + b3 * p1_3 - b4_3 * q1 - b4 * q1_3
                  - b6_3 * r1 - b6 * r1_3)

    p2 = (1.0 + 4.0 * II) / 5.0
    q2 = 7.0 / 5.0 * (1.0 / 6.0 - II)
    r2 = -1.0 / 5.0 + 2.0 / 3.0 * III + 4.0 / 5.0 * II - 8.0 / 5.0 * II ** 2
    r2_2 = 4.0 / 5.0 - 16.0 / 5.0 * II
    c = 6.0 / 7.0
    b2 = c * (1.0 - b3 * p2 + b4 * q2 - b6 * r2)
    b2_2 = c * (-b3_2 * p2 - b3 * 0.8 + b4_2 * q2 - b4 * 1.4
                - b6_2 * r2 - b6 * r2_2)
    b2_3 = c * (-b3_3 * p2 + b4_3 * q2 - b6_3 * r2 - b6 * 2.0 / 3.0)

    s5 = 1.0 - 4.0 / 3.0 * II
    b5 = -0.8 * b3 - 1.4 * b4 - 1.2 * b6 * s5
    b5_2 = -0.8 * b3_2 - 1.4 * b4_2 - 1.2 * (b6_2 * s5 - b6 * 4.0 / 3.0)
    b5_3 = -0.8 * b3_3 - 1.4 * b4_3 - 1.2 * b6_3 * s5

    return (np.array([b1, b2, b3, b4, b5, b6]),
            np.array([b1_2, b2_2, b3_2, b4_2, b5_2, b6_2]),
            np.array([b1_3, b2_3, b3_3, b4_3, b5_3, b6_3]))


def ibof_closure(a, derivatives=True, es=None):
    """Evaluate the invariant-based closure and optionally its derivatives."""
    inv = invariants(a, es)
    b, b2, b3 = ibof_weights(inv.II, inv.III)
    G = _generators(a)
    A = sym24(np.tensordot(b, G, axes=1))
    if not derivatives:
        return A, None
    db = np.outer(inv.dII, b2) + np.outer(inv.dIII, b3)
    dA = (np.einsum("rm,mijkl->rijkl", db, G)
          + np.einsum("m,rmijkl->rijkl", b, _generator_derivatives(a)))
    return A, sym24(dA)
