"""Eigenvalue-based orthotropic closures.

In the principal frame of ``a`` the fourth moment is orthotropic and described
by six contracted components.  The three diagonal ones, ``A11 A22 A33``, are
fitted functions of the two largest eigenvalues.  The shear-like ones,
``A44 = A2323``, ``A55 = A1313`` and ``A66 = A1212``, follow from the
normalisation ``A_iikk = lam_i``, i.e. ``lam = B [A44 A55 A66] + [A11 A22 A33]``
with ``B = ones - I``.  The tensor is then rotated to the lab frame.
"""

from __future__ import annotations

import numpy as np

from ..errors import ClosureSingularity
from ..spectral import eig_desc, eig_sensitivities
from .tables import poly_eval

_BINV = (np.ones((3, 3)) - 2.0 * np.eye(3)) / 2.0

DEN_TOL = 1e-12


def principal_tensor(diag, shear):
    """Assemble the orthotropic tensor in its principal frame.

    ``diag`` holds ``A11 A22 A33`` and ``shear`` holds ``A44 A55 A66``; leading
    batch axes are allowed.
    """
    diag = np.asarray(diag)
    shear = np.asarray(shear)
    out = np.zeros(diag.shape[:-1] + (3, 3, 3, 3))
    for i in range(3):
        out[..., i, i, i, i] = diag[..., i]
        for j in range(3):
            if i != j:
                s = shear[..., 3 - i - j]
                out[..., i, i, j, j] = s
                out[..., i, j, i, j] = s
                out[..., i, j, j, i] = s
    return out


def principal_components(table, l1, l2):
    """Fitted ``A11 A22 A33`` and their partials with respect to ``l1, l2``."""
    f, fx, fy = poly_eval(table.num_exps, table.num, l1, l2)
    if not table.rational:
        return f, fx, fy
    g, gx, gy = poly_eval(table.den_exps, table.den, l1, l2)
    if np.min(np.abs(g)) < DEN_TOL:
        raise ClosureSingularity(f"{table.name}: vanishing denominator")
    return f / g, (fx * g - f * gx) / g ** 2, (fy * g - f * gy) / g ** 2


def _rotate_batch(Abar, Phi):
    T = np.einsum("ip,...pqrs->...iqrs", Phi, Abar)
    T = np.einsum("jq,...iqrs->...ijrs", Phi, T)
    T = np.einsum("kr,...ijrs->...ijks", Phi, T)
    return np.einsum("ls,...ijks->...ijkl", Phi, T)


def orthotropic_closure(table, a, derivatives=True, es=None):
    """Evaluate a fitted orthotropic closure and optionally its derivatives.

    Derivatives combine the eigenvalue sensitivities (through the fitted
    functions) with the eigenvector sensitivities (through the rotation);
    they are undefined at repeated eigenvalues.
    """
    es = eig_desc(a) if es is None else es
    lam, Phi = es.values, es.vectors
    F, F1, F2 = principal_components(table, lam[0], lam[1])
    shear = _BINV @ (lam - F)
    Abar = principal_tensor(F, shear)
    A = _rotate_batch(Abar, Phi)
    if not derivatives:
        return A, None

    sens = eig_sensitivities(a, es)
    dlam, dphi = sens.dlam, sens.dphi
    dF = np.outer(dlam[:, 0], F1) + np.outer(dlam[:, 1], F2)
    dshear = (dlam - dF) @ _BINV.T
    dA = _rotate_batch(principal_tensor(dF, dshear), Phi)

    # rotation part: Abar is fully symmetric, so the four product-rule terms
    # are index moves of the one with dPhi in the first slot
    G = np.einsum("jq,kr,ls,pqrs->pjkl", Phi, Phi, Phi, Abar, optimize=True)
    T = np.einsum("xip,pjkl->xijkl", dphi, G)
    dA += (T + np.einsum("xjikl->xijkl", T) + np.einsum("xkijl->xijkl", T)
           + np.einsum("xlijk->xijkl", T))
    return A, dA
