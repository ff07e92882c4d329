"""Eigen-decomposition of orientation tensors and its sensitivities.

Eigenvalues are ordered largest first.  Each eigenvector is unit length with
its largest-magnitude component positive, which makes the decomposition a
smooth function of ``a`` away from repeated eigenvalues and away from ties in
that component.

Sensitivities are taken along the trace-free basis of :mod:`fiberorient.tensors`.
Eigenvector derivatives come from either an augmented solve, where one row of
the singular system is swapped for the derivative of a normalisation condition,
or from Nelson's method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateEigenvalues
from .tensors import BASIS

GAP_TOL = 1e-8
NORMALIZATIONS = ("mass", "component", "norm")
METHODS = ("direct", "nelson")


@dataclass(frozen=True)
class EigenSystem:
    """Descending eigenvalues and matching unit eigenvectors (columns)."""

    values: np.ndarray
    vectors: np.ndarray

    def min_gap(self):
        lam = self.values
        return float(min(lam[0] - lam[1], lam[1] - lam[2]))


@dataclass(frozen=True)
class EigenSensitivities:
    """Derivatives of the eigen-decomposition along the five basis directions.

    ``dLambda[k, r]`` is the change of eigenvalue ``k`` along direction ``r`` and
    ``dPhi[:, k, r]`` the change of eigenvector ``k``.  ``dPhi`` is ``None`` when
    only eigenvalue sensitivities were requested.
    """

    dLambda: np.ndarray
    dPhi: np.ndarray | None

    @property
    def dlam(self):
        """Direction-first view, shape (5, 3)."""
        return self.dLambda.T

    @property
    def dphi(self):
        """Direction-first view, shape (5, 3, 3)."""
        return None if self.dPhi is None else np.moveaxis(self.dPhi, 2, 0)


def _cross(x, y):
    return (x[1] * y[2] - x[2] * y[1], x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0])


def _dot(x, y):
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2]


def _matvec(A, x):
    return tuple(_dot(row, x) for row in A)


def _solve3(J, b):
    c0, c1, c2 = _cross(J[1], J[2]), _cross(J[2], J[0]), _cross(J[0], J[1])
    det = _dot(J[0], c0)
    if det == 0.0:
        return None
    # inverse of J is [c0 c1 c2] / det (columns)
    return tuple((c0[i] * b[0] + c1[i] * b[1] + c2[i] * b[2]) / det
                 for i in range(3))


def _cubic_roots(A):
    (a11, a12, a13), (_, a22, a23), (_, _, a33) = A
    q = (a11 + a22 + a33) / 3.0
    b11, b22, b33 = a11 - q, a22 - q, a33 - q
    p2 = (b11 * b11 + b22 * b22 + b33 * b33
          + 2.0 * (a12 * a12 + a13 * a13 + a23 * a23)) / 6.0
    p = math.sqrt(p2)
    if p < 1e-300:
        return [q, q, q], 0.0
    # determinant of the deviator scaled by 1/p, so tiny spreads do not underflow
    b11, b22, b33 = b11 / p, b22 / p, b33 / p
    s12, s13, s23 = a12 / p, a13 / p, a23 / p
    detb = (b11 * (b22 * b33 - s23 * s23) - s12 * (s12 * b33 - s23 * s13)
            + s13 * (s12 * s23 - b22 * s13))
    r = min(1.0, max(-1.0, 0.5 * detb))
    phi = math.acos(r) / 3.0
    l1 = q + 2.0 * p * math.cos(phi)
    l3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    lam = [l1, 3.0 * q - l1 - l3, l3]
    c2 = a11 + a22 + a33
    c1 = (a11 * a22 + a22 * a33 + a11 * a33 - a12 * a12 - a23 * a23
          - a13 * a13)
    c0 = (a11 * (a22 * a33 - a23 * a23) - a12 * (a12 * a33 - a23 * a13)
          + a13 * (a12 * a23 - a22 * a13))
    for k in range(3):
        x = lam[k]
        f = ((-x + c2) * x - c1) * x + c0
        df = (-3.0 * x + 2.0 * c2) * x - c1
        # skip the polish where the root is (nearly) repeated
        if abs(df) > 1e-6 * p2:
            step = f / df
            if abs(step) < 1e-6 * p:
                lam[k] = x - step
    lam.sort(reverse=True)
    return lam, p


def cubic_eigenvalues(a):
    """Closed-form eigenvalues of a symmetric 3x3 matrix, largest first.

    Uses the trigonometric solution of the characteristic cubic followed by
    one Newton polish per root.
    """
    A = np.asarray(a, dtype=float).tolist()
    return np.array(_cubic_roots(A)[0])


def _fix_sign(phi):
    k = max(range(3), key=lambda i: abs(phi[i]))
    return tuple(-x for x in phi) if phi[k] < 0 else tuple(phi)


def refine_eigenvector(K, lam, phi, M=None, iters=1):
    """Newton refinement of an eigenvector with a mass normalisation row.

    The row of ``(K - lam M) phi`` with index ``n = argmax|phi|`` is replaced by
    ``phi^T M phi - 1`` and the resulting square system is driven to zero.
    """
    K = np.asarray(K, dtype=float)
    M = np.eye(len(phi)) if M is None else np.asarray(M, dtype=float)
    phi = np.asarray(phi, dtype=float)
    S = K - lam * M
    for _ in range(iters):
        n = int(np.argmax(np.abs(phi)))
        res = S @ phi
        res[n] = phi @ M @ phi - 1.0
        J = S.copy()
        J[n] = 2.0 * (M @ phi)
        try:
            phi = phi - np.linalg.solve(J, res)
        except np.linalg.LinAlgError:
            break
    return phi


def _refine3(S, phi):
    # one Newton step of the augmented system, unit-mass normalisation
    n = max(range(3), key=lambda i: abs(phi[i]))
    res = list(_matvec(S, phi))
    res[n] = _dot(phi, phi) - 1.0
    J = [list(row) for row in S]
    J[n] = [2.0 * x for x in phi]
    step = _solve3(J, res)
    if step is None:
        return phi
    return tuple(phi[i] - step[i] for i in range(3))


def eig_desc(a):
    """Eigen-decomposition of a symmetric 3x3 tensor, largest eigenvalue first.

    The most isolated eigenvalue gets its eigenvector from the null space of the
    rank-2 matrix ``a - lam I`` (best cross product of two rows, then one Newton
    refinement with a normalisation row).  The remaining pair is resolved by an
    exact 2x2 rotation inside the orthogonal complement, so clustered or repeated
    eigenvalues still give an orthonormal basis that reconstructs ``a``.
    """
    a = np.asarray(a, dtype=float)
    A = (0.5 * (a + a.T)).tolist()
    lam, p = _cubic_roots(A)
    if lam[0] - lam[2] <= 1e-14 * max(abs(lam[0]), abs(lam[2]), 1e-300):
        return EigenSystem(np.array(lam), np.eye(3))

    gaps = (lam[0] - lam[1], min(lam[0] - lam[1], lam[1] - lam[2]),
            lam[1] - lam[2])
    k = max(range(3), key=lambda i: gaps[i])
    S = [[A[i][j] - (lam[k] if i == j else 0.0) for j in range(3)]
         for i in range(3)]
    cands = (_cross(S[0], S[1]), _cross(S[0], S[2]), _cross(S[1], S[2]))
    v = max(cands, key=lambda c: _dot(c, c))
    nv = math.sqrt(_dot(v, v))
    v = tuple(x / nv for x in v)
    v = _refine3(S, v)
    nv = math.sqrt(_dot(v, v))
    v = tuple(x / nv for x in v)

    # orthonormal complement and the 2x2 problem inside it
    j = min(range(3), key=lambda i: abs(v[i]))
    e = [0.0, 0.0, 0.0]
    e[j] = 1.0
    u = _cross(v, e)
    nu = math.sqrt(_dot(u, u))
    u = tuple(x / nu for x in u)
    w = _cross(v, u)
    Au, Aw = _matvec(A, u), _matvec(A, w)
    b11, b12, b22 = _dot(u, Au), _dot(u, Aw), _dot(w, Aw)
    theta = 0.5 * math.atan2(2.0 * b12, b11 - b22)
    c, s = math.cos(theta), math.sin(theta)
    pv = tuple(c * u[i] + s * w[i] for i in range(3))
    qv = tuple(-s * u[i] + c * w[i] for i in range(3))

    vecs = (v, pv, qv)
    vals = [_dot(x, _matvec(A, x)) for x in vecs]
    order = sorted(range(3), key=lambda i: -vals[i])
    Phi = np.array([_fix_sign(vecs[i]) for i in order]).T
    return EigenSystem(np.array([vals[i] for i in order]), Phi)


def eigenpair_derivative(K, M, dK, dM, lam, phi, method="direct",
                         normalization="mass", index=None):
    """Derivative of one eigenpair of ``K phi = lam M phi``.

    Parameters
    ----------
    K, M : (n, n) arrays
        Symmetric stiffness-like and mass-like matrices.
    dK, dM : (n, n) arrays
        Their derivatives with respect to the design variable.
    lam, phi : float, (n,) array
        The eigenpair, with ``phi`` satisfying the chosen normalisation.
    method : {"direct", "nelson"}
        Augmented-row solve or Nelson's method.
    normalization : {"mass", "component", "norm"}
        ``phi^T M phi = 1``, a fixed component ``phi[index]``, or ``|phi| = 1``.
    index : int, optional
        Row swapped for the normalisation (direct) or the component held fixed
        (Nelson / component).  Defaults to the largest-magnitude entry of phi.

    Returns
    -------
    dlam : float
    dphi : (n,) array
    """
    if method not in METHODS:
        raise ValueError(f"unknown sensitivity method {method!r}")
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    n = int(np.argmax(np.abs(phi))) if index is None else int(index)
    dlam = phi @ (dK - lam * dM) @ phi / (phi @ M @ phi)
    S = K - lam * M
    dS = dK - dlam * M - lam * dM
    rhs = -dS @ phi

    if method == "direct":
        J = S.copy()
        if normalization == "mass":
            J[n] = 2.0 * (M @ phi)
            rhs[n] = -phi @ dM @ phi
        elif normalization == "component":
            J[n] = 0.0
            J[n, n] = 1.0
            rhs[n] = 0.0
        else:
            J[n] = phi / np.linalg.norm(phi)
            rhs[n] = 0.0
        return dlam, np.linalg.solve(J, rhs)

    SP = S.copy()
    SP[n, :] = 0.0
    SP[:, n] = 0.0
    SP[n, n] = 1.0
    rhs[n] = 0.0
    V = np.linalg.solve(SP, rhs)
    if normalization == "component":
        c = 0.0
    elif normalization == "mass":
        c = -phi @ M @ V - 0.5 * phi @ dM @ phi
    else:
        c = -phi @ V / (phi @ phi)
    return dlam, V + c * phi


def eig_sensitivities(a, es=None, method="direct", normalization="mass",
                      gap_tol=GAP_TOL, vectors=True):
    """Eigenvalue and eigenvector sensitivities of ``a`` along the five directions.

    Eigenvalue sensitivities ``phi_k^T E_r phi_k`` are always returned.  When
    ``vectors`` is true and two eigenvalues are closer than ``gap_tol``,
    :class:`DegenerateEigenvalues` is raised.
    """
    a = np.asarray(a, dtype=float)
    es = eig_desc(a) if es is None else es
    lam, Phi = es.values, es.vectors
    dLambda = np.einsum("ik,rij,jk->kr", Phi, BASIS, Phi)
    if not vectors:
        return EigenSensitivities(dLambda, None)
    gap = es.min_gap()
    if gap < gap_tol:
        raise DegenerateEigenvalues(gap, gap_tol)
    I = np.eye(3)
    Z = np.zeros((3, 3))
    dPhi = np.empty((3, 3, 5))
    for k in range(3):
        for r in range(5):
            _, dphi = eigenpair_derivative(a, I, BASIS[r], Z, lam[k], Phi[:, k],
                                           method=method,
                                           normalization=normalization)
            dPhi[:, k, r] = dphi
    return EigenSensitivities(dLambda, dPhi)
