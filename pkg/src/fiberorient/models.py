"""Orientation-evolution models: rates ``Da/Dt`` and exact 5x5 Jacobians.

Every model is a hydrodynamic (Jeffery) part plus a diffusion or correction
part.  With ``W = (L - L^T)/2``, ``G = (L + L^T)/2`` and ``g = sqrt(2 G:G)``:

    HD  = (W a - a W) + xi (G a + a G - 2 A4:G)
    IRD = 2 CI g (I - dim a)
    ARD = g [2 C - 2 tr(C) a - 5 (C a + a C) + 10 A4:C]

The anisotropic models differ in the spatial diffusion tensor ``C``.  Strain
reduction (SRF, RSC), rotation reduction (RPR) and the nematic term (NEM) are
built on top of these.  Derivatives are taken along the trace-free basis of
:mod:`fiberorient.tensors`, so ``J[:, r]`` is the packed change of the rate
along ``BASIS[r]``.
"""

from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .closures import canonical_tag, eval_closure
from .errors import ConfigError, UnknownKind, ZeroShearRate
from .spectral import eig_desc, eig_sensitivities
from .tensors import BASIS, ddot42, jacobian_columns, pack, unpack

_I = np.eye(3)

MODEL_TAGS = ("FT", "SRF", "RSC", "PT", "MRD", "iARD", "pARD", "WPT", "Dz",
              "NEM", "pARD-RSC", "ARD-RSC", "iARD-RPR", "pARD-RPR", "FT-RPR")

# diffusion tensor used by each anisotropic model
_DIFFUSION = {"PT": "PT", "MRD": "MRD", "iARD": "iARD", "pARD": "pARD",
              "WPT": "WPT", "Dz": "Dz", "pARD-RSC": "pARD", "ARD-RSC": "PT",
              "iARD-RPR": "iARD", "pARD-RPR": "pARD"}

_RPR_BASE = {"FT-RPR": "FT", "iARD-RPR": "iARD", "pARD-RPR": "pARD"}

# models that touch eigenvector sensitivities in their Jacobian
SPECTRAL_MODELS = ("RSC", "pARD", "MRD", "pARD-RSC", "ARD-RSC", "iARD-RPR",
                   "pARD-RPR", "FT-RPR")


# --------------------------------------------------------------------------
# kinematics
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FlowKinematics:
    """Velocity gradient ``L_ij = dv_i/dx_j`` and its split parts."""

    L: np.ndarray
    gammadot: np.ndarray
    omega: np.ndarray
    gmag: float


def decompose(L):
    """Split ``L`` into rate of deformation and vorticity; ``gmag = sqrt(2 G:G)``."""
    L = np.array(L, dtype=float)
    if L.shape != (3, 3):
        raise ConfigError(f"velocity gradient must be 3x3, got {L.shape}")
    G = 0.5 * (L + L.T)
    W = 0.5 * (L - L.T)
    return FlowKinematics(L, G, W, float(math.sqrt(2.0 * np.sum(G * G))))


def regime(phi_f, r_e):
    """Classify a suspension as dilute, semi-concentrated or concentrated."""
    if not 0.0 <= phi_f <= 1.0:
        raise ConfigError("volume fraction must lie in [0, 1]")
    if r_e <= 1.0:
        raise ConfigError("aspect ratio must exceed 1")
    if phi_f < 1.0 / r_e ** 2:
        return "dilute"
    if phi_f < 1.0 / r_e:
        return "semi-concentrated"
    return "concentrated"


def shape_factor(r_e):
    """Jeffery shape factor ``(r^2 - 1)/(r^2 + 1)``."""
    return (r_e ** 2 - 1.0) / (r_e ** 2 + 1.0)


def tangent_basis(p):
    """Two orthonormal vectors spanning the plane normal to ``p``."""
    p = np.asarray(p, dtype=float)
    e = np.zeros(3)
    e[int(np.argmin(np.abs(p)))] = 1.0
    t1 = np.cross(p, e)
    t1 /= np.linalg.norm(t1)
    return t1, np.cross(p, t1)


def jeffery_p(p, flow, xi):
    """Rate of a single rigid fibre direction and its 2x2 tangent Jacobian.

    ``pdot = W p + xi (G p - (p.G.p) p)``.  The 3x3 Jacobian
    ``W + xi (G - 2 p (G p)^T - (p.G.p) I)`` is projected onto two orthonormal
    tangent directions at ``p``.
    """
    p = np.asarray(p, dtype=float)
    G, W = flow.gammadot, flow.omega
    Gp = G @ p
    s = p @ Gp
    pdot = W @ p + xi * (Gp - s * p)
    J3 = W + xi * (G - 2.0 * np.outer(p, Gp) - s * _I)
    T = np.column_stack(tangent_basis(p))
    return pdot, T.T @ J3 @ T


# --------------------------------------------------------------------------
# model specification
# --------------------------------------------------------------------------

IARD_FORMS = ("rate", "normalized")

_JSON_KEYS = ("model", "closure", "CI", "kappa", "xi", "re", "dim", "b", "CM",
              "Omega", "D", "w", "Dz", "n", "U0", "alpha", "beta", "iard_form")


def _model_tag(model):
    for tag in MODEL_TAGS:
        if tag.lower() == str(model).strip().lower():
            return tag
    raise UnknownKind(f"unknown model {model!r}; choose from {', '.join(MODEL_TAGS)}")


@dataclass(frozen=True)
class ModelSpec:
    """Immutable model selection, closure and parameter bundle.

    Parameters
    ----------
    model : str
        One of :data:`MODEL_TAGS` (case-insensitive).
    closure : str
        Closure tag, see :func:`fiberorient.closures.available`.
    CI : float
        Fibre interaction coefficient.
    kappa : float
        Strain-reduction factor (SRF, RSC and the RSC composites).
    xi : float
        Shape factor; give ``re`` instead to derive it from the aspect ratio.
    dim : int
        Dimension factor of the isotropic diffusion term (2 or 3).
    b : tuple of 5 floats
        Coefficients of the PT-type diffusion tensor.
    CM : float
        iARD coupling coefficient.
    Omega, D : float, tuple of 3 floats
        Principal diffusion weights of the coaxial models.  ``Omega`` gives
        ``D = (1, Omega, 1 - Omega)``.
    w : float
        WPT weight.
    Dz, n : float, 3-vector
        Interaction-thickness parameter and its unit direction.
    U0 : float
        Nematic potential intensity.
    alpha, beta : float
        Rotation-reduction parameters.
    iard_form : {"rate", "normalized"}
        iARD spatial tensor built from ``4 G.G / gmag**2`` ("rate") or from
        ``G.G / (G:G)`` ("normalized").
    """

    model: str
    closure: str = "ORT"
    CI: float = 0.01
    kappa: float = 1.0
    xi: float = 1.0
    dim: int = 3
    b: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    CM: float = 0.0
    Omega: float | None = None
    D: tuple | None = None
    w: float = 0.0
    Dz: float = 1.0
    n: tuple = (0.0, 0.0, 1.0)
    U0: float = 0.0
    alpha: float = 0.0
    beta: float = 0.0
    iard_form: str = "rate"
    re: float | None = field(default=None, compare=False)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)
        set_("model", _model_tag(self.model))
        set_("closure", canonical_tag(self.closure))
        if self.re is not None:
            if self.re < 1.0:
                raise ConfigError("aspect ratio must be >= 1")
            set_("xi", shape_factor(float(self.re)))
        if not 0.0 < self.xi <= 1.0:
            raise ConfigError(f"shape factor must lie in (0, 1], got {self.xi}")
        if not 0.0 < self.kappa <= 1.0:
            raise ConfigError(f"kappa must lie in (0, 1], got {self.kappa}")
        if self.dim not in (2, 3):
            raise ConfigError("dim must be 2 or 3")
        b = tuple(float(x) for x in self.b)
        if len(b) != 5:
            raise ConfigError("b needs five coefficients")
        set_("b", b)
        n = np.asarray(self.n, dtype=float)
        if n.shape != (3,) or abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ConfigError("n must be a unit 3-vector")
        set_("n", tuple(float(x) for x in n))
        if self.D is not None:
            D = tuple(float(x) for x in self.D)
            if len(D) != 3:
                raise ConfigError("D needs three principal weights")
            set_("D", D)
        if self.iard_form not in IARD_FORMS:
            raise ConfigError(f"iard_form must be one of {IARD_FORMS}")
        diff = _DIFFUSION.get(self.model)
        if diff in ("pARD", "MRD") and self.principal_weights() is None:
            raise ConfigError(f"{self.model} needs Omega or D")
        if self.model == "NEM" and self.U0 > 8.0 * self.CI:
            warnings.warn("NEM: U0 exceeds 8 CI; steady states may be unstable",
                          stacklevel=3)

    def principal_weights(self):
        if self.D is not None:
            return np.array(self.D)
        if self.Omega is not None:
            return np.array([1.0, self.Omega, 1.0 - self.Omega])
        return None

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        out = {}
        for k in _JSON_KEYS:
            if k == "re":
                continue
            v = getattr(self, k)
            out[k] = list(v) if isinstance(v, tuple) else v
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        unknown = set(d) - set(_JSON_KEYS)
        if unknown:
            raise ConfigError(f"unknown model fields: {sorted(unknown)}")
        if "model" not in d:
            raise ConfigError("model spec needs a 'model' field")
        kw = {k: (tuple(v) if isinstance(v, list) else v) for k, v in d.items()}
        try:
            return cls(**kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class RateAndJacobian:
    """Packed residual ``R`` (5,) and Jacobian ``J`` (5, 5)."""

    R: np.ndarray
    J: np.ndarray


# --------------------------------------------------------------------------
# building blocks
# --------------------------------------------------------------------------

def spatial_diffusion(kind, a, flow, spec, es=None, derivatives=True):
    """Spatial diffusion tensor ``C`` of the anisotropic models and ``dC``.

    ``kind`` is one of ``PT, iARD, pARD, WPT, Dz, MRD``.  ``dC`` has shape
    (5, 3, 3), or is ``None`` when ``derivatives`` is false.
    """
    a = np.asarray(a, dtype=float)
    g = flow.gmag
    CI = spec.CI
    dC = np.zeros((5, 3, 3)) if derivatives else None
    if kind in ("PT", "iARD") and g == 0.0:
        raise ZeroShearRate(f"{kind} diffusion divides by the strain-rate magnitude")
    if kind == "PT":
        b1, b2, b3, b4, b5 = spec.b
        G = flow.gammadot
        C = b1 * _I + b2 * a + b3 * a @ a + b4 * G / g + b5 * G @ G / g ** 2
        if derivatives:
            dC = b2 * BASIS + b3 * (a @ BASIS + BASIS @ a)
    elif kind == "iARD":
        G = flow.gammadot
        if spec.iard_form == "rate":
            C = CI * (_I - 4.0 * spec.CM * G @ G / g ** 2)
        else:
            C = CI * (_I - spec.CM * G @ G / np.sum(G * G))
    elif kind in ("pARD", "MRD"):
        es = eig_desc(a) if es is None else es
        Phi = es.vectors
        D = spec.principal_weights()
        C = CI * (Phi * D) @ Phi.T
        if derivatives:
            dPhi = eig_sensitivities(a, es).dphi
            T = np.einsum("rik,k,jk->rij", dPhi, D, Phi)
            dC = CI * (T + np.swapaxes(T, 1, 2))
    elif kind == "WPT":
        C = CI * ((1.0 - spec.w) * _I + spec.w * a @ a)
        if derivatives:
            dC = CI * spec.w * (a @ BASIS + BASIS @ a)
    elif kind == "Dz":
        n = np.asarray(spec.n)
        C = CI * (_I - (1.0 - spec.Dz) * np.outer(n, n))
    else:
        raise UnknownKind(f"unknown diffusion tensor kind {kind!r}")
    return C, dC


def rsc_tensors(a, es=None, derivatives=True):
    """``L4 = sum lam_i phi_i^4`` and ``M4 = sum phi_i^4`` with derivatives.

    Returns ``(L4, M4, dL4, dM4)``; the derivatives are ``None`` when not
    requested and need distinct eigenvalues otherwise.
    """
    a = np.asarray(a, dtype=float)
    es = eig_desc(a) if es is None else es
    lam, Phi = es.values, es.vectors
    P = np.einsum("ik,jk->kij", Phi, Phi)
    PP = np.einsum("kij,kmn->kijmn", P, P)
    M4 = PP.sum(axis=0)
    L4 = np.tensordot(lam, PP, axes=1)
    if not derivatives:
        return L4, M4, None, None
    sens = eig_sensitivities(a, es)
    dlam, dphi = sens.dlam, sens.dphi
    dP = np.einsum("rik,jk->rkij", dphi, Phi)
    dP = dP + np.swapaxes(dP, 2, 3)
    dPP = (np.einsum("rkij,kmn->rkijmn", dP, P)
           + np.einsum("kij,rkmn->rkijmn", P, dP))
    dM4 = dPP.sum(axis=1)
    dL4 = (np.einsum("rk,kijmn->rijmn", dlam, PP)
           + np.einsum("k,rkijmn->rijmn", lam, dPP))
    return L4, M4, dL4, dM4


def rpr_correction(rateX, dRateX, a, alpha, beta, es=None):
    """Rotation-reduction correction ``-Phi diag(lamdot_IOK) Phi^T``.

    ``lamdot_k = phi_k . rateX . phi_k`` uses the eigenvectors of ``a``; the
    reduced eigen-rates are ``alpha [l_k - beta (l_k^2 + 2 l_l l_m)]`` with
    ``{l, m}`` the other two indices.  ``dRateX`` may be ``None`` to skip the
    derivative.
    """
    a = np.asarray(a, dtype=float)
    es = eig_desc(a) if es is None else es
    Phi = es.vectors
    ld = np.einsum("ik,ij,jk->k", Phi, rateX, Phi)
    other = ld[[1, 2, 0]] * ld[[2, 0, 1]]
    iok = alpha * (ld - beta * (ld ** 2 + 2.0 * other))
    corr = -(Phi * iok) @ Phi.T
    if dRateX is None:
        return corr, None
    dphi = eig_sensitivities(a, es).dphi
    dld = (2.0 * np.einsum("rik,ij,jk->rk", dphi, rateX, Phi)
           + np.einsum("ik,rij,jk->rk", Phi, dRateX, Phi))
    dother = (dld[:, [1, 2, 0]] * ld[[2, 0, 1]] + ld[[1, 2, 0]] * dld[:, [2, 0, 1]])
    diok = alpha * (dld - beta * (2.0 * ld * dld + 2.0 * dother))
    T = np.einsum("rik,k,jk->rij", dphi, iok, Phi)
    dcorr = -(T + np.swapaxes(T, 1, 2) + np.einsum("ik,rk,jk->rij", Phi, diok, Phi))
    return corr, dcorr


def _sym_prod(x, E):
    # x E + E x for a stack of directions E
    return x @ E + E @ x


def _hd(spec, a, flow, A4, dA4):
    G, W, xi = flow.gammadot, flow.omega, spec.xi
    rate = W @ a - a @ W + xi * (G @ a + a @ G - 2.0 * ddot42(A4, G))
    if dA4 is None:
        return rate, None
    E = BASIS
    d = W @ E - E @ W + xi * (_sym_prod(G, E) - 2.0 * ddot42(dA4, G))
    return rate, d


def _ird(spec, a, flow, derivatives):
    c = 2.0 * spec.CI * flow.gmag
    rate = c * (_I - spec.dim * a)
    return rate, (-c * spec.dim * BASIS if derivatives else None)


def _ard(a, flow, C, dC, A4, dA4):
    g = flow.gmag
    trC = np.trace(C)
    rate = g * (2.0 * C - 2.0 * trC * a - 5.0 * (C @ a + a @ C) + 10.0 * ddot42(A4, C))
    if dA4 is None:
        return rate, None
    E = BASIS
    trdC = np.einsum("rii->r", dC)[:, None, None]
    d = g * (2.0 * dC - 2.0 * trdC * a - 2.0 * trC * E
             - 5.0 * (dC @ a + a @ dC + _sym_prod(C, E))
             + 10.0 * (ddot42(dA4, C) + np.einsum("ijkl,rkl->rij", A4, dC)))
    return rate, d


def _mard(a, flow, C, dC, derivatives):
    g = flow.gmag
    trC = np.trace(C)
    rate = g * (2.0 * C - 2.0 * trC * a)
    if not derivatives:
        return rate, None
    trdC = np.einsum("rii->r", dC)[:, None, None]
    return rate, g * (2.0 * dC - 2.0 * trdC * a - 2.0 * trC * BASIS)


def _needs_eig(spec):
    from .closures import SPECTRAL
    return (spec.closure in SPECTRAL or spec.closure == "IBOF"
            or spec.model in SPECTRAL_MODELS)


def _evaluate(spec, a, flow, derivatives):
    """Rate tensor and its five directional derivatives (or ``None``)."""
    es = eig_desc(a) if _needs_eig(spec) else None
    clo = eval_closure(spec.closure, a, derivatives, es)
    A4, dA4 = clo.A4, clo.dA4
    model = spec.model
    base = _RPR_BASE.get(model, model)

    hd, dhd = _hd(spec, a, flow, A4, dA4)

    if base in ("FT", "SRF", "RSC"):
        ird, dird = _ird(spec, a, flow, derivatives)
        rate = hd + ird
        drate = dhd + dird if derivatives else None
        if base == "SRF":
            rate = spec.kappa * rate
            drate = spec.kappa * drate if derivatives else None
        elif base == "RSC":
            L4, M4, dL4, dM4 = rsc_tensors(a, es, derivatives)
            G = flow.gammadot
            AG = ddot42(A4, G)
            delta = 2.0 * spec.xi * (ddot42(L4, G) - ddot42(M4, AG)) + ird
            rate = rate - (1.0 - spec.kappa) * delta
            if derivatives:
                ddelta = (2.0 * spec.xi * (ddot42(dL4, G) - ddot42(dM4, AG)
                                           - np.einsum("ijkl,rkl->rij", M4, ddot42(dA4, G)))
                          + dird)
                drate = drate - (1.0 - spec.kappa) * ddelta
    elif base == "NEM":
        g = flow.gmag
        c = spec.CI
        rate = hd + g * (c * (_I - spec.dim * a) + spec.U0 * (a @ a - ddot42(A4, a)))
        drate = None
        if derivatives:
            E = BASIS
            drate = dhd + g * (-c * spec.dim * E
                               + spec.U0 * (_sym_prod(a, E) - ddot42(dA4, a)
                                            - np.einsum("ijkl,rkl->rij", A4, E)))
    elif base == "MRD":
        C, dC = spatial_diffusion("MRD", a, flow, spec, es, derivatives)
        diff, ddiff = _mard(a, flow, C, dC, derivatives)
        rate = hd + diff
        drate = dhd + ddiff if derivatives else None
    elif base in ("pARD-RSC", "ARD-RSC"):
        rate, drate = _ard_rsc(spec, a, flow, es, A4, dA4, derivatives)
    else:
        C, dC = spatial_diffusion(_DIFFUSION[base], a, flow, spec, es, derivatives)
        diff, ddiff = _ard(a, flow, C, dC, A4, dA4)
        rate = hd + diff
        drate = dhd + ddiff if derivatives else None

    if model in _RPR_BASE:
        corr, dcorr = rpr_correction(rate, drate, a, spec.alpha, spec.beta, es)
        rate = rate + corr
        drate = drate + dcorr if derivatives else None
    return rate, drate


def _ard_rsc(spec, a, flow, es, A4, dA4, derivatives):
    # the RSC-modified fourth moment Ahat = A4 + (1 - kappa)(L4 - M4:A4) enters
    # both the hydrodynamic and the anisotropic diffusion parts
    k = spec.kappa
    G, W, xi, g = flow.gammadot, flow.omega, spec.xi, flow.gmag
    C, dC = spatial_diffusion(_DIFFUSION[spec.model], a, flow, spec, es, derivatives)
    L4, M4, dL4, dM4 = rsc_tensors(a, es, derivatives)

    def ahat(X):
        return ddot42(A4, X) + (1.0 - k) * (ddot42(L4, X) - ddot42(M4, ddot42(A4, X)))

    trC = np.trace(C)
    rate = (W @ a - a @ W + xi * (G @ a + a @ G - 2.0 * ahat(G))
            + g * (2.0 * (C - (1.0 - k) * ddot42(M4, C)) - 2.0 * k * trC * a
                   - 5.0 * (C @ a + a @ C) + 10.0 * ahat(C)))
    if not derivatives:
        return rate, None

    E = BASIS

    def dahat(X):
        # derivative of Ahat:X with X held fixed
        AX = ddot42(A4, X)
        return (ddot42(dA4, X) + (1.0 - k) * (ddot42(dL4, X) - ddot42(dM4, AX)
                                              - np.einsum("ijkl,rkl->rij", M4, ddot42(dA4, X))))

    def ahat_batch(Xs):
        AX = np.einsum("ijkl,rkl->rij", A4, Xs)
        return AX + (1.0 - k) * (np.einsum("ijkl,rkl->rij", L4, Xs)
                                 - np.einsum("ijkl,rkl->rij", M4, AX))

    trdC = np.einsum("rii->r", dC)[:, None, None]
    d = (W @ E - E @ W + xi * (_sym_prod(G, E) - 2.0 * dahat(G))
         + g * (2.0 * (dC - (1.0 - k) * (ddot42(dM4, C) + np.einsum("ijkl,rkl->rij", M4, dC)))
                - 2.0 * k * (trdC * a + trC * E)
                - 5.0 * (dC @ a + a @ dC + _sym_prod(C, E))
                + 10.0 * (dahat(C) + ahat_batch(dC))))
    return rate, d


# --------------------------------------------------------------------------
# public entry points
# --------------------------------------------------------------------------

def _as_tensor(a):
    a = np.asarray(a, dtype=float)
    return unpack(a) if a.shape == (5,) else a


def model_rate(spec, a, flow):
    """Material derivative ``Da/Dt`` (3x3) of the selected model at ``a``."""
    return _evaluate(spec, _as_tensor(a), flow, False)[0]


def residual(spec, v, flow):
    """Packed rate, the Newton residual ``R(v)``."""
    return pack(_evaluate(spec, unpack(v), flow, False)[0])


def model_jacobian(spec, a, flow):
    """Packed residual and exact 5x5 Jacobian at ``a`` (tensor or 5-vector)."""
    rate, drate = _evaluate(spec, _as_tensor(a), flow, True)
    return RateAndJacobian(pack(rate), jacobian_columns(drate))
