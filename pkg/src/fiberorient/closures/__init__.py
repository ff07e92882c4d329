"""Fourth-order closure approximations ``A4(a)`` and their derivatives.

Every closure returns a :class:`ClosureOutput` with the fourth-order tensor and,
on request, its five directional derivatives along the trace-free basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UnknownKind
from .generators import WEIGHTED_KINDS, hybrid_closure, weighted_closure
from .ibof import ibof_closure
from .orthotropic import orthotropic_closure
from .tables import load_table

# the twenty closures of the Jacobian grid, in reporting order
CLOSURE_TAGS = ("HYB1", "HYB2", "ISO", "LIN", "QDR", "SF2", "HL1", "HL2",
                "IBOF", "ORS", "ORT", "NAT-MID", "ORW", "NAT-EXT",
                "WTZ", "LAR32", "ORW3", "VST", "FFLAR4", "LAR4")

ORTHOTROPIC_FILES = {
    "ORS": "ors.txt", "ORT": "ort.txt", "NAT-MID": "nat_mid.txt",
    "ORW": "orw.txt", "NAT-EXT": "nat_ext.txt", "WTZ": "wtz.txt",
    "LAR32": "lar32.txt", "ORW3": "orw3.txt", "VST": "vst.txt",
    "FFLAR4": "fflar4.txt", "LAR4": "lar4.txt",
}

ALIASES = {"NAT1": "NAT-MID", "NAT2": "NAT-EXT", "ORF": "ORT", "ORW2": "ORW"}

# closures that satisfy A_ijkk = a_ij identically
NORMALIZING = ("HYB1", "HYB2", "LIN", "QDR", "IBOF") + tuple(ORTHOTROPIC_FILES)
# closures without full index symmetry
PARTIALLY_SYMMETRIC = ("SF2", "HL1", "HL2")
# closures whose derivatives need eigenvector sensitivities
SPECTRAL = tuple(ORTHOTROPIC_FILES)


@dataclass(frozen=True)
class ClosureOutput:
    """Fourth-order tensor ``A4`` and its derivatives ``dA4`` (5, 3, 3, 3, 3)."""

    A4: np.ndarray
    dA4: np.ndarray | None


def canonical_tag(kind):
    """Resolve aliases and case; raise :class:`UnknownKind` for anything else."""
    tag = str(kind).strip().upper()
    tag = ALIASES.get(tag, tag)
    if tag not in CLOSURE_TAGS:
        raise UnknownKind(f"unknown closure {kind!r}; choose from "
                          f"{', '.join(CLOSURE_TAGS + tuple(ALIASES))}")
    return tag


def available():
    """All accepted closure tags, aliases included."""
    return CLOSURE_TAGS + tuple(ALIASES)


def eval_closure(kind, a, derivatives=True, es=None):
    """Evaluate closure ``kind`` at orientation tensor ``a``.

    Parameters
    ----------
    kind : str
        Closure tag, e.g. ``"ORT"`` or ``"IBOF"``; aliases are accepted.
    a : (3, 3) array
        Orientation tensor.
    derivatives : bool
        Also return the five directional derivatives.
    es : EigenSystem, optional
        Precomputed eigen-decomposition of ``a``, reused where needed.
    """
    tag = canonical_tag(kind)
    a = np.asarray(a, dtype=float)
    if tag in WEIGHTED_KINDS:
        A, dA = weighted_closure(tag, a, derivatives)
    elif tag in ("HYB1", "HYB2"):
        A, dA = hybrid_closure(tag, a, derivatives)
    elif tag == "IBOF":
        A, dA = ibof_closure(a, derivatives, es)
    else:
        A, dA = orthotropic_closure(load_table(ORTHOTROPIC_FILES[tag]), a,
                                    derivatives, es)
    return ClosureOutput(A, dA)


__all__ = ["ALIASES", "CLOSURE_TAGS", "ClosureOutput", "NORMALIZING",
           "PARTIALLY_SYMMETRIC", "SPECTRAL", "available", "canonical_tag",
           "eval_closure"]
