"""Coefficient tables for the fitted closures, read from ``data/*.txt``."""

from __future__ import annotations

import functools
import hashlib
from dataclasses import dataclass
from importlib import resources

import numpy as np


@dataclass(frozen=True)
class CoefficientTable:
    """Polynomial (or rational) fit with three output columns.

    Row ``k`` of ``num`` multiplies ``x**num_exps[k, 0] * y**num_exps[k, 1]``.
    """

    name: str
    num_exps: np.ndarray
    num: np.ndarray
    den_exps: np.ndarray | None = None
    den: np.ndarray | None = None

    @property
    def rational(self):
        return self.den is not None


def _parse(text):
    name = None
    blocks = {}
    current = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("name"):
            name = line.split("=", 1)[1].strip()
        elif line.startswith("["):
            current = line.strip("[]")
            blocks[current] = []
        else:
            blocks[current].append(line.split())
    out = {}
    for key, rows in blocks.items():
        exps = np.array([[int(r[0]), int(r[1])] for r in rows])
        vals = np.array([[float(x) for x in r[2:]] for r in rows])
        out[key] = (exps, vals)
    num_exps, num = out["numerator"]
    den_exps, den = out.get("denominator", (None, None))
    return CoefficientTable(name, num_exps, num, den_exps, den)


def data_files():
    return sorted(p for p in resources.files(__package__).joinpath("data").iterdir()
                  if p.name.endswith(".txt"))


@functools.lru_cache(maxsize=None)
def load_table(filename):
    """Parse ``data/<filename>``; results are cached."""
    text = resources.files(__package__).joinpath("data", filename).read_text()
    return _parse(text)


def poly_eval(exps, C, x, y):
    """Evaluate a two-variable polynomial and its partial derivatives.

    Returns ``(f, f_x, f_y)``, each with one entry per column of ``C``.
    """
    p = exps[:, 0]
    q = exps[:, 1]
    xp = x ** p
    yq = y ** q
    t = xp * yq
    tx = np.where(p > 0, p * x ** np.maximum(p - 1, 0), 0.0) * yq
    ty = xp * np.where(q > 0, q * y ** np.maximum(q - 1, 0), 0.0)
    return t @ C, tx @ C, ty @ C


def verify_manifest():
    """Names of coefficient files whose sha256 differs from ``data/MANIFEST``."""
    data = resources.files(__package__).joinpath("data")
    bad = []
    for line in data.joinpath("MANIFEST").read_text().splitlines():
        digest, name = line.split()
        if hashlib.sha256(data.joinpath(name).read_bytes()).hexdigest() != digest:
            bad.append(name)
    return bad
