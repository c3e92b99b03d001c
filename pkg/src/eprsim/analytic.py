"""Closed-form correlation algebra for the two-variant classical source.

Angles are radians. Every function broadcasts over numpy arrays of angles
unless noted otherwise; scalar input gives scalar (0-d) output.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

SIDES = ("L", "R")


def projector(z):
    """PBS operator at orientation ``z``: [[cos z, sin z], [-sin z, cos z]].

    Historically called a projection operator, but it is a proper rotation
    (det = 1, orthogonal, not idempotent).
    """
    c, s = math.cos(z), math.sin(z)
    return np.array([[c, s], [-s, c]])


rotation = projector


def _check_bit(n) -> int:
    if isinstance(n, (bool, np.bool_)):
        return int(n)
    if isinstance(n, (int, np.integer)) and n in (0, 1):
        return int(n)
    raise ValueError(f"source variant must be 0 or 1, got {n!r}")


def source_left(n) -> np.ndarray:
    n = _check_bit(n)
    return np.array([float(n), float(1 - n)])


def source_right(n) -> np.ndarray:
    n = _check_bit(n)
    return np.array([float(1 - n), float(n)])


def field(side: str, z, n) -> np.ndarray:
    """PBS output amplitudes for one side; shape ``(2,) + np.shape(z)``."""
    if side == "L":
        a, b = source_left(n)
    elif side == "R":
        a, b = source_right(n)
    else:
        raise ValueError(f"side must be 'L' or 'R', got {side!r}")
    z = np.asarray(z, dtype=float)
    c, s = np.cos(z), np.sin(z)
    return np.stack([c * a + s * b, -s * a + c * b])


def _fourth_order_sum(zl, zr, sign: int, shift: int):
    # Replicates the executed listing: Num(n,c,i,j,i,j,...) inside four index
    # sums, so the k and l loops only contribute a factor of 4.
    total = 0.0
    for n in (0, 1):
        el = field("L", zl, n)
        for c in (0, 1):
            er = field("R", np.asarray(zr, dtype=float) + shift * c * np.pi / 2, n)
            weight = sign**c
            for i in range(2):
                for j in range(2):
                    for _k in range(2):
                        for _l in range(2):
                            total = total + weight * el[i] * er[j] * er[i] * el[j]
    return total


def correlation_numerator(zl, zr):
    """Brute-force numerator sum; equals -8 cos(2 zl - 2 zr)."""
    return _fourth_order_sum(zl, zr, sign=-1, shift=+1)


def correlation_denominator(zl, zr):
    """Brute-force denominator sum; equals 8 for every pair of angles."""
    return _fourth_order_sum(zl, zr, sign=+1, shift=-1)


def correlation(zl, zr):
    return correlation_numerator(zl, zr) / correlation_denominator(zl, zr)


def cross_term_decomposition(zl, zr):
    """Split sin^2(zl - zr) into the photoelectric terms and the cross term.

    Returns ``(standard_terms, cross_term)`` where ``standard_terms`` is
    cos^2 zl sin^2 zr + cos^2 zr sin^2 zl and ``cross_term`` is the
    four-field product -2 cos zl sin zr cos zr sin zl.
    """
    cl, sl = np.cos(zl), np.sin(zl)
    cr, sr = np.cos(zr), np.sin(zr)
    standard = cl**2 * sr**2 + cr**2 * sl**2
    cross = -2.0 * cl * sr * cr * sl
    return standard, cross


def _check_excess(y) -> float:
    y = float(y)
    if not math.isfinite(y) or y <= 0:
        raise ValueError(f"excess factor must be positive, got {y!r}")
    if y < 1:
        warnings.warn(
            f"excess factor y={y} < 1 has no physical meaning (y >= 1 expected)",
            RuntimeWarning,
            stacklevel=3,
        )
    return y


def cor(zl, zr, y=1.0):
    """Correlation with the cross term suppressed by the excess factor ``y``.

    Five-term form as printed; equivalent to
    -cos(2zl) cos(2zr) - sin(2zl) sin(2zr) / y.
    """
    y = _check_excess(y)
    cl, sl = np.cos(zl), np.sin(zl)
    cr, sr = np.cos(zr), np.sin(zr)
    return (
        -(cl**2) * cr**2
        + cl**2 * sr**2
        - (1.0 / y) * 4.0 * cl * cr * sl * sr
        + cr**2 * sl**2
        - sl**2 * sr**2
    )


def chsh_S(x, xx, z, zz, y=1.0):
    return cor(x, z, y) - cor(x, zz, y) + cor(xx, z, y) + cor(xx, zz, y)


def chsh_SS(w, v, y=1.0):
    """CHSH value on the one-parameter family (w, w+2v, w+v, w+3v)."""
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float)
    return chsh_S(w, w + 2 * v, w + v, w + 3 * v, y)


def ss_surface(w_grid, v_grid, y=1.0) -> np.ndarray:
    """Matrix ``M[i, j] = SS(w_grid[i], v_grid[j], y)``."""
    w = np.asarray(w_grid, dtype=float).ravel()
    v = np.asarray(v_grid, dtype=float).ravel()
    if w.size == 0 or v.size == 0:
        raise ValueError("angle grids must be non-empty")
    return chsh_SS(w[:, None], v[None, :], y)


@dataclass(frozen=True)
class ChshSetting:
    """Analyzer angles entering S = E(x,z) - E(x,zz) + E(xx,z) + E(xx,zz)."""

    x: float
    xx: float
    z: float
    zz: float

    def __post_init__(self):
        for name in ("x", "xx", "z", "zz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"angle {name} must be finite")

    @classmethod
    def from_wv(cls, w: float, v: float) -> "ChshSetting":
        return cls(w, w + 2 * v, w + v, w + 3 * v)

    def pairs(self) -> list[tuple[float, float]]:
        """The four (zl, zr) settings in CHSH order."""
        return [(self.x, self.z), (self.x, self.zz), (self.xx, self.z), (self.xx, self.zz)]

    def S(self, y=1.0) -> float:
        return float(chsh_S(self.x, self.xx, self.z, self.zz, y))
