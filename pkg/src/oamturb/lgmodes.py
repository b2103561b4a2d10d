"""Laguerre-Gaussian modes, their generating function, and grid sampling.

The qutrit measurement basis per photon is the symmetric triple of
waist-plane LG modes {LG(0,-l), LG(0,0), LG(0,+l)}.  In coordinates
normalized to the waist radius (u = x/w0, v = y/w0, t = z/z_R) the
amplitude of mode (p, l) is

    E(u, v, t) = N (u +- i v)^|l| (1 + i t)^p (1 - i t)^(-(p+|l|+1))
                 * exp((u^2+v^2)/(i t - 1)) * L_p^|l|(2(u^2+v^2)/(1+t^2))

with the +- sign following the sign of l and the normalization
N = sqrt(2^(|l|+1) p! / (pi (p+|l|)!)), so that the mode has unit power
under integration over (u, v).  All channel computations here live in the
waist plane (t = 0).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ResolutionError(ValueError):
    """A sample grid is too coarse or too small for the requested field."""


@dataclass(frozen=True)
class LGIndex:
    """Radial index p >= 0 and signed azimuthal index ell."""

    p: int
    ell: int

    def __post_init__(self):
        if self.p < 0:
            raise ValueError(f"radial index must be non-negative, got p={self.p}")


@dataclass(frozen=True)
class QutritBasis:
    """Symmetric three-mode basis {(0,-ell), (0,0), (0,+ell)} at waist w0.

    Only p = 0 modes enter the basis; that restriction is enforced here,
    not in the mode math (lg_amplitude is happy with any p >= 0).
    """

    ell: int
    w0: float

    def __post_init__(self):
        if self.ell not in (1, 2, 3):
            raise ValueError(f"basis ell must be 1, 2 or 3, got {self.ell}")
        if self.w0 <= 0:
            raise ValueError("basis waist must be positive")

    @property
    def elements(self) -> tuple[LGIndex, LGIndex, LGIndex]:
        return (LGIndex(0, -self.ell), LGIndex(0, 0), LGIndex(0, self.ell))

    @property
    def ell_values(self) -> tuple[int, int, int]:
        return (-self.ell, 0, self.ell)


def laguerre(p: int, a: int, x):
    """Associated Laguerre polynomial L_p^a(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    if p == 0:
        return np.ones_like(x)
    lkm1 = np.ones_like(x)
    lk = 1.0 + a - x
    for k in range(1, p):
        lkm1, lk = lk, ((2 * k + 1 + a - x) * lk - (k + a) * lkm1) / (k + 1)
    return lk


def lg_normalization(p: int, ell: int) -> float:
    """Unit-power normalization constant for mode (p, ell)."""
    a = abs(ell)
    return math.sqrt(2.0 ** (a + 1) * math.factorial(p) / (math.pi * math.factorial(p + a)))


def lg_amplitude(idx: LGIndex, u, v, t=0.0):
    """Complex LG amplitude at normalized coordinates (u, v, t).

    Vectorized over u, v.  The returned value carries no dimensional
    factor; see sample_mode for the physical-coordinate version.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    a = abs(idx.ell)
    r2 = u * u + v * v
    amp = lg_normalization(idx.p, idx.ell) * np.exp(r2 / (1j * t - 1.0))
    amp = amp * (1.0 + 1j * t) ** idx.p / (1.0 - 1j * t) ** (idx.p + a + 1)
    if a:
        sign = 1.0 if idx.ell > 0 else -1.0
        amp = amp * (u + 1j * sign * v) ** a
    amp = amp * laguerre(idx.p, a, 2.0 * r2 / (1.0 + t * t))
    return amp


def lg_generating_value(mu: complex, sign: int, x, y, w0: float):
    """Generating function (1/w0) exp((x +- i y) mu / w0 - (x^2+y^2)/w0^2).

    Derivatives with respect to mu at mu = 0 generate the p = 0 modes;
    `sign` selects the chirality (+1 or -1).
    """
    if w0 <= 0:
        raise ValueError("w0 must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = 1.0 if sign >= 0 else -1.0
    return np.exp((x + 1j * s * y) * mu / w0 - (x * x + y * y) / w0**2) / w0


def lg_generating_derivative(order: int, sign: int, x, y, w0: float):
    """Closed-form d^order/dmu^order of the generating function at mu = 0.

    The mu-dependence is a pure exponential in mu, so the derivative is
    ((x +- i y)/w0)^order times the order-zero value; no finite
    differences are involved.
    """
    if order < 0:
        raise ValueError("derivative order must be non-negative")
    base = lg_generating_value(0.0, sign, x, y, w0)
    if order == 0:
        return base
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = 1.0 if sign >= 0 else -1.0
    return ((x + 1j * s * y) / w0) ** order * base


@dataclass(frozen=True)
class GridSpec:
    """Square sample grid: n points per side at physical spacing delta.

    Coordinates are centered so that x = (i - n//2) * delta; the origin is
    always a sample point.
    """

    n: int
    delta: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid needs at least 2 points per side")
        if self.delta <= 0:
            raise ValueError("grid spacing must be positive")

    @property
    def extent(self) -> float:
        return self.n * self.delta

    def axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.delta

    def meshgrid(self):
        x = self.axis()
        return np.meshgrid(x, x, indexing="ij")


@dataclass
class FieldGrid:
    """Complex field samples on a GridSpec, with quadrature helpers."""

    values: np.ndarray
    delta: float

    def power(self) -> float:
        """Discrete quadrature of |E|^2."""
        return float((np.abs(self.values) ** 2).sum() * self.delta**2)

    def inner(self, other: "FieldGrid") -> complex:
        """Discrete <self, other> = sum conj(self) * other * delta^2."""
        if self.values.shape != other.values.shape:
            raise ValueError("field grids have mismatched shapes")
        return complex((np.conj(self.values) * other.values).sum() * self.delta**2)


def check_mode_grid(grid: GridSpec, w0: float, cover: float | None = None):
    """Reject grids that cannot resolve or contain a waist-w0 mode.

    Requires spacing <= w0/8 and extent >= 8*w0 (or >= 8*cover when a
    larger envelope such as the pump must also fit).
    """
    need = 8.0 * (cover if cover is not None else w0)
    if grid.delta > w0 / 8.0 + 1e-15:
        raise ResolutionError(
            f"grid spacing {grid.delta:g} too coarse for waist {w0:g} (need <= w0/8)")
    if grid.extent < need - 1e-12:
        raise ResolutionError(
            f"grid extent {grid.extent:g} too small (need >= {need:g})")


def sample_mode(idx: LGIndex, w0: float, grid: GridSpec) -> FieldGrid:
    """Sample a waist-plane mode in physical coordinates.

    The samples are lg_amplitude(x/w0, y/w0) / w0, so the discrete
    quadrature of |E|^2 approximates 1.
    """
    if w0 <= 0:
        raise ValueError("w0 must be positive")
    check_mode_grid(grid, w0)
    X, Y = grid.meshgrid()
    vals = lg_amplitude(idx, X / w0, Y / w0) / w0
    return FieldGrid(values=np.asarray(vals, dtype=complex), delta=grid.delta)
