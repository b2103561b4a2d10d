"""Kolmogorov turbulence statistics and phase-screen synthesis.

Phase screens are generated by the spectral (FFT) method: a delta-correlated
complex Gaussian field chi(a) is shaped by the square root of the phase power
spectral density and inverse transformed,

    theta(x) = ifft[ chi(a) * sqrt(Phi_theta(a)) * dA ] ,

which yields two independent real screens per synthesis (the real and the
imaginary parts of the complex result).  Because the FFT grid cannot
represent frequencies below 1/(n*delta), the synthesis is augmented with
subharmonic levels: per level p, a 3x3 block of discrete tones at spacing
df/3^p fills the unresolved cell around DC.  Tone variances conserve the
second spectral moment of their cell (int Phi |f|^2 over the cell divided by
|f_center|^2), which keeps the structure function of the rendered field
accurate; the power below the deepest level's inner cell, whose wavelengths
exceed the screen many times over, is closed exactly by a Gaussian random
tilt term.  With 3 levels the ensemble structure function tracks
6.88 (x/r0)^(5/3) to within a few percent out to an eighth of the screen.

All spectral densities here are per unit area of spatial frequency in
cycles/m, normalized so that

    D_theta(dx) = 2 * int (1 - cos(2 pi a . dx)) Phi_theta(a) d^2 a

reproduces the Kolmogorov structure function with the Fried parameter of
fried_parameter().
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from numpy.polynomial.legendre import leggauss

from .lgmodes import ResolutionError
from .seeding import derive_rng

# Phi_theta(a) = PSD_COEFFICIENT * r0^(-5/3) * a^(-11/3)  [rad^2 m^2], a in cycles/m.
# Equal to (2 pi k)^2 z * 0.033 Cn^2 (2 pi a)^(-11/3) expressed per cycles^2
# area and with Cn^2 z eliminated through the Fried parameter; numerically
# ~0.0230, the familiar constant of FFT phase-screen generators.
PSD_COEFFICIENT = 0.033 * 2 * math.pi * (2 * math.pi) ** (1.0 / 3.0) * 0.185 ** (5.0 / 3.0)

_GAUSS_ORDER = 12


@dataclass(frozen=True)
class TurbulenceParams:
    """Physical channel description: structure constant, path, wavelength.

    r0 is the Fried parameter and W = beam_radius / r0 the scintillation
    strength for whichever beam radius the caller adopted.
    """

    cn2: float
    z: float
    lam: float
    r0: float
    W: float

    @classmethod
    def from_physical(cls, cn2: float, z: float, lam: float, beam_radius: float):
        r0 = fried_parameter(cn2, z, lam)
        return cls(cn2=cn2, z=z, lam=lam, r0=r0, W=beam_radius / r0)

    @classmethod
    def from_scintillation(cls, W: float, beam_radius: float, z: float, lam: float = 710e-9):
        """Back out cn2 from a target W = beam_radius / r0."""
        if W <= 0:
            raise ValueError("W must be positive to define a finite r0")
        r0 = beam_radius / W
        cn2 = 0.185 ** (5.0 / 3.0) * lam**2 / (r0 ** (5.0 / 3.0) * z)
        return cls(cn2=cn2, z=z, lam=lam, r0=r0, W=W)


@dataclass
class PhaseScreen:
    """One turbulence realization: phases in radians on a square grid."""

    theta: np.ndarray
    delta: float
    r0: float
    seed: int
    subgrid_levels: int

    @property
    def n(self) -> int:
        return self.theta.shape[0]


def fried_parameter(cn2: float, z: float, lam: float) -> float:
    """Fried parameter r0 = 0.185 (lam^2 / (Cn^2 z))^(3/5)."""
    if cn2 <= 0 or z <= 0 or lam <= 0:
        raise ValueError("cn2, z and lam must all be positive")
    return 0.185 * (lam**2 / (cn2 * z)) ** (3.0 / 5.0)


def structure_fn_kolmogorov(x, r0: float):
    """Kolmogorov phase structure function 6.88 (x/r0)^(5/3) in rad^2."""
    if r0 <= 0:
        raise ValueError("r0 must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("separation must be non-negative")
    return 6.88 * (x / r0) ** (5.0 / 3.0)


def structure_fn_quadratic(x, r0: float, w_p: float):
    """Quadratic-approximation structure function 6.88 x^2 / (w_p^(1/3) r0^(5/3)).

    Agrees with the Kolmogorov form at x = w_p; the w_p^(-1/3) factor keeps
    the exponent dimensionless.
    """
    if r0 <= 0 or w_p <= 0:
        raise ValueError("r0 and w_p must be positive")
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("separation must be non-negative")
    return 6.88 * x**2 / (w_p ** (1.0 / 3.0) * r0 ** (5.0 / 3.0))


def phase_psd_fried(a, r0: float):
    """Phase PSD over spatial frequency (cycles/m) for a given r0."""
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0):
        raise ValueError("PSD is singular at zero frequency; |a| must be > 0")
    return PSD_COEFFICIENT * r0 ** (-5.0 / 3.0) * a ** (-11.0 / 3.0)


def phase_psd(a, cn2: float, z: float, lam: float):
    """Phase PSD from physical parameters (through the Fried parameter)."""
    return phase_psd_fried(a, fried_parameter(cn2, z, lam))


@lru_cache(maxsize=8)
def _synthesis_tables(n: int, delta: float, subgrid_levels: int):
    """Unit-r0 variance tables for the FFT grid, subharmonic tones and tilt.

    Returns (fft_amp, tones, tilt_var) where fft_amp is the n x n per-bin
    standard deviation (DC zeroed), tones is a list of
    (f_x, f_y, std) subharmonic entries and tilt_var the per-axis variance
    of the residual tilt gradient.  Scale stds by r0^(-5/6) and the tilt
    variance by r0^(-5/3) for a target Fried parameter.
    """
    df = 1.0 / (n * delta)
    f1 = np.fft.fftfreq(n, d=delta)
    fx, fy = np.meshgrid(f1, f1, indexing="ij")
    fmag = np.hypot(fx, fy)
    fmag[0, 0] = 1.0
    var = PSD_COEFFICIENT * fmag ** (-11.0 / 3.0) * df * df
    var[0, 0] = 0.0
    fft_amp = np.sqrt(var)

    gx, gw = leggauss(_GAUSS_ORDER)
    tones = []
    for p in range(1, subgrid_levels + 1):
        dfp = df / 3.0**p
        for i in (-1, 0, 1):
            for j in (-1, 0, 1):
                if i == 0 and j == 0:
                    continue
                # second-moment-conserving tone variance:
                # v = int_cell Phi |f|^2 dA / |f_center|^2
                xs = i * dfp + gx * dfp / 2.0
                ys = j * dfp + gx * dfp / 2.0
                X, Y = np.meshgrid(xs, ys, indexing="ij")
                W = np.outer(gw, gw) * (dfp / 2.0) ** 2
                ff2 = X * X + Y * Y
                psd = PSD_COEFFICIENT * ff2 ** (-11.0 / 6.0)
                v = float((psd * ff2 * W).sum()) / ((i * i + j * j) * dfp * dfp)
                tones.append((i * dfp, j * dfp, math.sqrt(v)))
    if subgrid_levels > 0:
        # 2 int_{|f|<fc} Phi(f) (1-cos(2 pi f_x s)) d2f -> tilt_var * s^2
        fc = df / (2.0 * 3.0**subgrid_levels)
        tilt_var = 12.0 * math.pi**3 * PSD_COEFFICIENT * fc ** (1.0 / 3.0)
    else:
        tilt_var = 0.0
    return fft_amp, tuple(tones), tilt_var


def generate_screen(n: int, delta: float, r0: float, seed: int,
                    subgrid_levels: int = 3) -> tuple[PhaseScreen, PhaseScreen]:
    """Synthesize two independent Kolmogorov phase screens.

    The complex spectral synthesis yields two real screens per call (real
    and imaginary parts); both are returned and both carry the same seed.
    Screens have exactly zero spatial mean.
    """
    if n < 128 or (n & (n - 1)) != 0:
        raise ValueError(f"grid side must be a power of two >= 128, got {n}")
    if delta <= 0 or r0 <= 0:
        raise ValueError("delta and r0 must be positive")
    if subgrid_levels < 0:
        raise ValueError("subgrid_levels must be >= 0")
    if delta > r0 / 2.0:
        raise ResolutionError(
            f"spacing {delta:g} cannot resolve r0 = {r0:g} (need delta <= r0/2)")
    fft_amp, tones, tilt_var = _synthesis_tables(n, float(delta), subgrid_levels)
    scale = r0 ** (-5.0 / 6.0)
    rng = derive_rng(seed)
    chi = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    theta = np.fft.ifft2(chi * (fft_amp * scale)) * (n * n)
    x1 = (np.arange(n) - n // 2) * delta
    for tfx, tfy, std in tones:
        c = (rng.standard_normal() + 1j * rng.standard_normal()) * (std * scale)
        theta += c * np.exp(2j * np.pi * tfx * x1)[:, None] * np.exp(2j * np.pi * tfy * x1)[None, :]
    if tilt_var > 0.0:
        sig = math.sqrt(tilt_var) * scale
        tx = (rng.standard_normal() + 1j * rng.standard_normal()) * sig
        ty = (rng.standard_normal() + 1j * rng.standard_normal()) * sig
        theta += tx * x1[:, None] + ty * x1[None, :]
    theta -= theta.mean()
    return tuple(
        PhaseScreen(theta=np.ascontiguousarray(part), delta=float(delta),
                    r0=float(r0), seed=int(seed), subgrid_levels=subgrid_levels)
        for part in (theta.real, theta.imag))


def tilt_variance(r0: float, w_p: float) -> float:
    """Per-axis gradient variance realizing the quadratic structure function.

    A linear screen theta = a . x with <a_i a_j> = sigma^2 delta_ij has
    D(dx) = sigma^2 |dx|^2; matching structure_fn_quadratic gives
    sigma^2 = 6.88 / (w_p^(1/3) r0^(5/3)).
    """
    return 6.88 / (w_p ** (1.0 / 3.0) * r0 ** (5.0 / 3.0))


def generate_tilt_screen(n: int, delta: float, sigma2: float, seed: int) -> PhaseScreen:
    """Random linear phase ramp with Gaussian gradient of variance sigma2."""
    if sigma2 < 0:
        raise ValueError("sigma2 must be non-negative")
    if n < 2 or delta <= 0:
        raise ValueError("need n >= 2 and positive delta")
    rng = derive_rng(seed)
    ax, ay = rng.standard_normal(2) * math.sqrt(sigma2)
    x1 = (np.arange(n) - n // 2) * delta
    theta = ax * x1[:, None] + ay * x1[None, :]
    return PhaseScreen(theta=theta, delta=float(delta), r0=math.nan,
                       seed=int(seed), subgrid_levels=0)


def estimate_structure_fn(screens, separations):
    """Ensemble structure-function estimate at the given separations.

    separations must be (close to) integer multiples of the common grid
    spacing; differences are taken along both axes at every in-bounds
    position.  Returns (estimates, standard_errors) with the standard error
    taken over the per-screen means.
    """
    screens = list(screens)
    if not screens:
        raise ValueError("empty screen ensemble")
    delta = screens[0].delta
    if any(s.delta != delta for s in screens):
        raise ValueError("screens in an ensemble must share one grid spacing")
    lags = []
    for s in np.atleast_1d(separations):
        k = int(round(s / delta))
        if k < 1 or abs(k * delta - s) > 1e-9 * max(s, delta):
            raise ValueError(f"separation {s} is not a positive multiple of delta={delta}")
        lags.append(k)
    per_screen = np.empty((len(screens), len(lags)))
    for i, scr in enumerate(screens):
        th = scr.theta
        for j, k in enumerate(lags):
            d1 = th[:, k:] - th[:, :-k]
            d2 = th[k:, :] - th[:-k, :]
            per_screen[i, j] = (np.mean(d1 * d1) + np.mean(d2 * d2)) / 2.0
    est = per_screen.mean(axis=0)
    if len(screens) > 1:
        se = per_screen.std(axis=0, ddof=1) / math.sqrt(len(screens))
    else:
        se = np.full(len(lags), np.nan)
    return est, se


_HEADER = struct.Struct("<QddQ")  # n, delta, r0, seed (little-endian 64-bit)


def save_screen(screen: PhaseScreen, path) -> None:
    """Write a screen as flat binary (header + row-major float64 radians).

    A plain-text sidecar `<path>.meta.txt` records the same header fields
    plus the subgrid level count.
    """
    path = Path(path)
    r0 = screen.r0 if math.isfinite(screen.r0) else 0.0
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(screen.n, screen.delta, r0, screen.seed & 0xFFFFFFFFFFFFFFFF))
        fh.write(np.ascontiguousarray(screen.theta, dtype="<f8").tobytes())
    meta = (f"n = {screen.n}\n"
            f"delta = {screen.delta!r}\n"
            f"r0 = {screen.r0!r}\n"
            f"seed = {screen.seed}\n"
            f"subgrid_levels = {screen.subgrid_levels}\n")
    Path(str(path) + ".meta.txt").write_text(meta)


def load_screen(path) -> PhaseScreen:
    """Read a screen written by save_screen (sidecar optional)."""
    path = Path(path)
    raw = path.read_bytes()
    n, delta, r0, seed = _HEADER.unpack_from(raw)
    theta = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(n, n).copy()
    levels = 0
    meta = Path(str(path) + ".meta.txt")
    if meta.exists():
        for line in meta.read_text().splitlines():
            key, _, val = line.partition("=")
            if key.strip() == "subgrid_levels":
                levels = int(val)
    return PhaseScreen(theta=theta, delta=delta, r0=(r0 if r0 > 0 else math.nan),
                       seed=int(seed), subgrid_levels=levels)
