"""Down-conversion source model: geometry parameters and the projected state.

The biphoton amplitude of a Gaussian-pumped thin crystal, written in
transverse position space, is

    psi(x_s, x_i) ~ exp(-|x_s+x_i|^2 / (4 w_p^2) - |x_s-x_i|^2 / (2 w_p^2 beta)),

where w_p is the effective pump width (pump waist combined with the
back-projected fibre modes) and beta = n_o L lambda_p / (pi w_p^2) measures
the crystal length against the pump Rayleigh range.  For the geometries of
interest beta << 1 (thin-crystal limit): the antisymmetric Gaussian
collapses to a delta function and the pair amplitude projected onto basis
modes reduces to a single three-way overlap with pump profile
m_p(x) = exp(-|x|^2 / w_p^2) on the diagonal.

Projected onto the symmetric qutrit basis the source state is

    |Psi> = a0 |0,0> + a_l (|l,-l> + |-l,l>),   a0^2 + 2 a_l^2 = 1 ,

with amplitudes given by the overlap integrals computed here by grid
quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lgmodes import GridSpec, LGIndex, QutritBasis, sample_mode

# Ordinary refractive index of beta-barium borate at a 355 nm pump
# (Sellmeier); only enters the thin-crystal check through beta.
BBO_ORDINARY_INDEX_355NM = 1.7055


@dataclass(frozen=True)
class SpdcParams:
    """Source geometry and derived thin-crystal parameters."""

    lambda_p: float          # pump wavelength (m)
    lam: float               # down-converted wavelength, 2 * lambda_p (m)
    w_p_raw: float           # pump waist at the crystal (m)
    w_smf: float             # back-projected fibre-mode radius at the crystal (m)
    w_p: float               # effective pump width (m)
    L: float                 # crystal length (m)
    n_o: float               # ordinary refractive index
    z_Rp: float              # pump Rayleigh range (m)
    beta: float              # thin-crystal parameter n_o L / z_Rp

    @classmethod
    def from_geometry(cls, lambda_p: float, w_p_raw: float, w_smf: float,
                      L: float, n_o: float = BBO_ORDINARY_INDEX_355NM):
        w_p = effective_pump_width(w_p_raw, w_smf)
        beta, z_rp = beta_parameter(n_o, L, w_p, lambda_p)
        return cls(lambda_p=lambda_p, lam=2.0 * lambda_p, w_p_raw=w_p_raw,
                   w_smf=w_smf, w_p=w_p, L=L, n_o=n_o, z_Rp=z_rp, beta=beta)


def effective_pump_width(w_p_raw: float, w_smf: float) -> float:
    """Combine pump waist and fibre-mode envelopes: 1/w^2 = 1/w_raw^2 + 2/w_smf^2.

    The two fibre Gaussians cannot be folded into the measurement modes, so
    they are absorbed into an effective pump profile.  w_smf = inf recovers
    the bare pump waist.
    """
    if w_p_raw <= 0 or w_smf <= 0:
        raise ValueError("widths must be positive")
    return 1.0 / math.sqrt(1.0 / w_p_raw**2 + 2.0 / w_smf**2)


def beta_parameter(n_o: float, L: float, w_p: float, lambda_p: float):
    """Thin-crystal parameter beta = n_o L lambda_p / (pi w_p^2).

    Returns (beta, z_Rp); beta << 1 justifies dropping the phase-matching
    function.  L = 0 is allowed and gives beta = 0.
    """
    if n_o <= 0 or w_p <= 0 or lambda_p <= 0 or L < 0:
        raise ValueError("n_o, w_p, lambda_p must be positive and L >= 0")
    z_rp = math.pi * w_p**2 / lambda_p
    return n_o * L / z_rp, z_rp


def spdc_amplitude_position(x_s, x_i, w_p: float, beta: float):
    """Unnormalized pair amplitude in position space (beta > 0 regulator).

    x_s and x_i are 2-vectors (or arrays with a trailing axis of length 2).
    The beta = 0 limit is a delta function and is handled by the channel's
    collapsed overlap, not here.
    """
    if w_p <= 0:
        raise ValueError("w_p must be positive")
    if beta <= 0:
        raise ValueError("beta must be positive here; use the thin-crystal "
                         "collapsed form for beta = 0")
    xs = np.asarray(x_s, dtype=float)
    xi = np.asarray(x_i, dtype=float)
    plus = ((xs + xi) ** 2).sum(axis=-1)
    minus = ((xs - xi) ** 2).sum(axis=-1)
    return np.exp(-plus / (4.0 * w_p**2) - minus / (2.0 * w_p**2 * beta))


def spdc_amplitude_fourier(a_s, a_i, w_p: float, beta: float):
    """Unnormalized pair amplitude over spatial frequencies (cycles/m).

    Fourier counterpart of spdc_amplitude_position:
    exp(-pi^2 w_p^2 |a_s+a_i|^2 - (1/2) pi^2 w_p^2 beta |a_s-a_i|^2).
    """
    if w_p <= 0 or beta < 0:
        raise ValueError("w_p must be positive and beta non-negative")
    qs = np.asarray(a_s, dtype=float)
    qi = np.asarray(a_i, dtype=float)
    plus = ((qs + qi) ** 2).sum(axis=-1)
    minus = ((qs - qi) ** 2).sum(axis=-1)
    return np.exp(-math.pi**2 * w_p**2 * plus - 0.5 * math.pi**2 * w_p**2 * beta * minus)


@dataclass(frozen=True)
class PureProjectedState:
    """Zero-turbulence projected state a0 |0,0> + a_l (|l,-l> + |-l,l>)."""

    a0: float
    a_ell: float
    ell: int

    def __post_init__(self):
        if self.a0 < 0 or self.a_ell < 0:
            raise ValueError("amplitudes are non-negative by convention")
        if abs(self.a0**2 + 2 * self.a_ell**2 - 1.0) > 1e-9:
            raise ValueError("state must be normalized: a0^2 + 2 a_ell^2 = 1")

    def state_vector(self) -> np.ndarray:
        """9-vector over the (A, B) product basis ordered {-l, 0, +l}^2."""
        v = np.zeros(9, dtype=complex)
        v[3 * 1 + 1] = self.a0        # |0>|0>
        v[3 * 2 + 0] = self.a_ell     # |+l>|-l>
        v[3 * 0 + 2] = self.a_ell     # |-l>|+l>
        return v

    def density_matrix(self) -> np.ndarray:
        v = self.state_vector()
        return np.outer(v, v.conj())


def reference_grid(w0: float, w_p: float, n: int = 512, extent_factor: float = 10.0) -> GridSpec:
    """Quadrature grid for overlap integrals: extent 10 x the widest envelope.

    The pump scale is capped at 6.4 w0: beyond that the integrand is limited
    by the mode envelope alone, and a wider grid would break the w0/8
    sampling requirement.
    """
    span = extent_factor * max(w0, min(w_p, 6.4 * w0))
    return GridSpec(n=n, delta=span / n)


def initial_state(basis: QutritBasis, w_p: float, grid: GridSpec | None = None) -> PureProjectedState:
    """Projected source state from the three-way overlap integrals.

    a0 is proportional to int m_p |E_00|^2 and a_ell to
    int m_p conj(E_0l) conj(E_0-l); both are real and positive, and the
    Gaussian pump weighting always favors the fundamental (a0 > a_ell for
    any finite pump).
    """
    if w_p <= 0:
        raise ValueError("w_p must be positive")
    if grid is None:
        grid = reference_grid(basis.w0, w_p if math.isfinite(w_p) else basis.w0)
    X, Y = grid.meshgrid()
    pump = np.exp(-(X**2 + Y**2) / w_p**2) if math.isfinite(w_p) else np.ones_like(X)
    e0 = sample_mode(LGIndex(0, 0), basis.w0, grid).values
    ep = sample_mode(LGIndex(0, basis.ell), basis.w0, grid).values
    em = sample_mode(LGIndex(0, -basis.ell), basis.w0, grid).values
    d2 = grid.delta**2
    a0 = float(np.real((pump * np.abs(e0) ** 2).sum() * d2))
    a_ell = float(np.real((pump * np.conj(ep) * np.conj(em)).sum() * d2))
    norm = math.sqrt(a0**2 + 2.0 * a_ell**2)
    return PureProjectedState(a0=a0 / norm, a_ell=a_ell / norm, ell=basis.ell)
