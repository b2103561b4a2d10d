"""Single-phase-screen turbulence channel for one photon of the pair.

Two routes produce the 9 x 9 two-qutrit output density matrix:

* analytic_density_matrix -- closed-form coefficient extraction from the
  channel's generating function (quadratic structure-function model);
* monte_carlo_density_matrix -- ensemble average of per-screen coincidence
  amplitudes computed by grid quadrature, usable with synthesized
  Kolmogorov screens (the experiment emulator) or with random tilt screens,
  whose ensemble realizes the quadratic model exactly and therefore serves
  as an independent oracle for the analytic route.

Analytic route.  With modes expressed through their generating function,
the thin-crystal overlap integrals evaluate to Gaussians, and every matrix
element rho[(l_m, l_p), (l_n, l_q)] is a mixed derivative, at zero, of

    G = M0 M1 exp[ (M0+M1) (S-_{mp} mu_m mu_p + S-_{nq} mu_n mu_q)
                 + (M0-M1) (S+_{mn} mu_m mu_n + S+_{mq} mu_m mu_q
                           + S+_{pn} mu_p mu_n + S+_{pq} mu_p mu_q) ],

    M0 = 1 / (2 (alpha + 2)),   M1 = 1 / (2 (alpha + 2 + alpha xi)),

where alpha = w0^2/w_p^2, xi = 6.88 (w_p/r0)^(5/3), S+-_{ab} = 1 when
sign(l_a) = +-sign(l_b) (else 0), indices (m, p) label the row of the A and
B qutrit and (n, q) the column.  Opposite-sign couplings within a row or a
column carry (M0+M1): they encode pair creation, which conserves OAM.  The
equal-sign row-column couplings carry (M0-M1): they encode the
turbulence-induced transfer and vanish at xi = 0, where the matrix is the
rank-one projector onto the source state.  Derivatives are evaluated by
exact multinomial expansion of the exponential (integer combinatorics times
powers of M0+-M1), never numerically.
"""
from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .lgmodes import GridSpec, QutritBasis, check_mode_grid, lg_normalization, sample_mode
from .turbulence import PhaseScreen

W_CONVENTIONS = ("w0_over_r0", "wp_over_r0")


@dataclass(frozen=True)
class ChannelParams:
    """Dimensionless channel strength: alpha = w0^2/w_p^2, xi = 6.88 (w_p/r0)^(5/3)."""

    alpha: float
    xi: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.xi < 0:
            raise ValueError("xi must be non-negative")

    @property
    def m0(self) -> float:
        return 1.0 / (2.0 * (self.alpha + 2.0))

    @property
    def m1(self) -> float:
        return 1.0 / (2.0 * (self.alpha + 2.0 + self.alpha * self.xi))

    @classmethod
    def from_widths(cls, w0: float, w_p: float, r0: float):
        if w0 <= 0 or w_p <= 0 or r0 <= 0:
            raise ValueError("w0, w_p, r0 must be positive")
        return cls(alpha=(w0 / w_p) ** 2, xi=6.88 * (w_p / r0) ** (5.0 / 3.0))

    @classmethod
    def from_scintillation(cls, W: float, alpha: float, convention: str = "wp_over_r0"):
        return cls(alpha=alpha, xi=xi_from_scintillation(W, alpha, convention))


def xi_from_scintillation(W: float, alpha: float, convention: str = "wp_over_r0") -> float:
    """Map a scintillation strength W to xi under the given W convention.

    "w0_over_r0": W = w0/r0, so w_p/r0 = W/sqrt(alpha);
    "wp_over_r0": W = w_p/r0 directly.  The two labelings of one physical
    channel differ by the factor alpha^(5/6) in xi.
    """
    if W < 0:
        raise ValueError("W must be non-negative")
    if convention == "w0_over_r0":
        return 6.88 * (W / math.sqrt(alpha)) ** (5.0 / 3.0)
    if convention == "wp_over_r0":
        return 6.88 * W ** (5.0 / 3.0)
    raise ValueError(f"unknown W convention {convention!r}; use one of {W_CONVENTIONS}")


def eta_from_xi(xi: float, alpha: float) -> float:
    """Turbulence parameter of the closed-form negativity: eta = alpha xi / (2 + alpha).

    This is the unique mapping under which M1/M0 = 1/(1+eta) depends on eta
    alone; its validity is pinned numerically by the closed-form/numeric
    equivalence tests.
    """
    return alpha * xi / (2.0 + alpha)


def xi_from_eta(eta: float, alpha: float) -> float:
    return eta * (2.0 + alpha) / alpha


def _sign(ell: int) -> int:
    return (ell > 0) - (ell < 0)


def generating_coefficient(ells, params: ChannelParams, include_normalization: bool = True) -> float:
    """Density-matrix element for the index quadruple (l_m, l_n, l_p, l_q).

    (m, p) are the row indices of photons A and B, (n, q) the column
    indices.  Every |l| must be 0 or the common magnitude ell.  With
    include_normalization the four per-mode normalization constants are
    applied; without, the bare derivative of the generating function
    (including the M0 M1 prefactor) is returned.
    """
    lm, ln, lp, lq = (int(v) for v in ells)
    mags = {abs(v) for v in (lm, ln, lp, lq)} - {0}
    if len(mags) > 1:
        raise ValueError(f"mixed |l| magnitudes {sorted(mags)}; all must be 0 or one ell")
    cu = params.m0 + params.m1   # pair-creation couplings (m,p), (n,q)
    cd = params.m0 - params.m1   # turbulence couplings (m,n), (m,q), (p,n), (p,q)
    c12 = cu if _sign(lm) == -_sign(lp) else 0.0
    c34 = cu if _sign(ln) == -_sign(lq) else 0.0
    c13 = cd if _sign(lm) == _sign(ln) else 0.0
    c14 = cd if _sign(lm) == _sign(lq) else 0.0
    c23 = cd if _sign(lp) == _sign(ln) else 0.0
    c24 = cd if _sign(lp) == _sign(lq) else 0.0
    am, ap, an, aq = abs(lm), abs(lp), abs(ln), abs(lq)
    # coefficient of mu_m^am mu_p^ap mu_n^an mu_q^aq in exp(sum c_ij mu_i mu_j):
    # sum over the ways of splitting each order among the pair couplings
    total = 0.0
    fact = math.factorial
    for k12 in range(min(am, ap) + 1):
        for k13 in range(am - k12 + 1):
            k14 = am - k12 - k13
            for k23 in range(min(ap - k12, an - k13) + 1):
                k24 = ap - k12 - k23
                k34 = an - k13 - k23
                if k24 < 0 or k34 < 0 or k34 + k14 + k24 != aq:
                    continue
                total += (c12**k12 * c34**k34 * c13**k13 * c14**k14
                          * c23**k23 * c24**k24) / (
                    fact(k12) * fact(k34) * fact(k13) * fact(k14) * fact(k23) * fact(k24))
    total *= fact(am) * fact(ap) * fact(an) * fact(aq)
    if include_normalization:
        total *= (lg_normalization(0, lm) * lg_normalization(0, lp)
                  * lg_normalization(0, ln) * lg_normalization(0, lq))
    return params.m0 * params.m1 * total


@dataclass
class BipartiteDensityMatrix:
    """9 x 9 two-qutrit density matrix over the {-l, 0, +l} x {-l, 0, +l} basis.

    Row/column index is 3 * i_A + i_B with i = 0, 1, 2 for l = -ell, 0, +ell.
    """

    matrix: np.ndarray
    ell: int

    def validate(self, herm_tol: float = 1e-12, trace_tol: float = 1e-12,
                 eig_floor: float = -1e-10) -> None:
        m = self.matrix
        if m.shape != (9, 9):
            raise ValueError(f"expected 9x9 matrix, got {m.shape}")
        if np.abs(m - m.conj().T).max() > herm_tol:
            raise ValueError("density matrix is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > trace_tol or abs(np.trace(m).imag) > trace_tol:
            raise ValueError("density matrix trace differs from 1")
        if np.linalg.eigvalsh((m + m.conj().T) / 2.0).min() < eig_floor:
            raise ValueError("density matrix has a negative eigenvalue beyond the floor")

    @property
    def central_element(self) -> float:
        """Magnitude of the <0,0|rho|0,0> element (the 9x9 grid's center)."""
        return float(abs(self.matrix[4, 4]))


def analytic_density_matrix(ell: int, params: ChannelParams) -> BipartiteDensityMatrix:
    """Assemble and trace-normalize all 81 elements of the output state."""
    if ell not in (1, 2, 3):
        raise ValueError(f"ell must be 1, 2 or 3, got {ell}")
    ells = (-ell, 0, ell)
    rho = np.zeros((9, 9), dtype=complex)
    for im, lm in enumerate(ells):
        for ip, lp in enumerate(ells):
            for jn, ln in enumerate(ells):
                for jq, lq in enumerate(ells):
                    rho[3 * im + ip, 3 * jn + jq] = generating_coefficient(
                        (lm, ln, lp, lq), params)
    rho /= np.trace(rho).real
    out = BipartiteDensityMatrix(matrix=rho, ell=ell)
    out.validate()
    return out


@lru_cache(maxsize=8)
def _overlap_kernel(ell: int, w0: float, w_p: float, n: int, delta: float) -> np.ndarray:
    """Stacked quadrature kernels K[3a+b] = conj(E_a E_b) m_p delta^2, flattened.

    The coincidence amplitudes of a screen are then K @ exp(i theta).ravel().
    """
    grid = GridSpec(n=n, delta=delta)
    basis = QutritBasis(ell=ell, w0=w0)
    check_mode_grid(grid, w0, cover=max(w0, w_p))
    X, Y = grid.meshgrid()
    pump = np.exp(-(X**2 + Y**2) / w_p**2)
    modes = [sample_mode(idx, w0, grid).values for idx in basis.elements]
    kern = np.empty((9, n * n), dtype=complex)
    for a in range(3):
        for b in range(3):
            kern[3 * a + b] = (np.conj(modes[a] * modes[b]) * pump).ravel() * delta**2
    return kern


def screen_coincidence_amplitudes(screen: PhaseScreen, basis: QutritBasis,
                                  w_p: float) -> np.ndarray:
    """3 x 3 coincidence amplitudes c[a, b] for one phase screen.

    c[a, b] = int conj(E_a(x)) conj(E_b(x)) exp(-|x|^2/w_p^2) exp(i theta(x)) d2x,
    photon A's projector a seeing the screen and photon B's projector b the
    undisturbed arm; evaluated by quadrature on the screen's own grid.
    """
    if w_p <= 0:
        raise ValueError("w_p must be positive")
    n = screen.n
    if screen.theta.shape != (n, n):
        raise ValueError("phase screen must be square")
    kern = _overlap_kernel(basis.ell, basis.w0, w_p, n, screen.delta)
    c = kern @ np.exp(1j * screen.theta).ravel()
    return c.reshape(3, 3)


def monte_carlo_density_matrix(screens, basis: QutritBasis, w_p: float) -> BipartiteDensityMatrix:
    """Ensemble-averaged channel output: normalize(<c (x) c*>_screens).

    Screens may be any iterable (ensembles can be streamed).  The average
    runs over unnormalized outer products, i.e. realizations contribute
    with their physical coincidence-rate weight, matching the analytic
    route; the experiment driver's tomography protocol averages unit-trace
    per-realization matrices instead.
    """
    acc = np.zeros((9, 9), dtype=complex)
    count = 0
    ell = basis.ell
    for screen in screens:
        c = screen_coincidence_amplitudes(screen, basis, w_p).ravel()
        acc += np.outer(c, c.conj())
        count += 1
    if count == 0:
        raise ValueError("empty screen ensemble")
    acc /= np.trace(acc).real
    acc = (acc + acc.conj().T) / 2.0  # discard quadrature-level asymmetry
    out = BipartiteDensityMatrix(matrix=acc, ell=ell)
    out.validate(herm_tol=1e-10, trace_tol=1e-10, eig_floor=-1e-9)
    return out


# --- serialization ---------------------------------------------------------

def density_matrix_to_json_dict(dm: BipartiteDensityMatrix, alpha: float | None = None,
                                xi: float | None = None, w: float | None = None,
                                w_convention: str | None = None) -> dict:
    entries = [[i, j, dm.matrix[i, j].real, dm.matrix[i, j].imag]
               for i in range(9) for j in range(9)]
    doc = {"basis_ell": dm.ell, "entries": entries}
    if alpha is not None:
        doc["alpha"] = alpha
    if xi is not None:
        doc["xi"] = xi
    if w is not None:
        doc["w"] = w
        doc["w_convention"] = w_convention
    return doc


def density_matrix_from_json_dict(doc: dict) -> BipartiteDensityMatrix:
    m = np.zeros((9, 9), dtype=complex)
    for i, j, re, im in doc["entries"]:
        m[int(i), int(j)] = re + 1j * im
    return BipartiteDensityMatrix(matrix=m, ell=int(doc["basis_ell"]))


def save_density_matrix_json(dm: BipartiteDensityMatrix, path, **meta) -> None:
    Path(path).write_text(json.dumps(density_matrix_to_json_dict(dm, **meta),
                                     sort_keys=True, indent=1) + "\n")


def load_density_matrix_json(path) -> BipartiteDensityMatrix:
    return density_matrix_from_json_dict(json.loads(Path(path).read_text()))


_DM_HEADER = struct.Struct("<QQdd")  # dim, ell, alpha, xi (little-endian 64-bit)


def save_density_matrix_binary(dm: BipartiteDensityMatrix, path,
                               alpha: float = 0.0, xi: float = 0.0) -> None:
    """Flat binary twin of the screen file layout: header + row-major float64.

    Complex entries are stored as interleaved (re, im) pairs.
    """
    flat = np.empty(162, dtype="<f8")
    flat[0::2] = dm.matrix.real.ravel()
    flat[1::2] = dm.matrix.imag.ravel()
    with open(path, "wb") as fh:
        fh.write(_DM_HEADER.pack(9, dm.ell, alpha, xi))
        fh.write(flat.tobytes())


def load_density_matrix_binary(path):
    raw = Path(path).read_bytes()
    dim, ell, alpha, xi = _DM_HEADER.unpack_from(raw)
    if dim != 9:
        raise ValueError(f"unsupported matrix dimension {dim}")
    flat = np.frombuffer(raw, dtype="<f8", offset=_DM_HEADER.size)
    m = (flat[0::2] + 1j * flat[1::2]).reshape(9, 9)
    return BipartiteDensityMatrix(matrix=m.copy(), ell=int(ell)), alpha, xi
