"""Simulated two-qutrit state tomography with Poisson counting noise.

The measurement model mirrors the coincidence experiment: for each pair of
single-photon projectors (P_A, P_B) the coincidence rate is
flux * <P_A (x) P_B, rho>, and recorded counts are Poisson with that mean
times the integration window.  The standard setting list uses 9 projectors
per arm (3 basis states plus the two-phase superpositions of each basis
pair), whose 81 products span the full two-qutrit operator space, so the
state follows from linear inversion; the estimate is then projected onto
the physical set (Hermitian, positive, unit trace).  An optional
maximum-likelihood refinement is available behind a flag.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .channel import BipartiteDensityMatrix
from .seeding import derive_rng

EXPECTATION_FLOOR = -1e-12


@dataclass(frozen=True)
class Projector:
    """Rank-one single-photon projector |psi><psi| over the qutrit basis."""

    coeffs: tuple
    label: str

    def __post_init__(self):
        v = np.asarray(self.coeffs, dtype=complex)
        if v.shape != (3,):
            raise ValueError("projector needs 3 amplitudes")
        if abs(np.vdot(v, v).real - 1.0) > 1e-10:
            raise ValueError("projector amplitudes must have unit norm")

    @property
    def vector(self) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=complex)

    @property
    def operator(self) -> np.ndarray:
        v = self.vector
        return np.outer(v, v.conj())


@dataclass
class CountRecord:
    """One tomography setting: projector pair, expected rate, counts."""

    setting_index: int
    projector_a: Projector
    projector_b: Projector
    expected_rate: float
    counts: int
    integration: float
    seed: int


def standard_projector_set() -> list[Projector]:
    """9 per-arm projectors: basis states and two-phase pair superpositions.

    For each basis pair (a, b) the set holds (|a>+|b>)/sqrt2 and
    (|a>+i|b>)/sqrt2; the 81 coincidence products of two such sets are
    linearly independent and hence tomographically complete.
    """
    labels = ("-l", "0", "+l")
    projs = []
    for k, lab in enumerate(labels):
        v = np.zeros(3, dtype=complex)
        v[k] = 1.0
        projs.append(Projector(coeffs=tuple(v), label=f"({lab})"))
    s = 1.0 / math.sqrt(2.0)
    for a in range(3):
        for b in range(a + 1, 3):
            for phase, tag in ((1.0, "+"), (1j, "+i")):
                v = np.zeros(3, dtype=complex)
                v[a] = s
                v[b] = s * phase
                projs.append(Projector(coeffs=tuple(v),
                                       label=f"({labels[a]}){tag}({labels[b]})"))
    return projs


def standard_pairs() -> list[tuple[Projector, Projector]]:
    """All 81 coincidence settings of the standard per-arm set."""
    ps = standard_projector_set()
    return [(pa, pb) for pa in ps for pb in ps]


def _hermitian_basis() -> np.ndarray:
    """9 Hilbert-Schmidt-orthonormal Hermitian 3x3 operators."""
    ops = []
    for i in range(3):
        e = np.zeros((3, 3), dtype=complex)
        e[i, i] = 1.0
        ops.append(e)
    s = 1.0 / math.sqrt(2.0)
    for i in range(3):
        for j in range(i + 1, 3):
            e = np.zeros((3, 3), dtype=complex)
            e[i, j] = s
            e[j, i] = s
            ops.append(e)
            e = np.zeros((3, 3), dtype=complex)
            e[i, j] = -1j * s
            e[j, i] = 1j * s
            ops.append(e)
    return np.stack(ops)


class MeasurementMap:
    """Precomputed linear map between two-qutrit states and setting rates."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        self._ops = np.stack([np.kron(pa.operator, pb.operator) for pa, pb in self.pairs])
        basis1 = _hermitian_basis()
        self._basis = np.stack([np.kron(basis1[a], basis1[b])
                                for a in range(9) for b in range(9)])
        self._design = np.einsum("sij,aji->sa", self._ops, self._basis).real
        self._pinv = None

    @property
    def rank(self) -> int:
        return int(np.linalg.matrix_rank(self._design, tol=1e-9))

    def expectations(self, rho) -> np.ndarray:
        m = rho.matrix if isinstance(rho, BipartiteDensityMatrix) else np.asarray(rho)
        vals = np.einsum("sij,ji->s", self._ops, m)
        if np.abs(vals.imag).max(initial=0.0) > 1e-9:
            raise ValueError("non-real projector expectations; state is not Hermitian")
        return vals.real

    def linear_inversion(self, rates) -> np.ndarray:
        """Least-squares state estimate, normalized to unit trace, unprojected.

        Requires a tomographically complete setting list (rank 81).
        """
        if self._pinv is None:
            if self.rank < 81:
                raise ValueError(
                    f"measurement map is rank deficient ({self.rank} < 81); "
                    "settings do not span the operator space")
            self._pinv = np.linalg.pinv(self._design)
        h = self._pinv @ np.asarray(rates, dtype=float)
        rho = np.tensordot(h, self._basis, axes=1)
        tr = np.trace(rho).real
        if tr <= 0:
            raise ValueError("inverted state has non-positive trace; counts unusable")
        return rho / tr


def measurement_expectations(rho, pairs) -> np.ndarray:
    """Projector-pair expectations <P_A (x) P_B, rho> (real, may carry dust)."""
    return MeasurementMap(pairs).expectations(rho)


def simulate_counts(rho, pairs, flux: float, seed: int,
                    integration: float = 1.0) -> list[CountRecord]:
    """Draw Poisson coincidence counts for every setting.

    expected_rate = flux * <P_A (x) P_B, rho>, clipped at zero; an
    expectation below -1e-12 signals an unphysical input state and is
    rejected.  Each record uses its own derived seed so that settings can
    be simulated independently.
    """
    if flux <= 0:
        raise ValueError("flux must be positive")
    emap = MeasurementMap(pairs)
    expect = emap.expectations(rho)
    if expect.min(initial=0.0) < EXPECTATION_FLOOR:
        raise ValueError(f"negative expectation {expect.min():g}: unphysical state")
    expect = np.clip(expect, 0.0, None)
    records = []
    for idx, ((pa, pb), e) in enumerate(zip(emap.pairs, expect)):
        rec_seed = (int(seed), idx)
        rng = derive_rng(*rec_seed)
        rate = flux * float(e)
        counts = int(rng.poisson(rate * integration))
        records.append(CountRecord(setting_index=idx, projector_a=pa, projector_b=pb,
                                   expected_rate=rate, counts=counts,
                                   integration=integration, seed=int(seed)))
    return records


def project_to_physical(rho: np.ndarray) -> np.ndarray:
    """Nearest-physical cleanup: Hermitize, clip negative eigenvalues to zero
    redistributing the deficit uniformly over the positive ones, renormalize."""
    h = (np.asarray(rho) + np.asarray(rho).conj().T) / 2.0
    w, v = np.linalg.eigh(h)
    w = w.copy()
    while True:
        neg = w < 0
        if not neg.any():
            break
        deficit = w[neg].sum()
        w[neg] = 0.0
        pos = w > 0
        if not pos.any():
            raise ValueError("state has no positive weight after clipping")
        w[pos] += deficit / pos.sum()
    if w.sum() <= 0:
        raise ValueError("cannot renormalize a traceless state")
    w /= w.sum()
    return (v * w) @ v.conj().T


def mle_refine(rho0: np.ndarray, emap: MeasurementMap, counts,
               iterations: int = 300, damping: float = 0.6,
               tol: float = 1e-12) -> np.ndarray:
    """Diluted R-rho-R refinement of the multinomial likelihood.

    The setting operators do not resolve the identity, so the iteration runs
    in the metric of G = sum_s P_s: with Q_s = G^(-1/2) P_s G^(-1/2) (a
    proper POVM up to normalization) the transformed state follows the
    standard diluted fixed point, and the result is mapped back.  Optional
    post-pass; the deterministic linear inversion remains the baseline.
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return rho0
    freqs = counts / total
    g = emap._ops.sum(axis=0)
    w, v = np.linalg.eigh(g)
    if w.min() <= 0:
        raise ValueError("setting operators must sum to a positive-definite metric")
    s_inv_half = (v * (w ** -0.5)) @ v.conj().T     # G^(-1/2)
    s_half = (v * (w ** 0.5)) @ v.conj().T          # G^(+1/2)
    q_ops = np.einsum("ij,sjk,kl->sil", s_inv_half, emap._ops, s_inv_half)
    sigma = s_half @ project_to_physical(rho0) @ s_half
    sigma /= np.trace(sigma).real
    eye = np.eye(sigma.shape[0])
    for _ in range(iterations):
        probs = np.einsum("sij,ji->s", q_ops, sigma).real
        probs = np.clip(probs, 1e-14, None)
        r = np.tensordot(freqs / probs, q_ops, axes=1)
        op = (1.0 - damping) * eye + damping * r
        new = op @ sigma @ op.conj().T
        new /= np.trace(new).real
        if np.abs(new - sigma).max() < tol:
            sigma = new
            break
        sigma = new
    rho = s_inv_half @ sigma @ s_inv_half
    rho /= np.trace(rho).real
    return project_to_physical(rho)


def reconstruct_from_rates(pairs, rates, max_likelihood: bool = False,
                           counts=None) -> BipartiteDensityMatrix:
    """Linear inversion of setting rates followed by physical projection."""
    emap = pairs if isinstance(pairs, MeasurementMap) else MeasurementMap(pairs)
    rho = emap.linear_inversion(rates)
    rho = project_to_physical(rho)
    if max_likelihood:
        rho = mle_refine(rho, emap, rates if counts is None else counts)
    out = BipartiteDensityMatrix(matrix=rho, ell=0)
    out.validate(herm_tol=1e-9, trace_tol=1e-9, eig_floor=-1e-9)
    return out


def reconstruct(records, max_likelihood: bool = False) -> BipartiteDensityMatrix:
    """Reconstruct a state from counted records (rates = counts/integration)."""
    records = list(records)
    if not records:
        raise ValueError("no count records")
    pairs = [(r.projector_a, r.projector_b) for r in records]
    rates = [r.counts / r.integration for r in records]
    return reconstruct_from_rates(pairs, rates, max_likelihood=max_likelihood,
                                  counts=[r.counts for r in records])


def poisson_resample(records, rng: np.random.Generator) -> np.ndarray:
    """Parametric bootstrap: re-draw counts with the observed counts as means."""
    obs = np.asarray([r.counts for r in records], dtype=float)
    return rng.poisson(obs).astype(float)


def trace_distance(rho_a, rho_b) -> float:
    """(1/2) tr |rho_a - rho_b| for Hermitian arguments."""
    a = rho_a.matrix if isinstance(rho_a, BipartiteDensityMatrix) else np.asarray(rho_a)
    b = rho_b.matrix if isinstance(rho_b, BipartiteDensityMatrix) else np.asarray(rho_b)
    return float(0.5 * np.abs(np.linalg.eigvalsh(a - b)).sum())


def counts_to_csv(records, path) -> None:
    """Export records as CSV: setting_index, projector specs, rate, counts, seed."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["setting_index", "projA_spec", "projB_spec",
                         "expected_rate", "counts", "seed"])
        for r in records:
            writer.writerow([r.setting_index, r.projector_a.label, r.projector_b.label,
                             repr(r.expected_rate), r.counts, r.seed])
