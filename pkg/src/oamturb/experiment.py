"""Sweep driver: turbulence-strength scans with screen ensembles and tomography.

For every (ell, W) point the driver synthesizes `realizations` phase
screens (two per spectral synthesis, one discarded for odd counts), pushes
the source state through the per-screen channel, reconstructs or records
each realization's conditional state, averages the density matrices, and
quantifies the entanglement of the average.  Reference curves from the
quadratic-model generating function and from the closed-form negativity are
attached to every point.

Averaging conventions.  The default ("per_realization") averages unit-trace
per-realization matrices, exactly what a tomography of each realization
followed by matrix averaging produces in the lab; realizations with low
total coincidence rate then weigh as much as lucky ones.  The alternative
("ensemble") averages unnormalized coincidence outer products and
normalizes once, which is the convention of the analytic channel and makes
tilt-screen runs converge to the quadratic model without bias.  The two
agree at W = 0 and drift apart as turbulence deepens; curves are labeled
accordingly and never mixed.  Tomography-with-noise runs always average the
unit-trace reconstructions (the measured record carries no absolute scale).

W-axis labeling.  A channel of given physical strength can be labeled by
W = w_p/r0 (the ratio entering xi and the closed-form eta directly) or by
W = w0/r0 (basis waist over Fried parameter); the two differ by
sqrt(alpha).  The default is "wp_over_r0": together with per-realization
averaging it reproduces the reference central-element trajectory
{0.45, 0.36, 0.24} across W = {0, 0.68, 1.5} at alpha = 0.59, which is how
the operative labeling was pinned down numerically.  Reports always carry
the other labeling alongside.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (BipartiteDensityMatrix, ChannelParams, W_CONVENTIONS,
                      analytic_density_matrix, eta_from_xi,
                      save_density_matrix_json, screen_coincidence_amplitudes,
                      xi_from_scintillation)
from .entanglement import ClosedFormParams, negativity, negativity_closed_form
from .lgmodes import QutritBasis
from .seeding import (STREAM_BOOTSTRAP, STREAM_SCREENS, STREAM_TOMOGRAPHY,
                      derive_rng, derive_seed)
from .tomography import MeasurementMap, reconstruct_from_rates, simulate_counts, standard_pairs
from .turbulence import PhaseScreen, generate_screen, generate_tilt_screen

SCREEN_MODELS = ("kolmogorov", "tilt")
AVERAGING_MODES = ("per_realization", "ensemble")
FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class SweepConfig:
    """Full description of a sweep run; every value has a CLI/config mirror."""

    ell_values: tuple = (1, 2, 3)
    alpha: float = 0.59
    w_grid: tuple = tuple(np.linspace(0.0, 1.5, 16).tolist())
    realizations: int = 25
    flux: float = 1.0e4
    master_seed: int = 12345
    grid_n: int = 256
    grid_delta: float = 1.0 / 16.0     # in units of w0
    w0: float = 1.0
    w_convention: str = "wp_over_r0"
    screen_model: str = "kolmogorov"
    subgrid_levels: int = 3
    noise: bool = False                # tomography with Poisson counts per realization
    averaging: str = "per_realization"
    bootstrap: int = 200
    max_likelihood: bool = False
    workers: int = 1
    out_dir: str = "results"
    formats: tuple = ("csv", "json", "svg")

    def __post_init__(self):
        if not self.ell_values or any(e not in (1, 2, 3) for e in self.ell_values):
            raise ValueError("ell_values must be a non-empty subset of {1, 2, 3}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        w = list(self.w_grid)
        if not w or w[0] != 0.0 or any(b <= a for a, b in zip(w, w[1:])):
            raise ValueError("w_grid must be sorted ascending and start at 0")
        if self.realizations < 1:
            raise ValueError("need at least one realization")
        if self.w_convention not in W_CONVENTIONS:
            raise ValueError(f"w_convention must be one of {W_CONVENTIONS}")
        if self.screen_model not in SCREEN_MODELS:
            raise ValueError(f"screen_model must be one of {SCREEN_MODELS}")
        if self.averaging not in AVERAGING_MODES:
            raise ValueError(f"averaging must be one of {AVERAGING_MODES}")
        if any(f not in FORMATS for f in self.formats):
            raise ValueError(f"formats must be a subset of {FORMATS}")

    @property
    def w_p(self) -> float:
        return self.w0 / math.sqrt(self.alpha)


@dataclass
class SweepPoint:
    """Averaged state and entanglement summaries for one (ell, W) cell."""

    ell: int
    w: float
    xi: float
    eta: float
    rho: BipartiteDensityMatrix
    negativity_mc: float
    negativity_err: float
    negativity_analytic: float
    negativity_closed_form: float
    central_element: float
    realizations: int


@dataclass
class SweepResult:
    config: SweepConfig
    points: list
    metadata: dict = field(default_factory=dict)


def _screen_for_realization(config: SweepConfig, ell_idx: int, w_idx: int,
                            realization: int, w: float) -> PhaseScreen:
    """Deterministic screen for one realization index.

    Kolmogorov syntheses yield two screens; realization 2k maps to the real
    part and 2k+1 to the imaginary part of synthesis call k.
    """
    n, delta = config.grid_n, config.grid_delta * config.w0
    if w == 0.0:
        return PhaseScreen(theta=np.zeros((n, n)), delta=delta, r0=math.inf,
                           seed=0, subgrid_levels=config.subgrid_levels)
    if config.screen_model == "tilt":
        xi = xi_from_scintillation(w, config.alpha, config.w_convention)
        sigma2 = xi / config.w_p**2
        seed = derive_seed(config.master_seed, STREAM_SCREENS, ell_idx, w_idx, realization)
        return generate_tilt_screen(n, delta, sigma2, seed)
    r0 = (config.w0 if config.w_convention == "w0_over_r0" else config.w_p) / w
    call, part = divmod(realization, 2)
    seed = derive_seed(config.master_seed, STREAM_SCREENS, ell_idx, w_idx, call)
    return generate_screen(n, delta, r0, seed, config.subgrid_levels)[part]


def _average_ops(ops, averaging: str) -> np.ndarray:
    if averaging == "ensemble":
        acc = sum(ops)
        return acc / np.trace(acc).real
    acc = sum(op / np.trace(op).real for op in ops)
    return acc / len(ops)


def _bootstrap_err(config: SweepConfig, emap, ops, all_records,
                   ell_idx: int, w_idx: int) -> float:
    """Bootstrap standard deviation of the averaged-matrix negativity.

    Noiseless runs resample realizations; noisy runs re-draw Poisson counts
    per record and re-reconstruct before averaging (parametric bootstrap).
    """
    if config.bootstrap < 2 or config.realizations < 2:
        return 0.0
    rng = derive_rng(config.master_seed, STREAM_BOOTSTRAP, ell_idx, w_idx)
    vals = np.empty(config.bootstrap)
    if config.noise:
        obs = [np.asarray([r.counts for r in recs], dtype=float) for recs in all_records]
        integ = all_records[0][0].integration
        for b in range(config.bootstrap):
            mats = [reconstruct_from_rates(emap, rng.poisson(counts) / integ).matrix
                    for counts in obs]
            avg = sum(mats) / len(mats)
            vals[b] = negativity((avg + avg.conj().T) / 2.0).value
    else:
        nreal = len(ops)
        for b in range(config.bootstrap):
            idx = rng.integers(0, nreal, nreal)
            avg = _average_ops([ops[i] for i in idx], config.averaging)
            vals[b] = negativity((avg + avg.conj().T) / 2.0).value
    return float(vals.std(ddof=1))


def compute_point(config: SweepConfig, ell_idx: int, w_idx: int) -> SweepPoint:
    """Compute one (ell, W) sweep cell; pure function of (config, indices)."""
    ell = config.ell_values[ell_idx]
    w = config.w_grid[w_idx]
    basis = QutritBasis(ell=ell, w0=config.w0)
    xi = xi_from_scintillation(w, config.alpha, config.w_convention)
    eta = eta_from_xi(xi, config.alpha)
    params = ChannelParams(alpha=config.alpha, xi=xi)
    neg_analytic = negativity(analytic_density_matrix(ell, params)).value
    neg_cf = negativity_closed_form(
        ClosedFormParams(eta=eta, alpha=config.alpha, ell=ell)).value

    emap = MeasurementMap(standard_pairs()) if config.noise else None
    ops, all_records = [], []
    for r in range(config.realizations):
        screen = _screen_for_realization(config, ell_idx, w_idx, r, w)
        c = screen_coincidence_amplitudes(screen, basis, config.w_p).ravel()
        op = np.outer(c, c.conj())
        ops.append(op)
        if config.noise:
            seed = derive_seed(config.master_seed, STREAM_TOMOGRAPHY, ell_idx, w_idx, r)
            all_records.append(simulate_counts(op / np.trace(op).real, emap.pairs,
                                               config.flux, seed))

    if config.noise:
        mats = [reconstruct_from_rates(
            emap, [rec.counts / rec.integration for rec in records],
            max_likelihood=config.max_likelihood).matrix for records in all_records]
        avg = sum(mats) / len(mats)
    else:
        avg = _average_ops(ops, config.averaging)
    avg = (avg + avg.conj().T) / 2.0
    dm = BipartiteDensityMatrix(matrix=avg, ell=ell)
    dm.validate(herm_tol=1e-9, trace_tol=1e-9, eig_floor=-1e-9)
    err = _bootstrap_err(config, emap, ops, all_records, ell_idx, w_idx)
    return SweepPoint(ell=ell, w=w, xi=xi, eta=eta, rho=dm,
                      negativity_mc=negativity(avg).value,
                      negativity_err=err,
                      negativity_analytic=neg_analytic,
                      negativity_closed_form=neg_cf,
                      central_element=dm.central_element,
                      realizations=config.realizations)


def _point_worker(args):
    config, ell_idx, w_idx = args
    return (ell_idx, w_idx), compute_point(config, ell_idx, w_idx)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run the full (ell, W) grid; deterministic for a fixed (config, seed).

    Worker processes split the grid cells; every cell derives all of its
    randomness from (master_seed, indices), and cells are reassembled in
    grid order, so results do not depend on the worker count.
    """
    jobs = [(config, e, w) for e in range(len(config.ell_values))
            for w in range(len(config.w_grid))]
    t0 = time.perf_counter()
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            results = dict(pool.map(_point_worker, jobs))
    else:
        results = dict(map(_point_worker, jobs))
    points = [results[(e, w)] for e in range(len(config.ell_values))
              for w in range(len(config.w_grid))]
    meta = {
        "version": __version__,
        "master_seed": config.master_seed,
        "elapsed_s": time.perf_counter() - t0,
        "points": len(points),
    }
    return SweepResult(config=config, points=points, metadata=meta)


# --- output emission -------------------------------------------------------

CSV_COLUMNS = ("ell", "W", "W_other_convention", "negativity_mc", "negativity_err",
               "negativity_analytic", "negativity_closed_form", "central_element")


def sweep_csv_text(result: SweepResult) -> str:
    """Deterministic CSV rendering (floats via repr, exact round trip)."""
    alpha = result.config.alpha
    # the same channel under the other W labeling: W_w0 = sqrt(alpha) * W_wp
    factor = math.sqrt(alpha) if result.config.w_convention == "wp_over_r0" \
        else 1.0 / math.sqrt(alpha)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for p in result.points:
        writer.writerow([p.ell, repr(p.w), repr(p.w * factor),
                         repr(p.negativity_mc), repr(p.negativity_err),
                         repr(p.negativity_analytic), repr(p.negativity_closed_form),
                         repr(p.central_element)])
    return buf.getvalue()


def emit_outputs(result: SweepResult, formats=None, out_dir=None) -> list:
    """Write the sweep report: CSV table, per-point JSON matrices, SVG figures.

    Returns the list of written paths.  CSV and JSON content is a pure
    function of the sweep result; figures are rendered from the same data.
    """
    from .plots import negativity_figure, overlay_figure, save_figure
    config = result.config
    formats = tuple(formats) if formats is not None else config.formats
    out = Path(out_dir if out_dir is not None else config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    written = []
    if "csv" in formats:
        path = out / "negativity.csv"
        try:
            path.write_text(sweep_csv_text(result))
        except OSError as exc:
            raise OSError(f"failed writing {path}: {exc}") from exc
        written.append(path)
    if "json" in formats:
        for p in result.points:
            path = out / f"dm_ell{p.ell}_w{p.w:.4f}.json"
            save_density_matrix_json(p.rho, path, alpha=config.alpha,
                                     xi=p.xi, w=p.w, w_convention=config.w_convention)
            written.append(path)
    if "svg" in formats:
        for ell in config.ell_values:
            fig = negativity_figure(result.points, ell, config.w_convention)
            path = out / f"negativity_ell{ell}.svg"
            save_figure(fig, path)
            written.append(path)
        fig = overlay_figure(result.points, config.w_convention)
        path = out / "negativity_overlay.svg"
        save_figure(fig, path)
        written.append(path)
    return written
