"""Command-line interface.

Subcommands:

* sweep       -- run the full turbulence sweep and write CSV/JSON/SVG reports
* screens     -- generate phase screens (and optionally validate their
                 ensemble structure function against the Kolmogorov form)
* negativity  -- tabulate the closed-form negativity curves
* tomo        -- single-point tomography demonstration with count export

Every flag mirrors a key in an INI-style config file (section = subcommand);
explicit command-line flags override file values.
"""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (ChannelParams, W_CONVENTIONS, analytic_density_matrix,
                      eta_from_xi, xi_from_scintillation)
from .entanglement import ClosedFormParams, negativity, negativity_closed_form
from .experiment import (AVERAGING_MODES, FORMATS, SCREEN_MODELS, SweepConfig,
                         emit_outputs, run_sweep)
from .seeding import derive_seed
from .tomography import (counts_to_csv, reconstruct, simulate_counts,
                         standard_pairs, trace_distance)
from .turbulence import (estimate_structure_fn, generate_screen, save_screen,
                         structure_fn_kolmogorov)


def _int_list(text: str) -> tuple:
    return tuple(int(tok) for tok in str(text).replace(",", " ").split())


def _str_list(text: str) -> tuple:
    return tuple(tok.strip() for tok in str(text).split(",") if tok.strip())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oamturb",
                                     description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"oamturb {__version__}")
    parser.add_argument("--config", type=str, default=None,
                        help="INI config file; sections named after subcommands")
    sub = parser.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="run the (ell, W) sweep and emit reports")
    sw.add_argument("--ell", type=_int_list, default=None, help="comma list, e.g. 1,2,3")
    sw.add_argument("--alpha", type=float, default=None)
    sw.add_argument("--w-max", type=float, default=None)
    sw.add_argument("--w-steps", type=int, default=None)
    sw.add_argument("--realizations", type=int, default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--grid-n", type=int, default=None)
    sw.add_argument("--grid-delta", type=float, default=None,
                    help="grid spacing in units of the basis waist")
    sw.add_argument("--flux", type=float, default=None)
    sw.add_argument("--noise", action=argparse.BooleanOptionalAction, default=None,
                    help="simulate Poisson tomography per realization")
    sw.add_argument("--w-convention", choices=W_CONVENTIONS, default=None)
    sw.add_argument("--screen-model", choices=SCREEN_MODELS, default=None)
    sw.add_argument("--subgrid-levels", type=int, default=None)
    sw.add_argument("--averaging", choices=AVERAGING_MODES, default=None)
    sw.add_argument("--bootstrap", type=int, default=None)
    sw.add_argument("--mle", action=argparse.BooleanOptionalAction, default=None,
                    help="maximum-likelihood refinement after linear inversion")
    sw.add_argument("--workers", type=int, default=None)
    sw.add_argument("--out", type=str, default=None)
    sw.add_argument("--format", type=_str_list, default=None,
                    help="comma subset of csv,json,svg")

    sc = sub.add_parser("screens", help="generate and validate phase screens")
    sc.add_argument("--count", type=int, default=None, help="number of screens")
    sc.add_argument("--grid-n", type=int, default=None)
    sc.add_argument("--grid-delta", type=float, default=None, help="spacing (m)")
    sc.add_argument("--r0", type=float, default=None, help="Fried parameter (m)")
    sc.add_argument("--seed", type=int, default=None)
    sc.add_argument("--subgrid-levels", type=int, default=None)
    sc.add_argument("--out", type=str, default=None)
    sc.add_argument("--validate", action=argparse.BooleanOptionalAction, default=None,
                    help="estimate the ensemble structure function vs theory")
    sc.add_argument("--tolerance", type=float, default=None,
                    help="validation tolerance on D/D_theory - 1")

    ng = sub.add_parser("negativity", help="closed-form negativity table")
    ng.add_argument("--ell", type=_int_list, default=None)
    ng.add_argument("--alpha", type=float, default=None)
    ng.add_argument("--w-max", type=float, default=None)
    ng.add_argument("--w-steps", type=int, default=None)
    ng.add_argument("--w-convention", choices=W_CONVENTIONS, default=None)
    ng.add_argument("--out", type=str, default=None, help="CSV path (default stdout)")

    tm = sub.add_parser("tomo", help="single-point tomography demo")
    tm.add_argument("--ell", type=int, default=None)
    tm.add_argument("--alpha", type=float, default=None)
    tm.add_argument("--w", type=float, default=None)
    tm.add_argument("--w-convention", choices=W_CONVENTIONS, default=None)
    tm.add_argument("--flux", type=float, default=None)
    tm.add_argument("--seed", type=int, default=None)
    tm.add_argument("--mle", action=argparse.BooleanOptionalAction, default=None)
    tm.add_argument("--out", type=str, default=None, help="counts CSV path")
    return parser


_DEFAULTS = {
    "sweep": {
        "ell": (1, 2, 3), "alpha": 0.59, "w_max": 1.5, "w_steps": 16,
        "realizations": 25, "seed": 12345, "grid_n": 256, "grid_delta": 1.0 / 16.0,
        "flux": 1.0e4, "noise": False, "w_convention": "wp_over_r0",
        "screen_model": "kolmogorov", "subgrid_levels": 3,
        "averaging": "per_realization", "bootstrap": 200, "mle": False,
        "workers": 1, "out": "results", "format": FORMATS,
    },
    "screens": {
        "count": 4, "grid_n": 512, "grid_delta": 0.01, "r0": 0.1, "seed": 1,
        "subgrid_levels": 3, "out": "screens", "validate": False, "tolerance": 0.10,
    },
    "negativity": {
        "ell": (1, 2, 3), "alpha": 0.59, "w_max": 1.5, "w_steps": 16,
        "w_convention": "wp_over_r0", "out": None,
    },
    "tomo": {
        "ell": 1, "alpha": 0.59, "w": 0.68, "w_convention": "wp_over_r0",
        "flux": 1.0e4, "seed": 12345, "mle": False, "out": None,
    },
}

_PARSERS = {"ell": _int_list, "format": _str_list}
_BOOLEANS = ("noise", "mle", "validate")


def _effective_options(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file section and explicit CLI flags."""
    section = args.command
    opts = dict(_DEFAULTS[section])
    if args.config:
        ini = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        read = ini.read(args.config)
        if not read:
            raise OSError(f"config file not found: {args.config}")
        if ini.has_section(section):
            for key, raw in ini.items(section):
                if key not in opts:
                    raise ValueError(f"unknown config key [{section}] {key}")
                if key in _BOOLEANS:
                    opts[key] = ini.getboolean(section, key)
                elif key in _PARSERS and isinstance(opts[key], tuple):
                    opts[key] = _PARSERS[key](raw)
                elif opts[key] is None:
                    opts[key] = raw
                else:
                    opts[key] = type(opts[key])(raw)
    for key in opts:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            opts[key] = cli_val
    return opts


def _cmd_sweep(opts: dict) -> int:
    w_grid = tuple(np.linspace(0.0, opts["w_max"], opts["w_steps"]).tolist())
    config = SweepConfig(
        ell_values=tuple(opts["ell"]), alpha=opts["alpha"], w_grid=w_grid,
        realizations=opts["realizations"], flux=opts["flux"],
        master_seed=opts["seed"], grid_n=opts["grid_n"],
        grid_delta=opts["grid_delta"], w_convention=opts["w_convention"],
        screen_model=opts["screen_model"], subgrid_levels=opts["subgrid_levels"],
        noise=opts["noise"], averaging=opts["averaging"],
        bootstrap=opts["bootstrap"], max_likelihood=opts["mle"],
        workers=opts["workers"], out_dir=opts["out"], formats=tuple(opts["format"]))
    result = run_sweep(config)
    written = emit_outputs(result)
    print(f"sweep: {len(result.points)} points, {result.metadata['elapsed_s']:.1f} s, "
          f"{len(written)} files under {config.out_dir}")
    return 0


def _cmd_screens(opts: dict) -> int:
    out = Path(opts["out"])
    out.mkdir(parents=True, exist_ok=True)
    screens = []
    for k in range((opts["count"] + 1) // 2):
        seed = derive_seed(opts["seed"], k)
        screens.extend(generate_screen(opts["grid_n"], opts["grid_delta"], opts["r0"],
                                       seed, opts["subgrid_levels"]))
    screens = screens[: opts["count"]]
    for i, scr in enumerate(screens):
        save_screen(scr, out / f"screen_{i:04d}.phs")
    print(f"wrote {len(screens)} screens to {out}")
    if opts["validate"]:
        n, delta = opts["grid_n"], opts["grid_delta"]
        lags = [k * delta for k in (2, 4, 8, 16, 32, 64) if k <= n // 8]
        est, se = estimate_structure_fn(screens, lags)
        theo = structure_fn_kolmogorov(np.asarray(lags), opts["r0"])
        print("separation   D_est      D_theory   ratio")
        worst = 0.0
        for lag, e, t in zip(lags, est, theo):
            worst = max(worst, abs(e / t - 1.0))
            print(f"{lag:10.4g} {e:10.4g} {t:10.4g} {e / t:8.4f}")
        if worst > opts["tolerance"]:
            print(f"validation FAILED: worst deviation {worst:.1%} "
                  f"> {opts['tolerance']:.1%}", file=sys.stderr)
            return 1
        print(f"validation passed: worst deviation {worst:.1%}")
    return 0


def _cmd_negativity(opts: dict) -> int:
    alpha = opts["alpha"]
    lines = ["ell,W,W_other_convention,eta,negativity"]
    other = {"w0_over_r0": "wp_over_r0", "wp_over_r0": "w0_over_r0"}[opts["w_convention"]]
    # conversion between the two W labelings of the same channel
    factor = math.sqrt(alpha) if opts["w_convention"] == "w0_over_r0" else 1 / math.sqrt(alpha)
    for ell in opts["ell"]:
        for w in np.linspace(0.0, opts["w_max"], opts["w_steps"]).tolist():
            xi = xi_from_scintillation(w, alpha, opts["w_convention"])
            eta = eta_from_xi(xi, alpha)
            val = negativity_closed_form(ClosedFormParams(eta=eta, alpha=alpha, ell=ell))
            lines.append(f"{ell},{w!r},{w / factor!r},{eta!r},{val.value!r}")
    text = "\n".join(lines) + "\n"
    if opts["out"]:
        Path(opts["out"]).write_text(text)
        print(f"wrote {opts['out']} (W column is {opts['w_convention']}; "
              f"W_other_convention is {other})")
    else:
        sys.stdout.write(text)
    return 0


def _cmd_tomo(opts: dict) -> int:
    params = ChannelParams.from_scintillation(opts["w"], opts["alpha"],
                                              opts["w_convention"])
    truth = analytic_density_matrix(opts["ell"], params)
    records = simulate_counts(truth, standard_pairs(), opts["flux"], opts["seed"])
    est = reconstruct(records, max_likelihood=opts["mle"])
    dist = trace_distance(truth, est)
    n_true = negativity(truth).value
    n_est = negativity(est.matrix).value
    print(f"ell={opts['ell']} alpha={opts['alpha']} W={opts['w']} "
          f"({opts['w_convention']}), flux={opts['flux']:g}")
    print(f"trace distance (reconstructed vs truth): {dist:.3e}")
    print(f"negativity: truth {n_true:.6f}, reconstructed {n_est:.6f}")
    if opts["out"]:
        counts_to_csv(records, opts["out"])
        print(f"wrote counts to {opts['out']}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _effective_options(args)
        handler = {"sweep": _cmd_sweep, "screens": _cmd_screens,
                   "negativity": _cmd_negativity, "tomo": _cmd_tomo}[args.command]
        return handler(opts)
    except (ValueError, OSError) as exc:
        print(f"oamturb {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
