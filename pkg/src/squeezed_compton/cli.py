"""Command-line entry point: ``simulate``, ``rho-scan`` and ``field-dump``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

from . import __version__
from .config import parse_config
from .errors import ConfigError, NumericalError, ParameterError
from .field import pulse_energy, synthesize_field, write_field_csv
from .kinetic import run_ensemble
from .rates import build_rate_table
from .rho import rho_asymptotic, rho_bessel, rho_quadrature, rho_small_zeta

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_RUNTIME = 4

RHO_HEADER = "zeta0,gamma_tau,theta0,rho_quadrature,rho_bessel,rho_asymptotic,rho_small_zeta"

log = logging.getLogger("squeezed_compton")


def _header(cfg, command):
    return [f"squeezed_compton {__version__} {command}", *cfg.echo()]


def _write_all(out_dir, writers):
    """Write every file to a temporary name first so a failure leaves nothing partial."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, write in writers:
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            os.close(fd)
            write(tmp)
            staged.append((tmp, out_dir / name))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)
    return [final for _, final in staged]


def _field(cfg):
    n = cfg.numerics
    return synthesize_field(
        cfg.pulse,
        cfg.squeeze,
        phi_min=n.phi_min,
        phi_max=n.phi_max,
        step=n.phase_step,
        window=n.omega_window,
    )


def cmd_simulate(cfg, out_dir):
    grid = _field(cfg)
    log.info("field grid: %d points on [%.1f, %.1f]", grid.n, grid.phi_min, grid.phi_max)
    energy = pulse_energy(grid, cfg.spot_radius_um, cfg.peak_intensity)
    table = build_rate_table(u_floor=cfg.numerics.u_floor, with_pairs=cfg.numerics.march.breit_wheeler)
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in cfg.values.items()}
    result = run_ensemble(
        grid,
        table,
        cfg.beam,
        cfg.seed,
        settings=cfg.numerics.march,
        bins=cfg.numerics.bins,
        workers=cfg.workers,
        pulse_energy=energy,
        params=params,
    )
    header = _header(cfg, "simulate")
    doc = result.summary.as_dict()
    doc["version"] = __version__
    doc["config"] = cfg.echo()

    def write_summary(path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, allow_nan=False)
            fh.write("\n")

    writers = [
        ("spectrum.csv", lambda p: result.spectrum.write_csv(p, header)),
        ("summary.json", write_summary),
    ]
    if cfg.numerics.photon_dump:
        writers.append(("photons.csv", lambda p: result.photons.write_csv(p, header)))
    return _write_all(out_dir, writers), result


def rho_rows(zetas, gamma_taus, thetas):
    rows = []
    for z in zetas:
        for g in gamma_taus:
            for t in thetas:
                vals = []
                for fn in (rho_quadrature, rho_bessel, rho_asymptotic, rho_small_zeta):
                    try:
                        vals.append(fn(z, g, t).value)
                    except OverflowError:
                        vals.append(math.nan)
                rows.append((z, g, t, *vals))
    return rows


def cmd_rho_scan(cfg, out_dir):
    rows = rho_rows(cfg.rho_zeta0, cfg.rho_gamma_tau, cfg.rho_theta0)

    def write(path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in _header(cfg, "rho-scan"):
                fh.write(f"# {line}\n")
            fh.write(RHO_HEADER + "\n")
            for row in rows:
                fh.write(",".join(repr(float(x)) for x in row) + "\n")

    return _write_all(out_dir, [("rho_scan.csv", write)]), rows


def cmd_field_dump(cfg, out_dir):
    grid = _field(cfg)
    header = _header(cfg, "field-dump")
    return _write_all(out_dir, [("field.csv", lambda p: write_field_csv(grid, p, header))]), grid


COMMANDS = {"simulate": cmd_simulate, "rho-scan": cmd_rho_scan, "field-dump": cmd_field_dump}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="squeezed-compton",
        description="Photon emission of an electron beam in a squeezed plane-wave pulse.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="key = value configuration file")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--workers", type=int, help="overrides the config worker count")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    try:
        cfg = parse_config(args.config, overrides)
        written, _ = COMMANDS[args.command](cfg, Path(args.out))
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except Exception as exc:  # noqa: BLE001 - every other failure maps to one exit code
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in written:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
