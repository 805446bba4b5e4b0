"""Command-line driver: ``ddlpb --case kirkwood2 --lmax 7 --nleb 86 --kappa 0``."""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

import numpy as np

from .cases import CASE_NAMES, builtin_case
from .cavity import read_pqr
from .errors import DDLPBError, NegativeIonicStrength, ParseError, EmptyStructure
from .operators import SolventParams
from .solver import SolveConfig, solve

# CODATA 2018, Gaussian units
ELEMENTARY_CHARGE_STATC = 4.803204712570263e-10
AVOGADRO = 6.02214076e23
BOLTZMANN_ERG = 1.380649e-16
ROOM_TEMPERATURE = 298.15

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2


def kappa_from_ionic_strength(ionic_strength, eps2=78.54, temperature=ROOM_TEMPERATURE):
    """Debye-Hueckel screening constant in 1/Angstrom for I in mol/L."""
    if ionic_strength < 0:
        raise NegativeIonicStrength(f"ionic strength must be >= 0, got {ionic_strength}")
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    # ions per cm^3 is N_A * I / 1000
    k2 = (8.0 * math.pi * ELEMENTARY_CHARGE_STATC**2 * AVOGADRO * ionic_strength
          / (1000.0 * eps2 * BOLTZMANN_ERG * temperature))
    return math.sqrt(k2) * 1e-8


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _InputError(message)


def parse_sweep(text):
    pairs = []
    for item in text.split(","):
        try:
            l, n = item.split(":")
            pairs.append((int(l), int(n)))
        except ValueError:
            raise _InputError(f"bad sweep entry {item!r}; expected lmax:nleb") from None
    if not pairs:
        raise _InputError("empty sweep")
    return pairs


def build_parser():
    p = _Parser(prog="ddlpb", description=__doc__.splitlines()[0])
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--pqr", metavar="PATH", help="structure in PQR format")
    src.add_argument("--case", choices=CASE_NAMES, help="built-in test case")
    p.add_argument("--eps1", type=float, default=1.0)
    p.add_argument("--eps2", type=float, default=78.54)
    salt = p.add_mutually_exclusive_group()
    salt.add_argument("--kappa", type=float, help="screening constant, 1/Angstrom "
                      "(default 0.104)")
    salt.add_argument("--ionic-strength", type=float, metavar="I",
                      help="ionic strength in mol/L, converted at 298.15 K")
    p.add_argument("--lmax", type=int, default=7)
    p.add_argument("--nleb", type=int, default=86)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--gmres-tol", type=float, default=1e-8)
    p.add_argument("--mode", choices=("outer", "global"), default="outer")
    p.add_argument("--radius-scale", type=float, default=1.0)
    p.add_argument("--sweep", metavar="L:N,...", help="run several discretizations")
    p.add_argument("--surface-out", metavar="PATH",
                   help="write 'x y z psi_r' for each exposed node")
    p.add_argument("--csv-out", metavar="PATH", help="write a convergence table")
    p.add_argument("--deterministic", action="store_true",
                   help="fixed-order reductions for bit-stable output")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def write_surface(path, report):
    ops = report.operators
    X = np.asarray(report.X_r)
    ylm = ops.ylm[ops.target_node]
    psi = np.einsum("tb,tb->t", ylm, X[ops.target_ball])
    data = np.column_stack([ops.target_points, psi])
    np.savetxt(path, data, fmt="%.10e")


def write_csv(path, rows):
    finest = rows[-1]["energy"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["lmax", "nleb", "energy_kcal_mol", "rel_err_vs_finest",
                    "outer_iters", "seconds"])
        for r in rows:
            rel = abs(r["energy"] - finest) / abs(finest) if finest else 0.0
            w.writerow([r["lmax"], r["nleb"], repr(r["energy"]), repr(rel),
                        r["outer_iters"], repr(r["seconds"])])


def run(argv=None, out=sys.stdout, err=sys.stderr):
    try:
        args = build_parser().parse_args(argv)
        if args.ionic_strength is not None:
            kappa = kappa_from_ionic_strength(args.ionic_strength, args.eps2)
        else:
            kappa = 0.104 if args.kappa is None else args.kappa
        params = SolventParams(args.eps1, args.eps2, kappa)
        if args.pqr:
            cavity = read_pqr(args.pqr)
            charges = None
        else:
            cavity, charges = builtin_case(args.case)
        if args.radius_scale != 1.0:
            cavity = cavity.scaled(args.radius_scale)
        pairs = parse_sweep(args.sweep) if args.sweep else [(args.lmax, args.nleb)]
        configs = [SolveConfig(lmax=l, n_leb=n, tol=args.tol, gmres_tol=args.gmres_tol,
                               mode=args.mode, deterministic=args.deterministic)
                   for l, n in pairs]
    except (_InputError, ParseError, EmptyStructure, OSError, ValueError) as exc:
        print(f"ddlpb: error: {exc}", file=err)
        return EXIT_INPUT

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    rows = []
    report = None
    try:
        for cfg in configs:
            report = solve(cavity, charges, params, cfg)
            rows.append(dict(lmax=cfg.lmax, nleb=cfg.n_leb, energy=report.energy,
                             outer_iters=report.outer_iterations,
                             seconds=report.seconds))
            print(f"lmax={cfg.lmax} nleb={cfg.n_leb} "
                  f"E_s={report.energy:.4f} kcal/mol "
                  f"outer_iterations={report.outer_iterations} "
                  f"time={report.seconds:.3f}s", file=out)
    except (DDLPBError, ValueError, MemoryError) as exc:
        print(f"ddlpb: solver failure: {exc}", file=err)
        return EXIT_SOLVER

    try:
        if args.csv_out:
            write_csv(args.csv_out, rows)
        if args.surface_out:
            write_surface(args.surface_out, report)
    except OSError as exc:
        print(f"ddlpb: error: {exc}", file=err)
        return EXIT_INPUT
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
