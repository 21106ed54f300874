"""``naks`` command line: theory tables, sampling, exact oracles, bounds and pictures.

Exit codes: 0 success, 2 invariant violation, 64 usage error, 70 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import traceback
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from . import __version__
from .errors import InvalidInput, InvariantViolation, NaksError
from .kakeya import build_kakeya, read_kakeya, write_kakeya
from .lipschitz import random_lipschitz
from .montecarlo import (
    ExperimentConfig,
    exact_card_total,
    histogram_csv,
    provenance,
    run_experiment,
    stats_csv,
    stats_json,
)
from .residue_ring import Family, Ring
from .theory import (
    asymptotic_constant,
    expected_measure,
    expected_measure_float,
    lower_bound_dim2,
    lower_bound_torsion,
    u_prime,
    u_sequence,
    weighted_height_sum,
)

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_USAGE = 64
EXIT_INTERNAL = 70

# Exact u_n has a denominator of roughly log2(q^{d-1}) * q^{(d-1)n} bits; past
# this many bits the theory table switches to floating point.
EXACT_BIT_LIMIT = 1 << 22
# Rationals wider than this are left out of the text outputs (the decimal
# rendering is still exact); keeps every CSV field under the csv module's
# default 131072-character limit.
RATIONAL_TEXT_BITS = 1 << 17


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- formatting -------------------------------------------------------------

def rational(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def rational_or_blank(x: Fraction) -> str:
    return rational(x) if x.denominator.bit_length() <= RATIONAL_TEXT_BITS else ""


def decimal6(x: Fraction | float) -> str:
    """Six decimals, ties to even (exact for Fractions)."""
    if isinstance(x, float):
        x = Fraction(x)
    scaled = round(x * 10 ** 6)
    sign = "-" if scaled < 0 else ""
    whole, frac = divmod(abs(scaled), 10 ** 6)
    return f"{sign}{whole}.{frac:06d}"


def render_rows(rows: list[dict], fmt: str, meta: dict) -> str:
    if fmt == "json":
        return json.dumps({"metadata": meta, "rows": rows}, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    if rows:
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# -- flag handling ----------------------------------------------------------

def _default_workers() -> int:
    raw = os.environ.get("NAKS_THREADS")
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise UsageError(f"NAKS_THREADS must be an integer, got {raw!r}") from None
    if value < 1:
        raise UsageError("NAKS_THREADS must be >= 1")
    return value


def n_values(args) -> list[int]:
    if args.n is not None and (args.n_min is not None or args.n_max is not None):
        raise UsageError("--n conflicts with --n-min/--n-max")
    if args.n is not None:
        values = [args.n]
    elif args.n_max is not None:
        lo = 1 if args.n_min is None else args.n_min
        values = list(range(lo, args.n_max + 1))
    elif args.n_min is not None:
        raise UsageError("--n-min needs --n-max")
    else:
        raise UsageError("give --n or --n-max")
    if not values or min(values) < 1:
        raise UsageError("levels must be >= 1 and the range nonempty")
    return values


def _single_n(args) -> int:
    values = n_values(args)
    if len(values) != 1:
        raise UsageError(f"{args.command} takes a single --n")
    return values[0]


def _check_q(q: int) -> None:
    if q < 2:
        raise UsageError(f"--p must be >= 2, got {q}")


def _check_dim(d: int) -> None:
    if d < 2:
        raise UsageError(f"--dim must be >= 2, got {d}")


def _ring(args, n: int) -> Ring:
    try:
        return Ring(Family(args.family), args.p, n)
    except InvalidInput as exc:
        raise UsageError(str(exc)) from None


def _meta(args, **extra) -> dict:
    flags = {k: v for k, v in vars(args).items() if k not in ("func", "out", "format", "command", "seed_given")}
    return provenance(command=args.command, flags=flags, **extra)


# -- subcommands ------------------------------------------------------------

def _exact_affordable(q: int, d: int, n: int) -> bool:
    a = q ** (d - 1)
    return a.bit_length() * a ** n <= EXACT_BIT_LIMIT


def cmd_theory(args) -> int:
    _check_q(args.p)
    _check_dim(args.dim)
    ns = n_values(args)
    q, d = args.p, args.dim
    rows = []
    for n in ns:
        if _exact_affordable(q, d, n):
            em = expected_measure(q, d, n)
            u_n = rational_or_blank(u_sequence(q, d, n))
            up = em_rat = rational_or_blank(em)
            em_dec = decimal6(em)
        else:
            u_n = up = em_rat = ""
            em_dec = decimal6(expected_measure_float(q, d, n))
        rows.append({
            "q": q, "d": d, "n": n,
            "u_n": u_n,
            "u_prime_n": up,
            "expected_measure_rational": em_rat,
            "expected_measure_decimal": em_dec,
            "lower_bound_dim2": rational(lower_bound_dim2(q, n)) if d == 2 else "",
            "asymptotic_constant": rational(asymptotic_constant(q, d)),
        })
    emit(render_rows(rows, args.format, _meta(args)), args.out)
    return EXIT_OK


def cmd_sample(args) -> int:
    _check_dim(args.dim)
    ns = n_values(args)
    _ring(args, ns[0])
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    if args.bins < 1:
        raise UsageError("--bins must be >= 1")
    config = ExperimentConfig(
        family=Family(args.family), p=args.p, d=args.dim, n_values=tuple(ns),
        samples=args.samples, seed=args.seed, workers=args.workers, bins=args.bins,
    )
    stats = run_experiment(config)
    meta = provenance(config, command="sample")
    if args.format == "json":
        emit(stats_json(stats, meta) + "\n", args.out)
        return EXIT_OK
    emit(stats_csv(stats, meta), args.out)
    if args.out:
        stem = Path(args.out)
        for s in stats:
            hist_path = stem.with_name(f"{stem.stem}_hist_n{s.n}.csv")
            hist_path.write_text(histogram_csv(s, meta))
    return EXIT_OK


def cmd_exact(args) -> int:
    _check_dim(args.dim)
    ring = _ring(args, _single_n(args))
    total, maps = exact_card_total(ring, args.dim)
    cells = ring.size ** args.dim
    mean = Fraction(total, maps * cells)
    theory = expected_measure(ring.p, args.dim, ring.n)
    row = {
        "family": ring.family.value, "q": ring.p, "d": args.dim, "n": ring.n,
        "maps": maps,
        "mean_card": rational(Fraction(total, maps)),
        "mean_measure_rational": rational(mean),
        "mean_measure_decimal": decimal6(mean),
        "expected_measure_rational": rational(theory),
        "equal": mean == theory,
    }
    emit(render_rows([row], args.format, _meta(args)), args.out)
    if mean != theory:
        print(f"exact mean {rational(mean)} differs from the recurrence {rational(theory)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_heights(args) -> int:
    _check_q(args.p)
    _check_dim(args.dim)
    q, d, n = args.p, args.dim, _single_n(args)
    plain = weighted_height_sum(q, d, n, method=args.method)
    modified = weighted_height_sum(q, d, n, modified=True, method=args.method)
    ratio = Fraction(q ** d - 1, (q - 1) * q ** (d - 1))
    u_n, up = u_sequence(q, d, n), u_prime(q, d, n)
    row = {
        "q": q, "d": d, "n": n, "method": args.method,
        "u_n_heights": rational(plain),
        "u_n_recurrence": rational(u_n),
        "u_n_equal": plain == u_n,
        "u_prime_n_heights": rational(modified * ratio),
        "u_prime_n_recurrence": rational(up),
        "u_prime_n_equal": modified * ratio == up,
        "u_n_decimal": decimal6(u_n),
    }
    emit(render_rows([row], args.format, _meta(args)), args.out)
    if not (row["u_n_equal"] and row["u_prime_n_equal"]):
        print("height-function sums disagree with the recurrence", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_bound(args) -> int:
    _check_q(args.p)
    ns = n_values(args)
    rows = []
    for n in ns:
        if not 0 <= args.ell <= n:
            raise UsageError(f"--ell must lie in [0, {n}]")
        measure = lower_bound_dim2(args.p, n)
        card = lower_bound_torsion(args.p, n, args.ell)
        if _exact_affordable(args.p, 2, n):
            em = expected_measure(args.p, 2, n)
        else:
            em = Fraction(expected_measure_float(args.p, 2, n))
        rows.append({
            "q": args.p, "n": n, "ell": args.ell,
            "lower_bound_measure": rational(measure),
            "lower_bound_measure_decimal": decimal6(measure),
            "lower_bound_card": rational(card),
            "lower_bound_card_decimal": decimal6(card),
            "expected_measure_decimal": decimal6(em),
        })
    emit(render_rows(rows, args.format, _meta(args)), args.out)
    return EXIT_OK


def cmd_render(args) -> int:
    from .render import export_voxels, render_2d, write_pgm

    if not args.out:
        raise UsageError("render needs --out")
    if args.input:
        kset = read_kakeya(args.input)
        if args.seed_given:
            kset.seed = args.seed
    else:
        _check_dim(args.dim)
        ring = _ring(args, _single_n(args))
        kset = build_kakeya(random_lipschitz(ring, args.dim, args.seed))
        kset.seed = args.seed
    if args.save_set:
        write_kakeya(kset, args.save_set)
    if kset.d == 2:
        write_pgm(render_2d(kset), args.out)
    elif kset.d == 3:
        export_voxels(kset, args.out)
    else:
        raise UsageError(f"render supports d = 2 (PGM) and d = 3 (voxels), got d = {kset.d}")
    meta = {"package": "naks", "version": __version__, "command": "render", "card": kset.card,
            "cells": kset.cells, "seed": kset.seed, "out": args.out}
    print(json.dumps(meta, sort_keys=True))
    return EXIT_OK


# -- parser -----------------------------------------------------------------

def _add_common(sp: argparse.ArgumentParser, *, ring: bool = True, levels: bool = True) -> None:
    if ring:
        sp.add_argument("--family", choices=[f.value for f in Family], default="padic")
    sp.add_argument("--p", type=int, default=2, help="residue field size q (a prime for concrete rings)")
    sp.add_argument("--dim", type=int, default=2, help="ambient dimension d")
    if levels:
        sp.add_argument("--n", type=int, help="single level n")
        sp.add_argument("--n-min", type=int, help="first level of a range (default 1)")
        sp.add_argument("--n-max", type=int, help="last level of a range")
    sp.add_argument("--out", help="output file (default stdout)")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="naks", description="Random non-archimedean Kakeya sets.")
    parser.add_argument("--version", action="version", version=f"naks {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("theory", help="exact expectation table")
    _add_common(sp, ring=False)
    sp.set_defaults(func=cmd_theory)

    sp = sub.add_parser("sample", help="Monte Carlo statistics of X_n")
    _add_common(sp)
    sp.add_argument("--samples", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--workers", type=int, default=None, help="worker processes (default $NAKS_THREADS or 1)")
    sp.add_argument("--bins", type=int, default=100)
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("exact", help="mean of X_n over every map (tiny instances)")
    _add_common(sp)
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("heights", help="u_n and u'_n from height-function sums")
    _add_common(sp, ring=False)
    sp.add_argument("--method", choices=["states", "blocks", "enumerate"], default="states")
    sp.set_defaults(func=cmd_heights)

    sp = sub.add_parser("bound", help="planar lower bounds")
    _add_common(sp, ring=False)
    sp.add_argument("--ell", type=int, default=0, help="segment length exponent")
    sp.set_defaults(func=cmd_bound)

    sp = sub.add_parser("render", help="PGM (d=2) or voxel CSV (d=3) of a Kakeya set")
    _add_common(sp)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--input", help="NAKS bit-array file to render instead of sampling")
    sp.add_argument("--save-set", help="also write the set as a NAKS bit-array file")
    sp.set_defaults(func=cmd_render)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    sys.set_int_max_str_digits(0)
    try:
        args = build_parser().parse_args(argv)
        if args.command == "sample" and args.workers is None:
            args.workers = _default_workers()
        if args.command == "render":
            args.seed_given = args.seed is not None
            if args.seed is None:
                args.seed = 0
        if getattr(args, "seed", 0) is not None and getattr(args, "seed", 0) < 0:
            raise UsageError("--seed must be non-negative")
        return args.func(args)
    except UsageError as exc:
        print(f"naks: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"naks: invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except NaksError as exc:
        # bad parameters or requests beyond the configured caps
        print(f"naks: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK
    except OSError as exc:
        print(f"naks: cannot access file: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
