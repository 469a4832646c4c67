"""Command-line front end.

Subcommands::

    push       compute breakpoints and the interval function at a given width
    minwidth   search the smallest width at which the interval exists
    coverage   exact or Monte Carlo coverage over the parameter grid
    simulate   alias of `coverage --method mc`
    batch      per-stratum minimal widths and intervals from a CSV of counts
    reproduce  emit the data behind the bundled tables and figures

All configuration is taken from flags (no environment variables), and
outputs are byte-identical across runs for identical flags and seeds.
Numbers are written with 17 significant digits, or 3 decimals under
``--pretty``.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np

from .coverage import (
    mc_coverage_profile,
    mc_standard_coverage,
    coverage_profile,
    min_standard_width,
    standard_coverage,
    standard_interval,
    standard_min_coverage,
    z_coverage,
    z_width_for,
)
from .families import Binomial, Hypergeometric, NormalMean
from .grid import make_grid
from .intervals import (
    achieved_width,
    build_interval_function,
    constrain,
    min_width,
    symmetrize,
    to_json_dict,
)
from .push import run_push

_EXIT_CODES = {"usage": 2, "width-not-representable": 2, "no-interval": 3}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.exit_code = _EXIT_CODES.get(code, 1)


class _Parser(argparse.ArgumentParser):
    # single-line machine-parseable errors instead of argparse's two-line form
    def error(self, message):
        raise CliError("usage", message)


def _fmt(value, pretty: bool) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    return f"{x:.3f}" if pretty else f"{x:.17g}"


def _add_common(p: _Parser):
    p.add_argument("--family", choices=["binom", "hyper", "normal"])
    p.add_argument("--n", type=int)
    p.add_argument("--N", type=int, dest="N")
    p.add_argument("--sigma", type=float)
    p.add_argument("--lo", type=float)
    p.add_argument("--hi", type=float)
    p.add_argument("--m", type=int, default=None, help="grid count (default 100000)")
    p.add_argument("--gamma", type=float)
    p.add_argument("--width", type=float)
    p.add_argument("--r", type=int)
    p.add_argument(
        "--constrain",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="shift intervals overflowing the parameter range back inside (default on)",
    )
    p.add_argument("--symmetric", action="store_true")
    p.add_argument("--policy", choices=["center", "sampled", "full"], default="center")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=2000)
    p.add_argument("--method", choices=["exact", "mc"], default="exact")
    p.add_argument("--compare", choices=["none", "standard"], default="none")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--pretty", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="-", metavar="PATH")


def _build_parser() -> _Parser:
    parser = _Parser(prog="pushci", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, descr in [
        ("push", "compute breakpoints and the interval function"),
        ("minwidth", "find the smallest width at which intervals exist"),
        ("coverage", "evaluate coverage over the parameter grid"),
        ("simulate", "Monte Carlo coverage (alias of coverage --method mc)"),
        ("batch", "per-stratum minimal widths from a CSV of sample sizes"),
        ("reproduce", "emit data behind the bundled tables and figures"),
    ]:
        sp = sub.add_parser(name, help=descr)
        _add_common(sp)
        if name == "batch":
            sp.add_argument("input", help="CSV with header stratum,n,s,gamma (s, gamma optional)")
        if name == "reproduce":
            sp.add_argument(
                "target",
                choices=["table1", "table2", "fig-binom", "fig-hyper", "fig-min"],
            )
            sp.add_argument("--scale", choices=["desk", "full"], default="full")
    return parser


def _family_grid(args):
    """Build (family, grid) from the flags, with per-family defaults."""
    if args.family is None:
        raise CliError("usage", "--family is required")
    m = args.m if args.m is not None else 100_000
    if args.family == "binom":
        if args.n is None:
            raise CliError("usage", "binom family needs --n")
        if args.lo is not None or args.hi is not None:
            raise CliError("usage", "--lo/--hi apply to the normal family only")
        return Binomial(args.n), make_grid(0.0, 1.0, m, 1.0)
    if args.family == "hyper":
        if args.n is None or args.N is None:
            raise CliError("usage", "hyper family needs --n and --N")
        if args.lo is not None or args.hi is not None:
            raise CliError("usage", "--lo/--hi apply to the normal family only")
        if args.m is not None and args.m != args.N:
            raise CliError("usage", f"hyper grid is fixed to 0..N; --m must equal N={args.N}")
        return Hypergeometric(args.n, args.N), make_grid(0.0, float(args.N), args.N, float(args.N))
    if args.sigma is None:
        raise CliError("usage", "normal family needs --sigma")
    if args.lo is None or args.hi is None:
        raise CliError("usage", "normal family needs --lo and --hi bounds")
    return NormalMean(args.sigma), make_grid(args.lo, args.hi, m)


def _need_gamma(args) -> float:
    if args.gamma is None:
        raise CliError("usage", "--gamma is required")
    if not 0.0 < args.gamma < 1.0:
        raise CliError("usage", f"--gamma must lie strictly in (0, 1), got {args.gamma}")
    return args.gamma


def _resolve_r(args, grid) -> int:
    if (args.width is None) == (args.r is None):
        raise CliError("usage", "exactly one of --width or --r is required")
    if args.r is not None:
        if not 1 <= args.r <= grid.m:
            raise CliError("usage", f"--r must lie in 1..{grid.m}, got {args.r}")
        return args.r
    r_real = args.width * grid.m / (grid.hi - grid.lo)
    r_near = round(r_real)
    if abs(r_real - r_near) > 1e-12 * max(1.0, abs(r_real)) or not 1 <= r_near <= grid.m:
        lo_r = min(max(int(math.floor(r_real)), 1), grid.m)
        hi_r = min(max(int(math.ceil(r_real)), 1), grid.m)
        raise CliError(
            "width-not-representable",
            f"width {args.width} is not a multiple of the grid step "
            f"{grid.step:.17g}; nearest representable widths are "
            f"{grid.width_of(lo_r):.17g} and {grid.width_of(hi_r):.17g}",
        )
    return int(r_near)


def _transform(f, args, family, grid):
    if args.constrain:
        f = constrain(f, grid.lo, grid.hi)
    if args.symmetric:
        f = symmetrize(f, family)
    return f


def _write_text(args, text: str):
    if args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _write_rows(args, header, rows):
    import io

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v, args.pretty) for v in row])
    _write_text(args, buf.getvalue())


def cmd_push(args) -> int:
    family, grid = _family_grid(args)
    gamma = _need_gamma(args)
    r = _resolve_r(args, grid)
    result = run_push(family, grid, r, gamma)
    if not result.exists:
        raise CliError("no-interval", "no interval of this width exists at this level")
    f = _transform(build_interval_function(result), args, family, grid)
    if args.format == "json":
        _write_text(args, json.dumps(to_json_dict(result, f), indent=2) + "\n")
    else:
        rows = (
            (f.boundaries[i], f.boundaries[i + 1], f.lower[i], f.upper[i])
            for i in range(f.segments)
        )
        _write_rows(args, ["y_lo", "y_hi", "lower", "upper"], rows)
    return 0


def cmd_minwidth(args) -> int:
    family, grid = _family_grid(args)
    gamma = _need_gamma(args)
    if args.width is not None or args.r is not None:
        raise CliError("usage", "minwidth searches for the width; drop --width/--r")
    r_star, result = min_width(family, grid, gamma)
    row = {"gamma": gamma, "r": r_star, "width": grid.width_of(r_star)}
    header = ["gamma", "r", "width"]
    if args.symmetric:
        f = build_interval_function(result)
        if args.constrain:
            f = constrain(f, grid.lo, grid.hi)
        row["symmetric_width"] = achieved_width(symmetrize(f, family))
        header.append("symmetric_width")
    if args.format == "json":
        payload = {k: (v if k == "r" else _fmt(v, args.pretty)) for k, v in row.items()}
        _write_text(args, json.dumps(payload, indent=2) + "\n")
    else:
        _write_rows(args, header, [[row[h] for h in header]])
    return 0


def _coverage_rows(args, family, grid, gamma, r):
    result = run_push(family, grid, r, gamma)
    if not result.exists:
        raise CliError("no-interval", "no interval of this width exists at this level")
    f = _transform(build_interval_function(result), args, family, grid)
    width = grid.width_of(r)
    if args.method == "exact":
        report = coverage_profile(f, family, grid)
    else:
        report = mc_coverage_profile(f, family, grid, args.reps, args.seed)
    std_vals = std_ses = None
    if args.compare == "standard":
        if args.method == "exact":
            std_vals = standard_coverage(family, grid, width)
        else:
            std_vals = np.empty(len(report.indices))
            std_ses = np.empty(len(report.indices))
            for i, k in enumerate(report.indices):
                std_vals[i], std_ses[i] = mc_standard_coverage(
                    family, grid, width, int(k), args.reps, args.seed
                )
    header = ["theta", "coverage", "se", "method", "family", "gamma", "width"]
    if std_vals is not None:
        header += ["std_coverage", "std_se"]
    rows = []
    for i in range(len(report.indices)):
        row = [
            report.thetas[i],
            report.values[i],
            report.std_errors[i] if report.std_errors is not None else "",
            report.method,
            family.label,
            gamma,
            width,
        ]
        if std_vals is not None:
            row += [std_vals[i], std_ses[i] if std_ses is not None else ""]
        rows.append(row)
    return header, rows


def cmd_coverage(args) -> int:
    family, grid = _family_grid(args)
    gamma = _need_gamma(args)
    r = _resolve_r(args, grid)
    if args.method == "mc" and args.reps < 1:
        raise CliError("usage", "--reps must be >= 1 for Monte Carlo coverage")
    header, rows = _coverage_rows(args, family, grid, gamma, r)
    if args.format == "json":
        payload = [dict(zip(header, [_fmt(v, args.pretty) for v in row])) for row in rows]
        _write_text(args, json.dumps(payload, indent=2) + "\n")
    else:
        _write_rows(args, header, rows)
    return 0


def cmd_simulate(args) -> int:
    args.method = "mc"
    return cmd_coverage(args)


def _parse_batch_row(line_no, row, header_map, default_gamma):
    def get(col):
        i = header_map.get(col)
        if i is None or i >= len(row):
            return ""
        return row[i].strip()

    stratum = get("stratum")
    if not stratum:
        raise ValueError("missing stratum label")
    try:
        n = int(get("n"))
    except ValueError:
        raise ValueError(f"sample size {get('n')!r} is not an integer") from None
    if n < 1:
        raise ValueError(f"sample size must be >= 1, got {n}")
    s_txt = get("s")
    s = None
    if s_txt:
        try:
            s = int(s_txt)
        except ValueError:
            raise ValueError(f"observed count {s_txt!r} is not an integer") from None
        if not 0 <= s <= n:
            raise ValueError(f"observed count must lie in 0..{n}, got {s}")
    g_txt = get("gamma")
    gamma = default_gamma
    if g_txt:
        gamma = float(g_txt)
    if gamma is None:
        raise ValueError("no gamma given on the row and no --gamma default")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie strictly in (0, 1), got {gamma}")
    return line_no, stratum, n, s, gamma


def _batch_cell(job, m, args):
    line_no, stratum, n, s, gamma = job
    family = Binomial(n)
    grid = make_grid(0.0, 1.0, m, 1.0)
    r_star, result = min_width(family, grid, gamma)
    push_w = grid.width_of(r_star)
    f = _transform(build_interval_function(result), args, family, grid)
    r_std = min_standard_width(family, grid, gamma)
    std_w = grid.width_of(r_std)
    push_lo = push_hi = std_lo = std_hi = ""
    if s is not None:
        y = float(s)
        if args.policy == "sampled":
            rng = np.random.default_rng((args.seed, line_no))
            y = s + float(rng.uniform(-0.5, 0.5))
        push_lo, push_hi = f.value_at(y)
        std_lo, std_hi = standard_interval(family, s, std_w, (0.0, 1.0))
    return [stratum, n, "" if s is None else s, gamma,
            r_star, push_w, push_lo, push_hi, std_w, std_lo, std_hi]


def cmd_batch(args) -> int:
    if args.policy == "full":
        raise CliError("usage", "batch rows cannot tabulate the full randomized function; use center or sampled")
    m = args.m if args.m is not None else 100_000
    try:
        with open(args.input, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise CliError("batch-input", f"{args.input}: empty file; header row required") from None
            header_map = {name.strip().lower(): i for i, name in enumerate(header)}
            if "stratum" not in header_map or "n" not in header_map:
                raise CliError("batch-input", f"{args.input}: header must name at least stratum,n")
            raw_rows = [(i + 2, row) for i, row in enumerate(reader) if any(c.strip() for c in row)]
    except OSError as exc:
        raise CliError("batch-input", f"cannot read {args.input}: {exc.strerror}") from None

    jobs = []
    for line_no, row in raw_rows:
        try:
            jobs.append(_parse_batch_row(line_no, row, header_map, args.gamma))
        except ValueError as exc:
            print(f'error code=batch-row msg="line {line_no}: {exc}"', file=sys.stderr)
    if not jobs:
        raise CliError("batch-input", f"{args.input}: no valid rows")

    workers = max(1, args.jobs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda j: _batch_cell(j, m, args), jobs))
    else:
        results = [_batch_cell(j, m, args) for j in jobs]
    header_out = ["stratum", "n", "s", "gamma", "push_r", "push_width",
                  "push_lower", "push_upper", "std_width", "std_lower", "std_upper"]
    _write_rows(args, header_out, results)
    return 0


def _reproduce_table1(args, m):
    rows = []
    for gamma in (0.7, 0.8, 0.9, 0.95):
        grid = make_grid(-10.0, 10.0, m)
        r_star, _ = min_width(NormalMean(1.0), grid, gamma)
        w = grid.width_of(r_star)
        rows.append([gamma, r_star, w, z_coverage(w, 1.0), z_width_for(gamma, 1.0)])
    return ["gamma", "push_r", "push_width", "z_coverage", "z_width_needed"], rows


def _reproduce_table2(args, m):
    text = resources.files("pushci.data").joinpath("gats_strata.csv").read_text(encoding="utf-8")
    reader = csv.reader(text.splitlines())
    header = next(reader)
    header_map = {name.strip().lower(): i for i, name in enumerate(header)}
    jobs = [
        _parse_batch_row(i + 2, row, header_map, 0.95)
        for i, row in enumerate(reader)
        if any(c.strip() for c in row)
    ]
    workers = max(1, args.jobs)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda j: _batch_cell(j, m, args), jobs))
    else:
        rows = [_batch_cell(j, m, args) for j in jobs]
    header_out = ["stratum", "n", "s", "gamma", "push_r", "push_width",
                  "push_lower", "push_upper", "std_width", "std_lower", "std_upper"]
    return header_out, rows


def _fig_variants(args, family, grid, gamma, reps):
    """Coverage rows for the push variants and the standard comparator."""
    r_star, result = min_width(family, grid, gamma)
    w = grid.width_of(r_star)
    raw = build_interval_function(result)
    cons = constrain(raw, grid.lo, grid.hi)
    variants = [
        ("push", cons),
        ("push-unconstrained", raw),
        ("push-symmetric", symmetrize(cons, family)),
    ]
    if family.discrete_param:
        indices = np.arange(grid.m + 1)
    else:
        indices = np.unique(np.round(np.linspace(0.0, 1.0, 101) * grid.m).astype(int))
    rows = []
    for name, f in variants:
        if args.method == "exact":
            rep = coverage_profile(f, family, grid, indices=indices)
            ses = [""] * len(indices)
        else:
            rep = mc_coverage_profile(f, family, grid, reps, args.seed, indices=indices)
            ses = rep.std_errors
        for i in range(len(indices)):
            rows.append([family.label, getattr(family, "n", ""), gamma, w, name,
                         rep.thetas[i], rep.values[i], ses[i]])
    thetas = np.atleast_1d(grid.theta_at(indices))
    if args.method == "exact":
        std_vals = standard_coverage(family, grid, w, indices=indices)
        std_ses = [""] * len(indices)
    else:
        std_vals = np.empty(len(indices))
        std_ses = np.empty(len(indices))
        for i, k in enumerate(indices):
            std_vals[i], std_ses[i] = mc_standard_coverage(family, grid, w, int(k), reps, args.seed)
    for i in range(len(indices)):
        rows.append([family.label, getattr(family, "n", ""), gamma, w, "standard",
                     thetas[i], std_vals[i], std_ses[i]])
    return rows


def _reproduce_fig(args, m, reps, hyper: bool):
    header = ["family", "n", "gamma", "width", "variant", "theta", "coverage", "se"]
    rows = []
    for n in (10, 20):
        for gamma in (0.9, 0.95):
            if hyper:
                family = Hypergeometric(n, 500)
                grid = make_grid(0.0, 500.0, 500, 500.0)
            else:
                family = Binomial(n)
                grid = make_grid(0.0, 1.0, m, 1.0)
            rows.extend(_fig_variants(args, family, grid, gamma, reps))
    return header, rows


def _reproduce_fig_min(args, m):
    header = ["gamma", "variant", "width", "min_coverage"]
    family = Binomial(10)
    grid = make_grid(0.0, 1.0, m, 1.0)
    rows = []
    for gamma in (0.7, 0.8, 0.9, 0.95):
        r_star, result = min_width(family, grid, gamma)
        w = grid.width_of(r_star)
        raw = build_interval_function(result)
        cons = constrain(raw, 0.0, 1.0)
        sym = symmetrize(cons, family)
        sym_w = achieved_width(sym)
        push_min = coverage_profile(cons, family, grid).min_coverage
        sym_min = coverage_profile(sym, family, grid).min_coverage
        rows.append([gamma, "push", w, push_min])
        rows.append([gamma, "push-symmetric", sym_w, sym_min])
        for width in sorted({w, sym_w}):
            rows.append([gamma, "standard", width,
                         standard_min_coverage(family, grid, width)[0]])
    return header, rows


def cmd_reproduce(args) -> int:
    desk = args.scale == "desk"
    m = 2000 if desk else 100_000
    reps = 500 if desk else 2000
    if args.target == "table1":
        header, rows = _reproduce_table1(args, m)
    elif args.target == "table2":
        header, rows = _reproduce_table2(args, m)
    elif args.target == "fig-binom":
        header, rows = _reproduce_fig(args, m, reps, hyper=False)
    elif args.target == "fig-hyper":
        header, rows = _reproduce_fig(args, m, reps, hyper=True)
    else:
        header, rows = _reproduce_fig_min(args, m)
    _write_rows(args, header, rows)
    return 0


_COMMANDS = {
    "push": cmd_push,
    "minwidth": cmd_minwidth,
    "coverage": cmd_coverage,
    "simulate": cmd_simulate,
    "batch": cmd_batch,
    "reproduce": cmd_reproduce,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise CliError("usage", "a subcommand is required (push, minwidth, coverage, simulate, batch, reproduce)")
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(f'error code={exc.code} msg="{exc}"', file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f'error code=invalid-value msg="{exc}"', file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
