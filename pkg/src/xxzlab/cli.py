"""Command-line front end: one subcommand per experiment.

Every subcommand writes a CSV table (``--out``, default standard output) and,
with ``--summary``, a JSON summary object.  Exit status is 0 on success, 1 when
a checked property fails and 2 on a usage error.

Settings may also come from a config file (``--config``) of ``key = value``
lines.  Keys before any ``[section]`` header apply to every subcommand; keys
under ``[name]`` apply to subcommand ``name`` only.  Command-line flags win
over the file, and unknown keys are rejected.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import coherent, fockspace, harness, io, jacobi, spinchain
from .kinkmath import make_params
from .linalg import ConvergenceError


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError((self, message))


# -- argument types --------------------------------------------------------

def window_type(text: str) -> tuple[int, int]:
    try:
        a, b = (int(t) for t in text.replace(",", ":").split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"window must look like A:B, got {text!r}")
    if a > b:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return a, b


def int_list(text: str) -> list[int]:
    """``"4,8,16"`` or an inclusive range ``"1-5"``."""
    out = []
    for part in text.split(","):
        part = part.strip()
        try:
            if "-" in part[1:]:
                lo, hi = part[0] + part[1:].split("-", 1)[0], part[1:].split("-", 1)[1]
                out += list(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad integer list {text!r}")
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def float_list(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def grid_type(text: str) -> np.ndarray:
    """``"start:stop:num"`` (inclusive linspace) or a comma list."""
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return np.linspace(float(a), float(b), int(n))
        return np.array(float_list(text))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}")


def occupation_type(text: str) -> dict[int, int]:
    """``"0:1"`` or ``"0:1,1:2"`` as ``{site: occupation}``."""
    occ = {}
    try:
        for part in text.split(","):
            if part.strip():
                x, n = part.split(":")
                occ[int(x)] = int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"occupations must look like x:n,..., got {text!r}")
    return occ


# -- parser ----------------------------------------------------------------

def _common(p, *, two_j=None, two_j_list=None, window=None, delta=1.25, r=0.5):
    g = p.add_argument_group("model")
    g.add_argument("--delta", type=float, default=delta, help="anisotropy (> 1)")
    g.add_argument("--r", type=float, default=r, help="kink position")
    if two_j is not None:
        g.add_argument("--two-j", type=int, default=two_j, help="doubled spin 2J")
    if two_j_list is not None:
        g.add_argument("--two-j", type=int_list, default=two_j_list,
                       help="list of doubled spins, e.g. 4,8,16 or 1-5")
    g.add_argument("--window", type=window_type, default=window, help="lattice window A:B")
    g.add_argument("--half-width", type=int, default=None, help="window -L:L")
    g.add_argument("--sites", type=int, default=None,
                   help="window of this many sites around the origin")
    o = p.add_argument_group("output")
    o.add_argument("--out", default="-", help="CSV output path ('-' for stdout)")
    o.add_argument("--format", choices=["csv", "json"], default="csv")
    o.add_argument("--summary", default=None, help="JSON summary path")
    o.add_argument("--seed", type=int, default=harness.SEED)
    o.add_argument("--threads", type=int, default=None,
                   help="worker cap (fallback: XXZLAB_THREADS)")
    o.add_argument("--config", default=None, help="key=value config file")


COMMANDS = {
    "jacobi": "Spectrum of the one-particle Jacobi operator of the kink: zero "
              "mode, gap above it, continuum edge 2(1-1/delta) and bound states.",
    "phase-diagram": "Gap and number of bound states below the continuum over a "
                     "(1/delta, r) grid.",
    "spin-gap": "Spectral gap of the spin-J XXZ kink Hamiltonian in fixed "
                "magnetisation sectors.",
    "groundstate-check": "Exactness of the closed-form ground state in every "
                         "magnetisation sector.",
    "boson-compare": "Decomposition of H/J into kinematical, dynamical and "
                     "transition terms on the truncated boson space, and the "
                     "quasi-free boson spectrum.",
    "bounds": "Randomised verification of the kinematical, norm and transition "
              "operator bounds.",
    "converge": "Strong convergence of H/J to the boson Hamiltonian on a fixed "
                "occupation vector.",
    "concentrate": "Spectral concentration: pseudo-eigenvectors of H/J built "
                   "from boson eigenvectors.",
    "pinned": "Low spectrum of H/J plus the pinning field h_J sup N_x against the "
              "boson spectrum.",
    "conjecture": "Sector gap over J against the Jacobi gap for growing spin.",
    "clt": "Characteristic functions of fluctuation operators against their "
           "Gaussian limit.",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xxzlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    P = {name: sub.add_parser(name, help=text, description=text) for name, text in COMMANDS.items()}

    p = P["jacobi"]
    _common(p)
    p.add_argument("--k", type=int, default=6, help="number of eigenvalues")
    p.add_argument("--boundary", choices=["one_sided", "dirichlet"], default="one_sided")
    p.add_argument("--solver", choices=["auto", "dense", "lanczos"], default="auto")

    p = P["phase-diagram"]
    _common(p)
    p.add_argument("--delta-inv", type=grid_type, default=grid_type("0.1:0.9:9"),
                   help="1/delta grid, start:stop:num or a,b,c")
    p.add_argument("--r-grid", type=grid_type, default=grid_type("0:0.9:10"))
    p.add_argument("--k", type=int, default=6)

    p = P["spin-gap"]
    _common(p, two_j=1)
    p.add_argument("--M", type=float_list, default=[0.0], help="magnetisations, e.g. 0,0.5")
    p.add_argument("--solver", choices=["auto", "dense", "lanczos"], default="auto")

    p = P["groundstate-check"]
    _common(p, two_j=1)
    p.add_argument("--tol", type=float, default=1e-10, help="relative residual tolerance")
    p.add_argument("--dump-sector", type=float, default=None,
                   help="also write this sector's ground state (needs --dump-out)")
    p.add_argument("--dump-out", default=None)

    p = P["boson-compare"]
    _common(p, two_j=2)
    p.add_argument("--n-cap", type=int, default=None, help="occupation cap for the spectrum (default 2J)")
    p.add_argument("--N", type=int, default=None, help="particle-number sector for the spectrum")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--spectrum-out", default=None)
    p.add_argument("--tol", type=float, default=1e-12)

    p = P["bounds"]
    _common(p)
    p.add_argument("--n-reports", type=int, default=500)
    p.add_argument("--max-two-j", type=int, default=16)
    p.add_argument("--max-sites", type=int, default=5)
    p.add_argument("--max-nj", type=int, default=3)
    p.add_argument("--samples-per-config", type=int, default=5)

    p = P["converge"]
    _common(p, two_j_list=[4, 8, 16, 32], window=(-6, 7))
    p.add_argument("--psi", type=occupation_type, default=None,
                   help="occupations x:n,... (default one boson at the kink centre)")

    p = P["concentrate"]
    _common(p, two_j_list=[4, 8, 16], window=(-2, 2))
    p.add_argument("--N-E", type=int, default=1, help="particle number of the eigenvector")
    p.add_argument("--index", type=int, default=None, help="eigenvalue index in the sector")

    p = P["pinned"]
    _common(p, two_j_list=[64, 128], window=(-2, 2))
    p.add_argument("--E-max", type=float, default=1.0,
                   help="energy cut; must stay below h_J n_J")

    p = P["conjecture"]
    _common(p, two_j_list=[1, 2, 3, 4, 5], window=(-2, 3))
    p.add_argument("--band", type=float, default=0.05, help="tolerated relative inversion")
    p.add_argument("--solver", choices=["auto", "dense", "lanczos"], default="auto")

    p = P["clt"]
    _common(p, two_j_list=[2, 8, 32], window=(-1, 1))
    p.add_argument("--n-vectors", type=int, default=3, help="random tangent fields")
    p.add_argument("--scale", type=float, default=1.0, help="field length")

    parser._subparsers_map = P
    return parser


# -- config file -------------------------------------------------------------

def read_config(path: str) -> dict[str | None, dict[str, str]]:
    sections: dict[str | None, dict[str, str]] = {None: {}}
    cur = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                cur = line[1:-1].strip()
                sections.setdefault(cur, {})
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            k, v = (t.strip() for t in line.split("=", 1))
            sections[cur][k] = v
    return sections


def _apply_config(sub: argparse.ArgumentParser, command: str, path: str):
    sections = read_config(path)
    unknown = set(sections) - {None} - set(COMMANDS)
    if unknown:
        raise ValueError(f"unknown config section(s): {', '.join(sorted(unknown))}")
    values = dict(sections[None])
    values.update(sections.get(command, {}))
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, text in values.items():
        dest = key.replace("-", "_")
        if dest in ("config", "help") or dest not in actions:
            raise ValueError(f"unknown config key {key!r} for {command}")
        act = actions[dest]
        if act.choices is not None and text not in act.choices:
            raise ValueError(f"config key {key!r}: {text!r} not in {sorted(act.choices)}")
        conv = act.type or str
        defaults[dest] = conv(text)
    sub.set_defaults(**defaults)


# -- helpers --------------------------------------------------------------------

def _window(args, default=None):
    if args.window is not None:
        return args.window
    if args.half_width is not None:
        return (-args.half_width, args.half_width)
    if args.sites is not None:
        if args.sites < 1:
            raise ValueError("--sites must be positive")
        return (1 - args.sites // 2, args.sites - args.sites // 2)
    if default is None:
        raise ValueError("a window is required (--window, --half-width or --sites)")
    return default


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("XXZLAB_THREADS")
    return max(1, int(env)) if env else 1


STDOUT = ("-", "/dev/stdout")


def _emit(args, header, rows, summary):
    if args.format == "json":
        text = io.json_text({"header": header, "rows": rows, "summary": summary})
    else:
        text = io.csv_text(header, rows)
    if args.out in STDOUT:
        sys.stdout.write(text)
    else:
        io.write_atomic(args.out, text)
    if args.summary in STDOUT:
        sys.stdout.write(io.json_text(summary))
    elif args.summary:
        io.write_json(args.summary, summary)


def _monotone(values, rel: float = 1e-9) -> bool:
    return all(b <= a * (1 + rel) + 1e-15 for a, b in zip(values, values[1:]))


# -- subcommands --------------------------------------------------------------

def cmd_jacobi(args):
    params = make_params(1, args.delta, args.r, _window(args, (-60, 60)))
    h = jacobi.build_jacobi(params, args.boundary)
    rep = jacobi.spectral_report(params, k=args.k, solver=args.solver, h=h)
    cell = jacobi.PhaseCell(params.delta_inv, params.r, rep.gap, rep.continuum_edge,
                            rep.n_isolated, rep.eigenvalues)
    header, rows = jacobi.phase_rows([cell], args.k)
    ok = rep.gap > 0 and rep.eigenvalues[0] >= -1e-10
    summary = {"suite": "jacobi", "gap": rep.gap, "continuum_edge": rep.continuum_edge,
               "n_isolated": rep.n_isolated, "solver": rep.solver,
               "zero_mode_residual": jacobi.zero_mode_residual(params, args.boundary),
               "passed": ok}
    _emit(args, header, rows, summary)
    return 0 if ok else 1


def cmd_phase_diagram(args):
    window = _window(args, (-60, 60))
    if not np.all(np.asarray(args.delta_inv) > 0) or not np.all(np.asarray(args.delta_inv) < 1):
        raise ValueError("delta must exceed 1 (1/delta values in (0, 1))")
    cells = jacobi.phase_diagram(args.delta_inv, args.r_grid, window, args.k, _threads(args))
    header, rows = jacobi.phase_rows(cells, args.k)
    errors = [c.error for c in cells if c.error]
    summary = {"suite": "phase-diagram", "total": len(cells), "failed": len(errors),
               "passed": len(cells) - len(errors), "errors": errors}
    _emit(args, header, rows, summary)
    return 0 if not errors else 1


def cmd_spin_gap(args):
    params = make_params(args.two_j, args.delta, args.r, _window(args, (-3, 4)))
    gaps = [spinchain.sector_gap(params, M, solver=args.solver) for M in args.M]
    header, rows = spinchain.sector_gap_rows(gaps)
    summary = {"suite": "spin-gap", "total": len(gaps),
               "gaps": {str(g.M): g.gap for g in gaps}}
    _emit(args, header, rows, summary)
    return 0


def cmd_groundstate_check(args):
    params = make_params(args.two_j, args.delta, args.r, _window(args, (-2, 3)))
    header = ["two_m", "M", "dim", "residual", "max_diag", "relative", "pass"]
    rows = []
    for two_m in spinchain.admissible_two_m(params.two_j, params.n_sites):
        res, scale = spinchain.ground_state_residual(params, two_m / 2)
        rel = res / max(scale, 1.0)
        dim = spinchain.SectorBasis(params.two_j, params.window, two_m).dim
        rows.append([two_m, two_m / 2, dim, res, scale, rel, rel <= args.tol])
    if args.dump_sector is not None:
        if not args.dump_out:
            raise ValueError("--dump-sector needs --dump-out")
        basis, vec = spinchain.ground_state(params, args.dump_sector)
        io.write_csv(args.dump_out, *spinchain.ground_state_rows(basis, vec))
    failed = sum(not r[-1] for r in rows)
    summary = {"suite": "groundstate-check", "total": len(rows), "passed": len(rows) - failed,
               "failed": failed, "worst_relative": max(r[5] for r in rows)}
    _emit(args, header, rows, summary)
    return 0 if failed == 0 else 1


def cmd_boson_compare(args):
    params = make_params(args.two_j, args.delta, args.r, _window(args, (-1, 2)))
    diffs = fockspace.decomposition_difference(params)
    header, rows = fockspace.difference_rows(diffs)
    ok = diffs["total"] <= args.tol
    cap = params.two_j if args.n_cap is None else args.n_cap
    if args.spectrum_out:
        basis = fockspace.FockBasis(params.window, cap, N=args.N)
        H = fockspace.build_boson_hamiltonian(params, basis).toarray()
        w = np.linalg.eigvalsh(H)[: args.k]
        io.write_csv(args.spectrum_out, *fockspace.spectrum_rows(cap, params.n_sites, args.N, w))
    summary = {"suite": "boson-compare", "max_abs_diff": diffs["total"], "scale": diffs["scale"],
               "tol": args.tol, "passed": ok}
    _emit(args, header, rows, summary)
    return 0 if ok else 1


def cmd_bounds(args):
    reports = harness.bound_suite(args.n_reports, args.seed, args.max_two_j, args.max_sites,
                                  args.max_nj, args.samples_per_config)
    header, rows = harness.bound_rows(reports)
    summary = harness.summary("bounds", reports)
    _emit(args, header, rows, summary)
    return 0 if summary["failed"] == 0 else 1


def cmd_converge(args):
    window = _window(args)
    psi = args.psi if args.psi is not None else {harness.kink_center_site(args.r): 1}
    params_list = [make_params(tj, args.delta, args.r, window) for tj in args.two_j]
    res = harness.strong_convergence_residual(params_list, psi)
    header, rows = harness.convergence_rows(res)
    within = all(r.residual <= r.bound for r in res)
    nonzero = [r for r in res if r.residual > 0]
    exponent = (harness.fit_power([r.two_j for r in nonzero], [r.residual for r in nonzero])
                if len(nonzero) >= 3 else float("nan"))
    summary = {"suite": "converge", "total": len(res), "within_bound": within,
               "fitted_exponent": exponent, "passed": within}
    _emit(args, header, rows, summary)
    return 0 if within else 1


def cmd_concentrate(args):
    window = _window(args)
    params_list = [make_params(tj, args.delta, args.r, window) for tj in args.two_j]
    res = harness.spectral_concentration_check(params_list, args.N_E, args.index)
    header, rows = harness.concentration_rows(res)
    bad = [r.two_j for r in res
           if not r.n_bound_ok or (r.testable and r.count != r.multiplicity)]
    summary = {"suite": "concentrate", "total": len(res), "failed": len(bad),
               "testable": sum(r.testable for r in res), "passed": not bad}
    _emit(args, header, rows, summary)
    return 0 if not bad else 1


def cmd_pinned(args):
    window = _window(args)
    params_list = [make_params(tj, args.delta, args.r, window) for tj in args.two_j]
    e_max = args.E_max
    res = harness.pinned_spectrum_convergence(params_list, e_max)
    header, rows = harness.pinned_rows(res)
    ok = _monotone([r.distance for r in res])
    summary = {"suite": "pinned", "total": len(res), "E_max": e_max,
               "distances": [r.distance for r in res], "passed": ok}
    _emit(args, header, rows, summary)
    return 0 if ok else 1


def cmd_conjecture(args):
    window = _window(args)
    res = harness.conjecture_trend(args.two_j, args.delta, args.r, window, solver=args.solver)
    header, rows = harness.trend_rows(res)
    ratios = [r.gap_over_j for r in res]
    ok = harness.trend_ok([r.difference for r in res], args.band)
    summary = {"suite": "conjecture", "total": len(res), "trend_ok": ok,
               "band_ratio": max(ratios) / min(ratios), "passed": ok}
    _emit(args, header, rows, summary)
    return 0 if ok else 1


def cmd_clt(args):
    window = _window(args)
    rng = np.random.default_rng(args.seed)
    base = make_params(1, args.delta, args.r, window)
    fields = [coherent.random_tangent_field(base, rng, args.scale) for _ in range(args.n_vectors)]
    records = []
    for tj in args.two_j:
        params = make_params(tj, args.delta, args.r, window)
        for f in fields:
            records.append((params, f, coherent.characteristic_function(params, f)))
    header, rows = coherent.clt_rows(records)
    summary = {"suite": "clt", "total": len(rows),
               "max_abs_err": max(r[-1] for r in rows)}
    _emit(args, header, rows, summary)
    return 0


HANDLERS = {
    "jacobi": cmd_jacobi,
    "phase-diagram": cmd_phase_diagram,
    "spin-gap": cmd_spin_gap,
    "groundstate-check": cmd_groundstate_check,
    "boson-compare": cmd_boson_compare,
    "bounds": cmd_bounds,
    "converge": cmd_converge,
    "concentrate": cmd_concentrate,
    "pinned": cmd_pinned,
    "conjecture": cmd_conjecture,
    "clt": cmd_clt,
}


def _config_path(argv):
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if a.startswith("--config="):
            return a.split("=", 1)[1]
    return None


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    command = next((a for a in argv if a in COMMANDS), None)
    sub = parser._subparsers_map.get(command, parser)
    try:
        path = _config_path(argv)
        if path is not None:
            if command is None:
                raise ValueError("--config needs a subcommand")
            _apply_config(sub, command, path)
        args = parser.parse_args(argv)
        return HANDLERS[args.command](args)
    except UsageError as exc:
        p, message = exc.args[0]
        p.print_help(sys.stderr)
        print(f"\nerror: {message}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        sub.print_help(sys.stderr)
        print(f"\nerror: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
