"""kpwvn command line: bands, propagate, eigenscan, gapscan, decompose, selfcheck.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import plotting
from .asymptotics import fit_growth, measure, predict
from .bands import band_structure, find_critical_points, lyapunov
from .config import load_config, parse_grid
from .decomposition import decompose, remainder_series, table_beta
from .eigensearch import scan_critical_points, worker_count
from .errors import KPError, ValidationError
from .lattice import realize_lattice
from .output import config_header, ensure_dir, guarded, write_json, write_rows
from .transfer import boundary_vector, propagate
from .weyl import gap_scan

PROPAGATE_N = 10_000


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="TOML run configuration")
    p.add_argument("--model", dest="kind", choices=["none", "amplitude", "positional"])
    p.add_argument("--d", type=float)
    p.add_argument("--alpha0", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--q", help="tail sequence: zero | geometric:r,s | powerlaw:p,s | file:PATH")
    p.add_argument("--kmax", dest="k_max", type=float)
    p.add_argument("--N", dest="N", type=int)
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--plot", action="store_true", default=None, help="also render PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpwvn", description="Kronig-Penney lattices with "
                                     "Wigner-von Neumann type perturbations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bands", help="band edges, gaps and critical points")
    _add_common(p)
    p.add_argument("--curve-points", type=int, help="samples of L(k) in the plot data")

    p = sub.add_parser("propagate", help="propagate solutions and check growth predictions")
    _add_common(p)
    p.add_argument("--lambda", dest="lambdas", type=float, action="append", metavar="LAMBDA")

    p = sub.add_parser("eigenscan", help="embedded eigenvalues at critical points")
    _add_common(p)

    p = sub.add_parser("gapscan", help="finite-section diagnostic inside a spectral gap")
    _add_common(p)
    p.add_argument("--lambda-grid", type=parse_grid, metavar="LO:HI:COUNT")
    p.add_argument("--gap-index", type=int, help="gap to scan when no grid is given (0 = lowest)")
    p.add_argument("--sections", dest="section_sizes", type=int, nargs="+", metavar="N")

    p = sub.add_parser("decompose", help="decomposition coefficients and remainder report")
    _add_common(p)
    p.add_argument("--lambda", dest="lambdas", type=float, action="append", metavar="LAMBDA")
    p.add_argument("--n-range", dest="n_range", type=int, nargs=2, metavar=("LO", "HI"))

    p = sub.add_parser("selfcheck", help="run the invariant suite")
    _add_common(p)
    return parser


_OVERRIDE_KEYS = ("kind", "d", "alpha0", "c", "omega", "gamma", "kappa", "q", "k_max", "N", "out",
                  "format", "plot", "lambdas", "lambda_grid", "gap_index", "section_sizes", "n_range",
                  "curve_points")


def config_from_args(args):
    overrides = {key: getattr(args, key, None) for key in _OVERRIDE_KEYS}
    return load_config(args.config, overrides)


def _say(path) -> None:
    print(f"wrote {path}")


# -- commands -----------------------------------------------------------------

def cmd_bands(cfg) -> int:
    p = cfg.params
    bs = band_structure(p.d, p.alpha0, p.omega, cfg.k_max)
    out = ensure_dir(cfg.out)
    conf = cfg.resolved()
    if cfg.format == "json":
        _say(write_json(out / "bands.json", bs.to_dict(), conf))
    else:
        rows = [("edge", e.k, e.k * e.k, e.tag.value) for e in bs.edges]
        rows += [("critical", c.k, c.k * c.k, c.tag.value) for c in bs.criticals]
        rows.sort(key=lambda r: r[1])
        _say(write_rows(out / "bands.csv", ["kind", "k", "lambda", "tag"], rows, conf))
        rows = [("band", lo, hi, int(ok)) for (lo, hi), ok in zip(bs.bands, bs.complete)]
        rows += [("gap", lo, hi, 1) for lo, hi in bs.gaps]
        rows.sort(key=lambda r: r[1])
        _say(write_rows(out / "intervals.csv", ["kind", "k_lo", "k_hi", "complete"], rows, conf))
    k = np.linspace(0.0, cfg.k_max, cfg.curve_points)
    L = lyapunov(k, p.d, p.alpha0)
    cw = math.cos(p.omega)
    _say(write_rows(out / "lyapunov_curve.csv", ["k", "L", "cos_omega"],
                    ((a, b, cw) for a, b in zip(k, L)), conf))
    if cfg.plot:
        _say(plotting.lyapunov_figure(k, L, p.omega, bs, out / "lyapunov.png"))
    print(f"{len(bs.complete_bands())} complete bands, {len(bs.gaps)} gaps, "
          f"{len(bs.criticals)} critical points below k = {cfg.k_max}")
    return 0


def _need_lambdas(cfg, command: str) -> list:
    if not cfg.lambdas:
        raise ValidationError(f"{command} needs at least one --lambda")
    return cfg.lambdas


def cmd_propagate(cfg) -> int:
    p = cfg.params
    N = cfg.N or PROPAGATE_N
    lat = realize_lattice(p, cfg.kind, N + 1)
    out = ensure_dir(cfg.out)
    conf = cfg.resolved()
    results = []
    for i, lam in enumerate(_need_lambdas(cfg, "propagate")):
        pred = predict(lam, p, cfg.kind)
        k = math.sqrt(lam)
        trace = propagate(k, lat, boundary_vector(p.kappa, k, lat), N)
        report = measure(trace, pred, p.omega, cfg.tolerances)
        fit = fit_growth(trace, pred)
        results.append({"lambda": lam, "N": N, "fit": fit.to_dict(), "verification": report.to_dict()})
        path = out / f"trace_{i}.csv"
        _say(guarded(trace.write_csv, path, [f"lambda {lam!r}", *config_header(conf)]))
        if cfg.plot:
            _say(plotting.growth_figure(trace, fit, out / f"trace_{i}.png", p.gamma, f"lambda = {lam:.6g}"))
        status = "pass" if report.passed else "FAIL"
        print(f"lambda={lam:.10g} {pred.growth.value} slope={fit.slope:.6g} "
              f"expected={pred.expected_slope():.6g} {status}")
    if cfg.format == "json":
        _say(write_json(out / "propagate.json", results, conf))
    else:
        rows = [(r["lambda"], r["verification"]["predicted"]["growth"], r["fit"]["abscissa"],
                 r["fit"]["slope"], r["verification"]["aspects"]["slope"]["expected"],
                 r["verification"]["passed"]) for r in results]
        _say(write_rows(out / "propagate.csv",
                        ["lambda", "growth", "abscissa", "slope", "expected", "passed"], rows, conf))
    return 0


def cmd_eigenscan(cfg) -> int:
    reports = scan_critical_points(cfg.params, cfg.kind, cfg.k_max, cfg.N, workers=worker_count())
    out = ensure_dir(cfg.out)
    conf = cfg.resolved()
    if cfg.format == "json":
        _say(write_json(out / "eigenscan.json", [r.to_dict() for r in reports], conf))
    rows = [(r.k, r.lam, r.tag, r.beta, r.l2_admissible, r.kappa_star, r.kappa_stability)
            for r in reports]
    _say(write_rows(out / "eigenscan.csv",
                    ["k", "lambda", "class", "beta", "admissible", "kappa_star", "kappa_stability"],
                    rows, conf))
    if cfg.plot:
        _say(plotting.tail_sums_figure(reports, out / "tail_sums.png"))
    for r in reports:
        ks = "-" if r.kappa_star is None else f"{r.kappa_star:.10f}"
        print(f"k={r.k:.10f} {r.tag} beta={r.beta:.6g} admissible={r.l2_admissible} kappa*={ks}"
              + (f" error: {r.error}" if r.error else ""))
    return 0


def _default_grid(cfg):
    p = cfg.params
    bs = band_structure(p.d, p.alpha0, p.omega, cfg.k_max)
    gaps = [g for g in bs.gaps if g[1] < cfg.k_max]
    if not 0 <= cfg.gap_index < len(gaps):
        raise ValidationError(f"gap index {cfg.gap_index} out of range: {len(gaps)} closed gaps below k_max")
    lo, hi = gaps[cfg.gap_index]
    # middle half of the gap, in lambda
    a, b = lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo)
    return np.linspace(max(a, 1e-6) ** 2, b * b, 20)


def cmd_gapscan(cfg) -> int:
    if cfg.lambda_grid is not None:
        lo, hi, count = cfg.lambda_grid
        grid = np.linspace(lo, hi, int(count))
    else:
        grid = _default_grid(cfg)
    res = gap_scan(cfg.params, cfg.kind, cfg.params.kappa, grid, cfg.section_sizes, workers=worker_count())
    out = ensure_dir(cfg.out)
    conf = cfg.resolved()
    if cfg.format == "json":
        _say(write_json(out / "gapscan.json", res.to_dict(), conf))
    _say(guarded(res.write_csv, out / "gapscan.csv", config_header(conf)))
    if cfg.plot:
        _say(plotting.gapscan_figure(res, out / "gapscan.png"))
    for lam, err in res.dropped:
        print(f"dropped lambda={lam:.10g}: {err}", file=sys.stderr)
    print(f"{len(grid)} energies, {int(res.flagged.sum())} flagged, {len(res.dropped)} dropped "
          "(heuristic: finite sections cannot certify essential spectrum)")
    return 0


def cmd_decompose(cfg) -> int:
    p = cfg.params
    lambdas = cfg.lambdas
    if not lambdas:
        lambdas = [c.k ** 2 for c in find_critical_points(p.d, p.alpha0, p.omega, cfg.k_max)]
    n_range = cfg.n_range or (1, cfg.N or PROPAGATE_N)
    out = ensure_dir(cfg.out)
    conf = cfg.resolved()
    results = []
    for i, lam in enumerate(lambdas):
        k = math.sqrt(lam)
        dec = decompose(k, p, cfg.kind)
        rem = remainder_series(k, p, cfg.kind, n_range)
        results.append({"lambda": lam, "decomposition": dec.to_dict(),
                        "table_beta": table_beta(k, p, cfg.kind), "remainder": rem.to_dict()})
        _say(guarded(rem.write_csv, out / f"remainder_{i}.csv", [f"lambda {lam!r}", *config_header(conf)]))
        if cfg.plot:
            _say(plotting.remainder_figure(rem, out / f"remainder_{i}.png"))
        print(f"lambda={lam:.10g} beta={dec.beta:.6g} beta1={dec.beta1:.6g} "
              f"remainder exponent={rem.decay_exponent:.4g} cauchy={rem.cauchy}")
    if cfg.format == "json":
        _say(write_json(out / "decompose.json", results, conf))
    else:
        rows = [(r["lambda"], r["decomposition"]["beta"], r["decomposition"]["beta1"], r["table_beta"],
                 r["remainder"]["decay_exponent"], r["remainder"]["cauchy"]) for r in results]
        _say(write_rows(out / "decompose.csv",
                        ["lambda", "beta", "beta1", "table_beta", "decay_exponent", "cauchy"], rows, conf))
    return 0


def cmd_selfcheck(cfg) -> int:
    from .selfcheck import run_suite

    checks = run_suite(cfg.params, cfg.kind, cfg.k_max)
    out = ensure_dir(cfg.out)
    conf = cfg.resolved()
    if cfg.format == "json":
        _say(write_json(out / "selfcheck.json", checks, conf))
    else:
        _say(write_rows(out / "selfcheck.csv", ["check", "value", "tolerance", "passed"],
                        ((c["check"], c["value"], c["tolerance"], c["passed"]) for c in checks), conf))
    for c in checks:
        print(f"{'pass' if c['passed'] else 'FAIL'} {c['check']}: {c['value']:.3g} (tol {c['tolerance']:.0e})")
    return 0 if all(c["passed"] for c in checks) else 3


COMMANDS = {
    "bands": cmd_bands, "propagate": cmd_propagate, "eigenscan": cmd_eigenscan,
    "gapscan": cmd_gapscan, "decompose": cmd_decompose, "selfcheck": cmd_selfcheck,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[args.command](cfg)
    except KPError as exc:
        print(f"kpwvn {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
