"""Acceptance criteria 1-11, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v`` or directly as a script
(``python tests/test_acceptance.py``) for the bare summary.
"""

from __future__ import annotations

import math
import time

import numpy as np
import pytest

from kpwvn.asymptotics import fit_growth, fit_growth_on, measure, predict, predict_k
from kpwvn.bands import EnergyKind, Tag, band_structure, classify_k, lyapunov
from kpwvn.decomposition import decompose, remainder_series, table_beta
from kpwvn.eigensearch import dominance_scan, scan_critical_points, subordinate_at_k, subordinate_fit
from kpwvn.lattice import ModelParams, realize_lattice
from kpwvn.transfer import (
    boundary_vector,
    determinant_telescoping,
    propagate,
    propagate_backward,
    wronskian_drift,
)
from kpwvn.weyl import gap_scan

D, A0, OM = 1.5, 4.0, 1.0
KMAX = 8.0
MODELS = ("amplitude", "positional")
MARGIN = 0.05  # distance in L from critical levels for the conservation samples


def _structure(alpha0=A0):
    return band_structure(D, alpha0, OM, KMAX)


def _closed_gaps(bs):
    return [g for g in bs.gaps if 0 < g[0] and g[1] < KMAX]


def _sign(cp) -> int:
    return 1 if cp.tag is Tag.PLUS_COS else -1


def _run(params, kind, k, N, kappa=0.0):
    lat = realize_lattice(params, kind, N + 1)
    return propagate(k, lat, boundary_vector(kappa, k, lat), N)


# -- criteria: each returns (passed, detail) ------------------------------------------

def criterion_1():
    bs = _structure()
    edge_err = max(abs(abs(lyapunov(e.k, D, A0)) - 1) for e in bs.edges)
    cw = math.cos(OM)
    crit_err = max(abs(abs(lyapunov(c.k, D, A0)) - cw) for c in bs.criticals)
    per_band = [len(bs.criticals_in(b)) for b in bs.complete_bands()]
    n_complete = len(per_band)
    ok = n_complete >= 4 and edge_err < 1e-10 and crit_err < 1e-10 and all(m == 2 for m in per_band)
    return ok, (f"{n_complete} complete bands below k={KMAX} (need >= 4), "
                f"edge err {edge_err:.1e}, critical err {crit_err:.1e}, criticals per band {per_band}")


def criterion_2():
    bs = _structure(alpha0=0.0)
    ref = sorted(x / D for m in range(8) for x in (OM + math.pi * m, -OM + math.pi * m) if 0 < x / D < KMAX)
    got = [c.k for c in bs.criticals]
    err = max(abs(a - b) for a, b in zip(got, ref)) if len(got) == len(ref) else math.inf
    return not bs.gaps and err < 1e-10, f"gaps {bs.gaps}, {len(got)} criticals, max err {err:.1e}"


def criterion_3(samples=100, steps=10_000, seed=20240611):
    rng = np.random.default_rng(seed)
    drift = tele = 0.0
    for _ in range(samples):
        kind = MODELS[rng.integers(2)]
        p = ModelParams(d=rng.uniform(0.8, 2.5), alpha0=rng.uniform(-6, 6), c=rng.uniform(0, 0.4),
                        omega=rng.uniform(0.2, 1.4), gamma=rng.uniform(0.55, 1.0))
        bs = band_structure(p.d, p.alpha0, p.omega, 6.0)
        bands = [b for b in bs.bands if b[1] - b[0] > 1e-3]
        while True:
            lo, hi = bands[rng.integers(len(bands))]
            k = rng.uniform(lo + 0.1 * (hi - lo), hi - 0.1 * (hi - lo))
            L = abs(lyapunov(k, p.d, p.alpha0))
            # near a critical level both solutions grow together and their Wronskian
            # is lost to cancellation, so keep a margin from +-cos(omega) and the edges
            if k > 0.05 and L < 1 - MARGIN and abs(L - math.cos(p.omega)) > MARGIN \
                    and abs(math.sin(k * p.d)) > 1e-3:
                break
        lat = realize_lattice(p, kind, steps + 1)
        a = propagate(k, lat, boundary_vector(0.0, k, lat), steps)
        b = propagate(k, lat, boundary_vector(math.pi / 2, k, lat), steps)
        drift = max(drift, wronskian_drift(a, b, lat))
        tele = max(tele, determinant_telescoping(k, lat, steps - 1))
    return drift < 1e-8 and tele < 1e-10, f"{samples} samples: Wronskian drift {drift:.1e}, telescoping {tele:.1e}"


def gap_energies(count=10):
    gaps = _closed_gaps(_structure())
    ts = np.linspace(0.2, 0.8, -(-count // len(gaps)))
    ks = [lo + t * (hi - lo) for lo, hi in gaps for t in ts]
    return ks[:count]


def criterion_4():
    worst = 0.0
    for kind in MODELS:
        p = ModelParams(d=D, alpha0=A0, c=0.3, omega=OM, gamma=1.0)
        for k in gap_energies():
            pred = predict(k * k, p, kind)
            fit = fit_growth(_run(p, kind, k, 1000), pred)
            worst = max(worst, abs(fit.slope / pred.rate - 1))
    return worst < 0.01, f"max relative slope error {worst:.2e} (20 fits)"


def band_energies(count=10):
    bs = _structure()
    out = []
    for lo, hi in bs.complete_bands():
        for t in np.linspace(0.1, 0.9, 7):
            k = lo + t * (hi - lo)
            if classify_k(k, D, A0, OM, 1e-2).kind is EnergyKind.BAND_INTERIOR:
                out.append(k)
    idx = np.linspace(0, len(out) - 1, count).round().astype(int)
    return [out[i] for i in idx]


def criterion_5():
    worst = 0.0
    for kind in MODELS:
        p = ModelParams(d=D, alpha0=A0, c=0.3, omega=OM, gamma=1.0)
        for k in band_energies():
            fit = fit_growth(_run(p, kind, k, 100_000), predict(k * k, p, kind))
            assert fit.abscissa == "log n"
            worst = max(worst, abs(fit.slope))
    return worst < 1e-3, f"max |slope| on log n {worst:.2e} (20 fits)"


def criterion_6(N=1_000_000):
    p = ModelParams(d=D, alpha0=A0, c=0.5, omega=OM, gamma=1.0)
    bs = _structure()
    parts, ok = [], True
    for cp in bs.criticals_in(bs.complete_bands()[0]):
        pred = predict_k(cp.k, p, "positional")
        dom = fit_growth(_run(p, "positional", cp.k, N), pred).slope
        sub = subordinate_fit(subordinate_at_k(cp.k, p, "positional", N).trace, pred).slope
        ok &= abs(dom / pred.beta - 1) < 0.05 and abs(sub / -pred.beta - 1) < 0.05
        parts.append(f"k={cp.k:.4f}: dominant {dom:+.4f}, subordinate {sub:+.4f} (beta {pred.beta:g})")
    return ok, "; ".join(parts)


def criterion_7(N=100_000):
    bs = _structure()
    worst, ok = 0.0, True
    for kind, c in (("positional", 0.5), ("amplitude", 3.0)):
        p = ModelParams(d=D, alpha0=A0, c=c, omega=OM, gamma=0.75)
        for cp in bs.criticals_in(bs.complete_bands()[0]):
            pred = predict_k(cp.k, p, kind)
            fit = fit_growth(_run(p, kind, cp.k, N), pred)
            ok &= fit.abscissa == "n^(1-gamma)/(1-gamma)"
            worst = max(worst, abs(fit.slope / table_beta(cp.k, p, kind) - 1))
    return ok and worst < 0.05, f"max relative error against closed-form beta {worst:.2e}"


def criterion_8(N=100_000):
    p = ModelParams(d=D, alpha0=A0, c=0.5, omega=OM, gamma=1.0)
    bs = _structure()
    parts, ok = [], True
    for cp in bs.criticals_in(bs.complete_bands()[0]):
        rep = measure(_run(p, "positional", cp.k, N), predict_k(cp.k, p, "positional"), OM)
        spacing = rep.aspects["spacing"].measured
        ac = rep.aspects["parity"].measured
        rel = abs(spacing / (math.pi / OM) - 1)
        ok &= rel < 0.02 and ((ac < 0) == (cp.tag is Tag.MINUS_COS))
        parts.append(f"{cp.tag.value}: spacing err {rel:.1e}, lag-1 autocorr {ac:+.3f}")
    return ok, "; ".join(parts)


def criterion_9(N=100_000):
    p = ModelParams(d=D, alpha0=A0, c=0.5, omega=OM, gamma=1.0)
    reports = scan_critical_points(p, "positional", KMAX, N)
    ok = bool(reports)
    worst_stab = worst_res = worst_dom = 0.0
    for r in reports:
        if r.error or r.kappa_star is None:
            ok = False
            continue
        ok &= r.l2_admissible and 0 <= r.kappa_star < math.pi
        worst_stab = max(worst_stab, r.kappa_stability)
        worst_res = max(worst_res, r.residuals["recurrence"])
        slopes = [s for _, s in dominance_scan(r.k, p, "positional", r.kappa_star, count=100)]
        worst_dom = max(worst_dom, max(abs(s / r.beta - 1) for s in slopes))
    ok &= worst_stab < 1e-4 and worst_res < 1e-10 and worst_dom < 0.05
    return ok, (f"{len(reports)} critical points, kappa* stability {worst_stab:.1e}, "
                f"recurrence {worst_res:.1e}, worst dominant slope error {worst_dom:.1e}")


def criterion_10():
    bs = _structure()
    beta_err = id1 = id2 = 0.0
    for kind in MODELS:
        p = ModelParams(d=D, alpha0=A0, c=0.5, omega=OM, gamma=1.0)
        for cp in bs.criticals:
            dec = decompose(cp.k, p, kind)
            _, beta, _ = dec.relevant(_sign(cp))
            beta_err = max(beta_err, abs(beta - table_beta(cp.k, p, kind)))
    p = ModelParams(d=D, alpha0=A0, c=0.5, omega=OM, gamma=1.0)
    for cp in bs.criticals:
        d1 = decompose(cp.k, p, "amplitude")
        id1 = max(id1, abs(d1.z + d1.z1))
    # Model II: the quantity used at each sign is the same number at every critical point
    zs = [decompose(cp.k, p, "positional").relevant(_sign(cp))[0] for cp in bs.criticals]
    id2 = max(abs(z - zs[0]) for z in zs)
    rem = [remainder_series(1.7, p, kind, (1, 100_000)) for kind in MODELS]
    exps = [r.decay_exponent for r in rem]
    ok = beta_err < 1e-12 and id1 < 1e-12 and id2 < 1e-12 and all(r.cauchy for r in rem) \
        and all(e > 1 for e in exps)
    return ok, (f"beta err {beta_err:.1e}, |z+z1| {id1:.1e} (I), z spread {id2:.1e} (II), "
                f"remainder exponents {exps[0]:.3g}/{exps[1]:.3g}")


def criterion_11():
    bs = _structure()
    p = ModelParams(d=D, alpha0=A0, omega=OM)
    lo, hi = _closed_gaps(bs)[0]
    sizes = (200, 400, 800)
    ks = np.linspace(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo), 20)
    res = gap_scan(p, "none", 0.7, ks ** 2, sizes)
    change = res.relative_change()
    keep = ~res.flagged
    gap_ok = bool(np.all(change[keep] < 0.1) and np.all(res.distances[keep].min(axis=1) > 1e-3))
    blo, bhi = bs.complete_bands()[0]
    ctrl = np.linspace(blo + 0.2 * (bhi - blo), bhi - 0.2 * (bhi - blo), 10)
    band = gap_scan(p, "none", 0.7, ctrl ** 2, sizes)
    # single points jitter with the eigenvalue spacing; the mean over controls is what shrinks
    means = band.distances.mean(axis=0)
    shrink = bool(np.all(np.diff(means) < 0))
    trend = " -> ".join(f"{m:.1e}" for m in means)
    return gap_ok and shrink and not res.dropped, (
        f"gap: max rel change {np.nanmax(change):.1e}, min distance {np.nanmin(res.distances):.2e}, "
        f"{int(res.flagged.sum())} flagged; band control mean distance {trend} (heuristic evidence only)")


CRITERIA = {
    1: ("band structure", criterion_1, 1.0),
    2: ("free-case degeneration", criterion_2, 1.0),
    3: ("conservation suite", criterion_3, 30.0),
    4: ("gap asymptotics", criterion_4, 5.0),
    5: ("band boundedness", criterion_5, 60.0),
    6: ("critical growth, gamma=1", criterion_6, 180.0),
    7: ("critical growth, gamma=0.75", criterion_7, 60.0),
    8: ("phase and parity", criterion_8, 30.0),
    9: ("embedded eigenvalue pipeline", criterion_9, 300.0),
    10: ("decomposition cross-check", criterion_10, 10.0),
    11: ("gap diagnostic", criterion_11, 120.0),
}


def evaluate(number: int):
    name, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - t0
    in_budget = elapsed < budget
    line = (f"criterion {number:2d} {'PASS' if passed and in_budget else 'FAIL'} [{name}] "
            f"{elapsed:.2f}s/{budget:g}s: {detail}")
    return passed, in_budget, line


@pytest.fixture(scope="module", autouse=True)
def _warm_kernels():
    # compile the propagation kernels once so criterion timings measure the work
    _run(ModelParams(c=0.1), "positional", 1.6, 100)
    lat = realize_lattice(ModelParams(c=0.1), "positional", 101)
    propagate_backward(1.6, lat, [1.0, 0.0], 100)


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    passed, in_budget, line = evaluate(number)
    with capsys.disabled():
        print("\n" + line)
    assert passed, line
    assert in_budget, line


if __name__ == "__main__":
    for number in sorted(CRITERIA):
        print(evaluate(number)[2], flush=True)
