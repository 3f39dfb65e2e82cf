from __future__ import annotations

import math

import numpy as np
import pytest

from kpwvn.bands import band_structure
from kpwvn.eigensearch import kappa_star
from kpwvn.errors import OutOfRange, SingularSetHit, ValidationError
from kpwvn.lattice import ModelParams, realize_lattice
from kpwvn.transfer import boundary_vector, propagate, propagate_backward
from kpwvn.weyl import (
    b_operator_section,
    bm_section,
    boundary_denominator,
    gap_scan,
    interlaces,
    min_abs_eigen,
    section_differences,
    section_spectrum,
    singular_set_scan,
    weyl_section,
)

P0 = ModelParams(d=1.5, alpha0=4.0)


def gap_k(index=1):
    lo, hi = band_structure(1.5, 4.0, 1.0, 8.0).gaps[index]
    return lo, hi


def test_section_entries_unperturbed():
    lat = realize_lattice(P0, "none", 12)
    sec = weyl_section(1.0, 0.0, lat, 10)
    np.testing.assert_allclose(sec.offdiag, -1 / math.sin(1.5), rtol=1e-15)
    assert sec.offdiag[0] == pytest.approx(-1.0025, abs=1e-4)
    np.testing.assert_allclose(sec.diag[1:], 2 / math.tan(1.5), rtol=1e-14)
    dense = sec.dense()
    assert np.array_equal(dense, dense.T)


def test_b1_at_kappa_zero():
    p = ModelParams(d=1.5, alpha0=4, c=0.3)
    lat = realize_lattice(p, "positional", 10)
    k = 1.2
    x = lat.x_full
    s0, c0 = math.sin(k * x[1]), math.cos(k * x[1])
    s1, c1 = math.sin(k * (x[2] - x[1])), math.cos(k * (x[2] - x[1]))
    sec = weyl_section(k, 0.0, lat, 5)
    assert sec.diag[0] == pytest.approx(k * c0 / s0 + k * c1 / s1, rel=1e-14)


def test_null_vector_is_a_solution():
    # a solution satisfying the kappa boundary condition solves rows 1..N-1 of (B - M) xi = 0
    p = ModelParams(d=1.5, alpha0=4, c=0.4, omega=0.9, gamma=0.9)
    for kind in ("none", "amplitude", "positional"):
        lat = realize_lattice(p, kind, 60)
        k, kappa = 1.9, 0.8
        tr = propagate(k, lat, boundary_vector(kappa, k, lat), 50)
        xi = (tr.uhat[:, 1] * np.exp(tr.logmag)).real  # xi_1..xi_50
        d, e = bm_section(k, kappa, lat, 50)
        A = np.diag(d) + np.diag(e, 1) + np.diag(e, -1)
        r = A @ xi
        assert np.max(np.abs(r[:-1])) < 1e-9 * np.max(np.abs(xi))


def test_b_operator():
    np.testing.assert_array_equal(b_operator_section(np.full(5, 4.0), 5), -4.0 * np.ones(5))
    p = ModelParams(alpha0=4, c=1.0)
    lat = realize_lattice(p, "amplitude", 8)
    np.testing.assert_array_equal(b_operator_section(lat.alpha, 8), -lat.alpha)
    with pytest.raises(ValidationError):
        b_operator_section(lat.alpha, 0)
    with pytest.raises(OutOfRange):
        b_operator_section(lat.alpha, 9)


def test_singular_hits():
    lat = realize_lattice(P0, "none", 20)
    with pytest.raises(SingularSetHit):
        weyl_section(math.pi / 1.5, 0.3, lat, 10)
    # boundary denominator zero: tan(k x1) = -k tan(kappa)
    k = 1.0
    kappa = math.atan(-math.tan(1.5) / k) % math.pi
    assert abs(boundary_denominator(k, kappa, lat)) < 1e-12
    with pytest.raises(SingularSetHit):
        weyl_section(k, kappa, lat, 10)


def test_singular_set_scan():
    lat = realize_lattice(P0, "none", 5)
    pts = singular_set_scan((0.0, 7.0), 0.0, lat, 0.01)
    ks = sorted({round(k, 12) for k, _ in pts})
    np.testing.assert_allclose(ks, [m * math.pi / 1.5 for m in (1, 2, 3)], atol=1e-12)
    assert not any(label == "boundary" for _, label in pts)
    p2 = ModelParams(d=1.5, alpha0=4, c=0.3)
    lat2 = realize_lattice(p2, "positional", 40)
    pts2 = singular_set_scan((0.1, 5.0), 1.1, lat2, 0.01)
    x = lat2.x_full
    for k, label in pts2:
        if label == "boundary":
            assert abs(boundary_denominator(k, 1.1, lat2)) < 1e-9
        else:
            n = int(label[2:])
            assert abs(math.sin(k * (x[n + 1] - x[n]))) < 1e-9
    # far sites sit close to the unperturbed roots
    near = [k for k, lab in pts2 if lab != "boundary" and int(lab[2:]) >= 10]
    assert near
    assert all(min(abs(k - m * math.pi / 1.5) for m in (1, 2, 3)) < 0.2 for k in near)
    with pytest.raises(ValidationError):
        singular_set_scan((0, 1), 0.0, lat, 0.0)


def test_interlacing():
    lat = realize_lattice(ModelParams(c=0.3), "positional", 100)
    for k in (1.0, 1.7, 2.5):
        assert interlaces(section_spectrum(k, 0.5, lat, 41), section_spectrum(k, 0.5, lat, 40))


def test_gap_distances_stabilize():
    lo, hi = gap_k()
    ks = np.linspace(lo + 0.25 * (hi - lo), hi - 0.25 * (hi - lo), 6)
    res = gap_scan(P0, "none", 0.7, ks ** 2, (200, 400, 800))
    assert np.all(res.relative_change() < 0.1)
    assert np.all(res.distances > 1e-3)
    assert not res.flagged.any()


def test_band_distances_shrink():
    lo, hi = band_structure(1.5, 4.0, 1.0, 8.0).bands[1]
    ks = np.linspace(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo), 5)
    res = gap_scan(P0, "none", 0.7, ks ** 2, (200, 800, 3200))
    assert np.all(res.distances[:, -1] < res.distances[:, 0])
    assert np.median(res.distances[:, -1]) < 0.1 * np.median(res.distances[:, 0])


def test_boundary_state_flagged():
    # choose kappa so that the decaying gap solution meets the boundary condition
    lo, hi = gap_k()
    k = 0.5 * (lo + hi)
    lat = realize_lattice(P0, "none", 400)
    back = propagate_backward(k, lat, [1.0, 0.0], 300)
    kap = kappa_star(back, k, lat)
    dist, tail = min_abs_eigen(k, kap, lat, 200)
    assert dist < 1e-10 and tail < 1e-10
    res = gap_scan(P0, "none", kap, [k * k, (k + 0.05) ** 2])
    assert res.flagged.tolist() == [True, False]


def test_dropped_and_validation():
    k = math.pi / 1.5
    res = gap_scan(P0, "none", 0.7, [k * k, 2.5 ** 2], (50, 100))
    assert len(res.dropped) == 1 and res.dropped[0][0] == pytest.approx(k * k)
    assert np.isnan(res.distances[0]).all() and not res.flagged[0]
    with pytest.raises(ValidationError):
        gap_scan(P0, "none", 0.7, [6.0], (400, 200))


def test_compact_perturbation_differences():
    p = ModelParams(d=1.5, alpha0=4, c=0.3, omega=1.0, gamma=1.0)
    k = 2.5
    for kind in ("amplitude", "positional"):
        diffs = [section_differences(k, 0.7, p, kind, N) for N in (200, 800, 3200)]
        diag = [d["diag"] for d in diffs]
        assert diag[0] > diag[1] > diag[2]
    lim = [section_differences(k, 0.7, p, "positional", N)["offdiag_limit"] for N in (200, 800, 3200)]
    assert lim[0] > lim[1] > lim[2]
    assert section_differences(k, 0.7, p, "amplitude", 400)["offdiag"] == 0.0


def test_gapscan_csv(tmp_path):
    res = gap_scan(P0, "none", 0.7, [6.0, 6.5], (20, 40))
    res.write_csv(tmp_path / "g.csv", ["x"])
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[1] == "lambda,N,min_abs_eigenvalue,flagged" and len(lines) == 6
