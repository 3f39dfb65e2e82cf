from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpwvn.errors import NonMonotoneLattice, OutputError, ValidationError
from kpwvn.lattice import (
    ModelParams,
    PerturbationKind,
    TailSequence,
    convergence_index,
    realize_lattice,
    spacing_report,
)


def test_unperturbed_prefix():
    lat = realize_lattice(ModelParams(d=1.5, alpha0=4), "none", 3)
    np.testing.assert_allclose(lat.x, [1.5, 3.0, 4.5])
    np.testing.assert_allclose(lat.alpha, [4, 4, 4])
    assert lat.x_full[0] == 0.0


def test_amplitude_first_strength():
    # oracle: 4 + 1 * sin(2 * 1 * 1) / 1**1
    expected = 4 + math.sin(2.0)
    lat = realize_lattice(ModelParams(d=1.5, alpha0=4, c=1, omega=1, gamma=1), "amplitude", 5)
    assert lat.alpha[0] == pytest.approx(expected, abs=1e-15)
    assert lat.alpha[0] == pytest.approx(4.9093, abs=1e-4)


def test_positional_collision_rejected():
    # x_2 - x_1 = 0.1 + 10 (sin 4 / 2 - sin 2) < 0
    assert 0.1 + 10 * (math.sin(4) / 2 - math.sin(2)) < 0
    with pytest.raises(NonMonotoneLattice) as info:
        realize_lattice(ModelParams(d=0.1, c=10, omega=1, gamma=1), "positional", 10)
    assert info.value.gap < 0


def test_n_max_must_be_two():
    with pytest.raises(ValidationError):
        realize_lattice(ModelParams(), "none", 1)


@pytest.mark.parametrize("bad", [
    dict(d=0), dict(d=-1), dict(omega=0), dict(omega=math.pi / 2), dict(gamma=0.5),
    dict(gamma=1.01), dict(kappa=math.pi), dict(kappa=-0.1),
])
def test_params_rejected(bad):
    with pytest.raises(ValidationError):
        ModelParams(**bad)


def test_spacing_reports():
    assert spacing_report(realize_lattice(ModelParams(d=1.5), "none", 50)) == (1.5, 1.5)
    lo, hi = spacing_report(realize_lattice(ModelParams(d=1.5, c=0.7), "amplitude", 50))
    assert lo == pytest.approx(1.5, abs=1e-12) and hi == pytest.approx(1.5, abs=1e-12)
    lat = realize_lattice(ModelParams(d=1.5, c=0.3, omega=1, gamma=1), "positional", 1000)
    lo, hi = spacing_report(lat)
    assert 0 < lo < 1.5 < hi < math.inf
    tail = np.diff(lat.x)[500:]
    assert np.max(np.abs(tail - 1.5)) < np.max(np.abs(np.diff(lat.x)[:10] - 1.5))


def test_model1_centers_exact():
    lat = realize_lattice(ModelParams(d=0.7, c=2.0, q=TailSequence.geometric(0.5, 1)), "amplitude", 200)
    assert np.all(np.diff(lat.x_full) == pytest.approx(0.7, abs=1e-13))


@settings(max_examples=40, deadline=None)
@given(c=st.floats(-0.4, 0.4), omega=st.floats(0.05, 1.5), gamma=st.floats(0.51, 1.0))
def test_positional_displacement_bound(c, omega, gamma):
    p = ModelParams(d=1.5, c=c, omega=omega, gamma=gamma)
    lat = realize_lattice(p, "positional", 300)
    n = np.arange(1, 301)
    assert np.all(np.abs(lat.x - n * 1.5) <= abs(c) / n ** gamma + 1e-12)


def test_strengths_converge():
    p = ModelParams(alpha0=4, c=1.0, gamma=0.75, q=TailSequence.power_law(2, 0.5))
    N = convergence_index(p, 1e-2)
    lat = realize_lattice(p, "amplitude", N + 2000)
    assert np.all(np.abs(lat.alpha[N - 1:] - 4) < 1e-2)
    assert abs(1.0 / (N - 1) ** 0.75 + 0.5 / (N - 1) ** 2) >= 1e-2


def test_tail_sequences(tmp_path):
    g = TailSequence.geometric(0.5, 2.0)
    assert g(np.array([1, 2]))[1] == pytest.approx(0.5)
    assert g.l1_norm() == pytest.approx(2.0)
    assert TailSequence.power_law(2, 1).l1_norm() == pytest.approx(math.pi ** 2 / 6)
    with pytest.raises(ValidationError):
        TailSequence.geometric(1.0, 1)
    with pytest.raises(ValidationError):
        TailSequence.power_law(1.0, 1)
    f = tmp_path / "q.txt"
    f.write_text("# header\n0.5\n-0.25\n\n0.125\n")
    q = TailSequence.parse(f"file:{f}")
    np.testing.assert_allclose(q(np.array([1, 2, 3, 4, 10])), [0.5, -0.25, 0.125, 0, 0])
    assert q.l1_norm() == pytest.approx(0.875)
    with pytest.raises(OutputError):
        TailSequence.from_file(tmp_path / "missing.txt")
    assert TailSequence.parse("geometric:0.3,1").r == 0.3
    assert TailSequence.parse("powerlaw:3,2").p == 3
    with pytest.raises(ValidationError):
        TailSequence.parse("wiggly:1,2")


def test_kind_aliases():
    assert PerturbationKind.parse("II") is PerturbationKind.POSITIONAL
    assert PerturbationKind.parse("amplitude") is PerturbationKind.AMPLITUDE
    with pytest.raises(ValidationError):
        PerturbationKind.parse("model3")
