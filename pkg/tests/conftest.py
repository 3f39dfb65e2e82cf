from __future__ import annotations

import pytest

from kpwvn.lattice import ModelParams


@pytest.fixture
def unperturbed():
    """Period 1.5, strength 4, omega 1: the regime of the Lyapunov-curve figure."""
    return ModelParams(d=1.5, alpha0=4.0, omega=1.0)


@pytest.fixture
def model2_strong():
    """Positional perturbation with |c alpha0| = 2, so beta = 1 at both critical points."""
    return ModelParams(d=1.5, alpha0=4.0, c=0.5, omega=1.0, gamma=1.0)
