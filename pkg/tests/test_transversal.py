import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sddmanifold.funcspace import DomainError, make_segment, norm_c1, uniform_nodes
from sddmanifold.transversal import (bump_a, bump_a_deriv, project_P_eta, psi0_deriv, psi0_eval,
                                     psi_deriv, psi_eval, psi_segment, transversal_term)

# 30-digit values for LIN with c = 2: kappa = 48/e, t = -d(0.3)/2
KAPPA_EXACT = 17.6582131762292314366
PSI_AT_HALF_DELAY = -0.0199150552849563430123

etas = st.floats(-3, 3).filter(lambda e: abs(e) > 1e-6)


def test_kappa(lin_exact):
    assert lin_exact.kappa == pytest.approx(KAPPA_EXACT, rel=1e-14)


def test_psi0_peak(lin_exact):
    P = lin_exact
    t_peak = -1 / P.kappa
    assert psi0_eval(P, t_peak) == pytest.approx(-1 / 48, rel=1e-13)
    assert psi0_deriv(P, t_peak) == pytest.approx(0.0, abs=1e-15)
    t = np.linspace(-1, 0, 100_001)
    assert np.max(np.abs(psi0_eval(P, t))) <= 1 / 48 + 1e-15


def test_psi_eta_worked_value(lin_exact):
    t = -lin_exact.delay(0.3) / 2
    assert psi_eval(lin_exact, 0.3, t) == pytest.approx(PSI_AT_HALF_DELAY, abs=1e-15)


@given(eta=etas)
@settings(max_examples=200, deadline=None)
def test_psi_eta_defining_properties(lin, eta):
    z = -lin.delay(eta)
    assert psi_eval(lin, eta, z) == 0.0
    assert psi_eval(lin, eta, 0.0) == 0.0
    assert psi_deriv(lin, eta, 0.0) == 1.0
    t = np.linspace(-1, z, 50)
    assert np.all(psi_eval(lin, eta, t) == 0.0)
    assert np.all(psi_deriv(lin, eta, t) == 0.0)


@given(eta=etas)
@settings(max_examples=100, deadline=None)
def test_psi_bounded_by_c_star(instance, eta):
    t = np.linspace(-1, 0, 20_001)
    assert np.max(np.abs(psi_eval(instance, eta, t))) <= instance.c_star + 1e-12


def test_psi_eta_is_c1_at_cutoff(lin):
    z = -lin.delay(0.7)
    h = 1e-7
    left = (psi_eval(lin, 0.7, z) - psi_eval(lin, 0.7, z - h)) / h
    right = (psi_eval(lin, 0.7, z + h) - psi_eval(lin, 0.7, z)) / h
    assert abs(left) < 1e-12 and abs(right) < 1e-5


def test_psi_eta_undefined_at_eta0(lin):
    with pytest.raises(ValueError):
        psi_eval(lin, 0.0, -0.5)
    with pytest.raises(ValueError):
        psi_eval(lin, 1e-15, -0.5)
    with pytest.raises(DomainError):
        psi0_eval(lin, 0.1)


def test_transversal_term_falls_back_to_template(lin):
    assert transversal_term(lin, None).z is None
    assert transversal_term(lin, 0.0).z is None
    assert transversal_term(lin, 1e-200).z is None
    assert transversal_term(lin, 0.5).z == -lin.delay(0.5)


@pytest.mark.parametrize("xi,expected", [(0.0, 1.0), (0.5, 1.0), (-0.5, 1.0), (0.75, 0.5),
                                         (-0.75, 0.5), (1.0, 0.0), (-3.0, 0.0)])
def test_bump_values(lin, xi, expected):
    assert bump_a(lin, xi) == pytest.approx(expected, abs=1e-15)


def test_bump_slope_bound(lin):
    xi = np.linspace(-2, 2, 40_001)
    da = bump_a_deriv(lin, xi)
    assert np.max(np.abs(da)) <= 3.0 / lin.rho + 1e-12
    assert bump_a_deriv(lin, 0.75) == pytest.approx(-3.0, abs=1e-12)


def test_projection_is_idempotent(lin, rng):
    for _ in range(20):
        phi = make_segment(1.0, uniform_nodes(1.0, 64), rng.uniform(-2, 2, 64), rng.uniform(-2, 2, 64))
        eta = phi.eval(0.0)
        p1 = project_P_eta(lin, eta, phi)
        assert p1.eval_deriv(0.0) == 0.0 or abs(p1.eval_deriv(0.0)) <= 1e-15
        assert p1.eval(0.0) == eta
        assert norm_c1(project_P_eta(lin, eta, p1) - p1) <= 1e-12


def test_psi_segment_tail_only(lin):
    seg = psi_segment(lin, 0.4)
    assert seg.eval_deriv(0.0) == 1.0
    assert np.all(seg.values == 0.0)
    assert math.isclose(seg.eval(-0.01), float(psi_eval(lin, 0.4, -0.01)), rel_tol=0, abs_tol=0)
