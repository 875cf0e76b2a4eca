import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sddmanifold.almostgraph import (A_plus, A_rho_half, B_plus, B_rho_quarter, Branch,
                                     RootError, h_eta, h_eta_deriv, invert_h, map_A, map_B,
                                     verify_roundtrip)
from sddmanifold.funcspace import make_segment, norm_c1, resample, uniform_nodes, zero_segment
from sddmanifold.problem import make_manifold_point, residual_Xf

# LIN with c = 2: psi_eta0(-d(0.3)) and h_0.3(0.2), 30-digit arithmetic
DELAYED_PSI0 = -0.0192135233525833622110
H_AT_02 = 0.196157295329483327558


def random_segment(rng, n=64, low=-2.0, high=2.0):
    return make_segment(1.0, uniform_nodes(1.0, n), rng.uniform(low, high, n), rng.uniform(low, high, n))


def test_h_worked_value(lin_exact):
    P = lin_exact
    assert h_eta(P, 0.3, 0.0) == 0.0
    assert h_eta(P, 0.3, 0.2) == pytest.approx(H_AT_02, abs=1e-15)
    # g(tau) a(tau) ell = (-tau)(1) ell, so h = tau(1 + ell)
    assert H_AT_02 == pytest.approx(0.2 * (1 + DELAYED_PSI0), abs=1e-15)


def test_h_identity_away_from_eta0(instance):
    tau = np.concatenate([np.linspace(-5, -1, 100), np.linspace(1, 5, 100)])
    for eta in (-2.0, 0.3, 1.7):
        assert np.array_equal(h_eta(instance, eta, tau), tau)
        assert np.all(h_eta_deriv(instance, eta, tau) == 1.0)


def test_h_identity_at_eta0(instance):
    tau = np.linspace(-2, 2, 101)
    assert np.array_equal(h_eta(instance, instance.eta0, tau), tau)


@given(eta=st.floats(-3, 3), tau=st.floats(-3, 3))
@settings(max_examples=300, deadline=None)
def test_invert_h_round_trip(instance, eta, tau):
    sigma = float(h_eta(instance, eta, tau))
    assert abs(invert_h(instance, eta, sigma) - tau) <= 1e-12


@given(eta=st.floats(-3, 3), tau=st.floats(-3, 3))
@settings(max_examples=200, deadline=None)
def test_h_monotone_floor(instance, eta, tau):
    assert h_eta_deriv(instance, eta, tau) >= instance.monotonicity_margin - 1e-12


def test_invert_h_rejects_nan(lin):
    with pytest.raises(RootError):
        invert_h(lin, 0.5, float("nan"))


def test_zero_segment_is_fixed(instance):
    zero = zero_segment(1.0)
    for mapping in (map_A, map_B):
        out, rep = mapping(instance, zero)
        assert norm_c1(out - zero) == 0.0
        assert rep.branch_used is Branch.RHO_HALF or rep.branch_used is Branch.RHO_QUARTER


def test_branch_selection(lin, rng):
    phi = random_segment(rng)
    vals = phi.values.copy()
    vals[-1] = 0.0
    at_eta0 = make_segment(1.0, phi.nodes, vals, phi.derivs)
    assert map_A(lin, at_eta0)[1].branch_used is Branch.RHO_HALF
    assert map_B(lin, at_eta0)[1].branch_used is Branch.RHO_QUARTER
    vals[-1] = 1.0
    off = make_segment(1.0, phi.nodes, vals, phi.derivs)
    assert map_A(lin, off)[1].branch_used is Branch.PLUS
    assert map_B(lin, off)[1].branch_used is Branch.PLUS


@pytest.mark.parametrize("seed", range(25))
def test_round_trip(instance, seed):
    rng = np.random.default_rng(seed)
    report = verify_roundtrip(instance, random_segment(rng))
    assert report.passed, report.to_json()


def test_head_point_preserved(lin, rng):
    for _ in range(50):
        phi = random_segment(rng)
        for mapping in (map_A, map_B):
            out, _ = mapping(lin, phi)
            assert out.eval(0.0) == phi.eval(0.0)
            assert abs(resample(out, 64).eval(0.0) - phi.eval(0.0)) <= 1e-15


def test_overlap_branches_agree(instance, rng):
    for _ in range(50):
        phi = random_segment(rng, low=-0.2, high=0.2)
        for mapping in (map_A, map_B):
            _, rep = mapping(instance, phi, check_overlap=True)
            assert rep.overlap_checked
            assert rep.overlap_gap <= 1e-15


def test_explicit_branches_match_maps(lin, rng):
    phi = random_segment(rng, low=-0.2, high=0.2)
    assert norm_c1(A_plus(lin, phi) - map_A(lin, phi)[0]) == 0.0
    assert norm_c1(B_plus(lin, phi) - map_B(lin, phi)[0]) == 0.0
    assert norm_c1(A_rho_half(lin, phi) - A_plus(lin, phi)) <= 1e-15
    assert norm_c1(B_rho_quarter(lin, phi) - B_plus(lin, phi)) <= 1e-15


def test_explicit_branches_check_domains(lin, rng):
    big = random_segment(rng, low=1.5, high=2.0)
    with pytest.raises(ValueError):
        A_rho_half(lin, big)
    with pytest.raises(ValueError):
        B_rho_quarter(lin, big)
    vals = big.values.copy()
    vals[-1] = 0.0
    at_eta0 = make_segment(1.0, big.nodes, vals, big.derivs)
    with pytest.raises(ValueError):
        A_plus(lin, at_eta0)
    with pytest.raises(ValueError):
        B_plus(lin, at_eta0)


def test_A_flattens_manifold_points(sin, rng):
    for xi in rng.uniform(-2, 2, 30):
        phi = make_manifold_point(sin, float(xi))
        assert abs(map_A(sin, phi)[0].eval_deriv(0.0)) <= 1e-11


def test_B_lands_on_manifold(lin, rng):
    for _ in range(30):
        chi = random_segment(rng)
        vals = chi.derivs.copy()
        vals[-1] = 0.0
        zeta = make_segment(1.0, chi.nodes, chi.values, vals)
        assert abs(residual_Xf(lin, map_B(lin, zeta)[0])) <= 1e-9


def test_branch_report_serializes(lin, rng):
    _, rep = map_B(lin, random_segment(rng, low=-0.2, high=0.2), check_overlap=True)
    d = rep.to_dict()
    assert d["branch_used"] == "Plus" and d["overlap_checked"] is True
