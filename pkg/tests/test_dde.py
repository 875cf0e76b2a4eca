import numpy as np
import pytest

from sddmanifold.almostgraph import map_A
from sddmanifold.dde import integrate, sup_difference, trajectory_residuals
from sddmanifold.funcspace import from_function, norm_c1, zero_segment
from sddmanifold.problem import constrained_point, make_manifold_point, random_shape, residual_Xf


def test_equilibrium_stays_put(lin):
    traj = integrate(lin, zero_segment(1.0), 2.0, 1e-2)
    assert np.all(traj.xs == 0.0)
    assert np.all(traj.ms == 0.0)


def test_constant_history_away_from_zero(sin):
    # x = 1 on [-1, 0] is off X_f: x'(0-) = 0 but g(1) != 0
    phi = from_function(1.0, lambda t: 1.0 + 0 * t, lambda t: 0 * t)
    with pytest.warns(UserWarning, match="off the solution manifold"):
        traj = integrate(sin, phi, 0.5, 1e-3)
    assert traj.residual_at(sin, 0.0) == pytest.approx(-0.5 * np.sin(1.0), abs=1e-15)
    assert abs(traj.residual_at(sin, 0.25)) <= 1e-6


def test_off_manifold_start_is_flagged(lin):
    good = make_manifold_point(lin, 0.8)
    bumped = constrained_point(lin, 0.8, 0.8, float(lin.g(0.8)) + 0.1)
    assert residual_Xf(lin, good) == 0.0
    with pytest.warns(UserWarning):
        traj = integrate(lin, bumped, 1.0, 1e-3)
    assert traj.residual_at(lin, 0.0) == pytest.approx(0.1, abs=1e-14)
    later = trajectory_residuals(lin, traj, 50)[1:]
    assert np.max(np.abs(later)) <= 1e-5


@pytest.mark.parametrize("xi", [-1.5, -0.2, 0.0, 0.6, 1.9])
def test_residual_along_trajectory(instance, xi):
    rng = np.random.default_rng(7)
    phi = make_manifold_point(instance, xi, random_shape(rng))
    traj = integrate(instance, phi, 3.0, 1e-3)
    assert np.max(np.abs(trajectory_residuals(instance, traj, 400))) <= 1e-5


def test_step_halving(lin):
    phi = make_manifold_point(lin, 1.2)
    coarse = integrate(lin, phi, 1.0, 1e-3)
    fine = integrate(lin, phi, 1.0, 5e-4)
    assert sup_difference(coarse, fine, 1.0) <= 1e-6


def test_segments_match_trajectory(lin):
    phi = make_manifold_point(lin, -0.9, random_shape(np.random.default_rng(3)))
    traj = integrate(lin, phi, 2.5, 1e-3)
    for t in (0.0, 0.3, 1.0, 1.0005, 2.5):
        seg = traj.segment(t)
        s = np.linspace(-1.0, 0.0, 41)
        expected = [traj.eval(t + v) for v in s]
        assert np.max(np.abs(seg.eval(s) - expected)) <= 1e-12
        assert abs(residual_Xf(lin, seg) - traj.residual_at(lin, t)) <= 1e-12
        assert abs(map_A(lin, seg)[0].eval_deriv(0.0)) <= 1e-5


def test_history_is_baked_initial_segment(lin):
    phi = make_manifold_point(lin, 0.5)
    traj = integrate(lin, phi, 0.1, 1e-2)
    assert norm_c1(traj.segment(0.0) - phi.baked()) == 0.0
    assert np.array_equal(traj.initial.values, phi.eval(phi.nodes))
    assert traj.eval(-0.4) == phi.baked().eval(-0.4)
    assert residual_Xf(lin, traj.initial) == 0.0


def test_last_step_lands_on_t_end(lin):
    traj = integrate(lin, zero_segment(1.0), 0.1003, 1e-2)
    assert traj.t_end == 0.1003
    with pytest.raises(ValueError):
        traj.eval(0.2)


@pytest.mark.parametrize("t_end,step", [(1.0, 0.0), (1.0, -1e-3), (0.0, 1e-3), (-1.0, 1e-3)])
def test_bad_arguments(lin, t_end, step):
    with pytest.raises(ValueError):
        integrate(lin, zero_segment(1.0), t_end, step)
