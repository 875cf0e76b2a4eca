import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sddmanifold.funcspace import (DomainError, SegmentError, TailTerm, axpy, from_function,
                                   make_segment, norm_c, norm_c1, read_segment_csv, resample,
                                   uniform_nodes, write_segment_csv, zero_segment)
from sddmanifold.templates import psi_template, psi_template_deriv

finite = st.floats(-5, 5, allow_nan=False)


@given(st.tuples(finite, finite, finite, finite))
@settings(max_examples=50, deadline=None)
def test_hermite_reproduces_cubics(coeffs):
    a, b, c, d = coeffs
    p = lambda t: a + b * t + c * t**2 + d * t**3
    dp = lambda t: b + 2 * c * t + 3 * d * t**2
    seg = from_function(1.0, p, dp, n=7)
    t = np.linspace(-1.0, 0.0, 1000)
    scale = 1 + abs(a) + abs(b) + abs(c) + abs(d)
    assert np.max(np.abs(seg.eval(t) - p(t))) <= 1e-12 * scale
    assert np.max(np.abs(seg.eval_deriv(t) - dp(t))) <= 1e-12 * scale


def test_square_on_two_nodes():
    seg = make_segment(1.0, [-1.0, 0.0], [1.0, 0.0], [-2.0, 0.0])
    assert seg.eval(-0.5) == pytest.approx(0.25, abs=1e-15)
    assert seg.eval_deriv(-0.5) == pytest.approx(-1.0, abs=1e-15)
    assert norm_c(seg) == pytest.approx(1.0, abs=1e-15)
    assert norm_c1(seg) == pytest.approx(3.0, abs=1e-15)


def test_linear_midpoint():
    seg = make_segment(2.0, [-2.0, 0.0], [0.0, 1.0], [0.5, 0.5])
    assert seg.eval(-1.0) == 0.5
    assert seg(-1.0) == 0.5


def test_scalar_and_vector_paths_agree(rng):
    seg = make_segment(1.0, uniform_nodes(1.0, 33), rng.uniform(-2, 2, 33), rng.uniform(-2, 2, 33))
    t = rng.uniform(-1.0, 0.0, 200)
    assert np.allclose([seg.eval(float(s)) for s in t], seg.eval(t), rtol=0, atol=1e-14)
    assert np.allclose([seg.eval_deriv(float(s)) for s in t], seg.eval_deriv(t), rtol=0, atol=1e-13)


def test_linear_structure(rng):
    nodes = uniform_nodes(1.0, 20)
    x = make_segment(1.0, nodes, rng.normal(size=20), rng.normal(size=20))
    y = make_segment(1.0, nodes, rng.normal(size=20), rng.normal(size=20))
    t = np.linspace(-1, 0, 301)
    assert np.allclose((2.0 * x + y).eval(t), 2.0 * x.eval(t) + y.eval(t), atol=1e-14)
    assert norm_c1(x - x) == 0.0
    assert norm_c1(-x + x) == 0.0


def test_grid_mismatch_rejected():
    with pytest.raises(SegmentError):
        zero_segment(1.0, 10) + zero_segment(1.0, 11)


def test_tail_terms_merge_and_cancel():
    kappa = 17.0
    term = TailTerm(1.0, kappa)
    phi = axpy(axpy(zero_segment(1.0, 10), 0.5, term), 0.25, term)
    assert len(phi.tail) == 1
    assert phi.eval(-0.1) == pytest.approx(0.75 * psi_template(-0.1, kappa), rel=1e-15)
    gone = axpy(phi, -0.75, term)
    assert gone.tail == ()
    assert norm_c1(gone) == 0.0


def test_tail_is_exact_between_nodes():
    kappa, z = 17.0, -0.3
    phi = axpy(zero_segment(1.0, 3), 2.0, TailTerm(1.0, kappa, z, 0.5))
    t = np.linspace(-1, 0, 1001)
    assert np.array_equal(phi.eval(t), 2.0 * psi_template(t, kappa, z))
    assert np.array_equal(phi.eval_deriv(t), 2.0 * psi_template_deriv(t, kappa, z))


def test_resampled_template_error():
    kappa = 1 / (math.e / 48)
    phi = axpy(zero_segment(1.0, 2), 1.0, TailTerm(1.0, kappa))
    baked = resample(phi, 512)
    assert baked.tail == ()
    t = np.linspace(-1.0, 0.0, 100_000)
    assert np.max(np.abs(baked.eval(t) - psi_template(t, kappa))) <= 1e-6


def test_tail_norm_finds_interior_peak():
    kappa = 48 / math.e
    phi = axpy(zero_segment(1.0, 2), 1.0, TailTerm(1.0, kappa))
    # sup|psi| = 1/(kappa e), sup|psi'| = 1 at t = 0
    assert norm_c(phi) == pytest.approx(1 / (kappa * math.e), rel=1e-9)
    assert norm_c1(phi) == pytest.approx(1 + 1 / (kappa * math.e), rel=1e-9)


def test_csv_round_trip(tmp_path, rng):
    seg = make_segment(1.5, uniform_nodes(1.5, 17), rng.normal(size=17), rng.normal(size=17))
    path = tmp_path / "seg.csv"
    write_segment_csv(path, seg)
    back = read_segment_csv(path)
    assert back.r == 1.5
    assert np.array_equal(back.values, seg.values)
    assert np.array_equal(back.derivs, seg.derivs)
    assert path.read_text().splitlines()[0] == "t,x,dx"


def test_csv_bakes_tail(tmp_path):
    phi = axpy(zero_segment(1.0, 50), 1.0, TailTerm(1.0, 17.0))
    path = tmp_path / "tail.csv"
    write_segment_csv(path, phi, n_nodes=80)
    back = read_segment_csv(path)
    assert len(back.nodes) == 80
    assert back.eval(-0.5) == pytest.approx(phi.eval(-0.5), abs=1e-6)


@pytest.mark.parametrize("text", ["x,t,dx\n-1,0,0\n0,0,0\n", "t,x,dx\n-1,0\n0,0\n",
                                  "t,x,dx\n-1,a,0\n0,0,0\n", "t,x,dx\n0,0,0\n"])
def test_csv_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(SegmentError):
        read_segment_csv(path)


def test_domain_and_clamp():
    seg = zero_segment(1.0, 5)
    assert seg.eval(1e-13) == 0.0
    assert seg.eval(-1.0 - 1e-13) == 0.0
    with pytest.raises(DomainError):
        seg.eval(1e-9)
    with pytest.raises(DomainError):
        seg.eval(np.array([-0.5, -1.1]))
    with pytest.raises(DomainError):
        seg.eval(float("nan"))


@pytest.mark.parametrize("args", [
    (0.0, [-1, 0], [0, 0], [0, 0]),
    (1.0, [-1], [0], [0]),
    (1.0, [-1, -0.5, -0.5, 0], [0] * 4, [0] * 4),
    (1.0, [-0.9, 0], [0, 0], [0, 0]),
    (1.0, [-1, 0], [0, float("inf")], [0, 0]),
    (1.0, [-1, 0], [0, 0, 0], [0, 0]),
])
def test_make_segment_validation(args):
    with pytest.raises(SegmentError):
        make_segment(*args)
