"""Seeded invariant suites: constants, psi, h, round trip, manifold, dde.

Randomness comes from numpy's PCG64 generator.  Each suite seeds its own
stream from ``(seed, suite index)`` so a suite's results do not depend on
which other suites run.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

import numpy as np
from scipy.optimize import brentq

from .almostgraph import (h_eta, h_eta_deriv, invert_h, map_A, map_B, tol_root)
from .dde import integrate, sup_difference
from .funcspace import Segment, make_segment, norm_c1, resample, uniform_nodes
from .problem import (Problem, constrained_point, df_apply, f_eval, make_manifold_point,
                      random_shape, residual_Xf, tangent_residual)
from .report import CheckResult, VerifyReport
from .templates import psi_template, psi_template_deriv
from .transversal import bump_a_deriv, project_P_eta, psi_segment, transversal_term

SUITES = ("constants", "psi", "h", "roundtrip", "manifold", "dde")
FD_STEP = 1e-5
FD_FLOOR = 1e-10


@dataclass(frozen=True)
class Counts:
    roundtrip: int = 1000
    overlap: int = 200
    eta0_inputs: int = 20
    manifold: int = 500
    fixed_points: int = 50
    transversal: int = 200
    transversal_eta0: int = 20
    fd: int = 100
    point_residual: int = 100
    projections: int = 100
    psi_etas: int = 100
    psi_points: int = 100_000
    h_etas: int = 100
    h_taus: int = 1000
    invert: int = 10_000
    dde_points: int = 10
    dde_t_end: float = 3.0
    dde_step: float = 1e-3
    dde_halving_t: float = 1.0
    dde_times: int = 2000

    def scaled(self, factor: float) -> "Counts":
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = max(1, int(round(v * factor))) if isinstance(v, int) else v
        out["transversal_eta0"] = min(out["transversal_eta0"], out["transversal"])
        return replace(self, **out)


def suite_rng(seed: int, suite: str) -> np.random.Generator:
    return np.random.default_rng([int(seed), SUITES.index(suite)])


# -- random corpora -----------------------------------------------------------

def random_segment(rng, r: float, n: int = 64, low: float = -2.0, high: float = 2.0) -> Segment:
    """Spline with uniform random node values and slopes in [low, high]."""
    return make_segment(r, uniform_nodes(r, n), rng.uniform(low, high, n), rng.uniform(low, high, n))


def smooth_random_segment(rng, r: float, n: int = 200, modes: int = 3,
                          amplitude: float = 1.0, offset: float = 2.0) -> Segment:
    """Random trigonometric polynomial sampled (with exact slopes) into a spline."""
    nodes = uniform_nodes(r, n)
    c0 = rng.uniform(-offset, offset)
    coeffs = rng.uniform(-amplitude, amplitude, size=(modes, 2))
    x = np.full(n, c0)
    dx = np.zeros(n)
    for k, (a, b) in enumerate(coeffs, start=1):
        w = k * math.pi / r
        x += a * np.cos(w * nodes) + b * np.sin(w * nodes)
        dx += w * (-a * np.sin(w * nodes) + b * np.cos(w * nodes))
    return make_segment(r, nodes, x, dx)


def zeros_of_g(P: Problem, half_width: float = 2.0, n: int = 4001) -> list[float]:
    xs = P.eta0 + half_width * np.linspace(-1.0, 1.0, n)
    gs = np.asarray(P.g(xs), dtype=float)
    zeros = [float(x) for x, v in zip(xs, gs) if v == 0.0]
    for i in np.nonzero(gs[:-1] * gs[1:] < 0)[0]:
        zeros.append(float(brentq(P.g, xs[i], xs[i + 1], xtol=1e-15)))
    return sorted(set(zeros))


# -- suites ---------------------------------------------------------------------

def suite_constants(P: Problem, rng, counts: Counts) -> VerifyReport:
    cc = P.c * P.c_star
    margin = P.monotonicity_margin
    closed = 1.0 - P.c / (4.0 * (P.c + 1.0))
    return VerifyReport([
        CheckResult("c*c_star < rho/4", 1, cc, P.rho / 4.0, passed=cc < P.rho / 4.0),
        CheckResult("monotonicity margin >= 3/4", 1, 0.75 - margin, 0.0,
                    info={"margin": margin}),
        CheckResult("margin closed form", 1, abs(margin - closed), 1e-15),
        CheckResult("d(eta0) = 0", 1, abs(P.delay(P.eta0)), 0.0),
        CheckResult("|d'(eta0)|", 1, abs(float(P.d_prime(P.eta0))), 1e-8),
        CheckResult("kappa*e*c_star >= 1", 1, 1.0 - P.kappa * math.e * P.c_star, 1e-15),
    ])


def psi_sup_bound(P: Problem, etas, points: int) -> float:
    """max over psi_eta0 and psi_eta (eta in etas) of sampled sup|psi| minus c_star."""
    t = np.linspace(-P.r, 0.0, points)
    worst = np.max(np.abs(psi_template(t, P.kappa)))
    for eta in etas:
        z = -P.delay(eta)
        worst = max(worst, np.max(np.abs(psi_template(t, P.kappa, z))))
    return float(worst - P.c_star)


def _psi_etas(P: Problem, rng, n: int) -> np.ndarray:
    etas = P.eta0 + rng.uniform(-3.0, 3.0, n)
    return etas[np.abs(etas - P.eta0) > 1e-6]


def suite_psi(P: Problem, rng, counts: Counts) -> VerifyReport:
    etas = _psi_etas(P, rng, counts.psi_etas)
    at0 = max(abs(float(psi_template(0.0, P.kappa, -P.delay(e)))) for e in etas)
    at_z = max(abs(float(psi_template(-P.delay(e), P.kappa, -P.delay(e)))) for e in etas)
    slope0 = max(abs(float(psi_template_deriv(0.0, P.kappa, -P.delay(e))) - 1.0) for e in etas)
    slope0 = max(slope0, abs(float(psi_template_deriv(0.0, P.kappa)) - 1.0))

    # difference quotients in eta: C^1 distance should scale linearly with the step
    ratios, ks = [], []
    for eta in etas[:20]:
        base = psi_segment(P, eta)
        d1 = norm_c1(psi_segment(P, eta + 1e-4) - base)
        d2 = norm_c1(psi_segment(P, eta + 1e-5) - base)
        ratios.append(d2 / d1 if d1 > 0 else 0.0)
        ks.append(d1 / 1e-4)

    proj_gap, proj_slope = 0.0, 0.0
    for _ in range(counts.projections):
        phi = random_segment(rng, P.r)
        eta = phi.eval(0.0)
        p1 = project_P_eta(P, eta, phi)
        p2 = project_P_eta(P, eta, p1)
        proj_gap = max(proj_gap, norm_c1(p2 - p1))
        proj_slope = max(proj_slope, abs(p1.eval_deriv(0.0)))

    xi = P.eta0 + np.linspace(-2 * P.rho, 2 * P.rho, 20001)
    return VerifyReport([
        CheckResult("sup|psi| <= c_star", len(etas) + 1,
                    psi_sup_bound(P, etas, counts.psi_points), 1e-12),
        CheckResult("psi(0) = 0", len(etas), at0, 0.0),
        CheckResult("psi_eta(-d(eta)) = 0", len(etas), at_z, 0.0),
        CheckResult("psi'(0) = 1", len(etas) + 1, slope0, 0.0),
        CheckResult("eta-continuity of psi", len(ratios), max(ratios), 0.2,
                    info={"K_max": max(ks), "K_median": float(np.median(ks))}),
        CheckResult("P_eta idempotent", counts.projections, proj_gap, 1e-12),
        CheckResult("P_eta maps into X_0", counts.projections, proj_slope, 1e-15),
        CheckResult("|a'| <= 3/rho", len(xi),
                    float(np.max(np.abs(bump_a_deriv(P, xi)))) - 3.0 / P.rho, 1e-12),
    ])


def suite_h(P: Problem, rng, counts: Counts) -> VerifyReport:
    margin = P.monotonicity_margin
    etas = P.eta0 + rng.uniform(-3.0, 3.0, counts.h_etas)
    taus = P.eta0 + np.linspace(-2 * P.rho, 2 * P.rho, counts.h_taus)
    outside = np.abs(taus - P.eta0) >= P.rho
    floor_gap, off_one = -np.inf, 0.0
    for eta in etas:
        dh = np.asarray(h_eta_deriv(P, eta, taus), dtype=float)
        floor_gap = max(floor_gap, margin - dh.min())
        off_one = max(off_one, float(np.max(np.abs(dh[outside] - 1.0))) if outside.any() else 0.0)

    inv_err = 0.0
    inv_eta = P.eta0 + rng.uniform(-3.0, 3.0, counts.invert)
    inv_tau = P.eta0 + rng.uniform(-2 * P.rho, 2 * P.rho, counts.invert)
    for eta, tau in zip(inv_eta, inv_tau):
        inv_err = max(inv_err, abs(invert_h(P, eta, float(h_eta(P, eta, tau))) - tau))

    far = P.rho + P.c * P.c_star
    ident = 0.0
    for eta, s in zip(etas, rng.uniform(far, far + 3.0, len(etas))):
        for sigma in (P.eta0 + s, P.eta0 - s):
            ident = max(ident, abs(invert_h(P, eta, sigma) - sigma))
    ident = max(ident, max(abs(invert_h(P, P.eta0, s) - s) for s in inv_tau[:100]))

    return VerifyReport([
        CheckResult("h_eta' >= 1 - c/(4(c+1))", len(etas) * len(taus), floor_gap, 1e-12,
                    info={"floor": margin}),
        CheckResult("dF/dtau = -h_eta' < 0", len(etas) * len(taus), floor_gap - margin, 0.0,
                    passed=floor_gap - margin < 0.0),
        CheckResult("h_eta' = 1 off [eta0-rho, eta0+rho]", int(outside.sum()) * len(etas), off_one, 0.0),
        CheckResult("T(eta, h_eta(tau)) = tau", counts.invert, inv_err, 1e-12),
        CheckResult("T = identity where h is", 2 * len(etas) + 100, ident, 0.0),
    ])


def suite_roundtrip(P: Problem, rng, counts: Counts) -> VerifyReport:
    ba = ab = tau_ratio = 0.0
    head_tail = head_resampled = 0.0
    for _ in range(counts.roundtrip):
        phi = random_segment(rng, P.r)
        a_phi, rep_a = map_A(P, phi)
        ba_phi, rep_ba = map_B(P, a_phi)
        b_phi, _ = map_B(P, phi)
        ab_phi, _ = map_A(P, b_phi)
        ba = max(ba, norm_c1(ba_phi - phi))
        ab = max(ab, norm_c1(ab_phi - phi))
        tau_ratio = max(tau_ratio, abs(rep_ba.tau - rep_a.tau) / tol_root(rep_ba.sigma))
        head = phi.eval(0.0)
        head_tail = max(head_tail, abs(a_phi.eval(0.0) - head), abs(b_phi.eval(0.0) - head))
        head_resampled = max(head_resampled,
                             abs(resample(a_phi, 64).eval(0.0) - head),
                             abs(resample(b_phi, 64).eval(0.0) - head))

    eta0_err = 0.0
    for _ in range(counts.eta0_inputs):
        phi = random_segment(rng, P.r)
        values = phi.values.copy()
        values[-1] = P.eta0
        phi = make_segment(P.r, phi.nodes, values, phi.derivs)
        eta0_err = max(eta0_err, norm_c1(map_B(P, map_A(P, phi)[0])[0] - phi),
                       norm_c1(map_A(P, map_B(P, phi)[0])[0] - phi))

    gap_a, missed_a = _overlap_gaps(P, rng, counts.overlap, map_A, 0.5 * P.rho)
    gap_b, missed_b = _overlap_gaps(P, rng, counts.overlap, map_B, 0.25 * P.rho)

    return VerifyReport([
        CheckResult("B(A(phi)) = phi", counts.roundtrip, ba, 1e-9),
        CheckResult("A(B(phi)) = phi", counts.roundtrip, ab, 1e-9),
        CheckResult("tau recovery / tol_root", counts.roundtrip, tau_ratio, 10.0),
        CheckResult("head point preserved (exact)", 2 * counts.roundtrip, head_tail, 0.0),
        CheckResult("head point preserved (resampled)", 2 * counts.roundtrip, head_resampled, 1e-15),
        CheckResult("round trip at phi(0) = eta0", counts.eta0_inputs, eta0_err, 1e-9),
        CheckResult("A branches coincide on overlap", counts.overlap, gap_a, 1e-15,
                    passed=gap_a <= 1e-15 and missed_a == 0),
        CheckResult("B branches coincide on overlap", counts.overlap, gap_b, 1e-15,
                    passed=gap_b <= 1e-15 and missed_b == 0),
    ])


def _overlap_gaps(P: Problem, rng, n: int, mapping, radius: float):
    """Inputs with d(phi(0)) > 0 and delayed value within ``radius`` of eta0."""
    gap, missed = 0.0, 0
    for _ in range(n):
        phi = random_segment(rng, P.r, low=-0.9 * radius, high=0.9 * radius)
        phi = make_segment(P.r, phi.nodes, phi.values + P.eta0, phi.derivs)
        _, rep = mapping(P, phi, check_overlap=True)
        if rep.overlap_checked:
            gap = max(gap, rep.overlap_gap)
        else:
            missed += 1
    return gap, missed


def manifold_points(P: Problem, rng, n: int, n_at_eta0: int = 0, half_width: float = 2.0):
    xis = list(P.eta0 + rng.uniform(-half_width, half_width, n - n_at_eta0)) + [P.eta0] * n_at_eta0
    return [make_manifold_point(P, float(xi), random_shape(rng)) for xi in xis]


def fd_relative_error(P: Problem, phi: Segment, chi: Segment, h: float = FD_STEP) -> float:
    exact = df_apply(P, phi, chi)
    fd = (f_eval(P, phi + h * chi) - f_eval(P, phi - h * chi)) / (2.0 * h)
    return abs(exact - fd) / max(abs(exact), FD_FLOOR)


def suite_manifold(P: Problem, rng, counts: Counts) -> VerifyReport:
    point_res = max(abs(residual_Xf(P, phi))
                    for phi in manifold_points(P, rng, counts.point_residual))

    into_x0 = max(abs(map_A(P, phi)[0].eval_deriv(0.0))
                  for phi in manifold_points(P, rng, counts.manifold))

    into_xf = surj = 0.0
    for _ in range(counts.manifold):
        phi = random_segment(rng, P.r)
        zeta = project_P_eta(P, phi.eval(0.0), phi)
        b_zeta = map_B(P, zeta)[0]
        into_xf = max(into_xf, abs(residual_Xf(P, b_zeta)))
        surj = max(surj, norm_c1(map_A(P, b_zeta)[0] - zeta))

    zeros = zeros_of_g(P)
    fixed = 0.0
    n_fixed = 0
    if zeros:
        for i in range(counts.fixed_points):
            tau0 = zeros[i % len(zeros)]
            head = float(P.eta0 + rng.uniform(-2.0, 2.0))
            phi = constrained_point(P, head, tau0, 0.0, random_shape(rng))
            on_both = abs(residual_Xf(P, phi)) <= 1e-12 and phi.eval_deriv(0.0) == 0.0
            fixed = max(fixed, 0.0 if on_both else math.inf)
            fixed = max(fixed, norm_c1(map_A(P, phi)[0] - phi))
            n_fixed += 1

    trans = 0.0
    pts = manifold_points(P, rng, counts.transversal, counts.transversal_eta0)
    for phi in pts:
        trans = max(trans, abs(tangent_residual(P, phi, psi_segment(P, phi.eval(0.0))) - 1.0))

    fd = 0.0
    for _ in range(counts.fd):
        fd = max(fd, fd_relative_error(P, smooth_random_segment(rng, P.r),
                                       smooth_random_segment(rng, P.r)))

    flat = 0.0
    for _ in range(counts.eta0_inputs):
        phi = random_segment(rng, P.r)
        values = phi.values.copy()
        values[-1] = P.eta0
        phi = make_segment(P.r, phi.nodes, values, phi.derivs)
        flat = max(flat, abs(f_eval(P, phi) - float(P.g(P.eta0))))

    return VerifyReport([
        CheckResult("manifold point residual", counts.point_residual, point_res, 1e-12),
        CheckResult("A(X_f) in X_0", counts.manifold, into_x0, 1e-11),
        CheckResult("B(X_0) in X_f", counts.manifold, into_xf, 1e-9),
        CheckResult("A(B(zeta)) = zeta on X_0", counts.manifold, surj, 1e-9),
        CheckResult("A fixes X_f cap X_0", n_fixed, fixed, 1e-12,
                    passed=n_fixed > 0 and fixed <= 1e-12, info={"zeros_of_g": zeros}),
        CheckResult("tangent_residual(phi, psi) = 1", len(pts), trans, 1e-10),
        CheckResult("D_e f vs central differences", counts.fd, fd, 1e-6),
        CheckResult("f = g(eta0) on the slice at eta0", counts.eta0_inputs, flat, 0.0),
    ])


def suite_dde(P: Problem, rng, counts: Counts) -> VerifyReport:
    res = halving = transport = 0.0
    for phi in manifold_points(P, rng, counts.dde_points):
        traj = integrate(P, phi, counts.dde_t_end, counts.dde_step)
        times = np.concatenate([[0.0], rng.uniform(0.0, counts.dde_t_end, counts.dde_times)])
        res = max(res, max(abs(traj.residual_at(P, float(t))) for t in times))
        for t in times[:25]:
            transport = max(transport, abs(map_A(P, traj.segment(float(t)))[0].eval_deriv(0.0)))
        coarse = integrate(P, phi, counts.dde_halving_t, counts.dde_step)
        fine = integrate(P, phi, counts.dde_halving_t, 0.5 * counts.dde_step)
        halving = max(halving, sup_difference(coarse, fine, counts.dde_halving_t))
    return VerifyReport([
        CheckResult("residual_Xf along trajectories", counts.dde_points, res, 1e-5),
        CheckResult("step-halving self-convergence", counts.dde_points, halving, 1e-6),
        CheckResult("A(x_t) in X_0 along trajectories", counts.dde_points, transport, 1e-5),
    ])


SUITE_FUNCTIONS = {
    "constants": suite_constants,
    "psi": suite_psi,
    "h": suite_h,
    "roundtrip": suite_roundtrip,
    "manifold": suite_manifold,
    "dde": suite_dde,
}


def run_suites(P: Problem, suites=SUITES, seed: int = 42, counts: Counts | None = None) -> VerifyReport:
    counts = counts or Counts()
    report = VerifyReport([], meta={"instance": P.name, "seed": int(seed),
                                    "suites": list(suites)})
    for name in SUITES:
        if name in suites:
            sub = SUITE_FUNCTIONS[name](P, suite_rng(seed, name), counts)
            for check in sub.checks:
                check.info.setdefault("suite", name)
            report.extend(sub)
    return report
