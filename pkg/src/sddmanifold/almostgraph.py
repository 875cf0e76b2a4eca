"""The diffeomorphism A : C^1 -> C^1 taking X_f onto X_0, and its inverse B.

Both maps only add multiples of psi_eta0 and psi_eta to their argument, so
they are carried out exactly on the symbolic tail of a :class:`Segment`.
B needs tau = T(eta, sigma), the inverse of the scalar map h_eta, which is
computed by Newton's method inside a certified bracket.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .funcspace import Segment, axpy, norm_c1
from .problem import Problem
from .report import CheckResult, VerifyReport
from .templates import psi_template
from .transversal import bump_a, bump_a_deriv, transversal_term

MAX_ITER = 100


class RootError(ArithmeticError):
    """The safeguarded inversion of h_eta did not converge."""


class Branch(str, enum.Enum):
    RHO_HALF = "RhoHalf"
    RHO_QUARTER = "RhoQuarter"
    PLUS = "Plus"


@dataclass
class BranchReport:
    branch_used: Branch
    tau: float
    eta: float
    sigma: float | None = None
    overlap_checked: bool = False
    overlap_gap: float | None = None

    def to_dict(self) -> dict:
        return {"branch_used": self.branch_used.value, "tau": self.tau, "eta": self.eta,
                "sigma": self.sigma, "overlap_checked": self.overlap_checked,
                "overlap_gap": self.overlap_gap}


def tol_root(sigma: float) -> float:
    return 1e-13 * (1.0 + abs(sigma))


# -- h_eta and its inverse ------------------------------------------------

def _delayed_psi0(P: Problem, eta: float) -> float:
    """L_eta psi_eta0 = psi_eta0(-d(eta)); |.| <= c_star."""
    return float(psi_template(-P.delay(eta), P.kappa))


def h_eta(P: Problem, eta: float, tau):
    """tau - g(tau) a(tau) psi_eta0(-d(eta))."""
    ell = _delayed_psi0(P, eta)
    return tau - P.g(tau) * bump_a(P, tau) * ell


def h_eta_deriv(P: Problem, eta: float, tau):
    ell = _delayed_psi0(P, eta)
    ga_prime = P.g_prime(tau) * bump_a(P, tau) + P.g(tau) * bump_a_deriv(P, tau)
    return 1.0 - ga_prime * ell


def invert_h(P: Problem, eta: float, sigma: float) -> float:
    """The unique tau with h_eta(tau) = sigma.

    |h_eta(tau) - tau| <= c*c_star gives the bracket [sigma - c c_star,
    sigma + c c_star]; h_eta' >= 1 - c/(4(c+1)) makes Newton converge, with
    bisection taking over whenever a step leaves the bracket.
    """
    sigma = float(sigma)
    ell = _delayed_psi0(P, eta)
    if ell == 0.0:
        return sigma

    def F(t):
        return float(t - P.g(t) * bump_a(P, t) * ell) - sigma

    tol = tol_root(sigma)
    width = P.c * P.c_star * (1.0 + 1e-9) + 4e-16 * (1.0 + abs(sigma))
    lo, hi = sigma - width, sigma + width
    for _ in range(60):
        if F(lo) <= 0.0 <= F(hi):
            break
        width *= 2.0
        lo, hi = sigma - width, sigma + width
    else:
        raise RootError(f"no sign change for h_eta - sigma around sigma={sigma}")

    tau = sigma
    for _ in range(MAX_ITER):
        f = F(tau)
        if abs(f) <= tol:
            return tau
        if f < 0.0:
            lo = tau
        else:
            hi = tau
        slope = float(h_eta_deriv(P, eta, tau))
        step = tau - f / slope if slope > 0.0 else np.nan
        tau = step if lo < step < hi else 0.5 * (lo + hi)
    raise RootError(f"h_eta inversion exhausted {MAX_ITER} iterations (eta={eta}, sigma={sigma})")


# -- the branches -------------------------------------------------------------

def _head_and_delayed(P: Problem, phi: Segment):
    eta = phi.eval(0.0)
    delta = P.delay(eta)
    return eta, delta, phi.eval(-delta)


def _glued(P: Problem, phi: Segment, eta: float, tau: float, sign: float) -> Segment:
    """phi + sign*g(tau)[a(tau) psi_eta0 + (1 - a(tau)) psi_eta]."""
    g_tau = float(P.g(tau))
    a = bump_a(P, tau)
    out = axpy(phi, sign * g_tau * a, transversal_term(P, None))
    if a < 1.0:
        out = axpy(out, sign * g_tau * (1.0 - a), transversal_term(P, eta))
    return out


def A_rho_half(P: Problem, phi: Segment) -> Segment:
    eta, delta, tau = _head_and_delayed(P, phi)
    if not abs(tau - P.eta0) < 0.5 * P.rho:
        raise ValueError("phi is outside the domain of A_rho/2")
    return axpy(phi, -float(P.g(tau)), transversal_term(P, None))


def A_plus(P: Problem, phi: Segment) -> Segment:
    eta, delta, tau = _head_and_delayed(P, phi)
    if not delta > 0.0:
        raise ValueError("phi is outside the domain of A_+ (d(phi(0)) = 0)")
    return _glued(P, phi, eta, tau, -1.0)


def B_rho_quarter(P: Problem, chi: Segment) -> Segment:
    eta, delta, sigma = _head_and_delayed(P, chi)
    if not abs(sigma - P.eta0) < 0.25 * P.rho:
        raise ValueError("chi is outside the domain of B_rho/4")
    tau = invert_h(P, eta, sigma)
    return axpy(chi, float(P.g(tau)), transversal_term(P, None))


def B_plus(P: Problem, chi: Segment) -> Segment:
    eta, delta, sigma = _head_and_delayed(P, chi)
    if not delta > 0.0:
        raise ValueError("chi is outside the domain of B_+ (d(chi(0)) = 0)")
    return _glued(P, chi, eta, invert_h(P, eta, sigma), 1.0)


# -- A and B --------------------------------------------------------------------

def map_A(P: Problem, phi: Segment, check_overlap: bool = False):
    """A(phi) and a branch report.  The head value phi(0) is preserved exactly."""
    eta, delta, tau = _head_and_delayed(P, phi)
    if delta > 0.0:
        out = _glued(P, phi, eta, tau, -1.0)
        report = BranchReport(Branch.PLUS, tau, eta)
        if check_overlap and abs(tau - P.eta0) < 0.5 * P.rho:
            other = axpy(phi, -float(P.g(tau)), transversal_term(P, None))
            report.overlap_checked = True
            report.overlap_gap = norm_c1(out - other)
    else:
        out = axpy(phi, -float(P.g(tau)), transversal_term(P, None))
        report = BranchReport(Branch.RHO_HALF, tau, eta)
    return out, report


def map_B(P: Problem, chi: Segment, check_overlap: bool = False):
    """B(chi) = A^{-1}(chi) and a branch report."""
    eta, delta, sigma = _head_and_delayed(P, chi)
    tau = invert_h(P, eta, sigma)
    if delta > 0.0:
        out = _glued(P, chi, eta, tau, 1.0)
        report = BranchReport(Branch.PLUS, tau, eta, sigma)
        if check_overlap and abs(sigma - P.eta0) < 0.25 * P.rho:
            other = axpy(chi, float(P.g(tau)), transversal_term(P, None))
            report.overlap_checked = True
            report.overlap_gap = norm_c1(out - other)
    else:
        out = axpy(chi, float(P.g(tau)), transversal_term(P, None))
        report = BranchReport(Branch.RHO_QUARTER, tau, eta, sigma)
    return out, report


def verify_roundtrip(P: Problem, phi: Segment, tolerance: float = 1e-9) -> VerifyReport:
    """C^1 errors of B(A(phi)) and A(B(phi)) against phi, plus tau recovery."""
    a_phi, rep_a = map_A(P, phi)
    ba_phi, rep_ba = map_B(P, a_phi)
    b_phi, rep_b = map_B(P, phi)
    ab_phi, rep_ab = map_A(P, b_phi)
    ba_err = norm_c1(ba_phi - phi)
    ab_err = norm_c1(ab_phi - phi)
    tau_gap = abs(rep_ba.tau - rep_a.tau)
    tau_tol = 10.0 * tol_root(rep_ba.sigma)
    checks = [
        CheckResult("B(A(phi)) - phi", 1, ba_err, tolerance),
        CheckResult("A(B(phi)) - phi", 1, ab_err, tolerance),
        CheckResult("tau recovery", 1, tau_gap, tau_tol),
    ]
    return VerifyReport(checks, meta={"branches": [r.to_dict() for r in (rep_a, rep_ba, rep_b, rep_ab)]})
