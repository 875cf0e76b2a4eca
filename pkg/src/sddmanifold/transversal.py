"""Transversal vectors psi_eta, the bump function a and the projections P_eta.

psi at the zero eta0 of d is t*exp(kappa*t); for eta != eta0 it is the same
template multiplied by a smoothstep cutoff that vanishes on [-r, -d(eta)]
and equals 1 on [-d(eta)/2, 0].  With kappa >= 1/(e*c_star) the sup-norm
of either is at most c_star, and psi(0) = 0, psi'(0) = 1 hold exactly.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

import numpy as np

from .funcspace import (CLAMP_TOL, DEFAULT_NODES, DomainError, Segment, TailTerm,
                        axpy, zero_segment)
from .templates import psi_template, psi_template_deriv, smoothstep, smoothstep_deriv

if TYPE_CHECKING:
    from .problem import Problem

ETA_SEPARATION = 1e-14


def _check_t(P: "Problem", t):
    t = np.asarray(t, dtype=float)
    if np.any((t < -P.r - CLAMP_TOL) | (t > CLAMP_TOL)):
        raise DomainError(f"psi is defined on [-{P.r}, 0]")
    return np.clip(t, -P.r, 0.0)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def psi0_eval(P: "Problem", t):
    return _scalar(psi_template(_check_t(P, t), P.kappa))


def psi0_deriv(P: "Problem", t):
    return _scalar(psi_template_deriv(_check_t(P, t), P.kappa))


def psi_support(P: "Problem", eta: float) -> float:
    """Left end z = -d(eta) of the support of psi_eta."""
    if abs(eta - P.eta0) <= ETA_SEPARATION:
        raise ValueError("psi_eta is undefined at eta0 and admits no continuous extension there")
    z = -P.delay(eta)
    if not z < 0.0:
        raise ValueError(f"d({eta}) underflows to 0; use the eta0 template")
    return z


def psi_eval(P: "Problem", eta: float, t):
    return _scalar(psi_template(_check_t(P, t), P.kappa, psi_support(P, eta)))


def psi_deriv(P: "Problem", eta: float, t):
    return _scalar(psi_template_deriv(_check_t(P, t), P.kappa, psi_support(P, eta)))


def transversal_term(P: "Problem", eta: float | None, coeff: float = 1.0) -> TailTerm:
    """coeff*psi_eta as an exact tail term.

    ``eta=None``, ``eta == eta0`` or a point where d(eta) is exactly 0 all give
    the eta0 template, which has the same three defining properties there.
    """
    if eta is None or eta == P.eta0:
        return TailTerm(coeff, P.kappa)
    delta = P.delay(eta)
    if delta == 0.0:
        return TailTerm(coeff, P.kappa)
    return TailTerm(coeff, P.kappa, -delta, float(eta))


def psi_segment(P: "Problem", eta: float | None, n_nodes: int = DEFAULT_NODES,
                nodes=None) -> Segment:
    base = zero_segment(P.r, n_nodes)
    if nodes is not None:
        base = Segment(P.r, np.asarray(nodes, dtype=float),
                       np.zeros(len(nodes)), np.zeros(len(nodes)))
    return axpy(base, 1.0, transversal_term(P, eta))


def bump_a(P: "Problem", xi):
    """C^1 cutoff: 1 on |xi - eta0| <= rho/2, 0 on |xi - eta0| >= rho, slope at most 3/rho."""
    u = (P.rho - np.abs(np.asarray(xi, dtype=float) - P.eta0)) / (0.5 * P.rho)
    return _scalar(smoothstep(u))


def bump_a_deriv(P: "Problem", xi):
    off = np.asarray(xi, dtype=float) - P.eta0
    u = (P.rho - np.abs(off)) / (0.5 * P.rho)
    return _scalar(-np.sign(off) * smoothstep_deriv(u) / (0.5 * P.rho))


def project_P_eta(P: "Problem", eta: float | None, phi: Segment) -> Segment:
    """phi - phi'(0) psi_eta, the projection onto X_0 along psi_eta."""
    return axpy(phi, -phi.eval_deriv(0.0), transversal_term(P, eta))
