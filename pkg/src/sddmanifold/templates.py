"""Closed-form scalar kernels: cubic smoothstep and the transversal template.

All functions accept floats or numpy arrays.
"""
import numpy as np


def smoothstep(u):
    """S(u) = 3u^2 - 2u^3 with u clamped to [0, 1]."""
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def smoothstep_deriv(u):
    u = np.asarray(u, dtype=float)
    inside = (u > 0.0) & (u < 1.0)
    v = np.clip(u, 0.0, 1.0)
    return np.where(inside, 6.0 * v * (1.0 - v), 0.0)


def psi_template(t, kappa, z=None):
    """t*exp(kappa*t), optionally cut off to zero on t <= z (z < 0).

    The cutoff factor is S(2(t - z)/(-z)), which is 0 at t = z and 1 on [z/2, 0].
    """
    t = np.asarray(t, dtype=float)
    base = t * np.exp(kappa * t)
    if z is None:
        return base
    return base * smoothstep(_cutoff_arg(t, z))


def psi_template_deriv(t, kappa, z=None):
    t = np.asarray(t, dtype=float)
    e = np.exp(kappa * t)
    dbase = e * (1.0 + kappa * t)
    if z is None:
        return dbase
    u = _cutoff_arg(t, z)
    inside = (u > 0.0) & (u < 1.0)
    # t/(-z) lies in (-1, -1/2) where the cutoff is active; elsewhere it may overflow
    ratio = np.where(inside, t, 0.0) / (-z)
    return dbase * smoothstep(u) + 2.0 * e * ratio * smoothstep_deriv(u)


def _cutoff_arg(t, z):
    """2(t - z)/(-z); saturates to +-inf (harmlessly) when -z is subnormal."""
    with np.errstate(over="ignore"):
        return 2.0 * (t - z) / (-z)
