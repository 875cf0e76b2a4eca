"""Equation instances x'(t) = g(x(t - d(x(t)))) and the functional f on C^1.

A :class:`Problem` bundles the nonlinearity ``g``, the delay function ``d``
(single zero at ``eta0``), the radius ``rho`` and the derived constants
``c``, ``c_star`` and ``kappa`` used by the transversal family and the charts.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .funcspace import DEFAULT_NODES, Segment, axpy, make_segment, uniform_nodes
from .templates import smoothstep, smoothstep_deriv

C_SAMPLES = 10_000
D_SAMPLES = 10_000
DELAY_CLAMP = 1e-12
DPRIME_TOL = 1e-8
MANIFOLD_TOL = 1e-8


class ConfigError(ValueError):
    """Malformed or inadmissible instance configuration."""


class ManifoldError(ValueError):
    """A segment expected on the solution manifold is not."""


@dataclass(frozen=True, eq=False)
class Problem:
    r: float
    eta0: float
    rho: float
    g: Callable
    g_prime: Callable
    d: Callable
    d_prime: Callable
    c: float
    c_star: float
    kappa: float
    sample_range: float = 10.0
    safety_factor: float = 1.01
    name: str = ""
    config: dict = field(default_factory=dict, repr=False)

    def delay(self, eta: float) -> float:
        """d(eta) with rounding-level excursions outside [0, r] clamped."""
        v = float(self.d(eta))
        if v < 0.0:
            if v < -DELAY_CLAMP:
                raise ValueError(f"d({eta}) = {v} < 0")
            return 0.0
        if v > self.r:
            if v > self.r + DELAY_CLAMP:
                raise ValueError(f"d({eta}) = {v} > r = {self.r}")
            return self.r
        return v

    @property
    def monotonicity_margin(self) -> float:
        """1 - (c + 3c/rho)*c_star, which simplifies to 1 - c/(4(c+1))."""
        return 1.0 - (self.c + 3.0 * self.c / self.rho) * self.c_star


# -- builtin families -------------------------------------------------------

def _table(spec: dict, what: str):
    try:
        ts = np.asarray(spec["ts"], dtype=float)
        xs = np.asarray(spec["xs"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{what} table needs numeric 'ts' and 'xs': {exc}") from None
    if ts.ndim != 1 or ts.shape != xs.shape or len(ts) < 4 or not np.all(np.diff(ts) > 0):
        raise ConfigError(f"{what} table needs >= 4 strictly increasing ts with matching xs")
    spline = CubicSpline(ts, xs)
    deriv = spline.derivative()
    return spline, deriv


def _nonlinearity(spec: dict):
    kind = spec.get("kind")
    try:
        if kind == "linear":
            slope = float(spec["slope"])
            return lambda x: slope * x, lambda x: slope + 0.0 * x
        if kind == "sine":
            amp = float(spec["amplitude"])
            freq = float(spec.get("frequency", 1.0))
            off = float(spec.get("offset", 0.0))
            return (lambda x: amp * np.sin(freq * x + off),
                    lambda x: amp * freq * np.cos(freq * x + off))
        if kind == "table":
            return _table(spec, "g")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad g spec {spec!r}: {exc}") from None
    raise ConfigError(f"unknown g kind {kind!r}; expected linear, sine or table")


def _delay_function(spec: dict, eta0: float, r: float):
    kind = spec.get("kind")
    if kind == "rational_square":
        try:
            scale = float(spec.get("scale", r))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad d spec {spec!r}: {exc}") from None
        if not 0 < scale <= r:
            raise ConfigError(f"rational_square needs 0 < scale <= r, got scale={scale}")

        def d(x):
            u = x - eta0
            return scale * u * u / (1.0 + u * u)

        def dp(x):
            u = x - eta0
            return 2.0 * scale * u / ((1.0 + u * u) ** 2)

        return d, dp
    if kind == "table":
        return _table(spec, "d")
    raise ConfigError(f"unknown d kind {kind!r}; expected rational_square or table")


def _validate_delay(d, dp, eta0: float, r: float, R: float) -> None:
    d0 = float(d(eta0))
    if abs(d0) > DELAY_CLAMP:
        raise ConfigError(f"d(eta0) = {d0:.3e}, expected 0 (d must vanish at eta0)")
    dp0 = float(dp(eta0))
    if abs(dp0) > DPRIME_TOL:
        raise ConfigError(f"|d'(eta0)| = {abs(dp0):.3e} > {DPRIME_TOL}: eta0 is not a minimum of d")
    xs = eta0 + R * np.linspace(-1.0, 1.0, D_SAMPLES + 1)
    vals = np.asarray(d(xs), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ConfigError("d is not finite on the sample range")
    if vals.min() < -DELAY_CLAMP:
        raise ConfigError(f"d takes negative values (min {vals.min():.3e} at {xs[vals.argmin()]:.6g})")
    if vals.max() > r + DELAY_CLAMP:
        raise ConfigError(f"d exceeds r={r} (max {vals.max():.6g} at {xs[vals.argmax()]:.6g})")
    centre = D_SAMPLES // 2
    others = np.delete(vals, centre)
    if np.any(others <= 0.0):
        bad = np.delete(xs, centre)[others <= 0.0][0]
        raise ConfigError(f"d has a second zero near {bad:.6g}")
    # zeros between samples show up as sampled local minima that refine to 0
    interior = np.arange(1, len(vals) - 1)
    is_min = (vals[interior] <= vals[interior - 1]) & (vals[interior] <= vals[interior + 1])
    for i in interior[is_min]:
        if i == centre:
            continue
        res = minimize_scalar(lambda x: float(d(x)), bounds=(xs[i - 1], xs[i + 1]),
                              method="bounded", options={"xatol": 1e-12})
        if res.fun <= DELAY_CLAMP * 1e-2 and abs(res.x - eta0) > 1e-6:
            raise ConfigError(f"d has a second zero near {res.x:.6g}")


def _constant_c(g, gp, eta0: float, rho: float) -> float:
    xs = eta0 + rho * np.linspace(-1.0, 1.0, C_SAMPLES + 1)
    return float(np.max(np.abs(g(xs))) + np.max(np.abs(gp(xs))))


def make_problem(config: dict) -> Problem:
    """Build and validate a Problem from a JSON-style instance description."""
    if not isinstance(config, dict):
        raise ConfigError("instance config must be a JSON object")
    try:
        r = float(config["r"])
        eta0 = float(config.get("eta0", 0.0))
        rho = float(config.get("rho", 1.0))
        R = float(config.get("sample_range", 10.0))
        safety = float(config.get("safety_factor", 1.01))
        g_spec, d_spec = config["g"], config["d"]
    except KeyError as exc:
        raise ConfigError(f"missing config field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric config field: {exc}") from None
    if not (r > 0 and rho > 0 and R > 0 and safety >= 1.0):
        raise ConfigError("need r > 0, rho > 0, sample_range > 0, safety_factor >= 1")
    if not isinstance(g_spec, dict) or not isinstance(d_spec, dict):
        raise ConfigError("'g' and 'd' must be objects with a 'kind' field")

    g, gp = _nonlinearity(g_spec)
    d, dp = _delay_function(d_spec, eta0, r)
    _validate_delay(d, dp, eta0, r, R)

    c_sampled = _constant_c(g, gp, eta0, rho)
    if "c" in config:
        c = float(config["c"])
        if c < c_sampled:
            raise ConfigError(f"c override {c} is below the sampled bound {c_sampled}")
    else:
        c = safety * c_sampled
    c_star = rho / (4.0 * (c + 1.0) * (rho + 3.0))
    kappa = max(1.0 / (math.e * c_star), 1.0 / r)

    P = Problem(r=r, eta0=eta0, rho=rho, g=g, g_prime=gp, d=d, d_prime=dp,
                c=c, c_star=c_star, kappa=kappa, sample_range=R, safety_factor=safety,
                name=str(config.get("name", "")), config=dict(config))
    if not c * c_star < rho / 4.0:
        raise ConfigError("c*c_star < rho/4 fails")
    if not P.monotonicity_margin >= 0.75 - 1e-15:
        raise ConfigError("monotonicity margin below 3/4")
    return P


BUILTIN_CONFIGS = {
    "LIN": {"name": "LIN", "r": 1.0, "eta0": 0.0, "rho": 1.0,
            "g": {"kind": "linear", "slope": -1.0},
            "d": {"kind": "rational_square", "scale": 1.0}},
    "SIN": {"name": "SIN", "r": 1.0, "eta0": 0.0, "rho": 1.0,
            "g": {"kind": "sine", "amplitude": 0.5, "frequency": 1.0, "offset": 0.0},
            "d": {"kind": "rational_square", "scale": 1.0}},
}


def builtin_problem(name: str, **overrides) -> Problem:
    return make_problem({**BUILTIN_CONFIGS[name.upper()], **overrides})


def load_config(source) -> dict:
    """Read a JSON instance file; builtin names (``LIN``, ``SIN``) are accepted too."""
    path = Path(source)
    if not path.exists() and str(source).upper() in BUILTIN_CONFIGS:
        return dict(BUILTIN_CONFIGS[str(source).upper()])
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {source}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {source} is not valid JSON: {exc}") from None


# -- the functional f and its derivative ----------------------------------

def f_eval(P: Problem, phi: Segment) -> float:
    """f(phi) = g(phi(-d(phi(0))))."""
    return float(P.g(phi.eval(-P.delay(phi.eval(0.0)))))


def df_apply(P: Problem, phi: Segment, chi: Segment) -> float:
    """Extended derivative D_e f(phi) applied to chi."""
    eta = phi.eval(0.0)
    s = -P.delay(eta)
    tau = phi.eval(s)
    bracket = chi.eval(s) - phi.eval_deriv(s) * float(P.d_prime(eta)) * chi.eval(0.0)
    return float(P.g_prime(tau)) * bracket


def residual_Xf(P: Problem, phi: Segment) -> float:
    """phi'(0) - f(phi); zero exactly on the solution manifold."""
    return phi.eval_deriv(0.0) - f_eval(P, phi)


def tangent_residual(P: Problem, phi: Segment, chi: Segment) -> float:
    """chi'(0) - D_e f(phi) chi; zero iff chi is tangent to X_f at phi."""
    res = residual_Xf(P, phi)
    if abs(res) > MANIFOLD_TOL:
        raise ManifoldError(f"phi is off the solution manifold (residual {res:.3e})")
    return chi.eval_deriv(0.0) - df_apply(P, phi, chi)


def slice_of(phi: Segment) -> float:
    """The slice label eta = phi(0); each segment lies in exactly one slice."""
    return phi.eval(0.0)


# -- explicit manifold points ---------------------------------------------

def random_shape(rng: np.random.Generator, modes: int = 3, amplitude: float = 0.3) -> np.ndarray:
    """Fourier coefficients (modes x 2) for the free part of a constructed point."""
    return rng.uniform(-amplitude, amplitude, size=(modes, 2))


def _shape_function(shape, r: float, delta: float, t: np.ndarray):
    """s(t) = t^2 (t + delta) u(t): vanishes with its slope at 0 and at -delta."""
    if shape is None:
        z = np.zeros_like(t)
        return z, z
    coeffs = np.atleast_2d(np.asarray(shape, dtype=float))
    u = np.zeros_like(t)
    du = np.zeros_like(t)
    for k, (a, b) in enumerate(coeffs, start=1):
        w = k * math.pi / r
        u += a * np.cos(w * t) + b * np.sin(w * t)
        du += w * (-a * np.sin(w * t) + b * np.cos(w * t))
    base = t * t * (t + delta)
    dbase = 2.0 * t * (t + delta) + t * t
    return base * u, dbase * u + base * du


def constrained_point(P: Problem, head: float, delayed: float, slope: float,
                      shape=None, n_nodes: int = DEFAULT_NODES) -> Segment:
    """C^1 segment with phi(0)=head, phi(-d(head))=delayed, phi'(0)=slope, exactly.

    The node -d(head) is inserted into the uniform grid so the constraint holds
    at a node; the slope comes from an exact tail multiple of the transversal
    vector at ``head``, which vanishes at 0 and at -d(head).
    """
    from .transversal import transversal_term

    delta = P.delay(head)
    nodes = uniform_nodes(P.r, n_nodes)
    if delta > 0.0 and -delta not in nodes:
        nodes = np.sort(np.append(nodes, -delta))
    if delta == 0.0 and delayed != head:
        raise ValueError("at the zero of d the delayed value must equal the head value")
    s, ds = _shape_function(shape, P.r, delta, nodes)
    jump = delayed - head
    if delta > 0.0:
        with np.errstate(over="ignore"):
            u = nodes / (-delta)
        w, dw = smoothstep(u), np.where((u > 0) & (u < 1), smoothstep_deriv(u), 0.0) / (-delta)
    else:
        w, dw = np.zeros_like(nodes), np.zeros_like(nodes)
    values = np.where(w == 1.0, delayed + s, head + jump * w + s)
    derivs = jump * dw + ds
    values[-1], derivs[-1] = head, 0.0
    phi = make_segment(P.r, nodes, values, derivs)
    return axpy(phi, slope, transversal_term(P, head))


def make_manifold_point(P: Problem, xi: float, shape=None,
                        n_nodes: int = DEFAULT_NODES) -> Segment:
    """A point of the slice X_{f,xi}: phi(0) = phi(-d(xi)) = xi, phi'(0) = g(xi)."""
    return constrained_point(P, xi, xi, float(P.g(xi)), shape, n_nodes)
