"""Method-of-steps integration of x'(t) = g(x(t - d(x(t)))) with dense Hermite history.

Classical RK4 with a fixed step.  Node derivatives are stored as
f(x_t) = g(x(t - d(x(t)))), so the history is a C^1 cubic Hermite
interpolant.  When a deviated argument falls inside the step being taken
(delay close to zero), it is evaluated on a low-order polynomial built from
the stage slopes computed so far; this is only first/second order locally.
"""
from __future__ import annotations

import bisect
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .funcspace import Segment, make_segment
from .problem import MANIFOLD_TOL, Problem, residual_Xf

SLOPE_ITERATIONS = 3


def _hermite(t0, t1, x0, x1, m0, m1, s):
    h = t1 - t0
    u = (s - t0) / h
    u2 = u * u
    u3 = u2 * u
    return ((2 * u3 - 3 * u2 + 1) * x0 + (3 * u2 - 2 * u3) * x1
            + h * ((u3 - 2 * u2 + u) * m0 + (u3 - u2) * m1))


def _hermite_deriv(t0, t1, x0, x1, m0, m1, s):
    h = t1 - t0
    u = (s - t0) / h
    d00 = 6 * u * u - 6 * u
    return (d00 * x0 - d00 * x1) / h + (3 * u * u - 4 * u + 1) * m0 + (3 * u * u - 2 * u) * m1


@dataclass(eq=False)
class Trajectory:
    """Solution on [-r, t_end]: the initial segment followed by RK4 nodes on [0, t_end]."""

    initial: Segment
    ts: np.ndarray
    xs: np.ndarray
    ms: np.ndarray
    step: float

    def __post_init__(self):
        self._t = self.ts.tolist()
        self._x = self.xs.tolist()
        self._m = self.ms.tolist()

    @property
    def r(self) -> float:
        return self.initial.r

    @property
    def t_end(self) -> float:
        return self._t[-1]

    @property
    def t_grid(self) -> np.ndarray:
        return self.ts

    def _forward(self, s: float, deriv: bool) -> float:
        if s > self._t[-1] + 1e-12 * max(1.0, self._t[-1]):
            raise ValueError(f"t={s} beyond the end of the trajectory ({self._t[-1]})")
        k = min(max(bisect.bisect_right(self._t, s) - 1, 0), len(self._t) - 2)
        args = (self._t[k], self._t[k + 1], self._x[k], self._x[k + 1], self._m[k], self._m[k + 1], s)
        return _hermite_deriv(*args) if deriv else _hermite(*args)

    def eval(self, s: float) -> float:
        if s <= 0.0:
            return self.initial.eval(s)
        return self._forward(s, False)

    def eval_deriv(self, s: float) -> float:
        """x'(s); at s = 0 this is the initial segment's derivative (left limit)."""
        if s <= 0.0:
            return self.initial.eval_deriv(s)
        return self._forward(s, True)

    def segment(self, t: float) -> Segment:
        """x_t as a Segment on [-r, 0], exact on every Hermite piece it covers.

        At history time 0 the forward slope f(x_0) is used; for initial data on
        the solution manifold it equals the initial segment's slope.
        """
        if t == 0.0:
            return self.initial
        r = self.r
        lo = t - r
        rows = []
        if lo < 0.0:
            init = self.initial
            keep = (init.nodes > lo) & (init.nodes < 0.0)
            rows += list(zip(init.nodes[keep], init.values[keep], init.derivs[keep]))
            rows.append((0.0, self._x[0], self._m[0]))
        k0 = bisect.bisect_right(self._t, max(lo, 0.0))
        k1 = bisect.bisect_left(self._t, t)
        rows += [(self._t[k], self._x[k], self._m[k]) for k in range(max(k0, 1), k1)]
        gap = 1e-13 * max(1.0, t)
        rows = [row for row in rows if lo + gap < row[0] < t - gap]
        first = (lo, self.eval(lo), self.eval_deriv(lo) if lo != 0.0 else self._m[0])
        last = (t, self.eval(t), self.eval_deriv(t))
        data = np.array([first] + rows + [last], dtype=float)
        nodes = data[:, 0] - t
        nodes[0], nodes[-1] = -r, 0.0
        return make_segment(r, nodes, data[:, 1], data[:, 2])

    def residual_at(self, P: Problem, t: float) -> float:
        """x'(t) - g(x(t - d(x(t)))); equals residual_Xf(P, x_t)."""
        if t == 0.0:
            return residual_Xf(P, self.initial)
        x = self.eval(t)
        return self.eval_deriv(t) - float(P.g(self.eval(t - P.delay(x))))


def integrate(P: Problem, phi0: Segment, t_end: float, step: float) -> Trajectory:
    """Fixed-step RK4 method of steps from phi0 on [0, t_end]."""
    if not step > 0:
        raise ValueError(f"step must be positive, got {step}")
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    res0 = residual_Xf(P, phi0)
    if abs(res0) > MANIFOLD_TOL:
        warnings.warn(f"initial segment is off the solution manifold (residual {res0:.3e}); "
                      "the solution will not be C^1 at t=0", stacklevel=2)
    init = phi0.baked() if phi0.has_tail else phi0
    g, delay = P.g, P.delay
    ts, xs = [0.0], [init.eval(0.0)]
    ms = [float(g(init.eval(-delay(xs[0]))))]

    def past(s):
        if s <= 0.0:
            return init.eval(s)
        k = min(bisect.bisect_right(ts, s) - 1, len(ts) - 2)
        return _hermite(ts[k], ts[k + 1], xs[k], xs[k + 1], ms[k], ms[k + 1], s)

    n = max(1, math.ceil(t_end / step - 1e-9))
    for i in range(n):
        tn, xn, k1 = ts[-1], xs[-1], ms[-1]
        t1 = t_end if i == n - 1 else (i + 1) * step
        h = t1 - tn

        def slope(t, X, c1, c2):
            # c1, c2: coefficients of the in-step polynomial xn + c1*th + c2*th^2
            arg = t - delay(X)
            if arg <= tn:
                return float(g(past(arg)))
            th = arg - tn
            return float(g(xn + th * (c1 + th * c2)))

        k2 = slope(tn + 0.5 * h, xn + 0.5 * h * k1, k1, 0.0)
        k3 = slope(tn + 0.5 * h, xn + 0.5 * h * k2, k1, (k2 - k1) / h)
        k4 = slope(t1, xn + h * k3, k1, (k3 - k1) / h)
        x1 = xn + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        arg = t1 - delay(x1)
        if arg <= tn:
            m1 = float(g(past(arg)))
        else:
            m1 = k4
            for _ in range(SLOPE_ITERATIONS):
                m1 = float(g(_hermite(tn, t1, xn, x1, k1, m1, arg)))
        ts.append(t1)
        xs.append(x1)
        ms.append(m1)
    return Trajectory(init, np.array(ts), np.array(xs), np.array(ms), float(step))


def trajectory_residuals(P: Problem, traj: Trajectory, samples: int) -> np.ndarray:
    """residual_Xf of x_t at ``samples`` equispaced times in [0, t_end]."""
    times = np.linspace(0.0, traj.t_end, samples)
    return np.array([traj.residual_at(P, float(t)) for t in times])


def sup_difference(a: Trajectory, b: Trajectory, t_max: float, samples: int = 4001) -> float:
    """max |x_a(t) - x_b(t)| over equispaced t in [0, t_max]."""
    times = np.linspace(0.0, t_max, samples)
    return float(max(abs(a.eval(float(t)) - b.eval(float(t))) for t in times))
