"""C^1 segments on [-r, 0]: cubic Hermite splines plus an exact symbolic tail.

A :class:`Segment` is the sum of a piecewise cubic Hermite interpolant on a
node grid and a finite list of :class:`TailTerm` summands, each a scalar
multiple of a closed-form transversal template.  Keeping the tail symbolic
lets maps that only add multiples of those templates be undone exactly.
"""
from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .templates import psi_template, psi_template_deriv

CLAMP_TOL = 1e-12
DROP_TOL = 1e-300
DEFAULT_NODES = 200
SAMPLES_PER_PIECE = 64


class SegmentError(ValueError):
    """Invalid segment data (grid, lengths, incompatible operands)."""


class DomainError(ValueError):
    """Evaluation point outside [-r, 0] beyond the clamp tolerance."""


@dataclass(frozen=True)
class TailTerm:
    """coeff * psi, where psi is t*exp(kappa*t) or its cut-off version.

    ``eta is None`` marks the template attached to the zero of the delay
    (no cutoff); otherwise ``z = -d(eta) < 0`` is the left end of the support.
    """

    coeff: float
    kappa: float
    z: float | None = None
    eta: float | None = None

    def __post_init__(self):
        if self.eta is None:
            if self.z is not None:
                raise SegmentError("a tail term without eta carries no cutoff")
        elif self.z is None or not self.z < 0.0:
            raise SegmentError(f"tail term at eta={self.eta} needs z < 0, got {self.z}")

    @property
    def kind(self) -> str:
        return "AtEtaZero" if self.eta is None else "AtEta"

    @property
    def key(self):
        return (self.eta, self.kappa, self.z)

    def scaled(self, factor: float) -> "TailTerm":
        return TailTerm(self.coeff * factor, self.kappa, self.z, self.eta)

    def value(self, t):
        return self.coeff * psi_template(t, self.kappa, self.z)

    def deriv(self, t):
        return self.coeff * psi_template_deriv(t, self.kappa, self.z)

    def breakpoints(self) -> list[float]:
        """Points where the term's shape changes; used to place norm samples."""
        pts = [-1.0 / self.kappa, -2.0 / self.kappa]
        if self.z is not None:
            pts += [self.z, 0.5 * self.z]
        return pts


def merge_tail(terms: Iterable[TailTerm]) -> tuple[TailTerm, ...]:
    """Add coefficients of terms sharing a key; drop negligible ones."""
    merged: dict = {}
    for term in terms:
        if term.key in merged:
            prev = merged[term.key]
            merged[term.key] = TailTerm(prev.coeff + term.coeff, prev.kappa, prev.z, prev.eta)
        else:
            merged[term.key] = term
    return tuple(t for t in merged.values() if abs(t.coeff) > DROP_TOL)


@dataclass(frozen=True, eq=False)
class Segment:
    r: float
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    tail: tuple[TailTerm, ...] = field(default=())

    def __post_init__(self):
        # python-float copies for the scalar evaluation path
        object.__setattr__(self, "_tn", self.nodes.tolist())
        object.__setattr__(self, "_yv", self.values.tolist())
        object.__setattr__(self, "_mv", self.derivs.tolist())

    # -- evaluation ---------------------------------------------------

    def _clamp(self, t):
        lo, hi = -self.r, 0.0
        if np.ndim(t) == 0:
            t = float(t)
            if t < lo - CLAMP_TOL or t > hi + CLAMP_TOL or math.isnan(t):
                raise DomainError(f"t={t!r} outside [{lo}, 0]")
            return min(max(t, lo), hi)
        t = np.asarray(t, dtype=float)
        if np.any((t < lo - CLAMP_TOL) | (t > hi + CLAMP_TOL) | np.isnan(t)):
            raise DomainError(f"evaluation points outside [{lo}, 0]")
        return np.clip(t, lo, hi)

    def _piece(self, t: float):
        tn = self._tn
        k = bisect.bisect_right(tn, t) - 1
        k = min(max(k, 0), len(tn) - 2)
        h = tn[k + 1] - tn[k]
        return k, h, (t - tn[k]) / h

    def spline_eval(self, t):
        t = self._clamp(t)
        if np.ndim(t) == 0:
            k, h, s = self._piece(t)
            y0, y1 = self._yv[k], self._yv[k + 1]
            m0, m1 = self._mv[k], self._mv[k + 1]
            s2 = s * s
            s3 = s2 * s
            return ((2 * s3 - 3 * s2 + 1) * y0 + (3 * s2 - 2 * s3) * y1
                    + h * ((s3 - 2 * s2 + s) * m0 + (s3 - s2) * m1))
        k, h, s = self._pieces(t)
        s2 = s * s
        s3 = s2 * s
        return ((2 * s3 - 3 * s2 + 1) * self.values[k] + (3 * s2 - 2 * s3) * self.values[k + 1]
                + h * ((s3 - 2 * s2 + s) * self.derivs[k] + (s3 - s2) * self.derivs[k + 1]))

    def spline_deriv(self, t):
        t = self._clamp(t)
        if np.ndim(t) == 0:
            k, h, s = self._piece(t)
            y0, y1 = self._yv[k], self._yv[k + 1]
            m0, m1 = self._mv[k], self._mv[k + 1]
            d00 = 6 * s * s - 6 * s
            return ((d00 * y0 - d00 * y1) / h
                    + (3 * s * s - 4 * s + 1) * m0 + (3 * s * s - 2 * s) * m1)
        k, h, s = self._pieces(t)
        d00 = 6 * s * s - 6 * s
        return ((d00 * self.values[k] - d00 * self.values[k + 1]) / h
                + (3 * s * s - 4 * s + 1) * self.derivs[k] + (3 * s * s - 2 * s) * self.derivs[k + 1])

    def _pieces(self, t: np.ndarray):
        k = np.searchsorted(self.nodes, t, side="right") - 1
        k = np.clip(k, 0, len(self.nodes) - 2)
        h = self.nodes[k + 1] - self.nodes[k]
        return k, h, (t - self.nodes[k]) / h

    def eval(self, t):
        out = self.spline_eval(t)
        if self.tail:
            t = self._clamp(t)
            for term in self.tail:
                out = out + term.value(t)
        return float(out) if np.ndim(out) == 0 else out

    def eval_deriv(self, t):
        out = self.spline_deriv(t)
        if self.tail:
            t = self._clamp(t)
            for term in self.tail:
                out = out + term.deriv(t)
        return float(out) if np.ndim(out) == 0 else out

    __call__ = eval

    # -- linear structure ---------------------------------------------

    def same_grid(self, other: "Segment") -> bool:
        return self.r == other.r and np.array_equal(self.nodes, other.nodes)

    def _check_grid(self, other: "Segment"):
        if not self.same_grid(other):
            raise SegmentError("segments live on different grids; resample one first")

    def __add__(self, other: "Segment") -> "Segment":
        self._check_grid(other)
        return Segment(self.r, self.nodes, self.values + other.values,
                       self.derivs + other.derivs, merge_tail(self.tail + other.tail))

    def __sub__(self, other: "Segment") -> "Segment":
        return self + (-other)

    def __neg__(self) -> "Segment":
        return self * -1.0

    def __mul__(self, factor: float) -> "Segment":
        factor = float(factor)
        return Segment(self.r, self.nodes, self.values * factor, self.derivs * factor,
                       merge_tail(t.scaled(factor) for t in self.tail))

    __rmul__ = __mul__

    @property
    def has_tail(self) -> bool:
        return bool(self.tail)

    def spline_part(self) -> "Segment":
        return Segment(self.r, self.nodes, self.values, self.derivs)

    def baked(self) -> "Segment":
        """Tail-free copy interpolating this segment on its own grid."""
        return resample(self, nodes=self.nodes)

    def __repr__(self):
        return (f"Segment(r={self.r}, n_nodes={len(self.nodes)}, "
                f"tail={[(t.kind, t.eta, t.coeff) for t in self.tail]})")


# -- construction -------------------------------------------------------

def uniform_nodes(r: float, n: int) -> np.ndarray:
    if n < 2:
        raise SegmentError("need at least 2 nodes")
    nodes = np.linspace(-r, 0.0, n)
    nodes[0], nodes[-1] = -r, 0.0
    return nodes


def make_segment(r: float, nodes: Sequence[float], values: Sequence[float],
                 derivs: Sequence[float]) -> Segment:
    """Cubic Hermite segment through (nodes, values, derivs) with empty tail."""
    r = float(r)
    if not r > 0:
        raise SegmentError(f"r must be positive, got {r}")
    nodes = np.array(nodes, dtype=float)
    values = np.array(values, dtype=float)
    derivs = np.array(derivs, dtype=float)
    if nodes.ndim != 1 or not (len(nodes) == len(values) == len(derivs)):
        raise SegmentError("nodes, values and derivs must be 1-d with equal lengths")
    if len(nodes) < 2:
        raise SegmentError("need at least 2 nodes")
    if not np.all(np.diff(nodes) > 0):
        raise SegmentError("nodes must be strictly increasing")
    tol = CLAMP_TOL * max(1.0, r)
    if abs(nodes[0] + r) > tol or abs(nodes[-1]) > tol:
        raise SegmentError(f"nodes must run from -r={-r} to 0, got [{nodes[0]}, {nodes[-1]}]")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(derivs))):
        raise SegmentError("non-finite node data")
    nodes[0], nodes[-1] = -r, 0.0
    return Segment(r, nodes, values, derivs)


def zero_segment(r: float, n: int = DEFAULT_NODES) -> Segment:
    nodes = uniform_nodes(r, n)
    return Segment(float(r), nodes, np.zeros(n), np.zeros(n))


def from_function(r: float, fun, dfun, n: int = DEFAULT_NODES, nodes=None) -> Segment:
    """Sample a function and its derivative into a tail-free segment."""
    nodes = uniform_nodes(r, n) if nodes is None else np.asarray(nodes, dtype=float)
    return make_segment(r, nodes, np.asarray(fun(nodes), dtype=float) * np.ones_like(nodes),
                        np.asarray(dfun(nodes), dtype=float) * np.ones_like(nodes))


def axpy(phi: Segment, coeff: float, term: TailTerm) -> Segment:
    """phi + coeff*term, with the term merged into the exact tail."""
    if term.z is not None and term.z < -phi.r - CLAMP_TOL:
        raise SegmentError("tail term support starts before -r")
    if coeff == 0.0:
        return phi
    return Segment(phi.r, phi.nodes, phi.values, phi.derivs,
                   merge_tail(phi.tail + (term.scaled(coeff),)))


def resample(phi: Segment, n: int | None = None, nodes=None) -> Segment:
    """Tail-free Hermite interpolant of ``phi`` (uniform ``n`` nodes or given nodes).

    Node values and derivatives are exact; the C-norm error between nodes is
    O(h^4) for smooth ``phi``.
    """
    if nodes is None:
        if n is None or n < 2:
            raise SegmentError("resample needs n >= 2 or an explicit grid")
        nodes = uniform_nodes(phi.r, n)
    nodes = np.asarray(nodes, dtype=float)
    return make_segment(phi.r, nodes, phi.eval(nodes), phi.eval_deriv(nodes))


# -- norms ----------------------------------------------------------------

def _spline_sup_norms(phi: Segment) -> tuple[float, float]:
    """Exact sup|p| and sup|p'| of the spline part, piece by piece."""
    h = np.diff(phi.nodes)
    y0, y1 = phi.values[:-1], phi.values[1:]
    m0, m1 = phi.derivs[:-1], phi.derivs[1:]
    b1 = h * m0
    b2 = -3 * y0 + 3 * y1 - 2 * h * m0 - h * m1
    b3 = 2 * y0 - 2 * y1 + h * m0 + h * m1

    def p(s):
        return y0 + s * (b1 + s * (b2 + s * b3))

    def dp(s):
        return (b1 + s * (2 * b2 + s * 3 * b3)) / h

    with np.errstate(divide="ignore", invalid="ignore"):
        a, b, c = 3 * b3, 2 * b2, b1
        disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
        quad = a != 0
        r1 = np.where(quad, (-b + disc) / (2 * a), np.where(b != 0, -c / b, 0.0))
        r2 = np.where(quad, (-b - disc) / (2 * a), 0.0)
        vert = np.where(b3 != 0, -b2 / (3 * b3), 0.0)
    cand = [np.clip(np.nan_to_num(x), 0.0, 1.0) for x in (r1, r2)]
    sup_val = max(np.max(np.abs(phi.values)),
                  max(np.max(np.abs(p(s))) for s in cand))
    sup_der = max(np.max(np.abs(phi.derivs)),
                  np.max(np.abs(dp(np.clip(np.nan_to_num(vert), 0.0, 1.0)))))
    return float(sup_val), float(sup_der)


def _sample_grid(phi: Segment) -> np.ndarray:
    theta = np.linspace(0.0, 1.0, SAMPLES_PER_PIECE + 1)
    h = np.diff(phi.nodes)
    pts = [(phi.nodes[:-1, None] + h[:, None] * theta[None, :]).ravel()]
    for term in phi.tail:
        if term.z is not None:
            pts.append(np.linspace(term.z, 0.5 * term.z, SAMPLES_PER_PIECE + 1))
            pts.append(np.linspace(0.5 * term.z, 0.0, SAMPLES_PER_PIECE + 1))
        pts.append(np.clip(np.array(term.breakpoints()), -phi.r, 0.0))
    return np.unique(np.clip(np.concatenate(pts), -phi.r, 0.0))


def _refined_max(fun, grid: np.ndarray) -> float:
    vals = np.abs(fun(grid))
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    local = np.abs(fun(np.linspace(lo, hi, SAMPLES_PER_PIECE + 1)))
    return float(max(vals[i], np.max(local)))


def sup_norms(phi: Segment) -> tuple[float, float]:
    """(sup|phi|, sup|phi'|) over [-r, 0].

    Exact for tail-free segments.  With a tail the result comes from dense
    sampling plus one local refinement and may undershoot the true supremum
    by about ``tol_norm = 1e-8*(1 + result)``.
    """
    if not phi.tail:
        return _spline_sup_norms(phi)
    grid = _sample_grid(phi)
    return _refined_max(phi.eval, grid), _refined_max(phi.eval_deriv, grid)


def norm_c(phi: Segment) -> float:
    return sup_norms(phi)[0]


def norm_c1(phi: Segment) -> float:
    a, b = sup_norms(phi)
    return a + b


def tol_norm(value: float) -> float:
    return 1e-8 * (1.0 + value)


# -- CSV ------------------------------------------------------------------

CSV_HEADER = ["t", "x", "dx"]


def write_segment_csv(path, phi: Segment, n_nodes: int | None = None) -> None:
    """Write ``t,x,dx`` rows.  Tails are baked in first (own grid, or ``n_nodes`` uniform)."""
    if n_nodes is not None:
        phi = resample(phi, n_nodes)
    elif phi.tail:
        phi = phi.baked()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, x, dx in zip(phi.nodes, phi.values, phi.derivs):
            w.writerow([repr(float(t)), repr(float(x)), repr(float(dx))])


def read_segment_csv(path) -> Segment:
    text = Path(path).read_text(encoding="utf-8")
    rows = list(csv.reader(text.splitlines()))
    if not rows or [c.strip() for c in rows[0]] != CSV_HEADER:
        raise SegmentError(f"{path}: header must be exactly 't,x,dx'")
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise SegmentError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 3 or len(data) < 2:
        raise SegmentError(f"{path}: need at least two rows of three columns")
    return make_segment(-data[0, 0], data[:, 0], data[:, 1], data[:, 2])
