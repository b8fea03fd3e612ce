"""Flat metrics |Q|^{1/2} |dz| from quadratic differentials Q dz^2.

Three sources of Q are supported: the limit -2 g**2 (g = dG/dz), the
normalized iterate S_{f^n} / d**(2n), and an arbitrary callable. The limit
gives the metric d_o = sqrt(2)|g||dz| whose geodesic foliation consists of
the level curves and gradient lines of G.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, SingularityError
from .escape import Region, green_values, precrit_sample
from .poly import Poly
from .schwarzian import normalized_schwarzian

QD_SINGULAR = 1e30
SUBDIVIDE = 4
_GL_X, _GL_W = np.polynomial.legendre.leggauss(5)


@dataclass(frozen=True)
class Polyline:
    vertices: np.ndarray
    closed: bool = True

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=complex).ravel()
        if v.size < 2:
            raise ValueError("polyline needs at least two vertices")
        object.__setattr__(self, "vertices", v)

    def segments(self):
        v = self.vertices
        if self.closed:
            return v, np.roll(v, -1)
        return v[:-1], v[1:]

    def refined(self, k: int = 2) -> Polyline:
        """Same curve with every segment split into ``k`` equal pieces."""
        a, b = self.segments()
        s = np.arange(k) / k
        pts = (a[:, None] + (b - a)[:, None] * s[None, :]).ravel()
        if not self.closed:
            pts = np.append(pts, self.vertices[-1])
        return Polyline(pts, self.closed)

    def euclidean_length(self) -> float:
        a, b = self.segments()
        return float(np.abs(b - a).sum())


@dataclass(frozen=True)
class QDSampler:
    """A quadratic differential Q dz**2 that can be evaluated on arrays."""

    kind: str
    f: Poly | None = None
    n: int = 0
    func: Callable | None = None

    @classmethod
    def limit(cls, f: Poly) -> QDSampler:
        return cls("limit", f=f)

    @classmethod
    def iterate(cls, f: Poly, n: int) -> QDSampler:
        if n < 1:
            raise ValueError("n must be >= 1")
        return cls("iterate", f=f, n=n)

    @classmethod
    def explicit(cls, func: Callable) -> QDSampler:
        return cls("explicit", func=func)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "limit":
            r = green_values(self.f, z)
            q = -2 * r.dgreen**2
            return np.where(r.escaped & ~r.failed, q, np.nan)
        if self.kind == "iterate":
            return normalized_schwarzian(self.f, self.n, z)
        return np.asarray(self.func(z), dtype=complex) * np.ones(z.shape)


def qd_curve_length(Q: QDSampler | Callable, curve: Polyline) -> float:
    """Length of ``curve`` in the metric |Q|^{1/2}|dz|.

    Five-point Gauss-Legendre on every segment. A non-finite sample or
    ``|Q| > 1e30`` raises :class:`SingularityError` naming the segment's
    first vertex.
    """
    a, b = curve.segments()
    half = 0.5 * (b - a)
    pts = 0.5 * (a + b)[:, None] + half[:, None] * _GL_X[None, :]
    with np.errstate(all="ignore"):
        q = np.asarray(Q(pts), dtype=complex)
    mag = np.abs(q)
    bad = ~np.isfinite(mag) | (mag > QD_SINGULAR)
    if bad.any():
        i = int(np.nonzero(bad.any(axis=1))[0][0])
        raise SingularityError(f"quadratic differential singular near vertex {i}", vertex=i)
    seg = np.abs(half) * (np.sqrt(mag) @ _GL_W)
    return float(seg.sum())


def do_curve_length(f: Poly, curve: Polyline) -> float:
    """Length in d_o; every sample must lie in the basin of infinity."""
    a, b = curve.segments()
    pts = 0.5 * (a + b)[:, None] + 0.5 * (b - a)[:, None] * _GL_X[None, :]
    r = green_values(f, pts)
    ok = r.escaped & ~r.failed
    if not ok.all():
        i = int(np.nonzero(~ok.all(axis=1))[0][0])
        raise DomainError(f"curve leaves the basin of infinity near vertex {i}")
    return qd_curve_length(QDSampler.limit(f), curve)


def cylinder_circumference(k: int, d: int = 2, n: int = 0) -> float:
    """Circumference of the flat cylinder at a critical point of order k of f^n.

    k = 1 (no pole) gives 0.
    """
    if k < 1 or d < 2 or n < 0:
        raise ValueError("need k >= 1, d >= 2, n >= 0")
    return 2 * math.pi * math.sqrt((k * k - 1) / 2) / d**n


class LHalfResult(NamedTuple):
    value: float
    excluded_area: float


def _integrand(f, n, z):
    s = normalized_schwarzian(f, n, z)
    r = green_values(f, z)
    target = np.where(r.escaped & ~r.failed, -2 * r.dgreen**2, 0)
    return np.sqrt(np.abs(s - target))


def l_half_distance(f: Poly, n: int, region: Region, precrit=None) -> LHalfResult:
    """Midpoint-rule estimate of the integral of |S_{f^n}/d^(2n) + 2g^2|^{1/2}.

    Cells whose centre lies within one cell diagonal of a precritical point
    of depth <= n are subdivided 4x4. Samples that are non-finite (orbits
    landing on critical points) are dropped and their area reported.
    """
    hx, hy = region.hx, region.hy
    centers = region.cell_centers().ravel()
    vals = _integrand(f, n, centers)
    area = np.full(centers.shape, hx * hy)

    if precrit is None:
        precrit = precrit_sample(f, n)
    if len(precrit):
        tree = cKDTree(np.column_stack([precrit.real, precrit.imag]))
        dist, _ = tree.query(np.column_stack([centers.real, centers.imag]))
        near = np.nonzero(dist <= math.hypot(hx, hy))[0]
    else:
        near = np.array([], dtype=int)

    keep = np.ones(centers.shape, dtype=bool)
    keep[near] = False
    total = 0.0
    excluded = 0.0
    fin = keep & np.isfinite(vals)
    total += float((vals[fin] * area[fin]).sum())
    excluded += float(area[keep & ~np.isfinite(vals)].sum())

    if near.size:
        off = (np.arange(SUBDIVIDE) + 0.5) / SUBDIVIDE - 0.5
        sub = (off[:, None] * hx + 1j * off[None, :] * hy).ravel()
        pts = centers[near][:, None] + sub[None, :]
        sv = _integrand(f, n, pts)
        sub_area = hx * hy / SUBDIVIDE**2
        ok = np.isfinite(sv)
        total += float(sv[ok].sum() * sub_area)
        excluded += float((~ok).sum() * sub_area)
    return LHalfResult(total, excluded)


@dataclass(frozen=True)
class ConvergenceRow:
    n: int
    sup_error: float
    l_half_error: float
    excluded_area: float


def convergence_table(f: Poly, region: Region, n_values) -> list[ConvergenceRow]:
    """Sup and L^{1/2} distances between S_{f^n}/d^(2n) and -2 g^2.

    The sup is taken over grid nodes farther than two cell widths from
    every precritical point of depth <= n.
    """
    Z = region.nodes().ravel()
    r = green_values(f, Z)
    target = np.where(r.escaped & ~r.failed, -2 * r.dgreen**2, 0)
    h = 2 * max(region.hx, region.hy)
    rows = []
    for n in n_values:
        pre = precrit_sample(f, n)
        s = normalized_schwarzian(f, n, Z)
        keep = np.isfinite(s)
        if len(pre):
            tree = cKDTree(np.column_stack([pre.real, pre.imag]))
            dist, _ = tree.query(np.column_stack([Z.real, Z.imag]))
            keep &= dist > h
        err = np.abs(s - target)[keep]
        sup = float(err.max()) if err.size else float("nan")
        lh = l_half_distance(f, n, region, precrit=pre)
        rows.append(ConvergenceRow(n, sup, lh.value, lh.excluded_area))
    return rows


def foliation_direction(Q: QDSampler | Callable, z: complex, tol: float = 1e-12) -> complex:
    """Unit v with Q(z) v**2 > 0: the horizontal direction at z.

    The sign ambiguity is resolved by Re v >= 0, then Im v >= 0 on ties.
    """
    q = complex(np.asarray(Q(np.array([complex(z)])))[0])
    if not np.isfinite(q) or abs(q) > QD_SINGULAR:
        raise SingularityError(f"quadratic differential singular at {z}")
    if abs(q) == 0:
        raise SingularityError(f"quadratic differential vanishes at {z}")
    v = complex(np.exp(-0.5j * np.angle(q)))
    if v.real < -tol or (abs(v.real) <= tol and v.imag < 0):
        v = -v
    return v


def trace_trajectory(Q: QDSampler | Callable, z0: complex, step: float, steps: int) -> Polyline:
    """Follow the horizontal foliation of Q from ``z0`` with Heun steps.

    Orientation is kept continuous from one step to the next.
    """
    pts = [complex(z0)]
    prev = foliation_direction(Q, z0)
    z = complex(z0)
    for _ in range(steps):
        v1 = _aligned(foliation_direction(Q, z), prev)
        v2 = _aligned(foliation_direction(Q, z + step * v1), v1)
        v = v1 + v2
        v /= abs(v)
        z = z + step * v
        prev = v
        pts.append(z)
    return Polyline(np.array(pts), closed=False)


def _aligned(v, ref):
    return v if (v * ref.conjugate()).real >= 0 else -v
