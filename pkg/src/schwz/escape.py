"""Escape-rate function G_f and its z-derivative g = dG_f/dz.

G_f(z) = lim log+|f^n(z)| / d**n is harmonic on the basin of infinity and
vanishes on the filled Julia set. Its derivative is the limit of
(1/2) (f^n)'(z) / (d**n f^n(z)).

After the orbit leaves the disk of radius R = escape_radius(f) it is
followed through t = 1/w: f(w) = w**d * P(t) with P(t) = a_d + ... + a_0 t**d,
so log|f(w)| - d log|w| = log|P(t)| and t_{k+1} = t_k**d / P(t_k). The
correction log|P(t)/a_d| decays doubly exponentially and never overflows.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial import cKDTree

from . import scaled as sc
from .errors import CapacityError, DomainError, NumericFailure
from .poly import CriticalPoint, Poly, critical_points, eval_derivs, roots

DEFAULT_TOL = 1e-14
DEFAULT_MAX_ITER = 1000
GRID_BLOCK_ROWS = 16
PRECRIT_CAP = 100_000


@dataclass(frozen=True)
class Region:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    nx: int = 512
    ny: int = 512

    def __post_init__(self):
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError("region needs x_min < x_max and y_min < y_max")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("region grid needs nx, ny >= 2")

    @property
    def hx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def hy(self) -> float:
        return (self.y_max - self.y_min) / (self.ny - 1)

    def xs(self):
        return np.linspace(self.x_min, self.x_max, self.nx)

    def ys(self):
        return np.linspace(self.y_min, self.y_max, self.ny)

    def nodes(self):
        """Grid nodes as a complex array of shape (ny, nx); row index is y."""
        return self.xs()[None, :] + 1j * self.ys()[:, None]

    def cell_centers(self):
        xs, ys = self.xs(), self.ys()
        cx = 0.5 * (xs[1:] + xs[:-1])
        cy = 0.5 * (ys[1:] + ys[:-1])
        return cx[None, :] + 1j * cy[:, None]

    def with_resolution(self, nx: int, ny: int | None = None) -> Region:
        return replace(self, nx=nx, ny=ny if ny is not None else nx)


@dataclass(frozen=True)
class GreenEval:
    green: float
    dgreen: complex
    escaped: bool
    iterations: int
    error_estimate: float
    failed: bool = False


def escape_radius(f: Poly) -> float:
    """R with ``|z| > R  =>  |f(z)| >= 2|z|``."""
    if f.degree < 2:
        raise ValueError("escape radius needs degree >= 2")
    a = np.abs(f.coeffs)
    return max(1.0, (2.0 + a[:-1].sum()) / a[-1])


@dataclass
class GreenArrays:
    green: np.ndarray
    dgreen: np.ndarray
    escaped: np.ndarray
    iterations: np.ndarray
    error_estimate: np.ndarray
    failed: np.ndarray


def green_values(f: Poly, z, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> GreenArrays:
    """Vectorized G_f and dG_f/dz over an array of points.

    Non-escaping points (within ``max_iter`` steps) report zeros. Points
    whose derivative recurrence fails to settle are flagged in ``failed``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = f.degree
    R = escape_radius(f)
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.reshape(-1)
    size = z.size

    green = np.zeros(size)
    dgreen = np.zeros(size, dtype=complex)
    escaped = np.zeros(size, dtype=bool)
    iters = np.full(size, max_iter, dtype=np.int64)
    err = np.zeros(size)
    failed = np.zeros(size, dtype=bool)

    w_esc = np.zeros(size, dtype=complex)
    D_esc = (np.ones(size, dtype=complex), np.zeros(size, dtype=np.int64))

    idx = np.arange(size)
    w = z.copy()
    D = (np.ones(size, dtype=complex), np.zeros(size, dtype=np.int64))
    with np.errstate(all="ignore"):
        for step in range(max_iter + 1):
            out = np.abs(w) > R
            if out.any():
                j = idx[out]
                escaped[j] = True
                iters[j] = step
                w_esc[j] = w[out]
                D_esc[0][j] = D[0][out]
                D_esc[1][j] = D[1][out]
                keep = ~out
                idx, w, D = idx[keep], w[keep], (D[0][keep], D[1][keep])
            if idx.size == 0 or step == max_iter:
                break
            f0, f1 = eval_derivs(f, w, 1)
            D = sc.mul(D, sc.from_complex(f1))
            w = f0

    j = np.nonzero(escaped)[0]
    if j.size:
        g, dg, e, bad = _post_escape(f, w_esc[j], (D_esc[0][j], D_esc[1][j]), iters[j], tol, max_iter)
        green[j], dgreen[j], err[j], failed[j] = g, dg, e, bad
    return GreenArrays(
        green.reshape(shape),
        dgreen.reshape(shape),
        escaped.reshape(shape),
        iters.reshape(shape),
        err.reshape(shape),
        failed.reshape(shape),
    )


def _post_escape(f, w, D, N, tol, max_iter):
    d = f.degree
    c = f.coeffs
    ad = c[-1]
    P = c[::-1] / ad
    k = np.arange(c.size)
    F1 = (k * c)[::-1] / (d * ad)
    log_d = math.log(d)

    scale = np.exp(-N * log_d)
    green = (np.log(np.abs(w)) + math.log(abs(ad)) / (d - 1)) * scale
    # u_N = (f^N)' / (d^N w_N)
    dN = _scaled_d_pow(d, N)
    u = sc.ldexp_c(D[0] / (dN[0] * w), D[1] - dN[1])
    t = 1 / w
    err = np.zeros(w.shape)
    g_done = np.zeros(w.shape, dtype=bool)
    u_done = np.zeros(w.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(max_iter):
            Pt = _horner(P, t)
            y = Pt - 1
            corr = 0.5 * np.log1p(np.abs(y) ** 2 + 2 * y.real)
            scale = scale / d
            term = corr * scale
            green = np.where(g_done, green, green + term)
            err = np.where(g_done, err, np.abs(term))
            g_done |= np.abs(term) < tol

            u_next = u * _horner(F1, t) / Pt
            u_done_now = np.abs(u_next - u) <= tol * np.abs(u)
            u = np.where(u_done, u, u_next)
            u_done |= u_done_now

            if g_done.all() and u_done.all():
                break
            t = t**d / (ad * Pt)
    green = np.maximum(green, np.finfo(float).tiny)
    return green, 0.5 * u, err, ~(g_done & u_done)


def _scaled_d_pow(d, N):
    """``d**N`` elementwise as a scaled pair."""
    N = np.asarray(N, dtype=np.int64)
    base = sc.from_complex(np.full(N.shape, complex(d)))
    out = (np.ones(N.shape, dtype=complex), np.zeros(N.shape, dtype=np.int64))
    k = N.copy()
    while (k > 0).any():
        odd = (k & 1).astype(bool)
        prod = sc.mul(out, base)
        out = (np.where(odd, prod[0], out[0]), np.where(odd, prod[1], out[1]))
        k >>= 1
        base = sc.mul(base, base)
    return out


def _horner(c, t):
    acc = np.full(t.shape, c[-1], dtype=complex)
    for a in c[-2::-1]:
        acc = acc * t + a
    return acc


def green_eval(f: Poly, z: complex, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> GreenEval:
    r = green_values(f, np.array([complex(z)]), tol, max_iter)
    if r.failed[0]:
        raise NumericFailure(f"derivative recurrence did not stabilize at z={z}", best=complex(r.dgreen[0]))
    return GreenEval(
        float(r.green[0]),
        complex(r.dgreen[0]),
        bool(r.escaped[0]),
        int(r.iterations[0]),
        float(r.error_estimate[0]),
    )


def schwarzian_limit(f: Poly, z: complex, require_escape: bool = False, **kw) -> complex:
    """Limit of ``S_{f^n}(z) / d**(2n)``: ``-2 g(z)**2``, and 0 off the basin."""
    ge = green_eval(f, z, **kw)
    if not ge.escaped:
        if require_escape:
            raise DomainError(f"z={z} does not escape")
        return 0j
    return -2 * ge.dgreen**2


@dataclass
class GreenGrid:
    region: Region
    green: np.ndarray
    dgreen: np.ndarray
    escaped: np.ndarray
    iterations: np.ndarray
    error_estimate: np.ndarray
    failed: np.ndarray

    def __getitem__(self, ij) -> GreenEval:
        i, j = ij
        if self.failed[i, j]:
            return GreenEval(0.0, 0j, False, int(self.iterations[i, j]), 0.0, True)
        return GreenEval(
            float(self.green[i, j]),
            complex(self.dgreen[i, j]),
            bool(self.escaped[i, j]),
            int(self.iterations[i, j]),
            float(self.error_estimate[i, j]),
        )

    @property
    def shape(self):
        return self.green.shape


def green_grid(f: Poly, region: Region, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER, workers: int = 1) -> GreenGrid:
    """G_f at every node of ``region``; shape (ny, nx), row index is y.

    Rows are evaluated in fixed blocks whatever ``workers`` is, so the
    output does not depend on the thread count. Failed nodes are reported
    as non-escaped with ``failed`` set.
    """
    Z = region.nodes()
    blocks = [Z[r : r + GRID_BLOCK_ROWS] for r in range(0, Z.shape[0], GRID_BLOCK_ROWS)]

    def run(block):
        return green_values(f, block, tol, max_iter)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]

    def cat(name):
        return np.concatenate([getattr(p, name) for p in parts], axis=0)

    failed = cat("failed")
    green, dgreen, escaped = cat("green"), cat("dgreen"), cat("escaped")
    green[failed], dgreen[failed], escaped[failed] = 0.0, 0j, False
    return GreenGrid(region, green, dgreen, escaped, cat("iterations"), cat("error_estimate"), failed)


def critical_levels(f: Poly, **kw) -> list[CriticalPoint]:
    """Critical points of f with ``green_level`` filled in."""
    crit = critical_points(f)
    g = green_values(f, np.array([c.location for c in crit]), **kw).green
    return [replace(c, green_level=float(v)) for c, v in zip(crit, g)]


def preimages_batch(f: Poly, ws, tol: float = 1e-13, sweeps: int = 200):
    """All d preimages of each value in ``ws``, shape (len(ws), d).

    Batched Aberth iteration; multiplicities are not resolved (coincident
    preimages appear as nearby approximations). Rows that fail to settle
    fall back to the scalar root finder.
    """
    ws = np.asarray(ws, dtype=complex).reshape(-1)
    d = f.degree
    c = np.tile(f.coeffs, (ws.size, 1)).astype(complex)
    c[:, 0] -= ws
    lead = c[:, -1:]
    center = -c[:, -2] / (d * c[:, -1])
    k = d - np.arange(d)
    radius = 2.0 * np.max(np.abs(c[:, :-1] / lead) ** (1.0 / k), axis=1) + 1e-300
    angles = 2 * np.pi * np.arange(d) / d + 0.4
    z = center[:, None] + radius[:, None] * np.exp(1j * angles)[None, :]
    absc = np.abs(c)
    eps = np.finfo(float).eps
    done = np.zeros(z.shape, dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(sweeps):
            p = np.full(z.shape, 1 + 0j) * c[:, -1:]
            dp = np.zeros(z.shape, dtype=complex)
            bound = np.full(z.shape, 1.0) * absc[:, -1:]
            az = np.abs(z)
            for j in range(d - 1, -1, -1):
                dp = dp * z + p
                p = p * z + c[:, j : j + 1]
                bound = bound * az + absc[:, j : j + 1]
            diff = z[:, :, None] - z[:, None, :]
            inv = np.where(diff == 0, 0, 1 / np.where(diff == 0, 1, diff))
            s = inv.sum(axis=2)
            newton = p / dp
            step = newton / (1 - newton * s)
            step = np.where(np.isfinite(step), step, 1e-3 * (1 + az))
            at_floor = np.abs(p) <= 4 * d * eps * bound
            active = ~done & ~at_floor
            z = np.where(active, z - step, z)
            done |= at_floor | (active & (np.abs(step) < tol * (1 + np.abs(z))))
            if done.all():
                break
    # unsettled rows, and rows with near-coincident approximations (multiple
    # roots), go through the clustering root finder
    gap = np.abs(z[:, :, None] - z[:, None, :]) + np.where(np.eye(d, dtype=bool), np.inf, 0)
    close = (gap.min(axis=(1, 2)) < 1e-6 * (1 + np.abs(z).max(axis=1))) if d > 1 else np.zeros(ws.size, bool)
    for r in np.nonzero(~done.all(axis=1) | close)[0]:
        pts = [x for x, m in roots(f - ws[r]) for _ in range(m)]
        z[r] = pts
    return z


def _dedupe(points, radius):
    if points.size == 0:
        return points
    xy = np.column_stack([points.real, points.imag])
    tree = cKDTree(xy)
    keep = np.ones(points.size, dtype=bool)
    for i, j in sorted(tree.query_pairs(radius)):
        if keep[i] and keep[j]:
            keep[j] = False
    return points[keep]


def precrit_sample(f: Poly, depth: int, dedupe: float = 1e-10):
    """Points of ``f^{-j}(Crit f)`` for ``0 <= j <= depth``, deduplicated."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    d = f.degree
    if d**depth * (d - 1) > PRECRIT_CAP:
        raise CapacityError(f"precritical sample of size {d**depth * (d - 1)} exceeds cap {PRECRIT_CAP}")
    level = _dedupe(np.array([c.location for c in critical_points(f)], dtype=complex), dedupe)
    found = [level]
    for _ in range(depth):
        level = _dedupe(preimages_batch(f, level).reshape(-1), dedupe)
        found.append(level)
    pts = _dedupe(np.concatenate(found), dedupe)
    order = np.lexsort((pts.imag, pts.real))
    return pts[order]
