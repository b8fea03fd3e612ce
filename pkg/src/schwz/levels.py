"""Level curves of G_f and the annulus invariants of the level-set tree.

Components of {G = l} are extracted with marching squares on a grid and
each vertex is then pushed back onto the level set by Newton steps along
the gradient of G. Levels in {d**m * G(c)} for critical c are singular
(the level set has figure-eight leaves) and are rejected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from skimage.measure import find_contours

from .errors import DomainError, NumericFailure, RegionTooSmallError
from .escape import Region, critical_levels, green_grid, green_values
from .metric import Polyline, do_curve_length
from .poly import CriticalPoint, Poly

LEVEL_GUARD = 1e-6
POLISH_TOL = 1e-10
POLISH_STEPS = 5
REFINE_RTOL = 1e-7
REFINE_PASSES = 8
ZOOM = 4
ZOOM_DEPTH = 3


@dataclass(frozen=True)
class LevelComponent:
    level: float
    vertices: Polyline
    circumference_do: float
    enclosed_critical: tuple[int, ...]
    local_degree: int


@dataclass(frozen=True)
class AnnulusRecord:
    level: float
    height: float
    circumference: float
    local_degree: int


def singular_levels(f: Poly, crit: list[CriticalPoint] | None = None) -> list[float]:
    """Positive critical levels G(c); every d**m multiple is singular too."""
    crit = critical_levels(f) if crit is None else crit
    return sorted({c.green_level for c in crit if c.green_level > 0})


def _nearest_singular(level, d, base):
    best = math.inf
    for L in base:
        m = round(math.log(level / L, d))
        for k in (m - 1, m, m + 1):
            best = min(best, abs(level - L * float(d) ** k))
    return best


def check_level(f: Poly, level: float, guard: float = LEVEL_GUARD, crit=None) -> None:
    if not level > 0:
        raise DomainError("level must be positive")
    gap = _nearest_singular(level, f.degree, singular_levels(f, crit))
    if gap <= guard:
        raise DomainError(f"level {level} lies within {guard} of a critical level")


def _winding(vertices, p):
    a = np.angle((np.roll(vertices, -1) - p) / (vertices - p))
    return int(round(a.sum() / (2 * math.pi)))


def _polish(f, z, level):
    for _ in range(POLISH_STEPS):
        r = green_values(f, z)
        resid = level - r.green
        if np.all(np.abs(resid) < POLISH_TOL) and r.escaped.all():
            return z
        g = r.dgreen
        # dG = 2 Re(g dz): step along conj(g) solves the linearization
        z = z + resid * np.conj(g) / (2 * np.abs(g) ** 2)
    r = green_values(f, z)
    if not (r.escaped.all() and np.all(np.abs(level - r.green) < POLISH_TOL)):
        raise NumericFailure(f"could not place contour vertices on level {level}")
    return z


def _bisector_point(f, a, b, level):
    # Solve G = level on the perpendicular bisector of each chord [a, b],
    # so the new vertex cannot jump to another part of the level set.
    m = 0.5 * (a + b)
    h = np.abs(b - a)
    nrm = 1j * (b - a) / h
    s = np.zeros(m.shape)
    for _ in range(2 * POLISH_STEPS):
        r = green_values(f, m + s * nrm)
        resid = level - r.green
        if np.all(np.abs(resid) < POLISH_TOL) and r.escaped.all():
            return m + s * nrm
        slope = 2 * (r.dgreen * nrm).real
        s = np.clip(s + resid / slope, -h, h)
    return _polish(f, m + s * nrm, level)


def _refine(f, z, level):
    # Insert polished midpoints until the d_o length settles; the chord
    # error shrinks by about 4x per pass.
    curve = Polyline(z, closed=True)
    length = do_curve_length(f, curve)
    for _ in range(REFINE_PASSES):
        mid = _bisector_point(f, z, np.roll(z, -1), level)
        z = np.column_stack([z, mid]).ravel()
        curve = Polyline(z, closed=True)
        new = do_curve_length(f, curve)
        done = abs(new - length) <= REFINE_RTOL * new
        length = new
        if done:
            break
    return curve, length


def _folded(f, z):
    # Chords of a correctly ordered level curve run along the tangent
    # i conj(g), all in one sense. A fold (two sides of a thin neck
    # polished onto one side) shows up as a chord against it.
    chord = np.roll(z, -1) - z
    tangent = 1j * np.conj(green_values(f, z).dgreen)
    c = (chord * np.conj(tangent)).real / (np.abs(chord) * np.abs(tangent))
    return not (np.all(c > 0.5) or np.all(c < -0.5))


def _closed_contours(f, level, region, workers, strict=True):
    grid = green_grid(f, region, workers=workers)
    out = []
    for c in find_contours(grid.green, level):
        if len(c) < 4 or not np.allclose(c[0], c[-1]):
            if not strict:
                continue
            raise RegionTooSmallError(f"level {level} curve leaves the region")
        z = region.x_min + c[:-1, 1] * region.hx + 1j * (region.y_min + c[:-1, 0] * region.hy)
        z = _polish(f, z, level)
        keep = np.abs(z - np.roll(z, 1)) > 1e-12 * (1 + np.abs(z))
        if keep.sum() >= 3:
            out.append(z[keep])
    return out


def _resolve(f, level, z, region, workers, depth=0):
    """Re-extract a folded component on a finer grid around it."""
    if not _folded(f, z):
        return z
    if depth == ZOOM_DEPTH:
        raise NumericFailure(f"level {level} component near {z.mean():.6g} is not resolved by the grid")
    pad = 4 * max(region.hx, region.hy)
    x0, x1 = z.real.min() - pad, z.real.max() + pad
    y0, y1 = z.imag.min() - pad, z.imag.max() + pad
    h = min(region.hx, region.hy) / ZOOM
    sub = Region(x0, x1, y0, y1, int(math.ceil((x1 - x0) / h)) + 1, int(math.ceil((y1 - y0) / h)) + 1)
    centre = z.mean()
    # neighbours may cross the edge of the local box; only closed curves count
    found = _closed_contours(f, level, sub, workers, strict=False)
    # the fold hides part of the component, so take the closed curve that
    # winds around the old centroid or, failing that, the nearest one
    inside = [w for w in found if _winding(w, centre) != 0]
    pool = inside or found
    if not pool:
        raise NumericFailure(f"level {level} component near {centre:.6g} is not resolved by the grid")
    best = min(pool, key=lambda w: abs(w.mean() - centre))
    return _resolve(f, level, best, sub, workers, depth + 1)


def level_components(f: Poly, level: float, region: Region, guard: float = LEVEL_GUARD, workers: int = 1) -> list[LevelComponent]:
    """Connected components of {G_f = level} inside ``region``.

    A component whose polished contour folds back on itself (a neck
    thinner than the grid) is traced again on a finer local grid.
    Components are ordered by the (re, im) of their vertex centroid.
    """
    crit = critical_levels(f)
    check_level(f, level, guard, crit)
    found = _closed_contours(f, level, region, workers)
    if not found:
        # a positive level set is never empty; the grid missed it
        raise RegionTooSmallError(f"no contour at level {level} resolved on this grid")
    out = []
    for z in found:
        z = _resolve(f, level, z, region, workers)
        curve, length = _refine(f, z, level)
        enclosed = tuple(i for i, cp in enumerate(crit) if _winding(z, cp.location) != 0)
        degree = 1 + sum(crit[i].multiplicity for i in enclosed if crit[i].green_level < level)
        out.append(LevelComponent(level, curve, length, enclosed, degree))
    out.sort(key=lambda comp: (comp.vertices.vertices.mean().real, comp.vertices.vertices.mean().imag))
    return out


def annulus_height(f: Poly, level: float, crit=None) -> float:
    """G-extent of the annulus containing ``level``; inf without escaping critical points."""
    base = singular_levels(f, crit)
    if not base:
        return math.inf
    d = f.degree
    above, below = math.inf, 0.0
    for L in base:
        m = math.floor(math.log(level / L, d))
        for k in range(m - 1, m + 3):
            v = L * float(d) ** k
            if v > level:
                above = min(above, v)
            elif v < level:
                below = max(below, v)
    return above - below


def annulus_invariants(f: Poly, level: float, region: Region, guard: float = LEVEL_GUARD, workers: int = 1) -> list[AnnulusRecord]:
    comps = level_components(f, level, region, guard, workers)
    h = annulus_height(f, level)
    return [AnnulusRecord(level, h, c.circumference_do, c.local_degree) for c in comps]


def flux(f: Poly, level: float, region: Region, **kw) -> float:
    """Total d_o length of the level set; sqrt(2)*pi at every regular level."""
    return float(sum(c.circumference_do for c in level_components(f, level, region, **kw)))
