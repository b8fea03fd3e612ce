"""Equivalence of polynomials by their critical sets up to affine maps.

Two polynomials of the same degree have Schwarzians related by an affine
pullback exactly when an affine map carries one critical multiset onto
the other. The map is found from centred power-sum moments: with both
multisets translated to their centroids, the first non-vanishing moment
mu_m fixes the scale up to an m-th root of unity.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial import cKDTree

from .errors import CapacityError, NumericFailure
from .poly import AffineMap, Poly, critical_points, eval_derivs, preimages
from .schwarzian import schwarzian_value

ITERATE_CAP = 10_000
CHECK_POINTS = 20
CHECK_RTOL = 1e-6
CHECK_SEED = 20240917


@dataclass(frozen=True)
class CriticalMultiset:
    points: tuple[tuple[complex, int], ...]
    total: int

    @classmethod
    def of(cls, points) -> CriticalMultiset:
        pts = tuple((complex(z), int(m)) for z, m in points)
        return cls(pts, sum(m for _, m in pts))

    @property
    def locations(self):
        return np.array([z for z, _ in self.points], dtype=complex)

    @property
    def multiplicities(self):
        return np.array([m for _, m in self.points], dtype=int)

    def centroid(self) -> complex:
        return complex((self.locations * self.multiplicities).sum() / self.total)

    def moment(self, k: int) -> complex:
        c = self.locations - self.centroid()
        return complex((self.multiplicities * c**k).sum())


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    witness: AffineMap | None
    residual: float


def critical_multiset(f: Poly, tol: float = 1e-12) -> CriticalMultiset:
    return CriticalMultiset.of((c.location, c.multiplicity) for c in critical_points(f, tol))


def _match(src, src_m, dst, dst_m, thr):
    """Max distance of a multiplicity-respecting matching of src onto dst."""
    n = src.size
    gaps = np.abs(dst[:, None] - dst[None, :]) + np.diag(np.full(n, np.inf))
    if n > 1 and gaps.min() <= 10 * thr:
        cost = np.abs(src[:, None] - dst[None, :])
        cost = np.where(src_m[:, None] == dst_m[None, :], cost, 1e300)
        r, c = linear_sum_assignment(cost)
        return float(cost[r, c].max())
    used = np.zeros(n, dtype=bool)
    worst = 0.0
    for i in range(n):
        dist = np.where(~used & (dst_m == src_m[i]), np.abs(dst - src[i]), np.inf)
        j = int(np.argmin(dist))
        if not np.isfinite(dist[j]):
            return np.inf
        used[j] = True
        worst = max(worst, float(dist[j]))
    return worst


def affine_match(P: CriticalMultiset, Q: CriticalMultiset, tol: float = 1e-6) -> EquivalenceResult:
    """Find A with A(P) = Q as multisets, if one exists."""
    no = EquivalenceResult(False, None, float("inf"))
    if P.total != Q.total or sorted(P.multiplicities) != sorted(Q.multiplicities):
        return no
    cp, cq = P.centroid(), Q.centroid()
    xp, xq = P.locations - cp, Q.locations - cq
    spread_p = float(np.abs(xp).max())
    spread_q = float(np.abs(xq).max())
    thr = tol * (1 + spread_q)
    if spread_p <= tol * (1 + abs(cp)) or spread_q <= tol * (1 + abs(cq)):
        if spread_p <= tol * (1 + abs(cp)) and spread_q <= tol * (1 + abs(cq)):
            return EquivalenceResult(True, AffineMap(1 + 0j, cq - cp), max(spread_p, spread_q))
        return no

    mp, mq = P.multiplicities, Q.multiplicities
    best = np.inf
    for m in range(2, P.total + 1):
        mu_p, mu_q = P.moment(m), Q.moment(m)
        scale_p = float((mp * np.abs(xp) ** m).sum())
        if abs(mu_p) <= 1e-9 * scale_p:
            continue
        scale_q = float((mq * np.abs(xq) ** m).sum())
        if abs(mu_q) <= 1e-9 * scale_q:
            return no
        root = cmath.exp(cmath.log(mu_q / mu_p) / m)
        for k in range(m):
            a = root * cmath.exp(2j * cmath.pi * k / m)
            res = _match(a * xp + cq, mp, Q.locations, mq, thr)
            best = min(best, res)
            if res <= thr:
                return EquivalenceResult(True, AffineMap(a, cq - a * cp), res)
        return EquivalenceResult(False, None, best)
    # all centred moments vanish only when every point sits at the centroid
    return no


def _check_points(crit: CriticalMultiset, rng):
    centre = crit.centroid()
    radius = 1 + float(np.abs(crit.locations - centre).max())
    pts = []
    while len(pts) < CHECK_POINTS:
        z = centre + radius * complex(*rng.uniform(-1, 1, 2))
        if np.abs(crit.locations - z).min() > 1e-2 * radius:
            pts.append(z)
    return pts


def schwarzian_equivalent(f: Poly, g: Poly, tol: float = 1e-6) -> EquivalenceResult:
    """Decide S_f dz^2 = A^*(S_g dz^2) for some affine A.

    The witness A maps Crit(f) onto Crit(g), so S_f(z) = S_g(A(z)) A.a**2.
    """
    if f.degree != g.degree or f.degree < 2:
        return EquivalenceResult(False, None, float("inf"))
    P = critical_multiset(f)
    res = affine_match(P, critical_multiset(g), tol)
    if not res.equivalent:
        return res
    A = res.witness
    rng = np.random.default_rng(CHECK_SEED)
    for z in _check_points(P, rng):
        lhs = schwarzian_value(f, z)
        rhs = schwarzian_value(g, A(z)) * A.a**2
        if abs(lhs - rhs) > CHECK_RTOL * max(abs(lhs), 1e-300):
            return EquivalenceResult(False, None, res.residual)
    return res


def _first_occurrences(points, rtol):
    xy = np.column_stack([points.real, points.imag])
    scale = 1 + float(np.abs(points).max())
    keep = np.ones(points.size, dtype=bool)
    for i, j in sorted(cKDTree(xy).query_pairs(rtol * scale)):
        if keep[i] and keep[j]:
            keep[j] = False
    return keep


def iterate_critical_multiset(f: Poly, n: int, tol: float = 1e-12) -> CriticalMultiset:
    """Critical points of f^n with multiplicities, without expanding f^n.

    Crit(f^n) is the union of f^{-j}(Crit f) for j < n. At such x the
    multiplicity is sum_j ord_{f^j x}(f') * deg_x(f^j), read off the
    forward chain through the computed point set.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    d = f.degree
    if d**n * (d - 1) > ITERATE_CAP:
        raise CapacityError(f"iterate critical set of size {d**n * (d - 1)} exceeds cap {ITERATE_CAP}")
    crit = critical_points(f, tol)
    nodes = [c.location for c in crit]
    ords = [c.multiplicity for c in crit]
    frontier = np.array(nodes, dtype=complex)
    for _ in range(n - 1):
        found = np.array([x for y in frontier for x, _ in preimages(f, y, tol)], dtype=complex)
        both = np.concatenate([np.array(nodes, dtype=complex), found])
        keep = _first_occurrences(both, 1e-8)
        frontier = both[len(nodes):][keep[len(nodes):]]
        nodes.extend(frontier.tolist())
        ords.extend([0] * frontier.size)
    pts = np.array(nodes, dtype=complex)
    tree = cKDTree(np.column_stack([pts.real, pts.imag]))
    images = eval_derivs(f, pts, 0)[0]
    nxt_idx = []
    for w in images:
        dist, j = tree.query([w.real, w.imag])
        nxt_idx.append(int(j) if dist <= 1e-7 * (1 + abs(w)) else -1)

    out = []
    for i in range(len(nodes)):
        mult, deg, k = 0, 1, i
        for _ in range(n):
            if k < 0:
                break
            mult += ords[k] * deg
            deg *= 1 + ords[k]
            k = nxt_idx[k]
        if mult:
            out.append((nodes[i], mult))
    ms = CriticalMultiset.of(out)
    if ms.total != d**n - 1:
        raise NumericFailure(f"critical multiplicities of f^{n} sum to {ms.total}, expected {d**n - 1}")
    return ms


def iterate_equivalent(f: Poly, g: Poly, n: int, tol: float = 1e-6) -> EquivalenceResult:
    """Decide f^n ~ g^n from the critical multisets of the iterates."""
    if f.degree != g.degree or f.degree < 2:
        return EquivalenceResult(False, None, float("inf"))
    return affine_match(iterate_critical_multiset(f, n), iterate_critical_multiset(g, n), tol)
