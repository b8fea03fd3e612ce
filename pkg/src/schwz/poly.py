"""Polynomials with complex coefficients.

Coefficients are stored ascending (constant term first). Text input is
descending, the way people write polynomials: ``"1,0,-6"`` is ``z**2 - 6``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from math import factorial

import numpy as np

from .errors import CapacityError, NumericFailure, ParseError

COMPOSE_DEGREE_CAP = 4096

_REAL = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(
    rf"(?P<re>[+-]?{_REAL})(?:(?P<im>[+-]{_REAL})i)?|(?P<pure>[+-]?{_REAL})i"
)


class Poly:
    """Polynomial ``sum(coeffs[k] * z**k)``; immutable."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        c = np.array(coeffs, dtype=complex).ravel()
        if c.size == 0:
            raise ValueError("polynomial needs at least one coefficient")
        if c.size > 1 and c[-1] == 0:
            raise ValueError("leading coefficient is zero")
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def from_descending(cls, coeffs) -> Poly:
        return cls(list(coeffs)[::-1])

    @classmethod
    def trimmed(cls, coeffs) -> Poly:
        """Build from ascending coefficients, dropping zero leading terms."""
        c = np.array(coeffs, dtype=complex).ravel()
        nz = np.nonzero(c)[0]
        return cls(c[: nz[-1] + 1] if nz.size else c[:1])

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    @property
    def leading(self) -> complex:
        return complex(self.coeffs[-1])

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        acc = np.full(z.shape, self.coeffs[-1], dtype=complex)
        for a in self.coeffs[-2::-1]:
            acc = acc * z + a
        return acc if acc.ndim else complex(acc)

    def derivative(self) -> Poly:
        if self.degree == 0:
            return Poly([0])
        k = np.arange(1, self.degree + 1)
        return Poly(self.coeffs[1:] * k)

    def __sub__(self, w) -> Poly:
        c = self.coeffs.copy()
        c[0] -= w
        return Poly(c)

    def __eq__(self, other):
        return isinstance(other, Poly) and np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Poly({format_poly(self)})"


def format_complex(c: complex) -> str:
    c = complex(c)
    if c.imag == 0:
        return repr(c.real)
    sign = "+" if c.imag >= 0 else "-"
    return f"{c.real!r}{sign}{abs(c.imag)!r}i"


def format_poly(f: Poly) -> str:
    """Inverse of :func:`parse_poly`."""
    return ",".join(format_complex(c) for c in f.coeffs[::-1])


def parse_complex(token: str) -> complex:
    """Parse ``R``, ``Ri``, ``R+Si`` or ``R-Si``; whitespace is ignored."""
    t = "".join(token.split())
    m = _COMPLEX_RE.fullmatch(t)
    if m is None:
        raise ParseError(f"unparseable complex literal {token!r}", token)
    if m.group("pure") is not None:
        return complex(0.0, float(m.group("pure")))
    im = m.group("im")
    return complex(float(m.group("re")), float(im) if im else 0.0)


def parse_poly(text: str) -> Poly:
    tokens = text.split(",")
    if not text.strip():
        raise ParseError("empty coefficient list", text)
    coeffs = [parse_complex(t) for t in tokens]
    if len(coeffs) > 1 and coeffs[0] == 0:
        raise ParseError(f"zero leading coefficient {tokens[0]!r}", tokens[0])
    return Poly.from_descending(coeffs)


def eval_derivs(f: Poly, z, order: int = 3):
    """``(f(z), f'(z), ..., f^(order)(z))`` in one Horner pass.

    Works elementwise on arrays.
    """
    if not 0 <= order <= 3:
        raise ValueError("order must be in 0..3")
    z = np.asarray(z, dtype=complex)
    acc = [np.full(z.shape, f.coeffs[-1], dtype=complex)]
    acc += [np.zeros(z.shape, dtype=complex) for _ in range(order)]
    for a in f.coeffs[-2::-1]:
        for k in range(order, 0, -1):
            acc[k] = acc[k] * z + acc[k - 1]
        acc[0] = acc[0] * z + a
    out = [acc[k] * factorial(k) for k in range(order + 1)]
    if z.ndim == 0:
        return tuple(complex(v) for v in out)
    return tuple(out)


def compose(f: Poly, g: Poly, cap: int = COMPOSE_DEGREE_CAP) -> Poly:
    """Coefficients of ``f(g(z))``."""
    if f.degree * g.degree > cap:
        raise CapacityError(f"composed degree {f.degree * g.degree} exceeds cap {cap}")
    acc = np.array([f.coeffs[-1]], dtype=complex)
    for a in f.coeffs[-2::-1]:
        acc = np.convolve(acc, g.coeffs)
        acc[0] += a
    return Poly.trimmed(acc)


def iterate(f: Poly, n: int, cap: int = COMPOSE_DEGREE_CAP) -> Poly:
    """Explicit coefficients of ``f^n``."""
    out = Poly([0, 1])
    for _ in range(n):
        out = compose(f, out, cap)
    return out


@dataclass(frozen=True)
class AffineMap:
    a: complex
    b: complex = 0j

    def __post_init__(self):
        if self.a == 0:
            raise ValueError("affine map needs a nonzero scale")

    @classmethod
    def identity(cls) -> AffineMap:
        return cls(1 + 0j, 0j)

    def __call__(self, z):
        return self.a * np.asarray(z) + self.b if np.ndim(z) else self.a * z + self.b

    def inverse(self) -> AffineMap:
        return AffineMap(1 / self.a, -self.b / self.a)

    def then(self, other: AffineMap) -> AffineMap:
        """``other o self``."""
        return AffineMap(other.a * self.a, other.a * self.b + other.b)

    def as_poly(self) -> Poly:
        return Poly([self.b, self.a])


def apply_affine(f: Poly, A: AffineMap, B: AffineMap) -> Poly:
    """Coefficients of ``B(f(A(z)))``."""
    c = compose(f, A.as_poly()).coeffs * B.a
    c[0] += B.b
    return Poly.trimmed(c)


# -- roots ------------------------------------------------------------------

def _horner2(c, z):
    p = np.full(z.shape, c[-1], dtype=complex)
    dp = np.zeros(z.shape, dtype=complex)
    for a in c[-2::-1]:
        dp = dp * z + p
        p = p * z + a
    return p, dp


def _taylor_at(c, x):
    """Taylor coefficients of the polynomial at ``x`` (repeated synthetic division)."""
    c = np.array(c, dtype=complex)
    n = c.size - 1
    for j in range(n):
        for k in range(n - 1, j - 1, -1):
            c[k] += x * c[k + 1]
    return c


def _aberth(c, tol, max_sweeps):
    n = c.size - 1
    lead = c[-1]
    center = -c[-2] / (n * lead)
    shifted = _taylor_at(c, center)
    # Fujiwara bound on the roots of the centred polynomial
    ratios = np.abs(shifted[:-1] / lead)
    k = n - np.arange(n)
    radius = 2.0 * np.max(ratios ** (1.0 / k))
    if radius == 0.0:
        return np.full(n, center), True
    angles = 2 * np.pi * np.arange(n) / n + 0.4
    z = center + 0.5 * radius * np.exp(1j * angles)
    absc = np.abs(c)
    eps = np.finfo(float).eps
    frozen = np.zeros(n, dtype=bool)
    for _ in range(max_sweeps):
        p, dp = _horner2(c, z)
        floor = 4 * n * eps * np.polyval(absc[::-1], np.abs(z))
        at_floor = np.abs(p) <= floor
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        inv = np.where(diff == 0, 0, 1.0 / diff)
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = p / dp
            step = newton / (1 - newton * s)
        bad = ~np.isfinite(step)
        step[bad] = 1e-3 * (1 + np.abs(z[bad])) * np.exp(1j * (1 + np.arange(bad.sum())))
        active = ~frozen & ~at_floor
        z = np.where(active, z - step, z)
        small = np.abs(step) < tol * (1 + np.abs(z))
        frozen |= (active & small) | at_floor
        if frozen.all():
            return z, True
    return z, False


def roots(p: Poly, tol: float = 1e-12, max_sweeps: int = 200):
    """All roots of ``p`` with multiplicities, sorted by (re, im).

    Simultaneous Aberth-Ehrlich iteration. Approximations whose inclusion
    disks overlap (or that lie within ``1e3*tol`` of each other) form a
    cluster; a cluster of size m is reported as one root of multiplicity m
    when the Taylor coefficients below order m at its centroid are
    negligible on the cluster's scale.
    """
    n = p.degree
    if n < 1:
        raise ValueError("roots needs degree >= 1")
    c = p.coeffs
    if n == 1:
        return [(complex(-c[0] / c[1]), 1)]
    z, ok = _aberth(c, tol, max_sweeps)
    if not ok:
        raise NumericFailure("Aberth iteration did not converge", best=z)
    return _cluster(c, z, tol)


def _cluster(c, z, tol):
    n = z.size
    p, dp = _horner2(c, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        incl = np.where(dp != 0, n * np.abs(p / dp), np.inf)
    incl = np.minimum(incl, 1e-3 * (1 + np.abs(z)))
    incl = np.maximum(incl, 1e3 * tol * (1 + np.abs(z)))

    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(z[i] - z[j]) <= incl[i] + incl[j]:
                parent[find(i)] = find(j)
    groups = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)

    out = []
    for members in groups.values():
        pts = z[members]
        m = len(members)
        if m == 1:
            out.append((complex(pts[0]), 1))
            continue
        centre = pts.mean()
        if _is_multiple(c, centre, m, np.max(np.abs(pts - centre)), tol):
            out.append((complex(centre), m))
        else:
            out.extend((complex(x), 1) for x in pts)
    out.sort(key=lambda r: (r[0].real, r[0].imag))
    return out


def _is_multiple(c, centre, m, spread, tol):
    t = np.abs(_taylor_at(c, centre))
    r = max(spread, 1e3 * tol * (1 + abs(centre)))
    top = t[m] * r**m
    return all(t[j] * r**j <= 2.0**m * top for j in range(m))


@dataclass(frozen=True)
class CriticalPoint:
    location: complex
    multiplicity: int
    green_level: float = 0.0

    @property
    def order(self) -> int:
        return self.multiplicity + 1


def critical_points(f: Poly, tol: float = 1e-12) -> list[CriticalPoint]:
    if f.degree < 2:
        raise ValueError("critical points need degree >= 2")
    return [CriticalPoint(z, m) for z, m in roots(f.derivative(), tol)]


def preimages(f: Poly, w: complex, tol: float = 1e-12):
    """Roots of ``f(z) - w`` with multiplicities summing to ``deg f``."""
    if f.degree < 1:
        raise ValueError("preimages need degree >= 1")
    return roots(f - w, tol)
