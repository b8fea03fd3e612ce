"""Schwarzian derivative and nonlinearity of a polynomial and its iterates.

Iterates are never expanded. The chain rule turns S_{f^n} into a sum over
the orbit w_i = f^i(z) of S_f(w_i) * ((f^i)'(z))**2, and N_{f^n} into the
analogous one-form sum. Both are normalized by powers of d = deg f.

Orbit values and (f^i)'(z) are carried in scaled arithmetic. Once
|w_i| > 1 a term is assembled from bounded factors only: S_f(w)*w**2 and
N_f(w)*w are ratios of polynomials in t = 1/w, and u_i = (f^i)'(z) /
(d**i * w_i) tends to 2*dG/dz on the basin of infinity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import scaled as sc
from .errors import DomainError, NumericFailure, PoleError
from .poly import Poly, compose, critical_points, eval_derivs
from .scaled import scaled_from

# Only derivatives near the bottom of the normal range are treated as poles;
# the small-|w| terms below are formed in scaled arithmetic.
SINGULAR_THRESHOLD = 1e-300
LAURENT_SAMPLES = 512


@dataclass(frozen=True)
class SchwarzianEstimate:
    n: int
    value: complex
    terms_used: int
    tail_bound: float


@dataclass
class OrbitAccumulator:
    orbit: list = field(default_factory=list)
    deriv: list = field(default_factory=list)
    ratio: list = field(default_factory=list)


def _is_singular(fprime_abs, w_abs, d, threshold):
    return fprime_abs < threshold * (1 + w_abs) ** (d - 1)


def schwarzian_value(f: Poly, z: complex, threshold: float = SINGULAR_THRESHOLD) -> complex:
    _, f1, f2, f3 = eval_derivs(f, complex(z), 3)
    if _is_singular(abs(f1), abs(z), max(f.degree, 1), threshold):
        raise PoleError(f"z={z} is a critical point of f", index=0)
    r = f2 / f1
    return f3 / f1 - 1.5 * r * r


def nonlinearity_value(f: Poly, z: complex, threshold: float = SINGULAR_THRESHOLD) -> complex:
    _, f1, f2 = eval_derivs(f, complex(z), 2)
    if _is_singular(abs(f1), abs(z), max(f.degree, 1), threshold):
        raise PoleError(f"z={z} is a critical point of f", index=0)
    return f2 / f1


def _reciprocal_coeffs(f: Poly):
    # f(w) = w**d * P(t), f^(j)(w) = w**(d-j) * Fj(t), t = 1/w.
    # Returned ascending in t.
    c = f.coeffs
    k = np.arange(c.size)
    return (
        c[::-1],
        (k * c)[::-1],
        (k * (k - 1) * c)[::-1],
        (k * (k - 1) * (k - 2) * c)[::-1],
    )


def _horner(c, t):
    acc = np.full(t.shape, c[-1], dtype=complex)
    for a in c[-2::-1]:
        acc = acc * t + a
    return acc


def _select(mask, a, b):
    return np.where(mask, a[0], b[0]), np.where(mask, a[1], b[1])


@dataclass
class _KernelOut:
    s_sum: np.ndarray
    n_sum: np.ndarray
    s_last: np.ndarray
    pole_index: np.ndarray
    trace: OrbitAccumulator | None = None


def _orbit_kernel(f: Poly, n: int, z, threshold=SINGULAR_THRESHOLD, record=False) -> _KernelOut:
    if n < 1:
        raise ValueError("n must be >= 1")
    d = f.degree
    if d < 2:
        raise ValueError("iterate sums need degree >= 2")
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.reshape(-1)
    P, F1, F2, F3 = _reciprocal_coeffs(f)

    # |w| > 1: carry t = 1/w and u = (f^i)'/(d^i w), both bounded.
    # |w| <= 1: carry w and (f^i)' in scaled form.
    with np.errstate(all="ignore"):
        big = np.abs(z) > 1
        t = np.where(big, 1 / np.where(big, z, 1), 0)
        u = t.copy()
    w = np.where(big, 0, z)
    D = (np.ones(z.shape, dtype=complex), np.zeros(z.shape, dtype=np.int64))
    dscaled = sc.from_complex(np.asarray(complex(d)))
    dpow = sc.from_complex(np.asarray(1 + 0j))
    dn = sc.power(dscaled, n)
    d2n = sc.mul(dn, dn)
    s_sum = np.zeros(z.shape, dtype=complex)
    n_sum = np.zeros(z.shape, dtype=complex)
    s_last = np.zeros(z.shape, dtype=complex)
    pole = np.full(z.shape, -1, dtype=np.int64)
    trace = OrbitAccumulator() if record else None
    if record:
        w_rec, D_rec = scaled_from(z[0]), scaled_from(1)

    with np.errstate(all="ignore"):
        for i in range(n):
            Pt, F1t, F2t, F3t = (_horner(c, t) for c in (P, F1, F2, F3))
            f0, f1, f2, f3 = eval_derivs(f, w, 3)

            sing = np.where(
                big,
                _is_singular(np.abs(F1t), np.abs(t), d, threshold),
                _is_singular(np.abs(f1), np.abs(w), d, threshold),
            )
            pole = np.where(sing & (pole < 0), i, pole)

            nw = F2t / F1t
            sw2 = F3t / F1t - 1.5 * nw * nw
            s_big = sw2 * u * u * float(d) ** (2 * (i - n))
            n_big = nw * u * float(d) ** (i - n)

            # S_f(w) D^2 = (f''' f' - 1.5 f''^2) (D/f')^2, so a tiny f'(w)
            # near a critical point at 0 never overflows
            q = sc.mul(D, sc.from_complex(1 / f1))
            s_small = sc.ldexp_c((f3 * f1 - 1.5 * f2 * f2) * q[0] * q[0] / d2n[0], 2 * q[1] - d2n[1])
            n_small = sc.ldexp_c(f2 * q[0] / dn[0], q[1] - dn[1])

            s_term = np.where(big, s_big, s_small)
            s_sum = s_sum + s_term
            n_sum = n_sum + np.where(big, n_big, n_small)
            s_last = s_term

            if record:
                trace.orbit.append(w_rec)
                trace.deriv.append(D_rec)
                trace.ratio.append(complex(u[0]) if big[0] else _small_ratio(D, w, dpow))
                fp = w_rec ** (d - 1) * scaled_from(F1t[0]) if big[0] else scaled_from(f1[0])
                w_rec = w_rec**d * scaled_from(Pt[0]) if big[0] else scaled_from(f0[0])
                D_rec = D_rec * fp

            dpow = sc.mul(dpow, dscaled)
            # small -> next
            w_s = f0
            D_s = sc.mul(D, sc.from_complex(f1))
            # big -> next
            t_b = t**d / Pt
            u_b = u * F1t / (d * Pt)

            big_next = np.where(big, np.abs(t_b) < 1, np.abs(w_s) > 1)
            to_big = big_next & ~big
            to_small = ~big_next & big

            t_new = np.where(big, t_b, 1 / np.where(to_big, w_s, 1))
            u_from_small = sc.ldexp_c(D_s[0] / (dpow[0] * np.where(to_big, w_s, 1)), D_s[1] - dpow[1])
            u_new = np.where(big, u_b, u_from_small)
            # big -> small: f(w) = P(t)/t^d and (f^{i+1})' = u d^i F1(t)/t^d,
            # formed without dividing by P(t), which may vanish
            inv_t = 1 / np.where(to_small, t, 1)
            w_new = np.where(big, Pt * inv_t**d, w_s)
            D_from_big = sc.mul(sc.mul(sc.from_complex(u * F1t / d), dpow), sc.power(sc.from_complex(inv_t), d))
            D = _select(to_small, D_from_big, D_s)

            big = big_next
            t = np.where(big, t_new, 0)
            u = np.where(big, u_new, 0)
            w = np.where(big, 0, w_new)

    bad = pole >= 0
    s_sum = np.where(bad, np.nan, s_sum).reshape(shape)
    n_sum = np.where(bad, np.nan, n_sum).reshape(shape)
    return _KernelOut(s_sum, n_sum, np.abs(s_last).reshape(shape), pole.reshape(shape), trace)


def _small_ratio(D, w, dpow):
    if w[0] == 0:
        return complex("nan")
    return complex(sc.ldexp_c(D[0][0] / (dpow[0] * w[0]), D[1][0] - dpow[1]))


def normalized_schwarzian(f: Poly, n: int, z, threshold=SINGULAR_THRESHOLD):
    """Array form of ``S_{f^n}(z) / d**(2n)``; NaN where the orbit meets Crit(f)."""
    return _orbit_kernel(f, n, z, threshold).s_sum


def normalized_nonlinearity(f: Poly, n: int, z, threshold=SINGULAR_THRESHOLD):
    return _orbit_kernel(f, n, z, threshold).n_sum


def _scalar_kernel(f, n, z, threshold, record=False):
    out = _orbit_kernel(f, n, np.asarray(complex(z)), threshold, record)
    i = int(out.pole_index)
    if i >= 0:
        raise PoleError(f"orbit of z={z} hits a critical point of f at step {i}", index=i)
    if not (np.isfinite(out.s_sum) and np.isfinite(out.n_sum)):
        raise NumericFailure(f"normalized sum overflowed at z={z}, n={n}")
    return out


def schwarzian_iterate_normalized(f: Poly, n: int, z: complex, threshold: float = SINGULAR_THRESHOLD) -> SchwarzianEstimate:
    out = _scalar_kernel(f, n, z, threshold)
    return SchwarzianEstimate(n, complex(out.s_sum), n, float(out.s_last))


def nonlinearity_iterate_normalized(f: Poly, n: int, z: complex, threshold: float = SINGULAR_THRESHOLD) -> complex:
    """``N_{f^n}(z) / d**n``; tends to ``2 dG/dz`` on the basin of infinity."""
    return complex(_scalar_kernel(f, n, z, threshold).n_sum)


def third_derivative_ratio(f: Poly, n: int, z: complex, threshold: float = SINGULAR_THRESHOLD) -> complex:
    """``(f^n)''' / (d**(2n) (f^n)')``, assembled from the two normalized sums."""
    out = _scalar_kernel(f, n, z, threshold)
    nn = complex(out.n_sum)
    return complex(out.s_sum) + 1.5 * nn * nn


def orbit_accumulator(f: Poly, n: int, z: complex, threshold: float = SINGULAR_THRESHOLD) -> OrbitAccumulator:
    """Orbit, derivative and ratio sequences for i = 0..n-1."""
    return _scalar_kernel(f, n, z, threshold, record=True).trace


def cocycle_residual(f: Poly, g: Poly, z: complex) -> float:
    fg = compose(f, g)
    lhs = schwarzian_value(fg, z)
    gz, g1 = eval_derivs(g, complex(z), 1)
    rhs = schwarzian_value(f, gz) * g1 * g1 + schwarzian_value(g, z)
    return abs(lhs - rhs) / (1 + abs(lhs))


def laurent_coeff_pole2(f: Poly, p: complex, radius: float | None = None, samples: int = LAURENT_SAMPLES) -> complex:
    """Coefficient of ``(z-p)**-2`` in S_f at the critical point ``p``.

    Trapezoid rule on the circle ``|z-p| = radius``; for a critical point
    of order k the exact value is ``(1 - k**2) / 2``.
    """
    crit = critical_points(f)
    locs = np.array([c.location for c in crit])
    dist = np.abs(locs - p)
    j = int(np.argmin(dist))
    if dist[j] > 1e-6 * (1 + abs(p)):
        raise DomainError(f"{p} is not a critical point of f")
    others = np.delete(dist, j)
    if radius is None:
        radius = min(0.5 * others.min(), 1e-2) if others.size else 1e-2
    elif others.size and others.min() <= radius:
        raise DomainError("another critical point lies inside the contour")
    h = radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    _, f1, f2, f3 = eval_derivs(f, p + h, 3)
    nl = f2 / f1
    s = f3 / f1 - 1.5 * nl * nl
    return complex(np.mean(s * h * h))
