"""Complex numbers with a separate binary exponent.

Orbit values and derivative products of polynomial iterates grow doubly
exponentially, far past the double-precision range. A value is carried as
``mantissa * 2**exp2`` with ``1 <= |mantissa| < 2`` (or mantissa 0, exp2 0).

The array helpers (``renorm``, ``mul``, ``power``, ``to_complex``) operate
on ``(mantissa, exp2)`` pairs of numpy arrays and back the vectorized orbit
kernels; :class:`ScaledComplex` is the scalar face of the same arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

#: exponent gap beyond which a ratio is reported as a sentinel
RATIO_EXP_LIMIT = 500
OVERFLOW = complex(float("inf"), float("inf"))
UNDERFLOW = 0j

_EXP_CLIP = 4000


def ldexp_c(m, e):
    """``m * 2**e`` for complex ``m`` (numpy's ldexp is real-only)."""
    e = np.clip(e, -_EXP_CLIP, _EXP_CLIP)
    return np.ldexp(np.real(m), e) + 1j * np.ldexp(np.imag(m), e)


def renorm(m, e):
    """Bring mantissas into ``[1, 2)`` in modulus, adjusting exponents."""
    m = np.asarray(m, dtype=complex)
    e = np.asarray(e, dtype=np.int64)
    frac, ex = np.frexp(np.abs(m))
    finite = np.isfinite(frac) & (frac != 0)
    shift = np.where(finite, ex.astype(np.int64) - 1, 0)
    m = np.where(finite, ldexp_c(m, -shift), m)
    e = np.where(frac == 0, 0, e + shift)
    return m, e


def from_complex(c):
    return renorm(c, np.zeros(np.shape(c), dtype=np.int64))


def mul(x, y):
    return renorm(x[0] * y[0], x[1] + y[1])


def power(x, k: int):
    """``x**k`` for integer ``k >= 0`` by repeated squaring."""
    m, e = x
    result = (np.ones_like(m), np.zeros_like(e))
    base = (m, e)
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def to_complex(x, limit=None):
    """Plain complex value; saturates to inf / 0 outside double range."""
    m, e = x
    if limit is None:
        return ldexp_c(m, e)
    e = np.asarray(e)
    out = ldexp_c(m, e)
    out = np.where(e > limit, OVERFLOW, out)
    out = np.where(e < -limit, UNDERFLOW, out)
    return out


def _renorm_scalar(m: complex, e: int):
    a = abs(m)
    if a == 0 or not math.isfinite(a):
        return complex(m), 0 if a == 0 else e
    shift = math.frexp(a)[1] - 1
    return complex(math.ldexp(m.real, -shift), math.ldexp(m.imag, -shift)), e + shift


@dataclass(frozen=True)
class ScaledComplex:
    """Scalar scaled value; ``exp2`` is a Python int and never overflows."""

    mantissa: complex
    exp2: int

    def __post_init__(self):
        a = abs(self.mantissa)
        if a == 0:
            if self.exp2 != 0:
                raise ValueError("zero mantissa requires exp2 == 0")
        elif not (1.0 <= a < 2.0):
            raise ValueError(f"mantissa modulus {a} outside [1, 2)")

    def __mul__(self, other: ScaledComplex) -> ScaledComplex:
        return scaled_mul(self, other)

    def __pow__(self, k: int) -> ScaledComplex:
        result, base = ScaledComplex(1 + 0j, 0), self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __complex__(self) -> complex:
        try:
            return complex(math.ldexp(self.mantissa.real, self.exp2), math.ldexp(self.mantissa.imag, self.exp2))
        except OverflowError:
            return OVERFLOW

    def log_abs(self) -> float:
        """Natural log of the modulus, valid far outside double range."""
        return math.log(abs(self.mantissa)) + self.exp2 * math.log(2.0)


def scaled_from(c: complex) -> ScaledComplex:
    return ScaledComplex(*_renorm_scalar(complex(c), 0))


def scaled_mul(x: ScaledComplex, y: ScaledComplex) -> ScaledComplex:
    return ScaledComplex(*_renorm_scalar(x.mantissa * y.mantissa, x.exp2 + y.exp2))


def scaled_ratio_to_complex(x: ScaledComplex, y: ScaledComplex) -> complex:
    """``x / y`` as a plain complex.

    Exponent gaps larger than ``RATIO_EXP_LIMIT`` return :data:`OVERFLOW`
    or :data:`UNDERFLOW` instead of a value.
    """
    if y.mantissa == 0:
        raise DomainError("scaled ratio with zero denominator")
    if x.mantissa == 0:
        return 0j
    gap = x.exp2 - y.exp2
    if gap > RATIO_EXP_LIMIT:
        return OVERFLOW
    if gap < -RATIO_EXP_LIMIT:
        return UNDERFLOW
    m = x.mantissa / y.mantissa
    return complex(math.ldexp(m.real, gap), math.ldexp(m.imag, gap))
