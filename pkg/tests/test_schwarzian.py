import mpmath as mp
import numpy as np
import pytest
import sympy as sp

from conftest import random_poly
from schwz import (
    AffineMap,
    DomainError,
    PoleError,
    Poly,
    apply_affine,
    cocycle_residual,
    eval_derivs,
    green_eval,
    iterate,
    laurent_coeff_pole2,
    nonlinearity_iterate_normalized,
    nonlinearity_value,
    normalized_schwarzian,
    orbit_accumulator,
    scaled_from,
    scaled_mul,
    schwarzian_iterate_normalized,
    schwarzian_value,
    third_derivative_ratio,
)

Z = sp.symbols("z")


def sympy_schwarzian(expr, z0):
    d1, d2, d3 = (sp.diff(expr, Z, k) for k in (1, 2, 3))
    s = d3 / d1 - sp.Rational(3, 2) * (d2 / d1) ** 2
    return complex(sp.nsimplify(s.subs(Z, sp.nsimplify(z0))))


# -- single-map values ----------------------------------------------------------

def test_schwarzian_value_examples():
    assert schwarzian_value(Poly([0, 0, 1]), 1) == -1.5
    assert schwarzian_value(Poly([1, 3]), 0.7 + 2j) == 0
    assert schwarzian_value(Poly([0, 0, 0, 1]), 2) == pytest.approx(sympy_schwarzian(Z**3, 2))
    assert sympy_schwarzian(Z**3, 2) == -1.0


def test_nonlinearity_value_examples():
    assert nonlinearity_value(Poly([0, 0, 1]), 2) == 0.5
    assert nonlinearity_value(Poly([4, -2]), 1 + 1j) == 0
    assert nonlinearity_value(Poly([0, 0, 0, 1]), 1) == 2.0


def test_value_pole_errors():
    with pytest.raises(PoleError):
        schwarzian_value(Poly([0, 0, 1]), 0)
    with pytest.raises(PoleError):
        nonlinearity_value(Poly([0, -3, 0, 1]), -1)


# -- normalized iterate sums -----------------------------------------------------

def test_iterate_examples():
    assert schwarzian_iterate_normalized(Poly([0, 0, 1]), 3, 2).value == pytest.approx(-0.123046875, rel=1e-15)
    assert schwarzian_iterate_normalized(Poly([0, 0, 0, 1]), 2, 1).value == pytest.approx((1 - 81) / 162, rel=1e-15)


def test_iterate_n1_is_scaled_value():
    # the n = 1 sum is S_f(3)/d^2; sympy gives S_f(3) = -1/6
    f = Poly([-6, 0, 1])
    exact = sympy_schwarzian(Z**2 - 6, 3)
    assert exact == pytest.approx(-1 / 6)
    est = schwarzian_iterate_normalized(f, 1, 3)
    assert est.value == pytest.approx(exact / 4, rel=1e-15)
    assert est.value == pytest.approx(-1 / 24, rel=1e-15)


def test_estimate_fields():
    est = schwarzian_iterate_normalized(Poly([-6, 0, 1]), 7, 2 + 1j)
    assert est.n == 7 and est.terms_used == 7
    assert est.tail_bound >= 0


def test_nonlinearity_examples():
    sq = Poly([0, 0, 1])
    assert nonlinearity_iterate_normalized(sq, 3, 2) == pytest.approx(0.4375, rel=1e-15)
    assert nonlinearity_iterate_normalized(sq, 10, 2) == pytest.approx(1023 / 2048, rel=1e-15)


def test_translation_conjugation_covariance():
    f = Poly([-6, 0, 1])
    A = AffineMap(1, 1)
    g = apply_affine(f, A, A.inverse())
    z = 0.4 + 2.1j
    assert nonlinearity_iterate_normalized(g, 6, z) == pytest.approx(nonlinearity_iterate_normalized(f, 6, A(z)), rel=1e-12)
    assert third_derivative_ratio(g, 6, z) == pytest.approx(third_derivative_ratio(f, 6, A(z)), rel=1e-12)


def test_scaling_conjugation_covariance():
    # for g = A^-1 f A the one-form picks up a and the quadratic differential a^2
    f = Poly([-6, 0, 1])
    A = AffineMap(2 - 1j, 0.5)
    g = apply_affine(f, A, A.inverse())
    z = 0.4 + 1.1j
    lhs = nonlinearity_iterate_normalized(g, 5, z)
    assert lhs == pytest.approx(A.a * nonlinearity_iterate_normalized(f, 5, A(z)), rel=1e-10)
    s_g = schwarzian_iterate_normalized(g, 5, z).value
    assert s_g == pytest.approx(A.a**2 * schwarzian_iterate_normalized(f, 5, A(z)).value, rel=1e-10)


def test_third_derivative_ratio():
    sq = Poly([0, 0, 1])
    assert third_derivative_ratio(sq, 4, 2) == pytest.approx(15 * 14 / 4 / 256, rel=1e-14)
    assert third_derivative_ratio(sq, 40, 2) == pytest.approx(0.25, rel=1e-12)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("n", range(1, 7))
def test_power_map_closed_form(d, n, rng):
    f = Poly([0] * d + [1])
    r = rng.uniform(0.5, 3, 20) * np.exp(2j * np.pi * rng.uniform(size=20))
    D = float(d) ** (2 * n)
    expected = (1 - D) / (2 * D * r**2)
    for z, e in zip(r, expected):
        assert schwarzian_iterate_normalized(f, n, z).value == pytest.approx(e, rel=1e-12)


def test_power_map_closed_form_nonlinearity(rng):
    for d in (2, 3):
        f = Poly([0] * d + [1])
        for n in range(1, 8):
            z = complex(*rng.uniform(-2, 2, 2))
            expected = (d**n - 1) / (d**n * z)
            assert nonlinearity_iterate_normalized(f, n, z) == pytest.approx(expected, rel=1e-12)


def test_no_overflow_for_large_n():
    est = schwarzian_iterate_normalized(Poly([0, 0, 1]), 200, 2)
    assert est.value == pytest.approx(-1 / 8, rel=1e-14)
    est = schwarzian_iterate_normalized(Poly([-6, 0, 1]), 300, 0.3 + 0.1j)
    assert np.isfinite(est.value)


def _mp_iterate_coeffs(f, n):
    """Ascending coefficients of f^n, expanded exactly in 60-digit arithmetic."""
    c = [mp.mpc(complex(a)) for a in f.coeffs]
    g = [mp.mpc(0), mp.mpc(1)]
    for _ in range(n):
        acc = [c[-1]]
        for a in c[-2::-1]:
            new = [mp.mpc(0)] * (len(acc) + len(g) - 1)
            for i, x in enumerate(acc):
                for j, y in enumerate(g):
                    new[i + j] += x * y
            new[0] += a
            acc = new
        g = acc
    return g


def _mp_schwarzian(coeffs, z):
    d = [coeffs]
    for _ in range(3):
        d.append([i * d[-1][i] for i in range(1, len(d[-1]))])
    f1, f2, f3 = (mp.polyval(p[::-1], z) for p in d[1:])
    return f3 / f1 - mp.mpf(1.5) * (f2 / f1) ** 2


@pytest.mark.parametrize("seed", range(4))
def test_sum_matches_explicit_composition(seed):
    # Oracle: S of the expanded iterate. Double-precision expansion loses up
    # to 1e-5 to cancellation, so the oracle is evaluated at 60 digits.
    rng = np.random.default_rng(seed)
    f = random_poly(rng, 2, scale=0.7)
    with mp.workdps(60):
        for n in range(1, 7):
            coeffs = _mp_iterate_coeffs(f, n)
            for _ in range(100 // 6):
                z = complex(*rng.normal(size=2))
                exact = complex(_mp_schwarzian(coeffs, mp.mpc(z)) / 4**n)
                got = schwarzian_iterate_normalized(f, n, z).value
                assert abs(got - exact) <= 1e-9 * abs(exact)


def test_sum_matches_double_composition_when_well_conditioned():
    f = Poly([-6, 0, 1])
    for n in range(1, 5):
        fn = iterate(f, n)
        for z in (0.7 + 0.4j, 1.3 - 0.2j, 2.2 + 1j):
            explicit = schwarzian_value(fn, z) / 4.0**n
            assert schwarzian_iterate_normalized(f, n, z).value == pytest.approx(explicit, rel=1e-9)


def test_vectorized_matches_scalar(rng):
    f = Poly([-6, 0, 1])
    z = rng.normal(size=(4, 5)) * 2 + 1j * rng.normal(size=(4, 5))
    arr = normalized_schwarzian(f, 9, z)
    assert arr.shape == (4, 5)
    assert arr[2, 3] == schwarzian_iterate_normalized(f, 9, z[2, 3]).value


def test_tiny_derivative_near_superattracting_point():
    # z^3 at |z| = 0.5: w_5 = z^243, so f'(w_5) ~ 1e-146 while the term stays finite
    f = Poly([0, 0, 0, 1])
    for z in (0.5, 0.501j, -0.55 + 0.1j):
        est = schwarzian_iterate_normalized(f, 6, z)
        assert est.value == pytest.approx((1 - 3.0**12) / (2 * 3.0**12 * z * z), rel=1e-12)
    # z^5 underflows f'(w) into the subnormal range: treated as a pole
    with pytest.raises(PoleError):
        schwarzian_iterate_normalized(Poly([0] * 5 + [1]), 6, 1e-20)


def test_pole_index():
    f = Poly([-6, 0, 1])
    with pytest.raises(PoleError) as exc:
        schwarzian_iterate_normalized(f, 4, 0)
    assert exc.value.index == 0
    # 2 -> 0 exactly under z^2 - 4; a rounded sqrt(6) would not hit 0
    with pytest.raises(PoleError) as exc:
        schwarzian_iterate_normalized(Poly([-4, 0, 1]), 4, 2)
    assert exc.value.index == 1
    assert np.isnan(normalized_schwarzian(f, 4, np.array([0.0, 1.0]))[0])


def test_derived_limit_constants():
    # N/d^n -> 2g and (f^n)'''/(d^{2n}(f^n)') -> 4g^2 on the basin, error ~ d^-n
    f = Poly([-6, 0, 1])
    z = 2 + 1j
    g = green_eval(f, z).dgreen
    assert nonlinearity_iterate_normalized(f, 60, z) == pytest.approx(2 * g, rel=1e-12)
    assert third_derivative_ratio(f, 60, z) == pytest.approx(4 * g * g, rel=1e-12)


def test_limit_identity_under_f(rng):
    # d^2 (-2 g(z)^2) = f'(z)^2 (-2 g(f z)^2)
    for _ in range(20):
        f = random_poly(rng, int(rng.integers(2, 5)))
        z = 3 * complex(*rng.normal(size=2))
        ge = green_eval(f, z)
        if not ge.escaped:
            continue
        fz, f1 = eval_derivs(f, z, 1)
        lhs = f.degree**2 * (-2 * ge.dgreen**2)
        rhs = f1**2 * (-2 * green_eval(f, fz).dgreen ** 2)
        assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


# -- orbit bookkeeping ------------------------------------------------------------

def test_orbit_accumulator_bounded_orbit():
    f = Poly([0.25, 0, 1])  # real axis orbit of 0.1 stays in [0, 1/2]
    acc = orbit_accumulator(f, 12, 0.1)
    assert len(acc.orbit) == len(acc.deriv) == len(acc.ratio) == 12
    for i in range(11):
        w = complex(acc.orbit[i])
        step = scaled_mul(acc.deriv[i], scaled_from(eval_derivs(f, w, 1)[1]))
        assert step == acc.deriv[i + 1]
        assert np.isfinite(acc.ratio[i])


def test_orbit_accumulator_escaping_orbit():
    f = Poly([-6, 0, 1])
    acc = orbit_accumulator(f, 40, 2 + 1j)
    for i in range(39):
        w = acc.orbit[i]
        fprime = scaled_mul(scaled_from(2), w)
        ratio = acc.deriv[i + 1].log_abs() - (acc.deriv[i] * fprime).log_abs()
        assert abs(ratio) < 1e-12
        assert np.isfinite(acc.ratio[i])
    g = green_eval(f, 2 + 1j).dgreen
    assert acc.ratio[-1] == pytest.approx(2 * g, rel=1e-12)


# -- cocycle and poles ---------------------------------------------------------------

def test_cocycle_examples():
    sq = Poly([0, 0, 1])
    assert cocycle_residual(sq, sq, 2) < 1e-10
    assert cocycle_residual(Poly([-6, 0, 1]), Poly([0, -3, 0, 1]), 1.7) < 1e-9
    f = Poly([1 - 2j, 0.3, 0, 2])
    A = Poly([0.5, 2 + 1j])
    assert cocycle_residual(f, A, 0.3 - 0.4j) < 1e-12


def test_cocycle_random():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(300):
        f = random_poly(rng, int(rng.integers(2, 5)))
        g = random_poly(rng, int(rng.integers(2, 5)))
        z = complex(*rng.normal(size=2))
        worst = max(worst, cocycle_residual(f, g, z))
    assert worst < 1e-9


@pytest.mark.parametrize(
    "coeffs, p, expected",
    [
        ([0, 0, 0, 1], 0, -4.0),
        ([0, 0, 1], 0, -1.5),
        ([0, -3, 0, 1], 1, -1.5),
        ([0, -3, 0, 1], -1, -1.5),
        ([0, 0, 0, 0, 1], 0, -7.5),
    ],
)
def test_laurent_coefficients(coeffs, p, expected):
    assert laurent_coeff_pole2(Poly(coeffs), p) == pytest.approx(expected, abs=1e-8)


def test_laurent_domain_errors():
    f = Poly([0, -3, 0, 1])
    with pytest.raises(DomainError):
        laurent_coeff_pole2(f, 0.5)
    with pytest.raises(DomainError):
        laurent_coeff_pole2(f, 1, radius=2.5)
