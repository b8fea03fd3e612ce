import math

import numpy as np
import pytest

from schwz import (
    DomainError,
    Poly,
    Region,
    RegionTooSmallError,
    annulus_height,
    annulus_invariants,
    check_level,
    critical_levels,
    flux,
    green_values,
    level_components,
)

SQRT2PI = math.sqrt(2) * math.pi
QUAD6 = Poly([-6, 0, 1])
G0 = critical_levels(QUAD6)[0].green_level
BOX = Region(-5, 5, -5, 5, 320, 320)


def test_power_map_level_one():
    (c,) = level_components(Poly([0, 0, 1]), 1.0, Region(-4, 4, -4, 4, 128, 128))
    np.testing.assert_allclose(np.abs(c.vertices.vertices), math.e, rtol=1e-10)
    assert c.circumference_do == pytest.approx(SQRT2PI, abs=1e-3)
    assert c.enclosed_critical == (0,)
    assert c.local_degree == 2
    (rec,) = annulus_invariants(Poly([0, 0, 1]), 1.0, Region(-4, 4, -4, 4, 128, 128))
    assert rec.level == 1.0 and rec.local_degree == 2
    assert rec.height == math.inf


@pytest.mark.parametrize("frac, count, degree", [(0.3, 4, 1), (0.7, 2, 1), (1.4, 1, 2)])
def test_quadratic_components(frac, count, degree):
    comps = level_components(QUAD6, frac * G0, BOX)
    assert len(comps) == count
    assert all(c.local_degree == degree for c in comps)
    assert sum(c.circumference_do for c in comps) == pytest.approx(SQRT2PI, abs=1e-3)
    for c in comps:
        r = green_values(QUAD6, c.vertices.vertices)
        assert np.all(np.abs(r.green - frac * G0) < 1e-10)


def test_thin_components_are_retraced():
    # at 0.2 G0 the outer components hug the repelling fixed points +-3 and
    # are thinner than the grid; f^3 maps each with degree 1 onto the single
    # curve at 1.6 G0, so every one has circumference sqrt(2) pi / 8
    comps = level_components(QUAD6, 0.2 * G0, BOX)
    assert len(comps) == 8
    for c in comps:
        assert c.circumference_do == pytest.approx(SQRT2PI / 8, abs=1e-4)
    assert min(c.vertices.vertices.real.min() for c in comps) < -3


def test_components_sorted_by_centroid():
    comps = level_components(QUAD6, 0.3 * G0, BOX)
    keys = [(c.vertices.vertices.mean().real, c.vertices.vertices.mean().imag) for c in comps]
    assert keys == sorted(keys)


def test_only_high_levels_enclose_the_critical_point():
    assert all(c.enclosed_critical == () for c in level_components(QUAD6, 0.7 * G0, BOX))
    (c,) = level_components(QUAD6, 1.4 * G0, BOX)
    assert c.enclosed_critical == (0,)


@pytest.mark.parametrize("level", [G0, G0 / 2, 2 * G0, G0 / 8, G0 + 5e-7])
def test_critical_levels_rejected(level):
    with pytest.raises(DomainError):
        level_components(QUAD6, level, BOX)


def test_nonpositive_level_rejected():
    with pytest.raises(DomainError):
        check_level(QUAD6, 0.0)
    check_level(QUAD6, G0 + 1e-5)


def test_region_too_small():
    sq = Poly([0, 0, 1])
    with pytest.raises(RegionTooSmallError):
        level_components(sq, 1.0, Region(-2, 2, -2, 2, 64, 64))
    with pytest.raises(RegionTooSmallError):
        level_components(sq, 1.0, Region(-4, 2, -4, 4, 64, 64))


def test_flux_cubic():
    f = Poly([1 + 0.5j, -3, 0, 1])
    levels = sorted(c.green_level for c in critical_levels(f))
    assert levels[0] > 0
    region = Region(-5, 5, -5, 5, 384, 384)
    for level in (0.5 * levels[0], 0.5 * (levels[0] + levels[1]), 1.5 * levels[1]):
        assert flux(f, level, region) == pytest.approx(SQRT2PI, abs=1e-3)
    (top,) = level_components(f, 1.5 * levels[1], region)
    assert top.local_degree == 3


def _image_component(f, comp, targets):
    w = f(comp.vertices.vertices[0])
    dist = [np.abs(t.vertices.vertices - w).min() for t in targets]
    return targets[int(np.argmin(dist))]


@pytest.mark.parametrize("frac", [0.35, 0.7])
def test_level_doubling_and_circumference_relation(frac):
    d = QUAD6.degree
    low = level_components(QUAD6, frac * G0, BOX)
    high = level_components(QUAD6, d * frac * G0, BOX)
    for a in low:
        # G(f(z)) = d G(z) on every vertex
        r = green_values(QUAD6, QUAD6(a.vertices.vertices))
        assert np.all(np.abs(r.green - d * frac * G0) < 1e-9)
        b = _image_component(QUAD6, a, high)
        # f maps A onto f(A) with degree d_A, and d_o pulls back by |d g| scaling
        assert b.circumference_do == pytest.approx(d / a.local_degree * a.circumference_do, abs=1e-3)


def test_annulus_heights():
    assert annulus_height(QUAD6, 0.7 * G0) == pytest.approx(G0 / 2, rel=1e-12)
    assert annulus_height(QUAD6, 1.4 * G0) == pytest.approx(G0, rel=1e-12)
    assert annulus_height(QUAD6, 0.3 * G0) == pytest.approx(G0 / 4, rel=1e-12)
    assert annulus_height(Poly([-1, 0, 1]), 0.5) == math.inf
    recs = annulus_invariants(QUAD6, 0.7 * G0, BOX)
    assert [r.height for r in recs] == [annulus_height(QUAD6, 0.7 * G0)] * 2


@pytest.mark.parametrize("frac, n_max", [(0.2, 2), (0.3, 1), (0.45, 1), (0.7, 0)])
def test_circumference_bound(frac, n_max):
    d = QUAD6.degree
    level = frac * G0
    comps = level_components(QUAD6, level, BOX)
    n = 0
    while d ** (n + 1) * level < G0:
        n += 1
    assert n == n_max
    for c in comps:
        assert c.circumference_do <= ((d - 1) / d) ** n * SQRT2PI + 1e-3


def test_threads_do_not_change_components():
    a = level_components(QUAD6, 0.7 * G0, BOX, workers=1)
    b = level_components(QUAD6, 0.7 * G0, BOX, workers=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.vertices.vertices, y.vertices.vertices)
        assert x.circumference_do == y.circumference_do
