import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from sar2d import DomainError
from sar2d.params import (ALL_FLIPS, CHECKERBOARD, COL_FLIP, IDENTITY, ROW_FLIP, Params,
                          RegionTag, SitePhase, apply_flip, canonicalize, classify)
from sar2d.simulate import Field, NoiseSpec, draw_noise, simulate_recursion

from oracles import barycentric_inside

unit = st.floats(-0.999, 0.999, allow_nan=False)


@pytest.mark.parametrize("p, tag", [
    ((0.2, 0.3, 0.1), RegionTag.STABLE),
    ((1, 1, -1), RegionTag.VERTEX),
    ((1, 0.5, -0.5), RegionTag.EDGE1),
    ((0.3, 0.5, 0.2), RegionTag.FACE_PLUS),
    ((0.6, -0.2, 0.6), RegionTag.FACE_MINUS),
])
def test_classify_examples(p, tag):
    r = classify(Params(*p), 1e-12)
    assert r.tag is tag
    assert r.tolerance == 1e-12


def test_classify_more_strata():
    assert classify(Params(0.4, 1, -0.4)).tag is RegionTag.EDGE2
    assert classify(Params(-0.4, -1, -0.4)).tag is RegionTag.EDGE2
    assert classify(Params(0.5, -0.5, 1)).tag is RegionTag.EDGE3
    assert classify(Params(0.5, 0.5, -1)).tag is RegionTag.EDGE3
    assert classify(Params(0.6, 0.6, 0.2)).tag is RegionTag.OUTSIDE
    assert classify(Params(2, 0, 0)).tag is RegionTag.OUTSIDE
    assert classify(Params(1, 0.5, 0.5)).tag is RegionTag.OUTSIDE


def test_classify_tolerance_controls_membership():
    p = Params(0.3, 0.5, 0.2 + 1e-9)
    assert classify(p, 1e-12).tag is RegionTag.OUTSIDE
    assert classify(p, 1e-8).tag is RegionTag.FACE_PLUS
    q = Params(0.3, 0.5, 0.2 - 1e-9)
    assert classify(q, 1e-12).tag is RegionTag.STABLE
    assert classify(q, 1e-8).tag is RegionTag.FACE_PLUS


def test_classify_rejects_negative_tol():
    with pytest.raises(DomainError):
        classify(Params(0, 0, 0), -1.0)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf, "x"])
def test_params_must_be_finite(bad):
    with pytest.raises(DomainError):
        Params(bad, 0, 0)


def test_vertices():
    for v in [(1, 1, -1), (1, -1, 1), (-1, 1, 1), (-1, -1, -1)]:
        assert classify(Params(*v)).tag is RegionTag.VERTEX


def test_random_interior_points_are_stable():
    rng = np.random.default_rng(1)
    found = 0
    while found < 1000:
        p = rng.uniform(-1, 1, 3)
        if barycentric_inside(p):
            assert classify(Params(*p)).tag is RegionTag.STABLE
            found += 1
        else:
            assert classify(Params(*p)).tag is RegionTag.OUTSIDE


def _with_random_flip(rng, p):
    return ALL_FLIPS[rng.integers(4)].apply(p)


def test_parametrized_strata():
    rng = np.random.default_rng(2)
    for _ in range(100):
        t = rng.uniform(-0.99, 0.99)
        assert classify(Params(1, t, -t)).tag is RegionTag.EDGE1
        assert classify(Params(-1, t, t)).tag is RegionTag.EDGE1
        assert classify(Params(t, 1, -t)).tag is RegionTag.EDGE2
        assert classify(Params(t, -1, t)).tag is RegionTag.EDGE2
        assert classify(Params(t, -t, 1)).tag is RegionTag.EDGE3
        assert classify(Params(t, t, -1)).tag is RegionTag.EDGE3
        # F+: canonical face points (gamma of either sign), then any flip
        a, b = rng.uniform(0.01, 0.99, 2)
        if abs(1 - a - b) < 0.99:
            assert classify(_with_random_flip(rng, Params(a, b, 1 - a - b))).tag is RegionTag.FACE_PLUS
        # F-: |a| - |b| + |c| = 1 with a*b*c < 0
        a = rng.uniform(0.02, 0.98)
        b = rng.uniform(0.01, a)
        q = Params(a, -b, 1 - a + b)
        if abs(q.gamma) < 0.99:
            assert classify(_with_random_flip(rng, q)).tag is RegionTag.FACE_MINUS


@given(unit, unit, unit)
def test_classify_invariant_under_canonicalize(a, b, c):
    p = Params(a, b, c)
    assert classify(canonicalize(p)[0]).tag is classify(p).tag
    for f in ALL_FLIPS:
        assert classify(f.apply(p)).tag is classify(p).tag


@pytest.mark.parametrize("p, canon, flip", [
    ((0.3, 0.5, 0.2), (0.3, 0.5, 0.2), IDENTITY),
    ((-0.3, -0.5, 0.2), (0.3, 0.5, 0.2), CHECKERBOARD),
    ((-0.3, 0.5, -0.2), (0.3, 0.5, 0.2), ROW_FLIP),
    ((0.3, -0.5, -0.2), (0.3, 0.5, 0.2), COL_FLIP),
])
def test_canonicalize_examples(p, canon, flip):
    c, f = canonicalize(Params(*p))
    assert c == Params(*canon)
    assert f == flip
    assert f.apply(c) == Params(*p)


def test_flip_fields():
    assert (CHECKERBOARD.d1, CHECKERBOARD.d2, CHECKERBOARD.d3) == (-1, -1, 1)
    assert CHECKERBOARD.site_phase is SitePhase.CHECKERBOARD
    assert (ROW_FLIP.d1, ROW_FLIP.d2, ROW_FLIP.d3) == (-1, 1, -1)


@given(unit, unit, unit)
def test_canonicalize_post(a, b, c):
    p = Params(a, b, c)
    canon, f = canonicalize(p)
    assert canon.alpha >= 0 and canon.beta >= 0
    assert f.apply(canon) == p
    assert (abs(canon.alpha), abs(canon.beta), abs(canon.gamma)) == (abs(a), abs(b), abs(c))


def test_flip_composition_is_identity():
    for f in ALL_FLIPS:
        assert f.compose(f) == IDENTITY
        assert np.array_equal(f.phase(5, 6) * f.phase(5, 6), np.ones((6, 7)))


def test_apply_flip_examples():
    zero = Field(np.zeros((4, 5)))
    for f in ALL_FLIPS:
        assert apply_flip(zero, f) == zero
    x = np.zeros((4, 5))
    x[1:, 1:] = np.arange(1, 13).reshape(3, 4)
    fld = apply_flip(Field(x), CHECKERBOARD)
    assert fld.x[2, 3] == -x[2, 3]
    assert fld.x[2, 2] == x[2, 2]
    assert apply_flip(Field(x), ROW_FLIP).x[1, 2] == -x[1, 2]
    assert apply_flip(Field(x), COL_FLIP).x[1, 2] == x[1, 2]


def test_apply_flip_needs_finite_field():
    x = np.zeros((3, 3))
    x[1, 1] = np.inf
    with pytest.raises(DomainError):
        apply_flip(Field(x), CHECKERBOARD)


@given(st.integers(0, 2 ** 32), st.integers(1, 12), st.integers(1, 12))
def test_apply_flip_involution(seed, n, m):
    rng = np.random.default_rng(seed)
    x = np.zeros((n + 1, m + 1))
    x[1:, 1:] = rng.standard_normal((n, m))
    fld = Field(x)
    for f in ALL_FLIPS:
        assert np.array_equal(apply_flip(apply_flip(fld, f), f).x, fld.x)


@pytest.mark.parametrize("flip", ALL_FLIPS)
def test_simulate_then_flip_equals_flipped_simulation(flip):
    p = Params(0.3, 0.5, 0.2)
    eps = draw_noise(NoiseSpec("Gaussian", 9), 12, 9).eps
    phase = flip.phase(12, 9)[1:, 1:]
    lhs = apply_flip(simulate_recursion(p, eps), flip)
    rhs = simulate_recursion(flip.apply(p), eps * phase)
    assert np.array_equal(lhs.x, rhs.x)
