import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sar2d import CapacityError, DomainError
from sar2d.coeffs import g_table
from sar2d.params import Params
from sar2d.simulate import (Field, NoiseMatrix, NoiseSpec, draw_noise, draw_noise_batch,
                            read_field_csv, read_noise_csv, simulate_batch, simulate_ma,
                            simulate_recursion)

from oracles import naive_field

FACE = Params(0.3, 0.5, 0.2)
coef = st.floats(-1, 1)


def test_noise_is_deterministic():
    for kind in ("Gaussian", "Rademacher", "Uniform"):
        a = draw_noise(NoiseSpec(kind, 42), 7, 5)
        b = draw_noise(NoiseSpec(kind, 42), 7, 5)
        assert a == b
        assert draw_noise(NoiseSpec(kind, 43), 7, 5) != a


@given(st.integers(0, 2 ** 64 - 1), st.integers(1, 8), st.integers(1, 8),
       st.integers(0, 5), st.integers(0, 5))
@settings(max_examples=30)
def test_noise_extension(seed, n, m, dn, dm):
    small = draw_noise(NoiseSpec("Gaussian", seed), n, m).eps
    big = draw_noise(NoiseSpec("Gaussian", seed), n + dn, m + dm).eps
    assert np.array_equal(big[:n, :m], small)


def test_noise_spec_validation():
    with pytest.raises(DomainError):
        NoiseSpec("Gaussian", -1)
    with pytest.raises(DomainError):
        NoiseSpec("Gaussian", 2 ** 64)
    with pytest.raises(DomainError):
        NoiseSpec("Cauchy", 1)
    with pytest.raises(DomainError):
        draw_noise(NoiseSpec(), 0, 3)


def test_rademacher_values():
    e = draw_noise(NoiseSpec("Rademacher", 5), 50, 40).eps
    assert set(np.unique(e)) == {-1.0, 1.0}


@pytest.mark.parametrize("kind, m4", [("Gaussian", 3.0), ("Uniform", 1.8), ("Rademacher", 1.0)])
def test_noise_moments(kind, m4):
    e = draw_noise_batch(kind, [11, 12, 13, 14], 500, 500).ravel()
    N = e.size
    m2 = np.mean(e * e)
    assert abs(e.mean()) <= 5 / np.sqrt(N)
    assert abs(m2 - 1) <= 5 * np.sqrt((m4 - 1) / N)


def test_uniform_range():
    e = draw_noise(NoiseSpec("Uniform", 3), 100, 100).eps
    assert np.all(np.abs(e) < np.sqrt(3))


def test_impulse_response_is_g():
    for p in [FACE, Params(1, 1, -1), Params(0.6, -0.2, 0.6), Params(0.1, 0.2, 0.3)]:
        eps = np.zeros((9, 7))
        eps[0, 0] = 1
        X = simulate_recursion(p, eps).x
        assert np.array_equal(X[1:, 1:], g_table(p, 8, 6).values)


def test_vertex_field_is_cumulative_sum():
    eps = draw_noise(NoiseSpec("Gaussian", 1), 20, 15).eps
    X = simulate_recursion(Params(1, 1, -1), eps).x
    assert np.allclose(X[1:, 1:], np.cumsum(np.cumsum(eps, 0), 1), atol=1e-10)


def test_zero_noise_gives_zero_field():
    X = simulate_recursion(FACE, np.zeros((4, 6)))
    assert np.all(X.x == 0) and X.x.shape == (5, 7)


@given(coef, coef, coef, st.integers(1, 9), st.integers(1, 9), st.integers(0, 2 ** 32))
def test_recursion_matches_naive_loop(a, b, c, n, m, seed):
    eps = np.random.default_rng(seed).standard_normal((n, m))
    assert np.array_equal(simulate_recursion(Params(a, b, c), eps).x, naive_field((a, b, c), eps))


@given(coef, coef, coef, st.integers(1, 12), st.integers(1, 12), st.integers(0, 2 ** 32))
def test_moving_average_equivalence(a, b, c, n, m, seed):
    p = Params(a, b, c)
    eps = np.random.default_rng(seed).standard_normal((n, m))
    X = simulate_recursion(p, eps).x
    Y = simulate_ma(p, eps).x
    scale = 1 + np.abs(simulate_recursion(Params(abs(a), abs(b), abs(c)), np.abs(eps)).x)
    assert np.all(np.abs(X - Y) <= 1e-10 * scale)


def test_moving_average_capacity():
    with pytest.raises(CapacityError):
        simulate_ma(FACE, np.zeros((101, 100)))


@given(st.integers(0, 2 ** 32), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, s, t):
    rng = np.random.default_rng(seed)
    e1, e2 = rng.standard_normal((2, 10, 8))
    lhs = simulate_recursion(FACE, s * e1 + t * e2).x
    rhs = s * simulate_recursion(FACE, e1).x + t * simulate_recursion(FACE, e2).x
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_vertex_variance_grows_like_n_squared():
    n, R = 12, 10_000
    eps = draw_noise_batch("Gaussian", np.arange(R), n, n)
    X = simulate_batch(Params(1, 1, -1), eps)[:, n, n]
    se = np.sqrt(2.0) * n * n / np.sqrt(R)
    assert abs(X.var() - n * n) <= 5 * se


def test_field_csv_roundtrip(tmp_path):
    f = simulate_recursion(FACE, draw_noise(NoiseSpec("Gaussian", 2), 4, 3).eps)
    path = tmp_path / "f.csv"
    text = f.to_csv(path)
    assert text.splitlines()[0] == "k,l,x"
    assert read_field_csv(path) == f
    assert read_field_csv(text) == f


def test_noise_csv_roundtrip(tmp_path):
    e = draw_noise(NoiseSpec("Uniform", 2), 3, 5)
    text = e.to_csv(tmp_path / "e.csv")
    assert text.splitlines()[1].startswith("1,1,")
    assert read_noise_csv(tmp_path / "e.csv") == e


def test_field_requires_zero_boundary():
    x = np.zeros((3, 3))
    x[0, 2] = 1.0
    with pytest.raises(DomainError):
        Field(x)
    with pytest.raises(DomainError):
        NoiseMatrix(np.array([[np.nan]]))


def test_explosive_simulation_does_not_raise():
    X = simulate_recursion(Params(3, 3, 3), np.ones((400, 400))).x
    assert np.isinf(X).any()
