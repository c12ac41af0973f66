import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from lspqe import specfun

mpmath.mp.dps = 120

ARGS = [1e-3, 0.3, 1.0 + 0.5j, 4.2, 10 + 1j, 37.5, 0.05 + 2j, 99.0, 3 + 20j]


def mp_jn(n, z):
    z = mpmath.mpc(z)
    return complex(mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.besselj(n + 0.5, z))


def mp_h1n(n, z):
    z = mpmath.mpc(z)
    return complex(mpmath.sqrt(mpmath.pi / (2 * z)) * mpmath.hankel1(n + 0.5, z))


@pytest.mark.parametrize("z", ARGS)
def test_jn_matches_high_precision(z):
    nmax = 40
    got = specfun.spherical_jn_all(nmax, z)
    for n in (0, 1, 2, 5, 17, 40):
        ref = mp_jn(n, z)
        assert abs(got[n] - ref) <= 1e-12 * abs(ref) + 1e-300


@pytest.mark.parametrize("z", [a for a in ARGS if abs(a) > 0.2])
def test_h1n_matches_high_precision(z):
    nmax = 25
    got = specfun.spherical_h1n_all(nmax, z)
    for n in (0, 1, 3, 10, 25):
        ref = mp_h1n(n, z)
        assert abs(got[n] - ref) <= 1e-12 * abs(ref)


def test_real_argument_agrees_with_scipy():
    x = np.linspace(0.01, 60, 500)
    for n in (0, 1, 4, 12, 30):
        j = specfun.spherical_jn_all(n, x)[n]
        h = specfun.spherical_h1n_all(n, x)[n]
        np.testing.assert_allclose(j.real, special.spherical_jn(n, x), rtol=1e-10, atol=1e-300)
        np.testing.assert_allclose(h.imag, special.spherical_yn(n, x), rtol=1e-10)


@pytest.mark.parametrize("z", [0.7, 2.0 + 0.3j, 15.0, 8 + 5j])
def test_wronskian(z):
    # j_n y_{n-1} - j_{n-1} y_n = 1/z^2 with y_n = (h_n - j_n)/i
    j = specfun.spherical_jn_all(30, z)
    y = (specfun.spherical_h1n_all(30, z) - j) / 1j
    n = np.arange(1, 31)
    lhs = j[n] * y[n - 1] - j[n - 1] * y[n]
    np.testing.assert_allclose(lhs, 1 / z**2, rtol=1e-9)


def test_scalar_helpers_return_complex():
    assert isinstance(specfun.spherical_jn(3, 2.0), complex)
    assert isinstance(specfun.spherical_h1n(3, 2.0), complex)
    assert specfun.spherical_jn(0, 0.0) == 1.0


def test_small_argument_j1_has_no_cancellation():
    z = 1e-3
    assert specfun.spherical_jn(1, z).real == pytest.approx(mp_jn(1, z).real, rel=1e-14)


@pytest.mark.parametrize("z", [1e-3, 0.02, 1.3 + 0.2j, 12.0])
def test_scaled_ladders(z):
    n = np.arange(31)
    df_odd = np.array([math.prod(range(2 * k + 1, 0, -2)) for k in n], dtype=float)
    df_prev = np.array([math.prod(range(2 * k - 1, 0, -2)) for k in n], dtype=float)
    J = specfun.scaled_jn_all(30, z)
    H = specfun.scaled_h1n_all(30, z)
    for k in (1, 4, 12, 30):
        assert J[k] == pytest.approx(mp_jn(k, z) * df_odd[k] / z**k, rel=1e-11)
        assert H[k] == pytest.approx(mp_h1n(k, z) * z ** (k + 1) / df_prev[k], rel=1e-11)


@pytest.mark.parametrize("z", [0.4, 3.0 + 1j, 20.0])
def test_riccati_derivatives_by_finite_difference(z):
    eps = 1e-5
    for n in (0, 1, 6, 15):
        dj, dh = specfun.riccati_derivatives(n, z)

        def fj(x):
            return x * specfun.spherical_jn(n, x)

        def fh(x):
            return x * specfun.spherical_h1n(n, x)

        fd_j = (fj(z + eps) - fj(z - eps)) / (2 * eps)
        fd_h = (fh(z + eps) - fh(z - eps)) / (2 * eps)
        assert dj == pytest.approx(fd_j, rel=1e-7, abs=1e-12)
        assert dh == pytest.approx(fd_h, rel=1e-7)


def _p0_fraction(n, m):
    """P_n^m(0) from the exact three-term recurrence in n."""
    pmm = Fraction((-1) ** m * math.prod(range(2 * m - 1, 0, -2)))
    if n == m:
        return pmm
    prev, cur = pmm, Fraction(0)  # P_m^m(0), P_{m+1}^m(0)
    for k in range(m + 1, n):
        prev, cur = cur, Fraction(-(k + m), k - m + 1) * prev
    return cur


@pytest.mark.parametrize("n", range(0, 16))
def test_legendre_at_zero_exact(n):
    for m in range(n + 1):
        assert specfun.legendre_p0_squared(n, m) == pytest.approx(float(_p0_fraction(n, m) ** 2), rel=1e-13)


def test_legendre_against_scipy():
    for n in range(12):
        for m in range(n + 1):
            assert specfun.legendre_p0_squared(n, m) == pytest.approx(special.lpmv(m, n, 0.0) ** 2, rel=1e-10, abs=1e-14)


@pytest.mark.parametrize("n,m", [(1, 0), (1, 1), (2, 2), (5, 3), (10, 0), (12, 7)])
def test_cmn_exact(n, m):
    exact = Fraction((2 - (m == 0)) * n * (n + 1) * (2 * n + 1) * math.factorial(n - m), math.factorial(n + m))
    assert specfun.cmn_coefficient(n, m) == pytest.approx(float(exact), rel=1e-13)


def test_multipole_weight_rows_sum():
    # addition theorem: sum_m (2 - d_m0) (n-m)!/(n+m)! P_n^m(0)^2 = P_n(1) = 1
    w = specfun.multipole_weights(120)
    n = np.arange(1, 121)
    np.testing.assert_allclose(w[1:].sum(axis=1), n * (n + 1) * (2 * n + 1), rtol=1e-12)
    assert np.all(w >= 0)


def test_errors():
    with pytest.raises(specfun.UnsupportedOrderError):
        specfun.spherical_jn_all(specfun.NMAX_SUPPORTED + 1, 1.0)
    with pytest.raises(specfun.SpecialFunctionDomainError):
        specfun.spherical_jn(-1, 1.0)
    with pytest.raises(specfun.SpecialFunctionDomainError):
        specfun.spherical_jn(2, np.inf)
    with pytest.raises(specfun.SpecialFunctionDomainError):
        specfun.riccati_derivatives(2, 0.0)
    with pytest.raises(specfun.SpecialFunctionDomainError):
        specfun.legendre_p0_squared(2, 3)


@given(st.floats(0.1, 80), st.floats(0, 5), st.integers(1, 60))
def test_recurrence_property(x, y, n):
    z = complex(x, y)
    j = specfun.spherical_jn_all(n + 1, z)
    h = specfun.spherical_h1n_all(n + 1, z)
    for f in (j, h):
        lhs = f[n - 1] + f[n + 1]
        rhs = (2 * n + 1) / z * f[n]
        assert abs(lhs - rhs) <= 1e-8 * (abs(f[n - 1]) + abs(f[n + 1]) + abs(rhs))


@given(st.floats(0.01, 50))
def test_real_argument_jn_is_real(x):
    j = specfun.spherical_jn_all(20, x)
    assert np.all(np.abs(j.imag) <= 1e-14 * np.maximum(np.abs(j.real), 1e-300))
