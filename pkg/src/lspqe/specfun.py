"""Spherical Bessel/Hankel functions of complex argument and Legendre weights.

Everything here works on whole order ladders at once: ``spherical_jn_all(nmax, z)``
returns ``j_0(z) .. j_nmax(z)`` stacked along the first axis, with ``z`` any
broadcastable complex array. The Mie and Green's function code needs every order
up to the truncation anyway, so computing them one at a time would be wasteful.

j_n uses Miller's downward recurrence normalised on j_0 or j_1 (whichever is
larger in modulus); h_n^(1) uses upward recurrence, which is stable for it.
"""
from __future__ import annotations

import math

import numpy as np

NMAX_SUPPORTED = 200


class UnsupportedOrderError(ValueError):
    pass


class SpecialFunctionDomainError(ValueError):
    pass


def _check_order(n: int) -> None:
    if n < 0:
        raise SpecialFunctionDomainError(f"order must be >= 0, got {n}")
    if n > NMAX_SUPPORTED:
        raise UnsupportedOrderError(f"order {n} exceeds supported maximum {NMAX_SUPPORTED}")


def _as_complex(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z)):
        raise SpecialFunctionDomainError("non-finite argument")
    return z


def _j0_j1(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed forms for j_0, j_1; series near the origin to dodge cancellation."""
    small = np.abs(z) < 0.05
    zs = np.where(z == 0, 1.0, z)
    s, c = np.sin(zs), np.cos(zs)
    z2 = z * z
    j0 = np.where(z == 0, 1.0, s / zs)
    j1 = np.where(small, z * (1 / 3 - z2 * (1 / 30 - z2 * (1 / 840 - z2 / 45360))), s / zs**2 - c / zs)
    return j0, j1


def spherical_jn_all(nmax: int, z) -> np.ndarray:
    """j_0(z) .. j_nmax(z), shape ``(nmax + 1,) + z.shape``."""
    _check_order(nmax)
    z = _as_complex(z)
    out = np.zeros((nmax + 1,) + z.shape, dtype=complex)
    j0, j1 = _j0_j1(z)
    out[0] = j0
    if nmax == 0:
        return out
    out[1] = j1
    if nmax == 1:
        return out

    zero = z == 0
    zz = np.where(zero, 1.0, z)
    absz = float(np.max(np.abs(z))) if z.size else 0.0
    # start order: far enough above both nmax and |z| for the minimal solution to dominate
    start = max(nmax, int(absz)) + 40 + int(math.sqrt(40 * max(nmax, absz, 1.0)))

    f_next = np.zeros(z.shape, dtype=complex)
    f_cur = np.full(z.shape, 1e-300, dtype=complex)
    big = 1e250
    for k in range(start, 0, -1):
        # f_{k-1} = (2k+1)/z f_k - f_{k+1}
        f_prev = (2 * k + 1) / zz * f_cur - f_next
        f_next, f_cur = f_cur, f_prev
        idx = k - 1
        if idx <= nmax:
            out[idx] = f_cur
        scale = np.abs(f_cur)
        over = scale > big
        if np.any(over):
            fac = np.where(over, 1.0 / big, 1.0)
            f_cur = f_cur * fac
            f_next = f_next * fac
            lo = max(idx, 0)
            out[lo:] = out[lo:] * fac
    # out[0], out[1] now hold the unnormalised ladder
    use0 = np.abs(j0) >= np.abs(j1)
    ref_true = np.where(use0, j0, j1)
    ref_raw = np.where(use0, out[0], out[1])
    norm = ref_true / np.where(ref_raw == 0, 1.0, ref_raw)
    out = out * norm
    out[0] = j0
    out[1] = j1
    if np.any(zero):
        out[2:, zero] = 0.0
    return out


def spherical_h1n_all(nmax: int, z) -> np.ndarray:
    """h^(1)_0(z) .. h^(1)_nmax(z), shape ``(nmax + 1,) + z.shape``."""
    _check_order(nmax)
    z = _as_complex(z)
    if np.any(z == 0):
        raise SpecialFunctionDomainError("h_n^(1) has a pole at z = 0")
    out = np.empty((nmax + 1,) + z.shape, dtype=complex)
    e = np.exp(1j * z)
    out[0] = -1j * e / z
    if nmax >= 1:
        out[1] = -e * (z + 1j) / z**2
    for n in range(1, nmax):
        out[n + 1] = (2 * n + 1) / z * out[n] - out[n - 1]
    return out


def scaled_jn_all(nmax: int, z) -> np.ndarray:
    """J_n(z) = j_n(z) (2n+1)!! / z^n for n = 0..nmax; J_n -> 1 as z -> 0.

    Miller recurrence J_{n-1} = J_n - J_{n+1} z^2 / ((2n+1)(2n+3)), normalised on
    the closed forms of J_0 or J_1. Lets callers form ratios such as R^V h_n^2
    without the individual factors overflowing.
    """
    _check_order(nmax)
    z = _as_complex(z)
    out = np.zeros((nmax + 1,) + z.shape, dtype=complex)
    j0, j1 = _j0_j1(z)
    zs = np.where(z == 0, 1.0, z)
    J0 = j0
    J1 = np.where(z == 0, 1.0, 3 * j1 / zs)
    out[0] = J0
    if nmax == 0:
        return out
    out[1] = J1
    if nmax == 1:
        return out
    z2 = z * z
    absz = float(np.max(np.abs(z))) if z.size else 0.0
    start = max(nmax, int(absz)) + 40 + int(math.sqrt(40 * max(nmax, absz, 1.0)))
    f_next = np.zeros(z.shape, dtype=complex)
    f_cur = np.ones(z.shape, dtype=complex)
    big = 1e250
    for k in range(start, 0, -1):
        f_prev = f_cur - f_next * z2 / ((2 * k + 1) * (2 * k + 3))
        f_next, f_cur = f_cur, f_prev
        idx = k - 1
        if idx <= nmax:
            out[idx] = f_cur
        over = np.abs(f_cur) > big
        if np.any(over):
            fac = np.where(over, 1.0 / big, 1.0)
            f_cur = f_cur * fac
            f_next = f_next * fac
            out[idx:] = out[idx:] * fac
    use0 = np.abs(j0) >= np.abs(j1)
    ref_true = np.where(use0, J0, J1)
    ref_raw = np.where(use0, out[0], out[1])
    out = out * (ref_true / np.where(ref_raw == 0, 1.0, ref_raw))
    out[0], out[1] = J0, J1
    return out


def scaled_h1n_all(nmax: int, z) -> np.ndarray:
    """H_n(z) = h_n^(1)(z) z^(n+1) / (2n-1)!! for n = 0..nmax; H_n -> -i as z -> 0."""
    _check_order(nmax)
    z = _as_complex(z)
    if np.any(z == 0):
        raise SpecialFunctionDomainError("h_n^(1) has a pole at z = 0")
    out = np.empty((nmax + 1,) + z.shape, dtype=complex)
    e = np.exp(1j * z)
    out[0] = -1j * e
    if nmax >= 1:
        out[1] = -e * (z + 1j)
    z2 = z * z
    for n in range(1, nmax):
        out[n + 1] = out[n] - out[n - 1] * z2 / ((2 * n + 1) * (2 * n - 1))
    return out


def spherical_jn(n: int, z):
    """Spherical Bessel function j_n(z) for complex z."""
    res = spherical_jn_all(n, z)[n]
    return res if res.ndim else complex(res)


def spherical_h1n(n: int, z):
    """Spherical Hankel function of the first kind h_n^(1)(z)."""
    res = spherical_h1n_all(n, z)[n]
    return res if res.ndim else complex(res)


def riccati_derivatives_all(nmax: int, z, jn=None, hn=None):
    """d/dz [z j_n(z)] and d/dz [z h_n^(1)(z)] for n = 0..nmax.

    Uses ``d/dz[z f_n] = z f_{n-1} - n f_n`` with ``j_{-1} = cos z / z`` and
    ``h_{-1} = e^{iz}/z``. Precomputed ladders may be passed in.
    """
    z = _as_complex(z)
    if np.any(z == 0):
        raise SpecialFunctionDomainError("Riccati derivatives need z != 0")
    if jn is None:
        jn = spherical_jn_all(nmax, z)
    if hn is None:
        hn = spherical_h1n_all(nmax, z)
    n = np.arange(nmax + 1).reshape((-1,) + (1,) * z.ndim)
    jm1 = np.concatenate([(np.cos(z) / z)[None], jn[:-1]])
    hm1 = np.concatenate([(np.exp(1j * z) / z)[None], hn[:-1]])
    return z * jm1 - n * jn, z * hm1 - n * hn


def riccati_derivatives(n: int, z):
    """Pair (d/dz[z j_n(z)], d/dz[z h_n^(1)(z)])."""
    dj, dh = riccati_derivatives_all(n, z)
    dj, dh = dj[n], dh[n]
    if dj.ndim == 0:
        return complex(dj), complex(dh)
    return dj, dh


def _log_double_factorial(k: int) -> float:
    """log(k!!) for integer k >= -1."""
    if k <= 0:
        return 0.0
    if k % 2 == 0:
        m = k // 2
        return m * math.log(2) + math.lgamma(m + 1)
    m = (k + 1) // 2
    return math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1)


def legendre_p0_squared(n: int, m: int) -> float:
    """[P_n^m(0)]^2; zero when n + m is odd.

    Uses |P_n^m(0)| = (n+m-1)!! / (n-m)!!, which follows from the three-term
    recurrence at x = 0 starting from |P_m^m(0)| = (2m-1)!!.
    """
    if m < 0 or m > n:
        raise SpecialFunctionDomainError(f"need 0 <= m <= n, got n={n}, m={m}")
    if (n + m) % 2:
        return 0.0
    log_abs = _log_double_factorial(n + m - 1) - _log_double_factorial(n - m)
    return math.exp(2 * log_abs)


def cmn_coefficient(n: int, m: int) -> float:
    """(2 - delta_0m) n (n+1) (2n+1) (n-m)!/(n+m)!"""
    if m < 0 or m > n:
        raise SpecialFunctionDomainError(f"need 0 <= m <= n, got n={n}, m={m}")
    log_ratio = math.lgamma(n - m + 1) - math.lgamma(n + m + 1)
    return (2 - (m == 0)) * n * (n + 1) * (2 * n + 1) * math.exp(log_ratio)


def multipole_weights(nmax: int) -> np.ndarray:
    """Table w[n, m] = c_mn [P_n^m(0)]^2 for 1 <= n <= nmax, 0 <= m <= n.

    Evaluated in log space so that neither factor overflows on its own.
    Row n = 0 is left at zero.
    """
    w = np.zeros((nmax + 1, nmax + 1))
    for n in range(1, nmax + 1):
        for m in range(n + 1):
            if (n + m) % 2:
                continue
            log_val = (
                math.log(n * (n + 1) * (2 * n + 1))
                + math.lgamma(n - m + 1)
                - math.lgamma(n + m + 1)
                + 2 * (_log_double_factorial(n + m - 1) - _log_double_factorial(n - m))
            )
            w[n, m] = (2 - (m == 0)) * math.exp(log_val)
    return w
