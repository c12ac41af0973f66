"""Drude sphere: permittivity, Mie coefficients, and the radial Green's function.

Units are eV for energies and nm for lengths; wave vectors come out in nm^-1
via ``k = omega * sqrt(eps) / HBAR_C``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import specfun

HBAR_C = 197.327  # eV nm
HBAR_FS = 0.658212  # eV fs


class PoleError(ArithmeticError):
    """A scattering denominator vanished (only reachable without loss)."""


class NoResonanceError(ValueError):
    pass


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DrudeMetal:
    hbar_omega_p: float
    eps_inf: float
    hbar_gamma_p: float

    def __post_init__(self):
        if not self.hbar_omega_p > 0:
            raise ValueError("hbar_omega_p must be positive")
        if not self.eps_inf >= 1:
            raise ValueError("eps_inf must be >= 1")
        if not self.hbar_gamma_p >= 0:
            raise ValueError("hbar_gamma_p must be >= 0")


SILVER = DrudeMetal(hbar_omega_p=9.01, eps_inf=3.718, hbar_gamma_p=0.09)


@dataclass(frozen=True)
class SystemGeometry:
    """Ring of ``n_emitters`` radial dipoles at distance ``distance_nm`` on the equator.

    Emitter l sits at (r, pi/2, 2 pi l / N).
    """

    radius_nm: float
    distance_nm: float
    n_emitters: int = 2
    eps_d: float = 1.0
    hbar_omega0: float = 0.8
    hbar_gamma0: float = 1e-4

    def __post_init__(self):
        if not self.radius_nm > 0:
            raise ValueError("radius_nm must be positive")
        if not self.distance_nm > self.radius_nm:
            raise ValueError("emitters must sit outside the sphere (distance_nm > radius_nm)")
        if self.n_emitters < 1:
            raise ValueError("n_emitters must be >= 1")
        if not self.eps_d > 0:
            raise ValueError("eps_d must be positive")
        if not (self.hbar_omega0 > 0 and self.hbar_gamma0 > 0):
            raise ValueError("emitter frequency and rate must be positive")

    def with_(self, **changes) -> "SystemGeometry":
        return SystemGeometry(**{**self.__dict__, **changes})


def drude_permittivity(metal: DrudeMetal, hbar_omega):
    """eps_m(w) = eps_inf - w_p^2 / [w (w + i gamma_p)]"""
    w = np.asarray(hbar_omega, dtype=float)
    if np.any(w <= 0):
        raise ValueError("hbar_omega must be positive")
    eps = metal.eps_inf - metal.hbar_omega_p**2 / (w * (w + 1j * metal.hbar_gamma_p))
    return eps if eps.ndim else complex(eps)


def wave_numbers(metal: DrudeMetal, eps_d: float, hbar_omega):
    """(k1, k2) in nm^-1 for the dielectric and the metal."""
    w = np.asarray(hbar_omega, dtype=float)
    eps_m = np.asarray(drude_permittivity(metal, w))
    k1 = w * math.sqrt(eps_d) / HBAR_C
    k2 = w * np.sqrt(eps_m) / HBAR_C
    return k1, k2


def _mie_scaled(metal, geom, hbar_omega, nmax):
    """Scaled coefficients r^H_n, r^V_n with R_n = (k1 R)^(2n+1) / ((2n+1)!! (2n-1)!!) * r_n.

    Built from the scaled ladders J_n = j_n (2n+1)!!/rho^n and
    H_n = h_n rho^(n+1)/(2n-1)!!, in which the boundary-condition ratio keeps its
    form and every factor stays O(1) for small spheres. Row 0 is unused.
    """
    w = np.asarray(hbar_omega, dtype=float)
    k1, k2 = wave_numbers(metal, geom.eps_d, w)
    rho1 = k1 * geom.radius_nm + 0j
    rho2 = k2 * geom.radius_nm
    T1 = specfun.scaled_jn_all(nmax, rho1)
    T2 = specfun.scaled_jn_all(nmax, rho2)
    K1 = specfun.scaled_h1n_all(nmax, rho1)
    n = np.arange(nmax + 1).reshape((-1,) + (1,) * w.ndim)
    # rho-derivatives of rho f_n in the same scaling
    dT1 = np.zeros_like(T1)
    dT2 = np.zeros_like(T2)
    dK1 = np.zeros_like(K1)
    dT1[1:] = (2 * n[1:] + 1) * T1[:-1] - n[1:] * T1[1:]
    dT2[1:] = (2 * n[1:] + 1) * T2[:-1] - n[1:] * T2[1:]
    dK1[1:] = rho1**2 * K1[:-1] / (2 * n[1:] - 1) - n[1:] * K1[1:]
    k1s, k2s = k1**2, k2**2
    den_h = K1 * dT2 - T2 * dK1
    den_v = k2s * T2 * dK1 - k1s * K1 * dT2
    if np.any(den_h[1:] == 0) or np.any(den_v[1:] == 0):
        mask = np.any((den_v[1:] == 0) | (den_h[1:] == 0), axis=0)
        raise PoleError(f"scattering coefficient pole at hbar_omega = {w[mask] if w.ndim else w}")
    rh = np.zeros_like(T1)
    rv = np.zeros_like(T1)
    rh[1:] = (T2 * dT1 - T1 * dT2)[1:] / den_h[1:]
    rv[1:] = (k1s * T1 * dT2 - k2s * T2 * dT1)[1:] / den_v[1:]
    return rh, rv


def _scale_factor(n: int, k1R):
    """(k1 R)^(2n+1) / ((2n+1)!! (2n-1)!!)"""
    return k1R ** (2 * n + 1) / (_odd_double_factorial(2 * n + 1) * _odd_double_factorial(2 * n - 1))


def _qs_ratio(metal, geom, w, n):
    eps_m = np.asarray(drude_permittivity(metal, w))
    denom = n * eps_m + (n + 1) * geom.eps_d
    if np.any(denom == 0):
        raise PoleError(f"quasi-static pole for n={n}")
    return -1j * (n + 1) * (geom.eps_d - eps_m) / denom


def mie_coefficients(metal: DrudeMetal, geom: SystemGeometry, hbar_omega, n: int):
    """Transverse-electric and transverse-magnetic scattering coefficients (R^H, R^V)."""
    if n < 1:
        raise ValueError("multipole order n must be >= 1")
    w = np.asarray(hbar_omega, dtype=float)
    rh, rv = _mie_scaled(metal, geom, w, n)
    f = _scale_factor(n, w * math.sqrt(geom.eps_d) / HBAR_C * geom.radius_nm)
    rh, rv = f * rh[n], f * rv[n]
    if rh.ndim == 0:
        return complex(rh), complex(rv)
    return rh, rv


def _odd_double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


def quasi_static_coefficient(metal: DrudeMetal, geom: SystemGeometry, hbar_omega, n: int):
    """Small-sphere limit of R^V_n (R^H vanishes in the same limit)."""
    if n < 1:
        raise ValueError("multipole order n must be >= 1")
    w = np.asarray(hbar_omega, dtype=float)
    out = _scale_factor(n, w * math.sqrt(geom.eps_d) / HBAR_C * geom.radius_nm) * _qs_ratio(metal, geom, w, n)
    return out if out.ndim else complex(out)


def lsp_resonances(metal: DrudeMetal, eps_d: float, n_list, window=(0.05, 50.0)) -> list[float]:
    """Resonance energies from Re eps_m(w_n) = -(n+1) eps_d / n, by bracketed bisection."""
    lo, hi = window

    def f(w, n):
        return drude_permittivity(metal, w).real + (n + 1) * eps_d / n

    out = []
    for n in n_list:
        if n < 1:
            raise ValueError("multipole order must be >= 1")
        if f(lo, n) * f(hi, n) > 0:
            raise NoResonanceError(f"no sign change of the resonance condition for n={n} in {window}")
        out.append(optimize.bisect(f, lo, hi, args=(n,), xtol=1e-9))
    return out


@dataclass(frozen=True)
class GreenResult:
    value: complex | np.ndarray
    converged: bool
    tail: float


def radial_multipole_terms(metal, geom, hbar_omega, nmax, scattering=True, quasi_static=False):
    """Per-order radial factors entering G_rr and J_lj.

    Returns ``(free, scat)``, each of shape (nmax+1,) + omega.shape, with
    ``free[n] = j_n(k1 r)^2 / (k1 r)^2`` and
    ``scat[n] = R^V_n h_n(k1 r)^2 / (k1 r)^2``.
    Only Re(h_n j_n) = j_n^2 of the free-space product is kept: its real
    counterpart diverges at coincident points and never enters J.
    """
    w = np.asarray(hbar_omega, dtype=float)
    x = w * math.sqrt(geom.eps_d) / HBAR_C * geom.distance_nm
    n = np.arange(nmax + 1).reshape((-1,) + (1,) * w.ndim)
    jn = specfun.spherical_jn_all(nmax, x + 0j).real
    free = jn**2 / x**2
    free[0] = 0
    if not scattering:
        return free, np.zeros_like(free, dtype=complex)
    # R^V_n h_n(x)^2 / x^2 = (R/r)^(2n+1) r^V_n H_n(x)^2 / ((2n+1) x^3)
    H = specfun.scaled_h1n_all(nmax, x + 0j)
    if quasi_static:
        rv = np.zeros((nmax + 1,) + w.shape, dtype=complex)
        for k in range(1, nmax + 1):
            rv[k] = _qs_ratio(metal, geom, w, k)
    else:
        _, rv = _mie_scaled(metal, geom, w, nmax)
    ratio = (geom.radius_nm / geom.distance_nm) ** (2 * n + 1)
    scat = ratio * rv * H**2 / ((2 * n + 1) * x**3)
    scat[0] = 0
    return free, scat


def site_factors(nmax: int, n_emitters: int, separation: int) -> np.ndarray:
    """sum_m c_mn P_n^m(0)^2 cos(2 pi m s / N) for each n (index 0 unused)."""
    w = specfun.multipole_weights(nmax)
    m = np.arange(nmax + 1)
    cos = np.cos(2 * np.pi * m * separation / n_emitters)
    return w @ cos


def _tail_bound(per_order: np.ndarray) -> float:
    """Relative size of the last retained order against the full sum."""
    total = np.abs(per_order.sum(axis=0))
    last = np.abs(per_order[-1])
    return float(np.max(last / np.where(total == 0, 1.0, total)))


def green_rr(metal, geom, hbar_omega, l, j, n_max=40, scattering=True, quasi_static=False,
             tol=1e-8) -> GreenResult:
    """rr component of the Green's function between emitters l and j.

    The contact term and the real part of the free-space sum are omitted; the
    imaginary part (the only piece entering the spectral density) is complete.
    Flags non-convergence when the last order contributes more than ``tol``
    relative to the sum.
    """
    N = geom.n_emitters
    if not (0 <= l < N and 0 <= j < N):
        raise IndexError("emitter index out of range")
    w = np.asarray(hbar_omega, dtype=float)
    free, scat = radial_multipole_terms(metal, geom, w, n_max, scattering, quasi_static)
    fac = site_factors(n_max, N, (l - j) % N).reshape((-1,) + (1,) * w.ndim)
    k1 = w * math.sqrt(geom.eps_d) / HBAR_C
    per_order = 1j * k1 / (4 * np.pi) * fac * (free + scat)
    value = per_order.sum(axis=0)
    tail = _tail_bound(per_order[1:])
    converged = tail < tol
    if not converged:
        warnings.warn(f"G_rr multipole sum not converged at n_max={n_max}: last-term ratio {tail:.3g}",
                      ConvergenceWarning, stacklevel=2)
    return GreenResult(value if value.ndim else complex(value), converged, tail)
