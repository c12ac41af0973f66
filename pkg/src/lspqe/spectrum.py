"""Bound states of the circulant channels, their residues, and spectrum scans in r."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .nanosphere import DrudeMetal, SystemGeometry
from .spectral import GridSpec, SpectralTable, build_spectral_table, transform_matrix


class PrecisionError(ArithmeticError):
    """Trapezoid and Simpson quadratures of the channel integral disagree."""


class AbsentStateError(LookupError):
    pass


@dataclass(frozen=True)
class BoundState:
    channel: int
    energy: float  # eV, below the continuum
    residue: float
    y_at_zero: float


def _weights(omega: np.ndarray) -> np.ndarray:
    w = np.empty_like(omega)
    d = np.diff(omega)
    w[0], w[-1] = d[0] / 2, d[-1] / 2
    w[1:-1] = (d[:-1] + d[1:]) / 2
    return w


def self_energy(omega, density, energy) -> float:
    """integral D(w) / (w - E) dw by trapezoid, for E below the grid."""
    return float(np.dot(_weights(omega), density / (omega - energy)))


def y_function(table: SpectralTable, channel: int, energy: float) -> float:
    """w0 - integral D_l(w) / (w - E) dw"""
    return table.hbar_omega0 - self_energy(table.omega, table.d_channels[channel], energy)


def _residue(omega, density, energy) -> float:
    return 1.0 / (1.0 + float(np.dot(_weights(omega), density / (energy - omega) ** 2)))


def find_bound_state(table: SpectralTable, channel: int, hbar_omega0: float | None = None,
                     xtol: float = 1e-9, check_tol: float = 1e-6, floor: float = -50.0):
    """Root of y_l(E) = E below the band, or None when y_l(0) >= 0.

    The band is taken as the grid support (w > 0). y_l is strictly decreasing
    for E < 0 so the root, when present, is unique; it is bracketed starting at
    [-2 w0, 0] and the lower edge doubled until the sign changes.
    """
    omega = table.omega
    dens = table.d_channels[channel]
    w0 = table.hbar_omega0 if hbar_omega0 is None else hbar_omega0

    def g(e):
        return w0 - self_energy(omega, dens, e) - e

    y0 = g(0.0)
    if not np.any(dens):
        return BoundState(channel, w0, 1.0, y0)
    if y0 >= 0:
        return None
    lo = -2 * abs(w0)
    while g(lo) <= 0:
        lo *= 2
        if lo < floor:
            raise PrecisionError(f"no sign change above {floor} eV in channel {channel}")
    hi = 0.0
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    e = 0.5 * (lo + hi)
    trap = self_energy(omega, dens, e)
    simp = float(integrate.simpson(dens / (omega - e), x=omega))
    if abs(trap - simp) > check_tol:
        raise PrecisionError(
            f"channel {channel}: trapezoid/Simpson disagree by {abs(trap - simp):.3g} eV at E={e:.6g}; refine the grid")
    return BoundState(channel, e, _residue(omega, dens, e), y0)


def find_bound_states(table: SpectralTable, **kw) -> list[BoundState | None]:
    return [find_bound_state(table, l, **kw) for l in range(table.n_emitters)]


def eigen_residual(table: SpectralTable, channel: int, energy: float) -> float:
    """|v_l^+ [(E - w0) - integral J(w)/(E - w) dw] v_l| evaluated in the site basis.

    This goes through the explicit N x N spectral matrix rather than the
    channel densities, so it independently checks both the circulant
    transform and the bound-state root.
    """
    N = table.n_emitters
    V, _ = transform_matrix(N)
    v = V[:, channel]
    wts = _weights(table.omega) / (energy - table.omega)
    # sum over the grid of J_s(w) weights, one number per separation
    js = table.j_full() @ wts
    lj = np.subtract.outer(np.arange(N), np.arange(N)) % N
    m = (energy - table.hbar_omega0) * np.eye(N) - js[lj]
    return float(abs(v.conj() @ m @ v))


def bound_state_population(table: SpectralTable, energies: dict[str, float]) -> dict[str, float]:
    """Excited population of emitter 0 in each N = 2 bound state, from J_0 +/- J_1.

    ``energies`` maps "+" and/or "-" to bound energies.
    """
    if table.n_emitters != 2:
        raise ValueError("bound_state_population is defined for N = 2")
    out = {}
    for sign, e in energies.items():
        if e is None:
            raise AbsentStateError(f"no bound state in channel {sign}")
        s = 1.0 if sign == "+" else -1.0
        dens = table.j_rows[0] + s * table.j_rows[1]
        out[sign] = 0.5 / (1.0 + float(np.dot(_weights(table.omega), dens / (e - table.omega) ** 2)))
    return out


@dataclass(frozen=True)
class SpectrumScan:
    r_values: np.ndarray
    states: list  # per r: list over channels of BoundState | None
    channels: tuple
    band_edge: float = 0.0

    def counts(self) -> np.ndarray:
        return np.array([sum(s is not None for s in row) for row in self.states])

    def branch(self, channel: int) -> np.ndarray:
        """Bound energy of ``channel`` along r (nan where absent)."""
        k = self.channels.index(channel)
        return np.array([np.nan if row[k] is None else row[k].energy for row in self.states])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r_nm", "channel", "bound_energy_eV", "residue"])
        for r, row in zip(self.r_values, self.states):
            for ch, st in zip(self.channels, row):
                if st is None:
                    w.writerow([repr(float(r)), ch, "", ""])
                else:
                    w.writerow([repr(float(r)), ch, repr(st.energy), repr(st.residue)])
        return buf.getvalue()


def scan_spectrum(metal: DrudeMetal, geom: SystemGeometry, r_values, channels=None,
                  grid: GridSpec = GridSpec(), n_max: int = 40, map_fn=map) -> SpectrumScan:
    r_values = np.asarray(r_values, dtype=float)
    if np.any(r_values <= geom.radius_nm):
        raise ValueError("scan distances must exceed the sphere radius")
    chans = tuple(range(geom.n_emitters)) if channels is None else tuple(channels)

    def one(r):
        table = build_spectral_table(metal, geom.with_(distance_nm=float(r)), grid, n_max)
        return [find_bound_state(table, l) for l in chans]

    states = list(map_fn(one, r_values))
    return SpectrumScan(r_values, states, chans)


def threshold_distance(metal: DrudeMetal, geom: SystemGeometry, channel: int, r_lo: float, r_hi: float,
                       grid: GridSpec = GridSpec(), n_max: int = 40, rtol: float = 1e-3) -> float:
    """Distance at which channel ``channel`` acquires a bound state (y_l(0) = 0), by bisection in r.

    Requires a bound state at ``r_lo`` and none at ``r_hi``.
    """

    def y0(r):
        table = build_spectral_table(metal, geom.with_(distance_nm=r), grid, n_max)
        return y_function(table, channel, 0.0)

    a, b = y0(r_lo), y0(r_hi)
    if not (a < 0 <= b):
        raise ValueError(f"threshold for channel {channel} not bracketed by [{r_lo}, {r_hi}] (y0: {a:.3g}, {b:.3g})")
    lo, hi = r_lo, r_hi
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if y0(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
