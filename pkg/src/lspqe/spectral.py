"""Correlated spectral densities J_s(w) on a frequency grid and their circulant channels D_l(w)."""
from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .nanosphere import (
    ConvergenceWarning,
    DrudeMetal,
    SystemGeometry,
    radial_multipole_terms,
    site_factors,
)


class SymmetryError(ArithmeticError):
    """Circulant transform produced a non-negligible imaginary part."""


@dataclass(frozen=True)
class GridSpec:
    omega_min: float = 0.01
    omega_max: float = 8.0
    n_points: int = 4000

    def __post_init__(self):
        if not 0 < self.omega_min < self.omega_max:
            raise ValueError("need 0 < omega_min < omega_max")
        if self.n_points < 3:
            raise ValueError("need at least 3 grid points")

    def grid(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_points)

    def refined(self, factor: int = 2) -> "GridSpec":
        return replace(self, n_points=factor * (self.n_points - 1) + 1)


@dataclass(frozen=True)
class SpectralTable:
    """Tabulated spectral densities, energies in eV.

    ``j_rows[s]`` holds J_s for s = 0..N//2; ``d_channels[l]`` holds D_l for
    l = 0..N-1 once :func:`circulant_channels` has run.
    """

    omega: np.ndarray
    j_rows: np.ndarray
    n_emitters: int
    hbar_omega0: float
    d_channels: np.ndarray | None = None
    converged: bool = True
    tail: float = 0.0
    meta: dict = field(default_factory=dict)

    def j_full(self) -> np.ndarray:
        """All N separations, J_s for s = 0..N-1 using J_s = J_{N-s}."""
        N = self.n_emitters
        return np.array([self.j_rows[min(s, N - s)] for s in range(N)])

    def j_matrix(self, index: int) -> np.ndarray:
        """Explicit N x N matrix J_lj at grid point ``index``."""
        N = self.n_emitters
        row = self.j_full()[:, index]
        lj = np.subtract.outer(np.arange(N), np.arange(N)) % N
        return row[lj]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        ns = len(self.j_rows)
        header = ["omega_eV"] + [f"J_{s}" for s in range(ns)]
        if self.d_channels is not None:
            header += [f"D_{l}" for l in range(self.n_emitters)]
        w.writerow(header)
        for i, om in enumerate(self.omega):
            row = [om, *self.j_rows[:, i]]
            if self.d_channels is not None:
                row += list(self.d_channels[:, i])
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


def coupling_prefactor(geom: SystemGeometry, omega: np.ndarray) -> np.ndarray:
    """3 gamma0 w^3 sqrt(eps_d) / (4 pi w0^3)"""
    return 3 * geom.hbar_gamma0 * omega**3 * math.sqrt(geom.eps_d) / (4 * np.pi * geom.hbar_omega0**3)


def build_spectral_table(metal: DrudeMetal, geom: SystemGeometry, grid: GridSpec = GridSpec(),
                         n_max: int = 40, scattering: bool = True, tol: float = 1e-8) -> SpectralTable:
    omega = grid.grid()
    free, scat = radial_multipole_terms(metal, geom, omega, n_max, scattering=scattering)
    radial = free + scat.real
    pref = coupling_prefactor(geom, omega)
    N = geom.n_emitters
    rows, tails = [], []
    for s in range(N // 2 + 1):
        per_order = site_factors(n_max, N, s)[:, None] * radial
        rows.append(pref * per_order.sum(axis=0))
        # on-site magnitude sets the scale for every row
        scale = np.abs((site_factors(n_max, N, 0)[:, None] * radial).sum(axis=0))
        tails.append(float(np.max(np.abs(per_order[-1]) / np.where(scale == 0, 1, scale))))
    tail = max(tails)
    converged = tail < tol
    if not converged:
        warnings.warn(f"spectral table not converged at n_max={n_max}: tail {tail:.3g}",
                      ConvergenceWarning, stacklevel=2)
    table = SpectralTable(omega=omega, j_rows=np.array(rows), n_emitters=N,
                          hbar_omega0=geom.hbar_omega0, converged=converged, tail=tail,
                          meta={"n_max": n_max, "grid": grid.__dict__, "geometry": geom.__dict__,
                                "metal": metal.__dict__, "scattering": scattering})
    return circulant_channels(table)


def transform_matrix(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Unitary V with columns (1, l_l, l_l^2, ...)/sqrt(N), and V^-1 = V^dagger.

    The phase convention l_l = exp(+2 pi i l / N) reproduces the explicit N = 4
    matrix; because D_l = D_{N-l} the opposite sign would diagonalise J just as well.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(N)
    V = np.exp(2j * np.pi * np.outer(k, k) / N) / math.sqrt(N)
    return V, V.conj().T


def circulant_channels(table: SpectralTable, tol: float = 1e-10) -> SpectralTable:
    """D_l(w) = sum_j J_j(w) exp(-2 pi i l (N - j) / N)."""
    N = table.n_emitters
    jf = table.j_full()
    j = np.arange(N)
    phases = np.exp(-2j * np.pi * np.outer(np.arange(N), (N - j) % N) / N)
    d = phases @ jf
    scale = np.max(np.abs(jf)) if jf.size else 0.0
    if np.any(np.abs(d.imag) > tol * scale):
        worst = float(np.max(np.abs(d.imag)) / scale)
        raise SymmetryError(f"circulant channels not real: relative imaginary residue {worst:.3g}")
    d = d.real
    # D_l and D_{N-l} agree analytically; average away the rounding so the pair is bit-identical
    d = 0.5 * (d + d[(-np.arange(N)) % N])
    return replace(table, d_channels=np.ascontiguousarray(d))
