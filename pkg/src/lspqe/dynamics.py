"""Memory kernels, the Volterra amplitude equation, and steady-state prediction.

Time is in fs and energies in eV throughout; the kernel carries the 1/hbar^2
so that ``dc/dt = -i (w0/hbar) c - int_0^t K(t - tau) c(tau) dtau`` holds with
K in fs^-2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nanosphere import HBAR_FS
from .spectral import SpectralTable, transform_matrix
from .spectrum import BoundState, _weights

STEADY_CLASSES = ("complete_decay", "population_trapping", "persistent_oscillation")


class AliasingError(ValueError):
    """Time step too coarse for the frequency content of the table."""


class AccuracyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class MemoryKernel:
    t: np.ndarray  # fs, uniform from 0
    values: np.ndarray  # (n_channels, n_t) complex, fs^-2

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def max_time_step(table: SpectralTable) -> float:
    """dt <= pi hbar / (4 w_max), in fs."""
    return math.pi * HBAR_FS / (4 * float(table.omega[-1]))


def alias_period(table: SpectralTable) -> float:
    """Recurrence time 2 pi hbar / dw of a kernel built on the uniform grid, in fs."""
    return 2 * math.pi * HBAR_FS / float(table.omega[1] - table.omega[0])


def time_grid(table: SpectralTable, t_max: float, dt_max: float | None = None) -> np.ndarray:
    """Uniform t-grid on which the kernel sum becomes an exact FFT.

    The step is the largest dt <= ``dt_max`` with 2 pi hbar / (dw dt) integral.
    """
    dt_max = max_time_step(table) if dt_max is None else min(dt_max, max_time_step(table))
    period = alias_period(table)
    m = math.ceil(period / dt_max)
    dt = period / m
    n = int(math.ceil(t_max / dt - 1e-9)) + 1
    return np.arange(n) * dt


def _fft_compatible(table: SpectralTable, t: np.ndarray) -> int | None:
    om = table.omega
    d = np.diff(om)
    if not np.allclose(d, d[0], rtol=1e-9, atol=0):
        return None
    m = alias_period(table) / (t[1] - t[0])
    mi = round(m)
    if abs(m - mi) > 1e-6 * m or mi < len(om):
        return None
    return mi


def synthesize_kernel(table: SpectralTable, t, channels=None) -> MemoryKernel:
    """K_l(t) = integral D_l(w) exp(-i w t / hbar) dw / hbar^2 by trapezoid over the table grid.

    Uses an FFT when ``t`` comes from :func:`time_grid` (same sum, evaluated
    exactly), else a direct chunked sum.
    """
    t = np.asarray(t, dtype=float)
    if len(t) < 2:
        raise ValueError("need at least two time points")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12) or t[0] != 0:
        raise ValueError("t grid must be uniform and start at 0")
    if dt > max_time_step(table) * (1 + 1e-9):
        raise AliasingError(f"dt = {dt:.4g} fs exceeds pi hbar/(4 w_max) = {max_time_step(table):.4g} fs")
    dens = table.d_channels if channels is None else table.d_channels[list(channels)]
    coef = dens * _weights(table.omega) / HBAR_FS**2
    om = table.omega
    m = _fft_compatible(table, t)
    if m is not None and len(t) <= m:
        spec = np.fft.fft(coef, n=m, axis=-1)[:, : len(t)]
        values = spec * np.exp(-1j * om[0] * t / HBAR_FS)
    else:
        values = np.empty((len(coef), len(t)), dtype=complex)
        step = max(1, 2_000_000 // len(om))
        for a in range(0, len(t), step):
            ph = np.exp(-1j * np.outer(t[a:a + step], om) / HBAR_FS)
            values[:, a:a + step] = coef @ ph.T
    return MemoryKernel(t, values)


def solve_volterra(kernel, t, hbar_omega0: float, c0, interaction_picture: bool = True) -> np.ndarray:
    """Solve c' + i (w0/hbar) c + int_0^t K(t - tau) c(tau) dtau = 0.

    ``kernel`` is K sampled on ``t``: shape (n_t,) for a scalar equation or
    (n_t, N, N) for a matrix one. Returns c with shape (n_t,) or (n_t, N).

    Trapezoid rule for both the derivative and the memory integral. The
    scheme is the Heun predictor-corrector with the corrector solved exactly,
    which is possible because the equation is linear.
    """
    t = np.asarray(t, dtype=float)
    kern = np.asarray(kernel, dtype=complex)
    scalar = kern.ndim == 1
    if scalar:
        kern = kern[:, None, None]
    n_t, N = len(t), kern.shape[1]
    h = t[1] - t[0]
    w0 = hbar_omega0 / HBAR_FS
    if interaction_picture:
        kern = kern * np.exp(1j * w0 * t)[:, None, None]
        lin = np.zeros((N, N), dtype=complex)
    else:
        lin = 1j * w0 * np.eye(N)
    a = np.zeros((n_t, N), dtype=complex)
    a[0] = np.atleast_1d(np.asarray(c0, dtype=complex))
    eye = np.eye(N)
    # (I + h/2 lin + h^2/4 K_0) a_{n+1} = (I - h/2 lin) a_n + h/2 (M_n + S_{n+1})
    lhs_inv = np.linalg.inv(eye + h / 2 * lin + h * h / 4 * kern[0])
    rhs_lin = eye - h / 2 * lin
    mem = np.zeros(N, dtype=complex)  # M_n = -h * trapezoid memory at t_n
    if N == 1:
        k1 = kern[:, 0, 0]
        l00, r00, kk0 = lhs_inv[0, 0], rhs_lin[0, 0], k1[0]
        av = a[:, 0]
        for n in range(n_t - 1):
            s = -h * (0.5 * k1[n + 1] * av[0] + np.dot(k1[n:0:-1], av[1:n + 1]))
            av[n + 1] = l00 * (r00 * av[n] + h / 2 * (mem[0] + s))
            mem[0] = s - h / 2 * kk0 * av[n + 1]
    else:
        for n in range(n_t - 1):
            s = -h * (0.5 * kern[n + 1] @ a[0] + np.einsum("kij,kj->i", kern[n:0:-1], a[1:n + 1]))
            a[n + 1] = lhs_inv @ (rhs_lin @ a[n] + h / 2 * (mem + s))
            mem = s - h / 2 * kern[0] @ a[n + 1]
    if interaction_picture:
        a = a * np.exp(-1j * w0 * t)[:, None]
    return a[:, 0] if scalar else a


@dataclass(frozen=True)
class InitialCondition:
    kind: str
    vector: np.ndarray

    @classmethod
    def single_excited(cls, N: int, site: int = 0) -> "InitialCondition":
        v = np.zeros(N, dtype=complex)
        v[site] = 1
        return cls("single_excited", v)

    @classmethod
    def w_state(cls, N: int) -> "InitialCondition":
        return cls("w_state", np.full(N, 1 / math.sqrt(N), dtype=complex))

    @classmethod
    def custom(cls, vector) -> "InitialCondition":
        v = np.asarray(vector, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm == 0:
            raise ValueError("initial vector must be nonzero")
        return cls("custom", v / nrm)

    @classmethod
    def from_name(cls, name: str, N: int) -> "InitialCondition":
        if name == "single_excited":
            return cls.single_excited(N)
        if name == "w_state":
            return cls.w_state(N)
        raise ValueError(f"unknown initial condition {name!r}")


def evolve_channels(kernel: MemoryKernel, hbar_omega0: float, cbar0) -> np.ndarray:
    """Independent scalar solves per circulant channel; returns cbar with shape (N, n_t)."""
    cbar0 = np.asarray(cbar0, dtype=complex)
    out = np.zeros((len(cbar0), len(kernel.t)), dtype=complex)
    for l, c in enumerate(cbar0):
        if c == 0:
            continue
        out[l] = solve_volterra(kernel.values[l], kernel.t, hbar_omega0, c)
    return out


def site_kernel(table: SpectralTable, t) -> np.ndarray:
    """Kernel matrices K_lj(t) in the site basis, shape (n_t, N, N), built from J_s directly."""
    rows = SpectralTable(table.omega, table.j_rows, table.n_emitters, table.hbar_omega0,
                         d_channels=table.j_full())
    ks = synthesize_kernel(rows, t).values  # (N separations, n_t)
    N = table.n_emitters
    lj = np.subtract.outer(np.arange(N), np.arange(N)) % N
    return np.moveaxis(ks[lj], -1, 0)


def fidelity(amplitudes: np.ndarray, c0) -> np.ndarray:
    """P(t) = |<c(0)|c(t)>|^2 with amplitudes shaped (N, n_t)."""
    c0 = np.asarray(c0, dtype=complex)
    return np.abs(c0.conj() @ amplitudes) ** 2


def concurrence(amplitudes: np.ndarray) -> np.ndarray:
    """C = 2 |c_0 c_1| for one shared excitation of two emitters."""
    if amplitudes.shape[0] != 2:
        raise ValueError("concurrence is only defined here for N = 2")
    return 2 * np.abs(amplitudes[0] * amplitudes[1])


def fidelity_and_concurrence(amplitudes: np.ndarray, initial: InitialCondition):
    P = fidelity(amplitudes, initial.vector)
    C = concurrence(amplitudes) if amplitudes.shape[0] == 2 else None
    return P, C


@dataclass(frozen=True)
class SteadyPrediction:
    n_bound: int
    steady_class: str
    mean: float
    envelope: tuple[float, float]
    beat: float | None  # eV; smallest gap hbar * Delta varpi
    weights: list  # (energy, weight) per distinct bound energy
    lines: tuple = ()  # eV; every pairwise gap, i.e. the lines the late signal can carry


def steady_state_predictor(bound_states, c0, degeneracy_tol: float = 1e-7,
                           weight_floor: float = 1e-12) -> SteadyPrediction:
    """Long-time fidelity from the bound states.

    lim c(t) = V diag(Z_l exp(-i E_l t)) V^-1 c(0), so the overlap with c(0) is
    sum_l |(V^-1 c0)_l|^2 Z_l exp(-i E_l t); degenerate channels are merged.
    """
    c0 = np.asarray(c0, dtype=complex)
    N = len(c0)
    _, Vinv = transform_matrix(N)
    proj = np.abs(Vinv @ c0) ** 2
    groups: list[list[float]] = []
    for l, st in enumerate(bound_states):
        if st is None or proj[l] * st.residue < weight_floor:
            continue
        a = proj[l] * st.residue
        for g in groups:
            if abs(g[0] - st.energy) < degeneracy_tol:
                g[1] += a
                break
        else:
            groups.append([st.energy, a])
    groups.sort()
    weights = [(float(e), float(a)) for e, a in groups]
    amps = np.array([a for _, a in weights])
    M = sum(st is not None for st in bound_states)
    if len(amps) == 0:
        return SteadyPrediction(M, "complete_decay", 0.0, (0.0, 0.0), None, weights)
    if len(amps) == 1:
        p = float(amps[0] ** 2)
        return SteadyPrediction(M, "population_trapping", p, (p, p), None, weights)
    mean = float(np.sum(amps**2))
    if len(amps) == 2:
        env = (float((amps[0] - amps[1]) ** 2), float((amps[0] + amps[1]) ** 2))
        beat = abs(weights[1][0] - weights[0][0])
    else:
        energies = np.array([e for e, _ in weights])
        beat = float(np.min(np.diff(energies)))
        tt = np.linspace(0, 2000 * 2 * np.pi / beat, 200_001)
        series = np.abs(np.exp(-1j * np.outer(tt, energies)) @ amps) ** 2
        env = (float(series.min()), float((amps.sum()) ** 2))
    es = [e for e, _ in weights]
    lines = tuple(sorted(abs(a - b) for i, a in enumerate(es) for b in es[i + 1:]))
    return SteadyPrediction(M, "persistent_oscillation", mean, env, float(beat), weights, lines)


@dataclass(frozen=True)
class WindowStats:
    mean: float
    minimum: float
    maximum: float
    peak_to_peak: float
    dominant: float | None  # eV


def late_window(t: np.ndarray, P: np.ndarray, fraction: float = 0.1) -> WindowStats:
    k = max(2, int(round(len(t) * fraction)))
    tw, pw = t[-k:], P[-k:]
    dominant = None
    if pw.max() - pw.min() > 0:
        x = (pw - pw.mean()) * np.hanning(len(pw))
        nfft = 16 * len(pw)
        spec = np.abs(np.fft.rfft(x, n=nfft))
        freqs = np.fft.rfftfreq(nfft, d=tw[1] - tw[0])  # cycles per fs
        i = int(np.argmax(spec[1:]) + 1)
        dominant = float(2 * np.pi * freqs[i] * HBAR_FS)
    return WindowStats(float(pw.mean()), float(pw.min()), float(pw.max()), float(pw.max() - pw.min()), dominant)


def classify(stats: WindowStats, beat, ptp_threshold: float = 0.01,
             mean_threshold: float = 0.01, line_tol: float = 0.05) -> str:
    """Late-window class; ``beat`` is one predicted line (eV), a sequence of them, or None."""
    lines = [] if beat is None else list(np.atleast_1d(beat))
    if (stats.peak_to_peak > ptp_threshold and stats.dominant is not None
            and any(abs(stats.dominant - b) <= line_tol * b for b in lines)):
        return "persistent_oscillation"
    if stats.mean > mean_threshold and stats.peak_to_peak < ptp_threshold:
        return "population_trapping"
    return "complete_decay"


@dataclass
class TrajectoryResult:
    t: np.ndarray
    amplitudes: np.ndarray  # (N, n_t) site basis
    channel_amplitudes: np.ndarray  # (N, n_t)
    fidelity: np.ndarray
    concurrence: np.ndarray | None
    steady_class: str
    predicted: SteadyPrediction
    observed: WindowStats
    bound_states: list
    agreement: bool
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        import csv
        import io

        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        N = self.amplitudes.shape[0]
        header = ["t_fs"]
        for l in range(N):
            header += [f"re_c{l}", f"im_c{l}"]
        header += ["P"] + (["C"] if self.concurrence is not None else [])
        w.writerow(header)
        for i, tt in enumerate(self.t):
            row = [tt]
            for l in range(N):
                row += [self.amplitudes[l, i].real, self.amplitudes[l, i].imag]
            row.append(self.fidelity[i])
            if self.concurrence is not None:
                row.append(self.concurrence[i])
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "steady_class": self.steady_class,
            "predicted": {
                "class": self.predicted.steady_class,
                "n_bound": self.predicted.n_bound,
                "mean": self.predicted.mean,
                "envelope": list(self.predicted.envelope),
                "beat_eV": self.predicted.beat,
                "lines_eV": list(self.predicted.lines),
                "weights": [list(w) for w in self.predicted.weights],
            },
            "observed": self.observed.__dict__,
            "agreement": self.agreement,
            "bound_states": [None if b is None else b.__dict__ for b in self.bound_states],
            "diagnostics": self.diagnostics,
        }
