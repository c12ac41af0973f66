"""End-to-end runs: spectral table -> kernel -> Volterra solve -> steady-state comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dynamics import (
    AccuracyError,
    InitialCondition,
    TrajectoryResult,
    alias_period,
    classify,
    evolve_channels,
    fidelity_and_concurrence,
    late_window,
    max_time_step,
    steady_state_predictor,
    synthesize_kernel,
    time_grid,
)
from .nanosphere import HBAR_FS, DrudeMetal, SystemGeometry
from .spectral import GridSpec, build_spectral_table, transform_matrix
from .spectrum import find_bound_states

DEFAULT_T_MAX = 5000.0  # fs


@dataclass(frozen=True)
class Numerics:
    n_max: int = 40
    omega_min: float = 0.01
    omega_max: float = 8.0
    omega_points: int = 4000
    t_max: float | None = None  # fs; None picks DEFAULT_T_MAX or 20 beat periods, whichever is longer
    dt: float | None = None  # fs; None uses pi hbar / (4 w_max)
    window_fraction: float = 0.1
    agreement_tol: float = 0.02
    check_step_halving: bool = False  # raise AccuracyError instead of only reporting the discrepancy
    halving_horizon: float = 50.0  # fs
    halving_tol: float = 1e-4

    def grid(self) -> GridSpec:
        return GridSpec(self.omega_min, self.omega_max, self.omega_points)


def _dynamics_grid(num: Numerics, t_max: float) -> GridSpec:
    """Spectral grid dense enough that the kernel recurrence lies beyond 2 t_max."""
    span = num.omega_max - num.omega_min
    need = int(math.ceil(2 * t_max * span / (2 * math.pi * HBAR_FS))) + 1
    return replace(num.grid(), n_points=max(num.omega_points, need))


def step_halving_discrepancy(table, hbar_omega0, cbar0, c0, dt, horizon) -> float:
    """max |P_dt - P_dt/2| over the common times up to ``horizon``."""
    V, _ = transform_matrix(len(c0))
    n = int(math.ceil(horizon / dt - 1e-9)) + 1
    out = []
    # dt/2 keeps the FFT compatibility of dt, so the fine grid contains every coarse point
    for t in (np.arange(n) * dt, np.arange(2 * n - 1) * (dt / 2)):
        k = synthesize_kernel(table, t)
        c = V @ evolve_channels(k, hbar_omega0, cbar0)
        out.append(np.abs(np.asarray(c0).conj() @ c) ** 2)
    coarse, fine = out
    return float(np.max(np.abs(coarse - fine[::2])))


def run_scenario(metal: DrudeMetal, geom: SystemGeometry, initial: InitialCondition | str = "single_excited",
                 numerics: Numerics = Numerics()) -> TrajectoryResult:
    if isinstance(initial, str):
        initial = InitialCondition.from_name(initial, geom.n_emitters)
    if len(initial.vector) != geom.n_emitters:
        raise ValueError("initial vector length must equal the emitter count")
    N = geom.n_emitters
    base = build_spectral_table(metal, geom, numerics.grid(), numerics.n_max)
    bound = find_bound_states(base)
    pred = steady_state_predictor(bound, initial.vector)

    t_max = numerics.t_max
    if t_max is None:
        t_max = DEFAULT_T_MAX
        if pred.beat:
            t_max = max(t_max, 20 * 2 * math.pi * HBAR_FS / pred.beat)
    grid = _dynamics_grid(numerics, t_max)
    table = base if grid == numerics.grid() else build_spectral_table(metal, geom, grid, numerics.n_max)

    t = time_grid(table, t_max, numerics.dt)
    V, Vinv = transform_matrix(N)
    cbar0 = Vinv @ initial.vector
    kernel = synthesize_kernel(table, t)
    cbar = evolve_channels(kernel, geom.hbar_omega0, cbar0)
    c = V @ cbar
    P, C = fidelity_and_concurrence(c, initial)
    stats = late_window(t, P, numerics.window_fraction)
    observed = classify(stats, pred.lines or pred.beat)

    tol = numerics.agreement_tol
    agree = observed == pred.steady_class and abs(stats.mean - pred.mean) <= tol
    if pred.steady_class == "persistent_oscillation":
        agree = agree and abs(stats.minimum - pred.envelope[0]) <= tol and abs(stats.maximum - pred.envelope[1]) <= tol

    diag = {
        "t_max_fs": float(t[-1]),
        "dt_fs": float(t[1] - t[0]),
        "dt_limit_fs": max_time_step(table),
        "omega_points_dynamics": int(len(table.omega)),
        "kernel_recurrence_fs": alias_period(table),
        "table_tail": table.tail,
        "table_converged": table.converged,
        "max_norm": float(np.max(np.sum(np.abs(c) ** 2, axis=0))),
        "late_window_fraction": numerics.window_fraction,
    }
    hints = []
    if not agree:
        hints.append("late-window statistics disagree with the bound-state prediction; "
                     "increase t_max or omega_points")
    d = step_halving_discrepancy(table, geom.hbar_omega0, cbar0, initial.vector, float(t[1] - t[0]),
                                 min(numerics.halving_horizon, t_max))
    diag["step_halving_discrepancy"] = d
    if d > numerics.halving_tol:
        # second-order scheme: the discrepancy scales as dt^2
        suggested = float(t[1] - t[0]) * math.sqrt(numerics.halving_tol / d) * 0.9
        hints.append(f"P changes by {d:.2g} under step halving over the first "
                     f"{min(numerics.halving_horizon, t_max):g} fs; dt <= {suggested:.3g} fs resolves the transient")
        if numerics.check_step_halving:
            raise AccuracyError(f"step-halving changes P by {d:.3g} > {numerics.halving_tol}; "
                                f"try dt <= {suggested:.4g} fs")
    diag["hints"] = hints
    return TrajectoryResult(t=t, amplitudes=c, channel_amplitudes=cbar, fidelity=P, concurrence=C,
                            steady_class=observed, predicted=pred, observed=stats, bound_states=bound,
                            agreement=agree, diagnostics=diag)
