"""Optional figures drawn from the files a run leaves on disk."""
from __future__ import annotations

import csv
import json
import logging
import warnings
from pathlib import Path

import numpy as np

log = logging.getLogger("lspqe")


def _read_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path) as fh:
        rows = list(csv.reader(line for line in fh if not line.startswith("#")))
    head, body = rows[0], rows[1:]
    cols = {}
    for i, name in enumerate(head):
        vals = [r[i] for r in body]
        try:
            cols[name] = np.array([np.nan if v == "" else float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals)
    return cols


def _config(path: Path) -> dict:
    for line in open(path):
        if line.startswith("# config: "):
            return json.loads(line[len("# config: "):])
    return {}


def emit_plots(out_dir) -> list[Path]:
    """Render whatever figures the files in ``out_dir`` support; returns the image paths."""
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        warnings.warn("matplotlib is not installed; skipping plots", RuntimeWarning, stacklevel=2)
        return []
    out = Path(out_dir)
    made: list[Path] = []

    def save(fig, name):
        p = out / name
        fig.savefig(p, dpi=120, bbox_inches="tight")
        plt.close(fig)
        made.append(p)

    traj = sorted(out.glob("trajectory_*.csv"))
    if traj:
        fig, ax = plt.subplots()
        conc = []
        for p in traj:
            d = _read_csv(p)
            ax.plot(d["t_fs"], d["P"], lw=0.8, label=p.stem.removeprefix("trajectory_"))
            if "C" in d:
                conc.append((p, d))
        ax.set(xlabel="t (fs)", ylabel="fidelity P(t)", xscale="log")
        ax.legend()
        save(fig, "fidelity.png")
        if conc:
            fig, ax = plt.subplots()
            for p, d in conc:
                ax.plot(d["t_fs"], d["C"], lw=0.8, label=p.stem.removeprefix("trajectory_"))
            ax.set(xlabel="t (fs)", ylabel="concurrence", xscale="log")
            ax.legend()
            save(fig, "concurrence.png")

    scan = out / "spectrum_scan.csv"
    if scan.exists():
        d = _read_csv(scan)
        fig, ax = plt.subplots()
        for ch in np.unique(d["channel"]):
            m = d["channel"] == ch
            ax.plot(d["r_nm"][m], d["bound_energy_eV"][m], "o-", ms=3, label=f"channel {int(ch)}")
        ax.axhline(0.0, color="k", lw=0.5)
        ax.set(xlabel="r (nm)", ylabel="bound-state energy (eV)")
        ax.legend()
        save(fig, "spectrum.png")

    steady = out / "steady_sweep.csv"
    if steady.exists():
        d = _read_csv(steady)
        fig, ax = plt.subplots()
        ax.plot(d["r_nm"], d["mean"], "k-", label="predicted mean")
        ax.fill_between(d["r_nm"], d["envelope_min"], d["envelope_max"], alpha=0.3, label="predicted envelope")
        comp = out / "steady_state_comparison.json"
        if comp.exists():
            pts = json.loads(comp.read_text())
            ax.plot([c["distance_nm"] for c in pts], [c["observed_mean"] for c in pts], "ro", label="late-time mean")
        ax.set(xlabel="r (nm)", ylabel="steady fidelity")
        ax.legend()
        save(fig, "steady_state.png")

    dens = sorted(out.glob("spectral_density_*.csv"))
    if dens:
        from .nanosphere import DrudeMetal, lsp_resonances

        fig, ax = plt.subplots()
        for p in dens:
            d = _read_csv(p)
            ax.plot(d["omega_eV"], d["D_0"], lw=0.8, label=p.stem.removeprefix("spectral_density_"))
        m = _config(dens[0]).get("metal")
        if m:
            metal = DrudeMetal(m["hbar_omega_p_ev"], m["eps_inf"], m["hbar_gamma_p_ev"])
            eps_d = _config(dens[0])["medium"]["eps_d"]
            for w in lsp_resonances(metal, eps_d, [1, 2]):
                ax.axvline(w, color="grey", ls="--", lw=0.7)
        ax.set(xlabel="energy (eV)", ylabel="D_0 (eV)", yscale="log")
        ax.legend()
        save(fig, "spectral_density.png")

    if not made:
        log.warning("no result files in %s; no plots produced", out)
    return made
