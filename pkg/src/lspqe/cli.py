"""Command-line runner: ``lspqe run|preset|validate``."""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config, preset
from .dynamics import AccuracyError, AliasingError, InitialCondition, steady_state_predictor
from .nanosphere import NoResonanceError, PoleError
from .scenario import Numerics, run_scenario
from .spectral import GridSpec, SymmetryError, build_spectral_table
from .spectrum import PrecisionError, SpectrumScan, find_bound_state, threshold_distance

log = logging.getLogger("lspqe")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3
NUMERICAL_ERRORS = (PrecisionError, AccuracyError, AliasingError, SymmetryError, PoleError, NoResonanceError,
                    FloatingPointError)


def atomic_write(path: Path, text: str) -> None:
    """Write to a sibling temp file, then rename over ``path``."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _header(cfg: RunConfig) -> str:
    return f"# lspqe {__version__}\n# config: {json.dumps(cfg.resolved, sort_keys=True)}\n"


def _write_csv(path: Path, cfg: RunConfig, body: str) -> None:
    atomic_write(path, _header(cfg) + body)


def _write_json(path: Path, obj) -> None:
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def _tag(cfg: RunConfig, geom) -> str:
    if cfg.sweep_parameter == "count":
        return f"N{geom.n_emitters}"
    return f"N{geom.n_emitters}_r{geom.distance_nm:g}"


# Per-point workers live at module level so a process pool can pickle them.

def _dynamics_point(metal, geom, initial, numerics):
    return run_scenario(metal, geom, initial, numerics)


def _bound_point(metal, geom, grid, n_max, channels):
    table = build_spectral_table(metal, geom, grid, n_max)
    chans = range(geom.n_emitters) if channels is None else [c for c in channels if c < geom.n_emitters]
    return [(l, find_bound_state(table, l)) for l in chans]


def _table_point(metal, geom, grid, n_max):
    return build_spectral_table(metal, geom, grid, n_max)


def _map(workers: int, fn, *iterables):
    if workers <= 1:
        return list(map(fn, *iterables))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *iterables))


def _run_dynamics(cfg: RunConfig, out: Path, workers: int) -> dict:
    pts = cfg.points()
    results = _map(workers, _dynamics_point, [cfg.metal] * len(pts), pts, [cfg.initial] * len(pts),
                   [cfg.numerics] * len(pts))
    comparison = []
    for geom, res in zip(pts, results):
        tag = _tag(cfg, geom)
        _write_csv(out / f"trajectory_{tag}.csv", cfg, res.to_csv())
        summ = res.summary()
        summ.update(distance_nm=geom.distance_nm, n_emitters=geom.n_emitters, initial=cfg.initial)
        _write_json(out / f"trajectory_{tag}.json", summ)
        comparison.append({
            "distance_nm": geom.distance_nm, "n_emitters": geom.n_emitters,
            "observed_class": res.steady_class, "predicted_class": res.predicted.steady_class,
            "observed_mean": res.observed.mean, "predicted_mean": res.predicted.mean,
            "observed_range": [res.observed.minimum, res.observed.maximum],
            "predicted_envelope": list(res.predicted.envelope),
            "agreement": res.agreement,
        })
        if not res.agreement:
            log.warning("%s: observed %s disagrees with predicted %s", tag, res.steady_class,
                        res.predicted.steady_class)
    _write_json(out / "steady_state_comparison.json", comparison)
    return {"points": len(pts), "all_agree": all(c["agreement"] for c in comparison)}


def _bound_rows(cfg, pts, workers, grid):
    return _map(workers, _bound_point, [cfg.metal] * len(pts), pts, [grid] * len(pts),
                [cfg.numerics.n_max] * len(pts), [cfg.channels] * len(pts))


def convergence_report(cfg: RunConfig, scan: SpectrumScan) -> dict:
    """Thresholds under grid refinement and omega_max changes, and bound energies vs omega_max."""
    num = cfg.numerics
    base = num.grid()
    variants = {"base": base, "grid_x2": base.refined(2), "omega_max_10": replace(base, omega_max=10.0)}
    report = {"thresholds_nm": {}, "bound_energies_eV": {}}
    r = scan.r_values
    for k, ch in enumerate(scan.channels):
        present = np.array([row[k] is not None for row in scan.states])
        idx = [i for i in range(len(r) - 1) if present[i] and not present[i + 1]]
        if not idx:
            continue
        i = idx[-1]
        entry = {}
        for name, g in variants.items():
            try:
                entry[name] = threshold_distance(cfg.metal, cfg.geometry, ch, r[i], r[i + 1], g, num.n_max)
            except ValueError as exc:
                entry[name] = None
                log.warning("threshold for channel %d under %s: %s", ch, name, exc)
        vals = [v for v in entry.values() if v is not None]
        entry["spread_nm"] = float(max(vals) - min(vals)) if vals else None
        report["thresholds_nm"][str(ch)] = entry
    geom = cfg.geometry.with_(distance_nm=float(r[0])) if len(r) else cfg.geometry
    for wmax in (6.0, 8.0, 10.0):
        table = build_spectral_table(cfg.metal, geom, replace(base, omega_max=wmax), num.n_max)
        report["bound_energies_eV"][f"omega_max_{wmax:g}"] = {
            str(l): (None if (s := find_bound_state(table, l)) is None else s.energy)
            for l in scan.channels}
    report["bound_energies_distance_nm"] = geom.distance_nm
    return report


def _run_scan(cfg: RunConfig, out: Path, workers: int) -> dict:
    pts = cfg.points()
    rows = _bound_rows(cfg, pts, workers, cfg.numerics.grid())
    if cfg.sweep_parameter == "count":
        lines = ["N,channel,bound_energy_eV,residue"]
        for geom, row in zip(pts, rows):
            for l, st in row:
                lines.append(f"{geom.n_emitters},{l},{'' if st is None else repr(st.energy)},"
                             f"{'' if st is None else repr(st.residue)}")
        _write_csv(out / "bound_states_vs_N.csv", cfg, "\n".join(lines) + "\n")
        first = next((g.n_emitters for g, row in zip(pts, rows) if any(s is not None for _, s in row)), None)
        return {"points": len(pts), "first_bound_N": first}
    chans = tuple(l for l, _ in rows[0])
    scan = SpectrumScan(np.array([g.distance_nm for g in pts]), [[s for _, s in row] for row in rows], chans)
    _write_csv(out / "spectrum_scan.csv", cfg, scan.to_csv())
    report = convergence_report(cfg, scan)
    _write_json(out / "convergence_report.json", report)
    return {"points": len(pts), "counts": scan.counts().tolist()}


def _run_density(cfg: RunConfig, out: Path, workers: int) -> dict:
    pts = cfg.points()
    tables = _map(workers, _table_point, [cfg.metal] * len(pts), pts, [cfg.numerics.grid()] * len(pts),
                  [cfg.numerics.n_max] * len(pts))
    for geom, table in zip(pts, tables):
        _write_csv(out / f"spectral_density_{_tag(cfg, geom)}.csv", cfg, table.to_csv())
        if not table.converged:
            log.warning("%s: multipole sum not converged (tail %.3g)", _tag(cfg, geom), table.tail)
    return {"points": len(pts)}


def _run_steady(cfg: RunConfig, out: Path, workers: int) -> dict:
    pts = cfg.points()
    rows = _bound_rows(cfg, pts, workers, cfg.numerics.grid())
    lines = ["r_nm,N,n_bound,class,mean,envelope_min,envelope_max,beat_eV"]
    for geom, row in zip(pts, rows):
        states = [None] * geom.n_emitters
        for l, s in row:
            states[l] = s
        c0 = InitialCondition.from_name(cfg.initial, geom.n_emitters).vector
        p = steady_state_predictor(states, c0)
        lines.append(f"{geom.distance_nm!r},{geom.n_emitters},{p.n_bound},{p.steady_class},{p.mean!r},"
                     f"{p.envelope[0]!r},{p.envelope[1]!r},{'' if p.beat is None else repr(p.beat)}")
    _write_csv(out / "steady_sweep.csv", cfg, "\n".join(lines) + "\n")
    info = {"points": len(pts)}
    if cfg.with_dynamics:
        info["dynamics"] = _run_dynamics(cfg, out, workers)
    return info


RUNNERS = {"dynamics": _run_dynamics, "spectrum_scan": _run_scan, "spectral_density": _run_density,
           "steady_sweep": _run_steady}


def run_config(cfg: RunConfig, out_dir: str | None = None, workers: int = 1, emit_plots: bool | None = None) -> Path:
    """Execute one configuration and write its outputs; returns the output directory."""
    out = Path(out_dir if out_dir is not None else cfg.output_dir) / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    for note in cfg.notes:
        log.info(note)
    if not cfg.points():
        log.warning("%s: empty sweep, nothing to compute", cfg.name)
        info = {"points": 0}
    else:
        info = RUNNERS[cfg.kind](cfg, out, workers)
    _write_json(out / "metadata.json", {
        "version": __version__, "name": cfg.name, "kind": cfg.kind, "config": cfg.resolved,
        "notes": list(cfg.notes), "result": info,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    })
    if cfg.emit_plots if emit_plots is None else emit_plots:
        from .plots import emit_plots as _emit

        _emit(out)
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lspqe", description="Emitters coupled to a metal nanosphere")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run a YAML/JSON configuration"), ("preset", "run a figure preset")):
        s = sub.add_parser(name, help=helptext)
        if name == "run":
            s.add_argument("config")
        else:
            s.add_argument("name", choices=["fig2", "fig3", "fig4"])
        s.add_argument("--workers", type=int, default=1)
        s.add_argument("--out-dir", default=None)
        s.add_argument("--emit-plots", action="store_true", default=None)
    s = sub.add_parser("validate", help="check a configuration and print it with defaults filled")
    s.add_argument("config")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            for note in cfg.notes:
                print(f"note: {note}", file=sys.stderr)
            print(json.dumps(cfg.resolved, indent=2, sort_keys=True))
            return EXIT_OK
        cfgs = [load_config(args.config)] if args.command == "run" else preset(args.name)
        for cfg in cfgs:
            out = run_config(cfg, args.out_dir, max(1, args.workers), args.emit_plots)
            print(out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
