import json
import logging

import pytest
import yaml

from lspqe import cli
from lspqe.config import PRESETS, ConfigError, load_config, preset, resolve
from lspqe.spectrum import PrecisionError

SMALL = {
    "name": "small",
    "emitters": {"count": 2, "distance_nm": 8.0},
    "numerics": {"omega_points": 200},
    "scenario": {"kind": "spectral_density"},
}


def write(tmp_path, obj, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if name.endswith(".json") else yaml.safe_dump(obj))
    return p


def test_preset_fig2_contents():
    jobs = preset("fig2")
    dyn = jobs[0]
    assert dyn.metal.hbar_omega_p == 9.01 and dyn.metal.eps_inf == 3.718 and dyn.metal.hbar_gamma_p == 0.09
    assert dyn.geometry.n_emitters == 2 and dyn.geometry.radius_nm == 5.0 and dyn.geometry.hbar_omega0 == 0.8
    assert dyn.sweep_values == (8.0, 9.0, 9.5)
    assert {j.kind for j in jobs} == {"dynamics", "spectrum_scan", "steady_sweep"}
    assert load_config("fig2").name == "fig2_dynamics"
    assert set(PRESETS) == {"fig2", "fig3", "fig4"}
    assert preset("fig3")[0].initial == "w_state"
    assert {2, 4, 8} <= {int(v) for v in preset("fig3")[0].sweep_values}


def test_defaults_and_eps_note(tmp_path):
    cfg = load_config(write(tmp_path, {}))
    assert cfg.geometry.eps_d == 1.0
    assert any("eps_d" in n for n in cfg.notes)
    assert not load_config(write(tmp_path, {"medium": {"eps_d": 2.0}})).notes


def test_json_accepted(tmp_path):
    assert load_config(write(tmp_path, SMALL, "cfg.json")).name == "small"


@pytest.mark.parametrize("raw,fragment", [
    ({"emitters": {"distance_nm": 3.0}}, "emitters.distance_nm"),
    ({"emitters": {"colour": 1}}, "emitters"),
    ({"bogus": 1}, "<root>"),
    ({"numerics": {"n_max": -3}}, "numerics.n_max"),
    ({"scenario": {"kind": "movie"}}, "scenario.kind"),
    ({"scenario": {"sweep": {"parameter": "r", "values": [4.0]}}}, "sweep"),
    ({"scenario": {"sweep": {"parameter": "N", "values": [2.5]}}}, "sweep"),
    ({"scenario": {"sweep": {"parameter": "r"}}}, "sweep"),
    ({"numerics": {"omega_min_ev": 5.0, "omega_max_ev": 4.0}}, "omega_max_ev"),
])
def test_rejections_name_the_key(raw, fragment):
    with pytest.raises(ConfigError, match=fragment.replace(".", r"\.").replace("<", "<")):
        resolve(raw)


def test_missing_and_unparsable_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_sweep_range_expands():
    cfg = resolve({"scenario": {"sweep": {"parameter": "r", "start": 8.0, "stop": 9.0, "num": 3}}})
    assert cfg.sweep_values == (8.0, 8.5, 9.0)
    assert [g.distance_nm for g in cfg.points()] == [8.0, 8.5, 9.0]
    assert cfg.resolved["scenario"]["sweep"] == {"parameter": "distance_nm", "values": [8.0, 8.5, 9.0]}


def test_validate_command(tmp_path, capsys):
    assert cli.main(["validate", str(write(tmp_path, SMALL))]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["medium"]["eps_d"] == 1.0
    assert cli.main(["validate", str(write(tmp_path, {"nope": 1}))]) == cli.EXIT_CONFIG


def test_run_is_reproducible_and_annotated(tmp_path):
    cfg = write(tmp_path, SMALL)
    for d in ("a", "b"):
        assert cli.main(["run", str(cfg), "--out-dir", str(tmp_path / d)]) == 0
    a = (tmp_path / "a" / "small" / "spectral_density_N2_r8.csv").read_bytes()
    b = (tmp_path / "b" / "small" / "spectral_density_N2_r8.csv").read_bytes()
    assert a == b
    lines = a.decode().splitlines()
    assert lines[0].startswith("# lspqe ")
    assert json.loads(lines[1][len("# config: "):])["emitters"]["distance_nm"] == 8.0
    assert lines[2].startswith("omega_eV,J_0,J_1,D_0,D_1")
    meta = json.loads((tmp_path / "a" / "small" / "metadata.json").read_text())
    assert "created" in meta and meta["config"]["name"] == "small"
    assert not list((tmp_path / "a" / "small").glob(".*"))  # no temp files left behind


def test_spectrum_scan_run_writes_report(tmp_path):
    raw = {"name": "scan", "numerics": {"omega_points": 1500},
           "scenario": {"kind": "spectrum_scan", "sweep": {"parameter": "r", "values": [8.9, 9.2]}}}
    assert cli.main(["run", str(write(tmp_path, raw)), "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "scan" / "convergence_report.json").read_text())
    th = rep["thresholds_nm"]["1"]
    assert 8.9 < th["base"] < 9.2 and th["spread_nm"] < 0.05
    assert set(rep["bound_energies_eV"]) == {"omega_max_6", "omega_max_8", "omega_max_10"}


def test_n_sweep_and_steady_sweep(tmp_path):
    raw = {"name": "nsweep", "emitters": {"distance_nm": 9.5}, "numerics": {"omega_points": 1000},
           "scenario": {"kind": "spectrum_scan", "channels": [0], "sweep": {"parameter": "N", "values": [2, 30]}}}
    assert cli.main(["run", str(write(tmp_path, raw)), "--out-dir", str(tmp_path)]) == 0
    text = (tmp_path / "nsweep" / "bound_states_vs_N.csv").read_text().splitlines()
    assert text[2] == "N,channel,bound_energy_eV,residue"
    assert text[3].startswith("2,0,,") and not text[4].startswith("30,0,,")
    raw = {"name": "steady", "numerics": {"omega_points": 1000},
           "scenario": {"kind": "steady_sweep", "sweep": {"parameter": "r", "values": [8.0, 9.0, 9.5]}}}
    assert cli.main(["run", str(write(tmp_path, raw)), "--out-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "steady" / "steady_sweep.csv").read_text().splitlines()[3:]
    assert [r.split(",")[3] for r in rows] == ["persistent_oscillation", "population_trapping", "complete_decay"]


def test_numerical_error_exit_code(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise PrecisionError("forced")

    monkeypatch.setitem(cli.RUNNERS, "spectral_density", boom)
    assert cli.main(["run", str(write(tmp_path, SMALL)), "--out-dir", str(tmp_path)]) == cli.EXIT_NUMERICAL


def test_atomic_write_leaves_old_file_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "x.csv"
    cli.atomic_write(target, "old\n")

    def fail(*a, **k):
        raise OSError("disk full")

    monkeypatch.setattr(cli.os, "replace", fail)
    with pytest.raises(OSError):
        cli.atomic_write(target, "new\n")
    assert target.read_text() == "old\n"
    assert [p.name for p in tmp_path.iterdir()] == ["x.csv"]


def test_plots(tmp_path, caplog):
    pytest.importorskip("matplotlib")
    from lspqe.plots import emit_plots

    raw = dict(SMALL, scenario={"kind": "spectral_density"})
    assert cli.main(["run", str(write(tmp_path, raw)), "--out-dir", str(tmp_path), "--emit-plots"]) == 0
    assert [p.name for p in (tmp_path / "small").glob("*.png")] == ["spectral_density.png"]
    empty = tmp_path / "empty"
    empty.mkdir()
    with caplog.at_level(logging.WARNING, logger="lspqe"):
        assert emit_plots(empty) == []
    assert "no plots" in caplog.text


def test_plots_without_matplotlib(tmp_path, monkeypatch):
    import builtins

    from lspqe.plots import emit_plots

    real = builtins.__import__

    def fake(name, *a, **k):
        if name.startswith("matplotlib"):
            raise ImportError(name)
        return real(name, *a, **k)

    monkeypatch.setattr(builtins, "__import__", fake)
    with pytest.warns(RuntimeWarning, match="matplotlib"):
        assert emit_plots(tmp_path) == []


def test_empty_sweep(tmp_path, caplog):
    raw = {"name": "empty", "scenario": {"kind": "dynamics", "sweep": {"parameter": "r", "values": []}}}
    with caplog.at_level(logging.WARNING, logger="lspqe"):
        assert cli.main(["run", str(write(tmp_path, raw)), "--out-dir", str(tmp_path), "--emit-plots"]) == 0
    assert "empty sweep" in caplog.text
    assert not list((tmp_path / "empty").glob("*.png"))
