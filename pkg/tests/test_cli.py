import json
import subprocess
import sys

import pytest

from xlmimo_sim.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, main
from xlmimo_sim.experiments import HEADER, read_results

TINY = {"M": 2, "K": 2, "n_h_r": 4, "n_v_r": 4, "n_h_s": 2, "n_v_s": 2, "trials": 40,
        "methods": {"cell_free": ["closed_form", "monte_carlo"], "small_cell": ["monte_carlo"]}}


def cfg_file(tmp_path, data):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(data))
    return p


def test_validate_ok(tmp_path, capsys):
    assert main(["validate", "--config", str(cfg_file(tmp_path, TINY))]) == EXIT_OK
    assert "ok (M=2, K=2, N_r=16, N_s=4" in capsys.readouterr().out


def test_validate_invalid(tmp_path, capsys):
    bad = {**TINY, "methods": ["closed_form"]}
    assert main(["validate", "--config", str(cfg_file(tmp_path, bad))]) == EXIT_INVALID
    assert "closed_form is only valid" in capsys.readouterr().err


def test_validate_unknown_key(tmp_path, capsys):
    assert main(["validate", "--config", str(cfg_file(tmp_path, {**TINY, "colour": 1}))]) == EXIT_INVALID
    assert "colour" in capsys.readouterr().err


def test_run_writes_csv(tmp_path):
    out = tmp_path / "res.csv"
    code = main(["run", "--config", str(cfg_file(tmp_path, TINY)), "--out", str(out), "-q",
                 "--trials", "30", "--seed", "0x10"])
    assert code == EXIT_OK
    table = read_results(out)
    assert out.read_text().splitlines()[0] == ",".join(HEADER)
    assert [(r.scheme, r.method) for r in table.rows] == [("cell_free", "closed_form"),
                                                           ("cell_free", "monte_carlo"),
                                                           ("small_cell", "monte_carlo")]


def test_run_with_sweep_and_plot_script(tmp_path):
    data = {**TINY, "sweep": {"variable": "K", "values": [1, 2]}}
    out, plot = tmp_path / "r.csv", tmp_path / "plot.py"
    assert main(["run", "--config", str(cfg_file(tmp_path, data)), "--out", str(out),
                 "--plot-script", str(plot), "-q"]) == EXIT_OK
    assert {r.value for r in read_results(out).rows} == {1, 2}
    assert str(out.resolve()) in plot.read_text()


def test_run_runtime_failure(tmp_path, monkeypatch):
    import xlmimo_sim.experiments as ex

    def boom(*a, **k):
        raise ArithmeticError("broken")

    monkeypatch.setattr(ex, "smallcell_se", boom)
    out = tmp_path / "r.csv"
    assert main(["run", "--config", str(cfg_file(tmp_path, TINY)), "--out", str(out), "-q"]) == EXIT_RUNTIME
    assert out.exists()  # the table is completed with the failed point marked


def test_run_missing_config(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.csv")]) == EXIT_INVALID


def test_run_unwritable_output(tmp_path):
    code = main(["run", "--config", str(cfg_file(tmp_path, TINY)), "--out",
                 str(tmp_path / "no" / "x.csv"), "-q"])
    assert code == EXIT_RUNTIME


def test_preset_dump_config(capsys):
    assert main(["preset", "fig3", "--dump-config", "--seed", "7"]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert set(data) == {"d3", "d6"}
    assert data["d3"]["seed"] == 7 and data["d3"]["K"] == 8


def test_preset_unknown_name():
    with pytest.raises(SystemExit) as exc:
        main(["preset", "fig9"])
    assert exc.value.code == 2


def test_preset_run_writes_variants(tmp_path, capsys):
    out = tmp_path / "f5.csv"
    assert main(["preset", "fig5", "--desk", "--out", str(out), "-q"]) == EXIT_OK
    files = sorted(p.name for p in tmp_path.glob("f5_*.csv"))
    assert len(files) == 7 and "f5_ds6_dr3.csv" in files
    assert "improvement over ds6_dr6" in capsys.readouterr().out


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "xlmimo_sim.cli", "validate", "--config",
                           str(cfg_file(tmp_path, TINY))], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
