import math

import numpy as np
import pytest

from xlmimo_sim import montecarlo
from xlmimo_sim.config import ConfigError, ScenarioConfig
from xlmimo_sim.experiments import (HEADER, FigurePreset, ResultsTable, SweepSpec, evaluate_point,
                                    figure_preset, read_results, run_sweep, summarize, write_plot_script,
                                    write_results)
from xlmimo_sim.spectral_efficiency import build_scenario, cf_se_closed_form, cf_se_monte_carlo, smallcell_se

SMALL = dict(n_h_r=4, n_v_r=4, n_h_s=2, n_v_s=2, trials=100)
BOTH = {"cell_free": ("closed_form", "monte_carlo"), "small_cell": ("monte_carlo",)}


def small_cfg(**kw):
    return ScenarioConfig(**{"M": 2, "K": 2, **SMALL, "methods": BOTH, **kw})


class TestSweepSpec:
    def test_strictly_increasing(self):
        with pytest.raises(ConfigError, match="strictly increasing"):
            SweepSpec("M", (1, 3, 3), small_cfg())
        with pytest.raises(ConfigError):
            SweepSpec("M", (4, 2), small_cfg())

    def test_invalid_substitution(self):
        with pytest.raises(ConfigError):
            SweepSpec("K", (0, 1), small_cfg())

    def test_variable(self):
        with pytest.raises(ConfigError):
            SweepSpec("p", (1,), small_cfg())
        assert SweepSpec("n_h_r", [3, 5], small_cfg()).point(1).n_r == 25


class TestRunSweep:
    def test_single_point_matches_direct_calls(self):
        cfg = small_cfg()
        table = run_sweep(SweepSpec("M", (2,), cfg))
        seed = montecarlo.derive_seed(cfg.seed, 0)
        sc = build_scenario(2, 2, n_h_r=4, n_v_r=4, delta_r=1 / 3, n_h_s=2, n_v_s=2, delta_s=1 / 3)
        direct = [cf_se_closed_form(sc), cf_se_monte_carlo(sc, 100, seed), smallcell_se(sc, 100, seed)]
        assert len(table.rows) == 3
        for row, res in zip(table.rows, direct):
            assert (row.scheme, row.method) == (res.scheme, res.method)
            np.testing.assert_allclose(row.per_ue_se, res.per_ue_se, rtol=1e-8)
            assert row.sum_se == pytest.approx(res.sum_se, rel=1e-8)
            assert row.avg_se == pytest.approx(res.sum_se / 2, rel=1e-8)

    def test_rows_sorted_and_invariants(self):
        table = run_sweep(SweepSpec("K", (1, 2, 3), small_cfg()))
        assert [r.value for r in table.rows] == [1, 1, 1, 2, 2, 2, 3, 3, 3]
        for r in table.rows:
            assert len(r.per_ue_se) == r.value
            assert r.sum_se == pytest.approx(sum(r.per_ue_se), rel=1e-8)
            assert r.avg_se == pytest.approx(r.sum_se / r.value, rel=1e-8)

    def test_point_seeds_do_not_depend_on_other_points(self):
        a = run_sweep(SweepSpec("M", (2, 3), small_cfg()))
        b = run_sweep(SweepSpec("M", (2, 3, 4), small_cfg()))
        assert a.rows == b.rows[:6]

    def test_progress_callback(self):
        seen = []
        run_sweep(SweepSpec("M", (1, 2), small_cfg(methods={"cell_free": ("closed_form",)},
                                                      schemes=("cell_free",))),
                  progress=lambda i, n, v: seen.append((i, n, v)))
        assert seen == [(0, 2, 1), (1, 2, 2)]

    def test_failed_point_is_marked(self, monkeypatch):
        import xlmimo_sim.experiments as ex

        def boom(*a, **k):
            raise ArithmeticError("broken")

        monkeypatch.setattr(ex, "cf_se_closed_form", boom)
        table = run_sweep(SweepSpec("M", (1, 2), small_cfg()))
        failed = table.failed
        assert len(failed) == 2 and all(r.method == "closed_form" for r in failed)
        assert "broken" in failed[0].error
        assert all(math.isfinite(r.sum_se) for r in table.rows if r.method != "closed_form")

    def test_timing_flag(self):
        cfg = small_cfg(schemes=("cell_free",), methods={"cell_free": ("monte_carlo",)})
        assert evaluate_point(cfg, 1)[0].seconds == 0.0
        assert evaluate_point(cfg, 1, timing=True)[0].seconds > 0.0


class TestCsv:
    def test_empty_table(self, tmp_path):
        p = write_results(ResultsTable("M"), tmp_path / "e.csv")
        assert p.read_text() == ",".join(HEADER) + "\n"
        assert read_results(p).rows == []

    def test_round_trip_and_layout(self, tmp_path):
        table = run_sweep(SweepSpec("M", (1, 2), small_cfg()))
        p = write_results(table, tmp_path / "r.csv")
        again = read_results(p)
        assert again.sweep_var == "M" and again.rows == table.rows
        lines = p.read_text().splitlines()
        assert lines[0] == ",".join(HEADER)
        assert len(lines) == 1 + 2 * 3 * (2 + 1)
        assert lines[1].startswith("M,1,cell_free,closed_form,1,")

    def test_byte_identical(self, tmp_path):
        spec = SweepSpec("M", (1, 2), small_cfg())
        a = write_results(run_sweep(spec), tmp_path / "a.csv").read_bytes()
        b = write_results(run_sweep(spec), tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_nine_significant_digits(self, tmp_path):
        from xlmimo_sim.experiments import ResultRow
        t = ResultsTable("M", [ResultRow(3, "cell_free", "closed_form", (1 / 3,), (0.0,), 1 / 3, 0.0)])
        text = write_results(t, tmp_path / "d.csv").read_text()
        assert "0.333333333" in text and "0.3333333333" not in text

    def test_io_error_names_path(self, tmp_path):
        bad = tmp_path / "missing_dir" / "x.csv"
        with pytest.raises(OSError, match="missing_dir"):
            write_results(ResultsTable("M"), bad)

    def test_bad_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("a,b\n")
        with pytest.raises(ValueError):
            read_results(p)


class TestPresets:
    def test_fig2(self):
        spec = figure_preset("fig2").sweep
        assert (spec.base.M, spec.base.K, spec.base.n_s) == (20, 8, 36)
        assert spec.variable == "n_h_r" and spec.values == tuple(range(4, 13))
        assert spec.base.delta_r == spec.base.delta_s == pytest.approx(1 / 3)

    def test_fig3(self):
        p = figure_preset("fig3")
        assert [label for label, _ in p.variants] == ["d3", "d6"]
        for label, spec in p.variants:
            assert spec.variable == "M"
            assert (spec.base.K, spec.base.n_s, spec.base.n_r) == (8, 36, 81)
        assert p.spec("d6").base.delta_r == pytest.approx(1 / 6)
        assert max(p.spec("d3").values) == 20

    def test_fig4(self):
        p = figure_preset("fig4")
        assert p.metric == "avg_se"
        for _, spec in p.variants:
            assert spec.variable == "K" and spec.base.M == 20 and (spec.base.n_s, spec.base.n_r) == (36, 81)

    def test_fig5(self):
        p = figure_preset("fig5")
        assert len(p.variants) == 7
        cases = {(round(1 / s.base.delta_s), round(1 / s.base.delta_r)) for _, s in p.variants}
        assert {(3, 3), (6, 6), (3, 6), (6, 3)} <= cases and len(cases) == 7
        for _, spec in p.variants:
            assert (spec.base.K, spec.base.n_s, spec.base.n_r) == (3, 144, 144)
            assert spec.variable == "M"
            assert spec.base.evaluations() == [("cell_free", "closed_form")]

    def test_desk_caps_bs_count(self):
        for name in ("fig2", "fig3", "fig4", "fig5"):
            for _, spec in figure_preset(name, desk=True).variants:
                for i in range(len(spec.values)):
                    assert spec.point(i).M <= 10

    def test_unknown(self):
        with pytest.raises(ConfigError, match="fig2, fig3, fig4, fig5"):
            figure_preset("fig9")

    def test_sweep_property_requires_single_variant(self):
        with pytest.raises(ValueError):
            figure_preset("fig3").sweep


class TestReporting:
    def test_fig5_summary(self):
        preset = figure_preset("fig5", desk=True)
        tables = {}
        for label, spec in preset.variants:
            tables[label] = run_sweep(SweepSpec("M", (2,), spec.base))
        lines = summarize(preset, tables)
        assert len(lines) == 2 and all("improvement over ds6_dr6" in l for l in lines)

    def test_fig2_argmax(self):
        cfg = small_cfg(schemes=("cell_free",), methods={"cell_free": ("closed_form",)})
        t = run_sweep(SweepSpec("n_h_r", (2, 3, 4), cfg))
        preset = FigurePreset("fig2", "t", "sum_se", (("d3", None),))
        (line,) = summarize(preset, {"d3": t})
        assert "peaks at n_h_r = n_v_r =" in line

    def test_plot_script(self, tmp_path):
        csv_path = write_results(run_sweep(SweepSpec("M", (1, 2), small_cfg(
            schemes=("cell_free",), methods={"cell_free": ("closed_form",)}))), tmp_path / "r.csv")
        script = write_plot_script(tmp_path / "plot.py", {"run": csv_path}, "title")
        text = script.read_text()
        compile(text, str(script), "exec")
        assert str(csv_path.resolve()) in text


def test_fig5_receive_spacing_gain_dominates_at_desk_scale():
    # closed form only, M = 2..10; the ordering reverses beyond about M = 20
    preset = figure_preset("fig5", desk=True)
    series = {label: run_sweep(spec).series("cell_free", "closed_form")[1] for label, spec in preset.variants}
    base = series["ds6_dr6"]
    assert np.all(series["ds6_dr3"] - base >= series["ds3_dr6"] - base)
    assert np.all(series["ds3_dr3"] > series["ds6_dr6"])
