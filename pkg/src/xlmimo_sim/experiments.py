"""Parameter sweeps, figure presets and CSV / plot-script output."""
from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import montecarlo
from .config import SWEEP_VARIABLES, ConfigError, ScenarioConfig
from .spectral_efficiency import (CELL_FREE, CLOSED_FORM, MONTE_CARLO, SMALL_CELL, SEResult,
                                  build_scenario, cf_se_closed_form, cf_se_monte_carlo, smallcell_se)

log = logging.getLogger(__name__)

HEADER = ("sweep_var", "value", "scheme", "method", "ue", "se", "sum_se", "avg_se", "stderr", "seconds")
SUM_ROW = "sum"
SIG_DIGITS = 9
PRESETS = ("fig2", "fig3", "fig4", "fig5")


def _q(x: float) -> float:
    """Round to the precision written to CSV, so tables round-trip exactly."""
    return float(f"{x:.{SIG_DIGITS}g}")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    values: tuple
    base: ScenarioConfig

    def __post_init__(self):
        if self.variable not in SWEEP_VARIABLES:
            raise ConfigError(f"cannot sweep {self.variable!r}; choose from {', '.join(SWEEP_VARIABLES)}")
        object.__setattr__(self, "values", tuple(self.values))
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError(f"sweep values must be strictly increasing, got {list(self.values)}")
        for v in self.values:
            self.base.with_value(self.variable, v)  # raises if the substitution is invalid

    def point(self, i: int) -> ScenarioConfig:
        return self.base.with_value(self.variable, self.values[i])


@dataclass(frozen=True)
class ResultRow:
    value: float
    scheme: str
    method: str
    per_ue_se: tuple
    per_ue_stderr: tuple
    sum_se: float
    sum_stderr: float
    seconds: float = 0.0
    error: str | None = field(default=None, compare=False)

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.sum_se)

    @property
    def avg_se(self) -> float:
        return _q(self.sum_se / len(self.per_ue_se))


@dataclass
class ResultsTable:
    sweep_var: str
    rows: list = field(default_factory=list)

    @property
    def failed(self) -> list:
        return [r for r in self.rows if r.failed]

    def select(self, scheme: str, method: str) -> list:
        return [r for r in self.rows if r.scheme == scheme and r.method == method]

    def series(self, scheme: str, method: str, metric: str = "sum_se"):
        """Sweep values and one metric (``sum_se``, ``avg_se`` or ``sum_stderr``) as arrays."""
        rows = self.select(scheme, method)
        return (np.array([r.value for r in rows], dtype=float),
                np.array([getattr(r, metric) for r in rows], dtype=float))


def _row_from_result(value, res: SEResult, seconds: float) -> ResultRow:
    return ResultRow(value, res.scheme, res.method,
                     tuple(_q(x) for x in res.per_ue_se), tuple(_q(x) for x in res.stderr),
                     _q(res.sum_se), _q(res.sum_stderr), _q(seconds))


def _failed_row(value, scheme, method, k, message) -> ResultRow:
    nan = float("nan")
    return ResultRow(value, scheme, method, (nan,) * k, (nan,) * k, nan, nan, 0.0, message)


def evaluate_point(cfg: ScenarioConfig, seed: int, *, workers: int = 1, timing: bool = False,
                   value=None) -> list[ResultRow]:
    """Run every requested (scheme, method) on one scenario.

    Monte-Carlo evaluations of one point share ``seed``, so both schemes see
    the same channel draws.
    """
    value = value if value is not None else 0
    scenario = None
    rows = []
    for scheme, method in cfg.evaluations():
        t0 = time.perf_counter()
        try:
            if scenario is None:
                scenario = build_scenario(cfg.M, cfg.K, n_h_r=cfg.n_h_r, n_v_r=cfg.n_v_r,
                                          delta_r=cfg.delta_r, n_h_s=cfg.n_h_s, n_v_s=cfg.n_v_s,
                                          delta_s=cfg.delta_s, power=cfg.p,
                                          noise_power=cfg.noise_power, anchor=cfg.cell_anchor)
            if scheme == CELL_FREE and method == CLOSED_FORM:
                res = cf_se_closed_form(scenario)
            elif scheme == CELL_FREE:
                res = cf_se_monte_carlo(scenario, cfg.trials, seed, workers=workers)
            else:
                res = smallcell_se(scenario, cfg.trials, seed, workers=workers,
                                   selection=cfg.small_cell_selection)
        except (ArithmeticError, RuntimeError, ValueError, MemoryError) as exc:
            log.error("%s/%s at %s failed: %s", scheme, method, value, exc)
            rows.append(_failed_row(value, scheme, method, cfg.K, f"{type(exc).__name__}: {exc}"))
            continue
        seconds = time.perf_counter() - t0 if timing else 0.0
        rows.append(_row_from_result(value, res, seconds))
    return rows


def run_sweep(spec: SweepSpec, *, workers: int = 1, timing: bool = False,
              progress: Callable[[int, int, object], None] | None = None) -> ResultsTable:
    """Evaluate every sweep point; point ``i`` uses ``derive_seed(base.seed, i)``.

    Failing evaluations are kept in the table as rows of NaN.
    """
    table = ResultsTable(spec.variable)
    n = len(spec.values)
    for i, value in enumerate(spec.values):
        if progress is not None:
            progress(i, n, value)
        seed = montecarlo.derive_seed(spec.base.seed, i)
        table.rows.extend(evaluate_point(spec.point(i), seed, workers=workers, timing=timing,
                                         value=value))
    table.rows.sort(key=lambda r: (r.value, _EVAL_ORDER[(r.scheme, r.method)]))
    return table


_EVAL_ORDER = {(CELL_FREE, CLOSED_FORM): 0, (CELL_FREE, MONTE_CARLO): 1,
               (SMALL_CELL, MONTE_CARLO): 2, (SMALL_CELL, CLOSED_FORM): 3}


# -- CSV --------------------------------------------------------------------------

def _fmt(x) -> str:
    return f"{x:.{SIG_DIGITS}g}"


def write_results(table: ResultsTable, path) -> Path:
    """Write ``table`` as CSV: one line per UE plus a ``sum`` line per row."""
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HEADER)
            for r in table.rows:
                common = (table.sweep_var, _fmt(r.value), r.scheme, r.method)
                tail = (_fmt(r.sum_se), _fmt(r.avg_se))
                for k, (se, err) in enumerate(zip(r.per_ue_se, r.per_ue_stderr), start=1):
                    w.writerow((*common, k, _fmt(se), *tail, _fmt(err), _fmt(r.seconds)))
                w.writerow((*common, SUM_ROW, _fmt(r.sum_se), *tail, _fmt(r.sum_stderr), _fmt(r.seconds)))
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc
    return path


def read_results(path) -> ResultsTable:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader, ()))
        if header != HEADER:
            raise ValueError(f"{path}: unexpected header {','.join(header)}")
        lines = list(reader)
    table = ResultsTable(lines[0][0] if lines else "")
    ue_se, ue_err = [], []
    for line in lines:
        var, value, scheme, method, ue, se, sum_se, _, err, seconds = line
        table.sweep_var = var
        v = float(value)
        v = int(v) if v.is_integer() else v
        if ue != SUM_ROW:
            ue_se.append(float(se))
            ue_err.append(float(err))
            continue
        table.rows.append(ResultRow(v, scheme, method, tuple(ue_se), tuple(ue_err),
                                    float(sum_se), float(err), float(seconds)))
        ue_se, ue_err = [], []
    return table


# -- presets ------------------------------------------------------------------------

@dataclass(frozen=True)
class FigurePreset:
    """One figure: a list of labelled sweeps sharing the x-axis."""

    name: str
    title: str
    metric: str  # "sum_se" or "avg_se"
    variants: tuple  # ((label, SweepSpec), ...)

    @property
    def sweep(self) -> SweepSpec:
        if len(self.variants) != 1:
            raise ValueError(f"{self.name} has {len(self.variants)} variants; use .variants")
        return self.variants[0][1]

    def spec(self, label: str) -> SweepSpec:
        return dict(self.variants)[label]


_BOTH = {CELL_FREE: (CLOSED_FORM, MONTE_CARLO), SMALL_CELL: (MONTE_CARLO,)}
_FIG5_CASES = ((3, 3), (3, 6), (6, 3), (6, 6), (4, 4), (4, 6), (6, 4))  # (Δs, Δr) as λ/n


def _base(**kw) -> ScenarioConfig:
    defaults = dict(schemes=(CELL_FREE, SMALL_CELL), methods=_BOTH)
    defaults.update(kw)
    return ScenarioConfig(**defaults)


def figure_preset(name: str, *, desk: bool = False) -> FigurePreset:
    """Sweeps reproducing the setups of the four result figures.

    ``desk=True`` caps the BS count at 10 so every preset runs in minutes on
    one core.
    """
    m_max = 10 if desk else 20
    m_values = tuple(range(2, m_max + 1, 2))
    if name == "fig2":
        base = _base(M=m_max, K=8, n_h_s=6, n_v_s=6, delta_r=1 / 3, delta_s=1 / 3)
        return FigurePreset(name, "Sum SE vs BS surface side", "sum_se",
                            (("d3", SweepSpec("n_h_r", tuple(range(4, 13)), base)),))
    if name == "fig3":
        return FigurePreset(name, "Sum SE vs number of BSs", "sum_se", tuple(
            (f"d{n}", SweepSpec("M", m_values, _base(M=1, K=8, delta_r=1 / n, delta_s=1 / n)))
            for n in (3, 6)))
    if name == "fig4":
        k_values = (2, 4, 6, 8) if desk else tuple(range(2, 17, 2))
        return FigurePreset(name, "Average SE vs number of UEs", "avg_se", tuple(
            (f"d{n}", SweepSpec("K", k_values, _base(M=m_max, K=1, delta_r=1 / n, delta_s=1 / n)))
            for n in (3, 6)))
    if name == "fig5":
        variants = []
        for ns, nr in _FIG5_CASES:
            base = ScenarioConfig(M=1, K=3, n_h_r=12, n_v_r=12, n_h_s=12, n_v_s=12,
                                  delta_r=1 / nr, delta_s=1 / ns, schemes=(CELL_FREE,),
                                  methods={CELL_FREE: (CLOSED_FORM,)})
            variants.append((f"ds{ns}_dr{nr}", SweepSpec("M", m_values, base)))
        return FigurePreset(name, "Cell-free sum SE vs number of BSs", "sum_se", tuple(variants))
    raise ConfigError(f"unknown preset {name!r}; available presets: {', '.join(PRESETS)}")


def sweep_to_dict(spec: SweepSpec) -> dict:
    d = spec.base.to_dict()
    d["sweep"] = {"variable": spec.variable, "values": list(spec.values)}
    return d


def override(spec: SweepSpec, **changes) -> SweepSpec:
    """Same sweep with some base fields replaced (``None`` values are ignored)."""
    changes = {k: v for k, v in changes.items() if v is not None}
    return SweepSpec(spec.variable, spec.values, replace(spec.base, **changes)) if changes else spec


# -- reporting ------------------------------------------------------------------

def _at(table: ResultsTable, scheme, method, value=None):
    x, y = table.series(scheme, method)
    if not len(x):
        return None, None
    i = len(x) - 1 if value is None else int(np.flatnonzero(x == value)[0])
    return x[i], y[i]


def summarize(preset: FigurePreset, tables: dict) -> list[str]:
    """Human-readable analogs of the quantities discussed alongside each figure."""
    lines = []
    if preset.name == "fig2":
        t = tables[preset.variants[0][0]]
        for scheme, method in ((CELL_FREE, CLOSED_FORM), (CELL_FREE, MONTE_CARLO), (SMALL_CELL, MONTE_CARLO)):
            x, y = t.series(scheme, method)
            if len(x) and np.isfinite(y).any():
                i = int(np.nanargmax(y))
                lines.append(f"{scheme}/{method}: sum SE peaks at n_h_r = n_v_r = {x[i]:g} ({y[i]:.4g} bit/s/Hz)")
    elif preset.name in ("fig3", "fig4"):
        hi, lo = tables["d3"], tables["d6"]
        metric = preset.metric
        for scheme, method in ((CELL_FREE, CLOSED_FORM), (CELL_FREE, MONTE_CARLO), (SMALL_CELL, MONTE_CARLO)):
            xs, a = hi.series(scheme, method, metric)
            _, b = lo.series(scheme, method, metric)
            if len(xs) and len(b) == len(a):
                loss = 100.0 * (1.0 - b[-1] / a[-1])
                lines.append(f"{scheme}/{method}: spacing lambda/6 loses {loss:.2f}% of the lambda/3 "
                             f"{metric} at {hi.sweep_var}={xs[-1]:g}")
    elif preset.name == "fig5":
        ref = tables["ds6_dr6"]
        x, base = ref.series(CELL_FREE, CLOSED_FORM)
        if len(x):
            for label in ("ds3_dr6", "ds6_dr3"):
                _, y = tables[label].series(CELL_FREE, CLOSED_FORM)
                gain = 100.0 * (y[-1] / base[-1] - 1.0)
                lines.append(f"{label}: {gain:.1f}% sum SE improvement over ds6_dr6 at M={x[-1]:g}")
    return lines


# -- plot script ------------------------------------------------------------------

_PLOT_TEMPLATE = '''"""Plot {title}. Generated alongside the CSV results; needs matplotlib."""
import csv
import sys

import matplotlib.pyplot as plt

FILES = {files!r}
METRIC = {metric!r}


def load(path):
    series = {{}}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            if row["ue"] != "sum":
                continue
            key = (row["scheme"], row["method"])
            series.setdefault(key, []).append((float(row["value"]), float(row[METRIC])))
            xlabel = row["sweep_var"]
    return series, xlabel


fig, ax = plt.subplots()
for label, path in FILES.items():
    series, xlabel = load(path)
    for (scheme, method), pts in sorted(series.items()):
        marker = "o" if method == "closed_form" else None
        style = "none" if method == "closed_form" else "-"
        ax.plot(*zip(*pts), marker=marker, linestyle=style, label=f"{{scheme}} {{method}} {{label}}")
ax.set_xlabel(xlabel)
ax.set_ylabel(METRIC.replace("_", " ") + " [bit/s/Hz]")
ax.set_title({title!r})
ax.grid(True)
ax.legend(fontsize="small")
out = sys.argv[1] if len(sys.argv) > 1 else {png!r}
fig.savefig(out, dpi=150, bbox_inches="tight")
print(f"wrote {{out}}")
'''


def write_plot_script(path, files: dict, title: str, metric: str = "sum_se") -> Path:
    """Standalone matplotlib script that plots the CSVs in ``files`` (label -> path)."""
    path = Path(path)
    files = {k: str(Path(v).resolve()) for k, v in files.items()}
    path.write_text(_PLOT_TEMPLATE.format(files=files, metric=metric, title=title,
                                          png=str(path.with_suffix(".png").name)))
    return path
