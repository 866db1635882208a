"""Scenario configuration: JSON ingestion, defaults and validation."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from fractions import Fraction
from pathlib import Path

from .montecarlo import DEFAULT_SEED
from .spectral_efficiency import CELL_FREE, CLOSED_FORM, MONTE_CARLO, SMALL_CELL
from .variance import CELL_ANCHORS

SCHEMES = (CELL_FREE, SMALL_CELL)
METHODS = (MONTE_CARLO, CLOSED_FORM)
SELECTIONS = ("crossfit", "plain")
SWEEP_VARIABLES = ("n_h_r", "M", "K")
REQUIRED = ("M", "K")


class ConfigError(ValueError):
    """Invalid or unreadable scenario configuration."""


def _spacing(value, key: str) -> float:
    # accepts 0.25, "1/3" or "0.25"
    try:
        out = float(Fraction(value)) if isinstance(value, str) else float(value)
    except (ValueError, ZeroDivisionError, TypeError) as exc:
        raise ConfigError(f"{key}: cannot read spacing {value!r}") from exc
    if not out > 0:
        raise ConfigError(f"{key}: spacing must be positive, got {value!r}")
    return out


@dataclass(frozen=True)
class ScenarioConfig:
    """One network setup plus what to evaluate on it.

    ``methods`` maps each scheme to the evaluation methods to run. A plain
    list in the input file applies to every requested scheme.
    """

    M: int
    K: int
    n_h_r: int = 9
    n_v_r: int = 9
    n_h_s: int = 6
    n_v_s: int = 6
    delta_r: float = 1 / 3
    delta_s: float = 1 / 3
    p: float = 1.0
    noise_power: float = 0.1
    trials: int = 2000
    seed: int = DEFAULT_SEED
    schemes: tuple = (CELL_FREE, SMALL_CELL)
    methods: dict = field(default_factory=lambda: {CELL_FREE: (MONTE_CARLO,), SMALL_CELL: (MONTE_CARLO,)})
    combiner: str = "mr"
    cell_anchor: str = "corner"
    small_cell_selection: str = "crossfit"

    def __post_init__(self):
        for key in ("M", "K", "n_h_r", "n_v_r", "n_h_s", "n_v_s", "trials"):
            v = getattr(self, key)
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"{key} must be an integer >= 1, got {v!r}")
        if self.trials < 2 and any(MONTE_CARLO in m for m in self.methods.values()):
            raise ConfigError("monte_carlo needs trials >= 2")
        for key in ("p", "noise_power", "delta_r", "delta_s"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive, got {getattr(self, key)!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        if not self.schemes:
            raise ConfigError("at least one scheme is required")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}; choose from {', '.join(SCHEMES)}")
        if set(self.methods) != set(self.schemes):
            raise ConfigError("methods must list every requested scheme and nothing else")
        for s, ms in self.methods.items():
            if not ms:
                raise ConfigError(f"no method requested for {s}")
            for m in ms:
                if m not in METHODS:
                    raise ConfigError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
            if CLOSED_FORM in ms and (s != CELL_FREE or self.combiner != "mr"):
                raise ConfigError(f"closed_form is only valid with cell_free + MR combining "
                                  f"(requested for {s} with {self.combiner})")
        if self.combiner != "mr":
            raise ConfigError(f"unknown combiner {self.combiner!r}; only 'mr' is supported")
        if self.cell_anchor not in CELL_ANCHORS:
            raise ConfigError(f"cell_anchor must be one of {CELL_ANCHORS}, got {self.cell_anchor!r}")
        if self.small_cell_selection not in SELECTIONS:
            raise ConfigError(f"small_cell_selection must be one of {SELECTIONS}, "
                              f"got {self.small_cell_selection!r}")

    @property
    def n_r(self) -> int:
        return self.n_h_r * self.n_v_r

    @property
    def n_s(self) -> int:
        return self.n_h_s * self.n_v_s

    def evaluations(self) -> list[tuple[str, str]]:
        """``(scheme, method)`` pairs in a fixed order."""
        return [(s, m) for s in SCHEMES if s in self.schemes
                for m in METHODS if m in self.methods[s]]

    def with_value(self, variable: str, value) -> "ScenarioConfig":
        """Copy with a sweep variable substituted (``n_h_r`` also sets ``n_v_r``)."""
        if variable not in SWEEP_VARIABLES:
            raise ConfigError(f"cannot sweep {variable!r}; choose from {', '.join(SWEEP_VARIABLES)}")
        if variable == "n_h_r":
            return replace(self, n_h_r=value, n_v_r=value)
        return replace(self, **{variable: value})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schemes"] = list(self.schemes)
        d["methods"] = {s: list(m) for s, m in self.methods.items()}
        return d


_FIELDS = {f.name for f in fields(ScenarioConfig)}


def config_from_dict(data: dict) -> tuple[ScenarioConfig, dict | None]:
    """Validated config and the optional ``sweep`` block from a parsed mapping."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    data = dict(data)
    sweep = data.pop("sweep", None)
    unknown = sorted(set(data) - _FIELDS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    missing = [k for k in REQUIRED if k not in data]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    for key in ("delta_r", "delta_s"):
        if key in data:
            data[key] = _spacing(data[key], key)
    for key in ("p", "noise_power"):
        if key in data and (isinstance(data[key], bool) or not isinstance(data[key], (int, float))):
            raise ConfigError(f"{key} must be a number, got {data[key]!r}")
    if isinstance(data.get("seed"), str):
        try:
            data["seed"] = int(data["seed"], 0)
        except ValueError as exc:
            raise ConfigError(f"seed: cannot read {data['seed']!r}") from exc
    schemes = data.get("schemes", list(SCHEMES))
    if isinstance(schemes, str):
        schemes = [schemes]
    data["schemes"] = tuple(dict.fromkeys(schemes))
    methods = data.get("methods", [MONTE_CARLO])
    if isinstance(methods, str):
        methods = [methods]
    if isinstance(methods, dict):
        data["methods"] = {s: tuple(dict.fromkeys(v if isinstance(v, list) else [v]))
                           for s, v in methods.items()}
    else:
        data["methods"] = {s: tuple(dict.fromkeys(methods)) for s in data["schemes"]}
    try:
        cfg = ScenarioConfig(**data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if sweep is not None:
        _check_sweep_block(sweep)
    return cfg, sweep


def _check_sweep_block(sweep) -> None:
    if not isinstance(sweep, dict) or set(sweep) != {"variable", "values"}:
        raise ConfigError("sweep must be an object with exactly the keys 'variable' and 'values'")
    if sweep["variable"] not in SWEEP_VARIABLES:
        raise ConfigError(f"cannot sweep {sweep['variable']!r}; choose from {', '.join(SWEEP_VARIABLES)}")


def parse_config(path) -> ScenarioConfig:
    """Read and validate a JSON scenario file (the ``sweep`` block is ignored)."""
    return load_config(path)[0]


def load_config(path) -> tuple[ScenarioConfig, dict | None]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
