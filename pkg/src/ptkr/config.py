"""Line-oriented run configuration: `section.key = value`.

The format is strict: unknown keys are rejected so a typo in a physics
parameter cannot silently fall back to a default.  Parsing materializes every
default, and serialize/parse round-trips to an equal config.
"""

import hashlib
from dataclasses import dataclass, fields

import numpy as np

from .errors import ConfigError
from .otoc import linear_sample_times, log_sample_times
from .rotor import BasisSpec, ModelParams

_REQUIRED = object()


def _parse_float(s: str) -> float:
    v = float(s)
    if not np.isfinite(v):
        raise ValueError("value must be finite")
    return v


def _parse_int(s: str) -> int:
    if not s.lstrip("+-").isdigit():
        raise ValueError("expected an integer")
    return int(s)


def _parse_str(s: str) -> str:
    return s


def _parse_float_list(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(_parse_float(part.strip()) for part in s.split(","))


def _parse_int_list(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(_parse_int(part.strip()) for part in s.split(","))


def _parse_str_list(s: str) -> tuple:
    s = s.strip()
    if not s:
        return ()
    return tuple(part.strip() for part in s.split(","))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def _enum(*options):
    def check(v):
        if v not in options:
            raise ValueError(f"must be one of {options}")
    return check


def _positive(v):
    if not v > 0:
        raise ValueError("must be positive")


def _non_negative(v):
    if v < 0:
        raise ValueError("must be non-negative")


def _ge(n):
    def check(v):
        if v < n:
            raise ValueError(f"must be >= {n}")
    return check


def _even_ge4(v):
    if v < 4 or v % 2 != 0:
        raise ValueError("must be even and >= 4")


def _fraction(v):
    if not 0 < v <= 1:
        raise ValueError("must be in (0, 1]")


def _formats(v):
    allowed = {"svg", "png", "pdf"}
    bad = [f for f in v if f not in allowed]
    if bad:
        raise ValueError(f"unsupported formats {bad}; allowed: {sorted(allowed)}")


# key -> (attribute, parser, default, validator)
_SCHEMA = {
    "model.kick_strength": ("kick_strength", _parse_float, _REQUIRED, None),
    "model.non_hermiticity": ("non_hermiticity", _parse_float, 0.0, _non_negative),
    "model.hbar_eff": ("hbar_eff", _parse_float, _REQUIRED, _positive),
    "basis.n_modes": ("n_modes", _parse_int, 8192, _even_ge4),
    "initial.sigma": ("sigma", _parse_float, 10.0, _positive),
    "schedule.t_max": ("t_max", _parse_int, 1000, _non_negative),
    "schedule.sample_mode": ("sample_mode", _parse_str, "log", _enum("log", "linear")),
    "schedule.sample_count": ("sample_count", _parse_int, 40, _ge(1)),
    "trajectory.storage_stride": ("storage_stride", _parse_int, 1, _ge(1)),
    "evolve.snapshot_times": ("snapshot_times", _parse_int_list, (), None),
    "otoc.density_time": ("otoc_density_time", _parse_int, None, _non_negative),
    "otoc.trace_time": ("otoc_trace_time", _parse_int, None, _non_negative),
    "phase.mu_threshold": ("mu_threshold", _parse_float, 1e-4, _positive),
    "phase.r2_threshold": ("r2_threshold", _parse_float, 0.5, _positive),
    "phase.window_fraction": ("window_fraction", _parse_float, 0.5, _fraction),
    "phase.kick_values": ("kick_values", _parse_float_list, (), None),
    "phase.lambda_values": ("lambda_values", _parse_float_list, (), None),
    "lambdac.lo": ("lambdac_lo", _parse_float, 1e-4, _positive),
    "lambdac.hi": ("lambdac_hi", _parse_float, 0.1, _positive),
    "lambdac.tol": ("lambdac_tol", _parse_float, 1e-4, _positive),
    "lambdac.t_max_cap": ("lambdac_t_max_cap", _parse_int, 8000, _ge(1)),
    "lambdac.max_n_modes": ("lambdac_max_n_modes", _parse_int, 131072, _even_ge4),
    "fit.kind": ("fit_kind", _parse_str, "power",
                 _enum("power", "localization", "ballistic-linear",
                       "ballistic-quadratic", "time-avg")),
    "fit.input": ("fit_input", _parse_str, "", None),
    "fit.x_column": ("fit_x_column", _parse_str, "t", None),
    "fit.y_column": ("fit_y_column", _parse_str, "c", None),
    "fit.window_lo": ("fit_window_lo", _parse_float, None, None),
    "fit.window_hi": ("fit_window_hi", _parse_float, None, None),
    "plot.input": ("plot_input", _parse_str, "", None),
    "plot.kind": ("plot_kind", _parse_str, "line", _enum("line", "loglog", "heatmap")),
    "plot.x_column": ("plot_x_column", _parse_str, "t", None),
    "plot.y_columns": ("plot_y_columns", _parse_str_list, ("c",), None),
    "plot.value_column": ("plot_value_column", _parse_str, "mu", None),
    "plot.output": ("plot_output", _parse_str, "plot", None),
    "output.directory": ("output_directory", _parse_str, "out", None),
    "output.formats": ("output_formats", _parse_str_list, ("svg",), _formats),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _, _, _) in _SCHEMA.items()}


@dataclass(frozen=True)
class RunConfig:
    kick_strength: float
    non_hermiticity: float
    hbar_eff: float
    n_modes: int
    sigma: float
    t_max: int
    sample_mode: str
    sample_count: int
    storage_stride: int
    snapshot_times: tuple
    otoc_density_time: int | None
    otoc_trace_time: int | None
    mu_threshold: float
    r2_threshold: float
    window_fraction: float
    kick_values: tuple
    lambda_values: tuple
    lambdac_lo: float
    lambdac_hi: float
    lambdac_tol: float
    lambdac_t_max_cap: int
    lambdac_max_n_modes: int
    fit_kind: str
    fit_input: str
    fit_x_column: str
    fit_y_column: str
    fit_window_lo: float | None
    fit_window_hi: float | None
    plot_input: str
    plot_kind: str
    plot_x_column: str
    plot_y_columns: tuple
    plot_value_column: str
    plot_output: str
    output_directory: str
    output_formats: tuple

    def model_params(self) -> ModelParams:
        return ModelParams(self.kick_strength, self.non_hermiticity, self.hbar_eff)

    def basis(self) -> BasisSpec:
        return BasisSpec(self.n_modes, self.hbar_eff)

    def sample_times(self) -> np.ndarray:
        if self.sample_mode == "log":
            return log_sample_times(self.t_max, self.sample_count)
        return linear_sample_times(self.t_max, self.sample_count)

    def fit_window(self) -> tuple | None:
        if self.fit_window_lo is None and self.fit_window_hi is None:
            return None
        lo = self.fit_window_lo if self.fit_window_lo is not None else -np.inf
        hi = self.fit_window_hi if self.fit_window_hi is not None else np.inf
        return (lo, hi)


def _validate_values(values: dict) -> None:
    for key, (attr, _, _, validator) in _SCHEMA.items():
        v = values[attr]
        if v is None or validator is None:
            continue
        try:
            validator(v)
        except ValueError as exc:
            raise ConfigError(f"invalid value for {key}: {exc}", key=key) from None
    if values["lambdac_lo"] >= values["lambdac_hi"]:
        raise ConfigError("lambdac.lo must be below lambdac.hi", key="lambdac.lo")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config; unknown or duplicate keys are errors."""
    values = {attr: default for _, (attr, _, default, _) in _SCHEMA.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'", line=lineno)
        key, _, rhs = line.partition("=")
        key = key.strip()
        rhs = rhs.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}", key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}", key=key, line=lineno)
        seen.add(key)
        attr, parser, _, _ = _SCHEMA[key]
        try:
            values[attr] = parser(rhs)
        except ValueError as exc:
            raise ConfigError(
                f"line {lineno}: cannot parse {key} = {rhs!r} ({exc})", key=key, line=lineno
            ) from None
    missing = [k for k, (attr, _, d, _) in _SCHEMA.items() if d is _REQUIRED and values[attr] is _REQUIRED]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}", key=missing[0])
    _validate_values(values)
    return RunConfig(**values)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(cfg)) == cfg."""
    lines = []
    section = ""
    for key, (attr, _, _, _) in _SCHEMA.items():
        value = getattr(cfg, attr)
        if value is None:
            continue
        sec = key.split(".", 1)[0]
        if sec != section:
            if section:
                lines.append("")
            section = sec
        lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def apply_overrides(cfg: RunConfig, overrides) -> RunConfig:
    """Apply `key=value` strings on top of a parsed config and re-validate."""
    values = {f.name: getattr(cfg, f.name) for f in fields(cfg)}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, _, rhs = item.partition("=")
        key = key.strip()
        if key not in _SCHEMA:
            raise ConfigError(f"unknown override key {key!r}", key=key)
        attr, parser, _, _ = _SCHEMA[key]
        try:
            values[attr] = parser(rhs.strip())
        except ValueError as exc:
            raise ConfigError(f"cannot parse override {key} = {rhs!r} ({exc})", key=key) from None
    _validate_values(values)
    return RunConfig(**values)


def config_digest(cfg: RunConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode()).hexdigest()[:16]
