"""Flat key=value experiment configuration and run manifests.

Configs are plain text lines ``key = value`` with ``#`` comments; every
key has a default matching the evaluation setup of the reference
scenario (1 mW transmit power, -30 dB reference loss, -140 dBm noise
power, 20 m / 60 m link distances, exponent 2.5, Nakagami m=3 fading,
50 mW controller and 1 mW per-diode consumption, ASEP threshold 1e-5).

dB/dBm forms are accepted through explicit ``_db``/``_dbm`` key
suffixes; bare keys take linear values.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

PRESETS = ("fig3a", "fig3b", "fig4", "fig5", "constellation-dump", "analyze")


class ConfigError(ValueError):
    """Raised for unknown keys, malformed values or bad combinations."""


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "analyze"
    seed: int = 12345
    trials: int = 1_000_000
    workers: int = 1
    # link budget
    p_t: float = 1e-3
    g: float = 1.0
    c0_db: float = -30.0
    sigma_n2: float = 1e-17
    d0: float = 1.0
    d1: float = 20.0
    d2: float = 60.0
    n_ple: float = 2.5
    # fading
    m: float = 3.0
    omega: float = 1.0
    # power model
    p_ctr: float = 0.05
    p_pin: float = 1e-3
    p_v: float = 1e-5
    bandwidth_b: float = 1.0
    # sweep shape
    M: int = 64
    q: int = 2
    q_values: tuple[int, ...] = (1, 2, 3)
    schemes: tuple[str, ...] = ("HQAM", "QAM")
    scheme: str = "HQAM"
    m_values: tuple[int, ...] = (64, 256, 1024)
    n_start: int = 50
    n_stop: int = 300
    n_step: int = 10
    gamma_db_start: float = 0.0
    gamma_db_stop: float = 40.0
    gamma_db_step: float = 2.0

    def n_grid(self) -> tuple[int, ...]:
        return tuple(range(self.n_start, self.n_stop + 1, self.n_step))

    def gamma_db_grid(self) -> tuple[float, ...]:
        count = int(round((self.gamma_db_stop - self.gamma_db_start) / self.gamma_db_step)) + 1
        return tuple(self.gamma_db_start + i * self.gamma_db_step for i in range(count))


_PRESET_DEFAULTS: dict[str, dict] = {
    "fig3a": {"M": 64, "n_start": 50, "n_stop": 300, "n_step": 10},
    "fig3b": {"M": 1024, "n_start": 100, "n_stop": 1100, "n_step": 50},
    "fig4": {"M": 1024, "n_start": 500, "n_stop": 1500, "n_step": 25},
    "fig5": {},
    "constellation-dump": {},
    "analyze": {"M": 64, "n_start": 50, "n_stop": 300, "n_step": 10},
}

_INT_KEYS = {"seed", "trials", "workers", "M", "q", "n_start", "n_stop", "n_step"}
_FLOAT_KEYS = {
    "p_t", "g", "c0_db", "sigma_n2", "d0", "d1", "d2", "n_ple", "m", "omega",
    "p_ctr", "p_pin", "p_v", "bandwidth_b",
    "gamma_db_start", "gamma_db_stop", "gamma_db_step",
}
_STR_KEYS = {"preset", "scheme"}
_INT_LIST_KEYS = {"q_values", "m_values"}
_STR_LIST_KEYS = {"schemes"}

# keys accepted in dBm (power -> watts) on top of their linear forms
_DBM_POWER_KEYS = {"sigma_n2", "p_t", "p_ctr", "p_pin"}
# keys accepted as a dB ratio
_DB_RATIO_KEYS = {"g"}


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _INT_LIST_KEYS:
            return tuple(int(v) for v in raw.split(","))
        if key in _STR_LIST_KEYS:
            return tuple(v.strip() for v in raw.split(","))
        if key in _STR_KEYS:
            return raw
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key}: {raw!r}") from exc
    raise ConfigError(f"unknown config key: {key}")


def _resolve_key(key: str, raw: str) -> tuple[str, object]:
    """Map dB/dBm-suffixed keys onto their canonical linear form."""
    if key.endswith("_dbm"):
        base = key[: -len("_dbm")]
        if base in _DBM_POWER_KEYS:
            try:
                dbm = float(raw)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key}: {raw!r}") from exc
            return base, 1e-3 * 10.0 ** (dbm / 10.0)
        raise ConfigError(f"unknown config key: {key}")
    if key.endswith("_db") and key[: -len("_db")] in _DB_RATIO_KEYS:
        try:
            db = float(raw)
        except ValueError as exc:
            raise ConfigError(f"invalid value for {key}: {raw!r}") from exc
        return key[: -len("_db")], 10.0 ** (db / 10.0)
    return key, _parse_value(key, raw)


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines (``#`` comments, blank lines allowed)."""
    out: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        canon, value = _resolve_key(key, raw)
        out[canon] = value
    return out


def build_config(preset: str, overrides: dict) -> ExperimentConfig:
    """Assemble the effective config: defaults <- preset <- overrides."""
    if preset not in PRESETS:
        raise ConfigError(f"unknown preset: {preset!r}")
    values = dict(_PRESET_DEFAULTS[preset])
    values["preset"] = preset
    for key, value in overrides.items():
        if key == "preset" and value != preset:
            raise ConfigError("preset cannot be overridden by key")
        values[key] = value
    cfg = ExperimentConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.trials < 1000:
        raise ConfigError("trials must be at least 1000")
    if cfg.workers < 1:
        raise ConfigError("workers must be at least 1")
    if cfg.n_step <= 0 or cfg.n_stop < cfg.n_start or cfg.n_start < 1:
        raise ConfigError("invalid N grid")
    if cfg.gamma_db_step <= 0 or cfg.gamma_db_stop < cfg.gamma_db_start:
        raise ConfigError("invalid SNR grid")
    if cfg.scheme not in ("HQAM", "QAM"):
        raise ConfigError(f"unknown scheme {cfg.scheme!r}")
    for s in cfg.schemes:
        if s not in ("HQAM", "QAM"):
            raise ConfigError(f"unknown scheme {s!r}")
    for name in ("p_t", "g", "sigma_n2", "d0", "d1", "d2", "n_ple", "omega", "bandwidth_b"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    if not 0 < cfg.p_v < 1:
        raise ConfigError("p_v must be in (0, 1)")
    if cfg.m < 0.5:
        raise ConfigError("m must be >= 0.5")
    if cfg.q < 1 or any(q < 1 for q in cfg.q_values):
        raise ConfigError("q must be >= 1")


def format_value(value) -> str:
    if isinstance(value, float):
        return "%.17g" % value
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def manifest_text(cfg: ExperimentConfig, versions: dict[str, str]) -> str:
    """Render the run manifest; parsing it reproduces the config exactly."""
    lines = ["# hqamris run manifest"]
    for name, ver in versions.items():
        lines.append(f"# {name} {ver}")
    for field in dataclasses.fields(cfg):
        lines.append(f"{field.name} = {format_value(getattr(cfg, field.name))}")
    return "\n".join(lines) + "\n"


def config_from_manifest(text: str) -> ExperimentConfig:
    values = parse_config_text(text)
    preset = values.pop("preset")
    return build_config(preset, values)


def gamma_bar_db(gamma_bar: float) -> float:
    return 10.0 * math.log10(gamma_bar)
