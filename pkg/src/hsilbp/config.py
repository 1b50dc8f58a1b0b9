"""Pipeline configuration: defaults, flat ``key = value`` files, validation."""
from __future__ import annotations

from dataclasses import dataclass, fields, replace
import os

from hsilbp.errors import ConfigError
from hsilbp.elm_kernel import DEFAULT_C, DEFAULT_SIGMA
from hsilbp.elm_linear import ACTIVATIONS

OUTPUT_ENV = "HSILBP_OUTPUT_DIR"


@dataclass(frozen=True)
class PipelineConfig:
    classifier: str = "linear"
    hidden_nodes: int = 450
    activation: str = "sigmoid"
    ridge: float = 0.0
    kernel_c: float = DEFAULT_C
    kernel_sigma: float = DEFAULT_SIGMA
    temperature: float = 0.05
    mu: float = 20.0
    connectivity: int = 4
    max_iters: int = 50
    tol: float = 1e-6
    damping: float = 0.5
    clamp_eps: float = 1e-6
    train_fraction: float | None = 0.1
    train_counts: tuple | None = None
    runs: int = 10
    seed: int = 0
    cube: str | None = None
    labels: str | None = None
    output: str = "hsilbp-out"
    timing: bool = False
    write_maps: bool = True
    dump_probs: bool = False

    def validate(self):
        if self.classifier not in ("linear", "kernel"):
            raise ConfigError("classifier must be 'linear' or 'kernel'")
        if self.hidden_nodes < 1:
            raise ConfigError("hidden_nodes must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ConfigError(f"activation must be one of {sorted(ACTIVATIONS)}")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if self.kernel_c <= 0 or self.kernel_sigma <= 0:
            raise ConfigError("kernel_c and kernel_sigma must be > 0")
        if self.temperature <= 0:
            raise ConfigError("temperature must be > 0")
        if self.mu < 0:
            raise ConfigError("mu must be >= 0")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")
        if self.max_iters < 1 or self.tol <= 0:
            raise ConfigError("max_iters must be >= 1 and tol > 0")
        if not 0 <= self.damping < 1:
            raise ConfigError("damping must lie in [0, 1)")
        if not 0 < self.clamp_eps < 1:
            raise ConfigError("clamp_eps must lie in (0, 1)")
        if self.train_counts is None:
            if self.train_fraction is None or not 0 < self.train_fraction < 1:
                raise ConfigError("train_fraction must lie in (0, 1) when train_counts is unset")
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        return self


_TYPES = {f.name: f.type for f in fields(PipelineConfig)}
_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(key, raw):
    kind = _TYPES[key]
    raw = raw.strip()
    try:
        if key == "train_counts":
            return None if raw.lower() in ("", "none") else tuple(int(v) for v in raw.replace(",", " ").split())
        if key == "train_fraction":
            return None if raw.lower() in ("", "none") else float(raw)
        if kind == "bool":
            low = raw.lower()
            if low not in _TRUE | _FALSE:
                raise ValueError(raw)
            return low in _TRUE
        if kind == "int":
            return int(raw, 0)
        if kind == "float":
            return float(raw)
        return None if raw.lower() == "none" else raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def normalize_key(key):
    return key.strip().lower().replace("-", "_")


def parse_config_text(text):
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = line.split("=", 1)
        key = normalize_key(key)
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw)
    return values


def load_config(path=None, overrides=None, environ=None):
    """Defaults <- config file <- output-dir env var <- explicit overrides."""
    values = {}
    if path:
        with open(path) as fh:
            values.update(parse_config_text(fh.read()))
    env = os.environ if environ is None else environ
    if env.get(OUTPUT_ENV):
        values["output"] = env[OUTPUT_ENV]
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        key = normalize_key(key)
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}")
        values[key] = _coerce(key, val) if isinstance(val, str) else val
    if "train_counts" in values and values["train_counts"] is not None and "train_fraction" not in values:
        values["train_fraction"] = None
    return replace(PipelineConfig(), **values).validate()


def dump_config(config):
    lines = []
    for f in fields(config):
        val = getattr(config, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        lines.append(f"{f.name} = {val}")
    return "\n".join(lines) + "\n"
