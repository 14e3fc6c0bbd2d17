"""
Experiment configuration.

Sources, lowest to highest precedence: built-in defaults, MINKVAL_* environment
variables (a .env file is honoured), a JSON config file, a named entry of
data/experiments.json, then command-line flags.
"""
import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

COMMANDS = ("multipliers", "gap", "iterate", "petty", "intervals")
FORMATS = ("json", "csv")
EXPERIMENTS_PATH = "data/experiments.json"

ENV_FIELDS = {
    "MINKVAL_KMAX": ("kmax", int),
    "MINKVAL_WORKERS": ("workers", int),
    "MINKVAL_OUTPUT_DIR": ("output_dir", str),
}


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    dim: int = 4
    degree: int = 2
    generator: dict = field(default_factory=lambda: {"kind": "segment"})
    body: Optional[dict] = None
    kmax: int = 128
    steps: int = 50
    m: int = 1
    mmax: Optional[int] = None
    eps: float = 1e-4
    seed: int = 0
    out: Optional[str] = None
    format: str = "json"
    workers: int = 1
    samples: int = 100
    k: int = 2
    amplitudes: tuple = ()
    mode: str = "phi2"
    output_dir: Optional[str] = None

    def valuation_record(self) -> dict:
        return {"n": self.dim, "i": self.degree, "generator": dict(self.generator), "kmax": self.kmax}

    def body_record(self, default: Optional[dict] = None) -> Optional[dict]:
        record = self.body if self.body is not None else default
        if record is None:
            return None
        record = dict(record)
        record.setdefault("n", self.dim)
        return record

    @property
    def output_path(self) -> Optional[str]:
        """--out, resolved against output_dir when relative; None means stdout."""
        if self.out is None or self.out == "-":
            return None
        path = Path(self.out)
        if self.output_dir and not path.is_absolute():
            path = Path(self.output_dir) / path
        return str(path)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["amplitudes"] = list(self.amplitudes)
        data.pop("out")
        data.pop("output_dir")
        return data


def parse_record(text: str, what: str) -> dict:
    """A JSON object, or a bare kind name such as 'segment'."""
    text = text.strip()
    if not text.startswith("{"):
        return {"kind": text}
    try:
        record = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"--{what} is not valid JSON: {e}") from e
    if not isinstance(record, dict) or "kind" not in record:
        raise ConfigError(f"--{what} must be an object with a 'kind' field")
    return record


def parse_amplitudes(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as e:
        raise ConfigError(f"--amplitudes must be comma-separated numbers: {e}") from e


def _coerce(values: dict, source: str) -> dict:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown keys in {source}: {sorted(unknown)}")
    values = dict(values)
    if "amplitudes" in values:
        amplitudes = values["amplitudes"]
        values["amplitudes"] = parse_amplitudes(amplitudes) if isinstance(amplitudes, str) else tuple(amplitudes)
    for key in ("generator", "body"):
        if isinstance(values.get(key), str):
            values[key] = parse_record(values[key], key)
    return values


def _env_values() -> dict:
    load_dotenv()
    values = {}
    for name, (key, kind) in ENV_FIELDS.items():
        raw = os.getenv(name)
        if raw is None or raw == "":
            continue
        try:
            values[key] = kind(raw)
        except ValueError as e:
            raise ConfigError(f"{name}={raw!r} is not a valid {kind.__name__}") from e
    return values


def _read_json(path: str) -> dict:
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def load_experiment(name: str, command: str, path: str = EXPERIMENTS_PATH) -> dict:
    experiments = _read_json(path).get("experiments", {})
    if name not in experiments:
        raise ConfigError(f"no experiment named {name!r} in {path}; known: {sorted(experiments)}")
    entry = dict(experiments[name])
    declared = entry.pop("command", command)
    entry.pop("description", None)
    if declared != command:
        raise ConfigError(f"experiment {name!r} is a {declared!r} experiment, not {command!r}")
    return entry


def validate(config: ExperimentConfig) -> ExperimentConfig:
    if config.command not in COMMANDS:
        raise ConfigError(f"unknown command {config.command!r}")
    if config.format not in FORMATS:
        raise ConfigError(f"--format must be one of {FORMATS}, got {config.format!r}")
    if config.dim < 3:
        raise ConfigError(f"--dim must be >= 3, got {config.dim}")
    if not 1 <= config.degree <= config.dim - 1:
        raise ConfigError(f"--degree must lie in 1..{config.dim - 1}, got {config.degree}")
    if config.kmax < 2:
        raise ConfigError(f"--kmax must be >= 2, got {config.kmax}")
    if config.steps < 0 or config.samples < 0:
        raise ConfigError("--steps and --samples must be non-negative")
    if config.m < 1 or (config.mmax is not None and config.mmax < config.m):
        raise ConfigError(f"need 1 <= m <= mmax, got m={config.m}, mmax={config.mmax}")
    if not config.eps > 0:
        raise ConfigError(f"--eps must be positive, got {config.eps}")
    if config.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {config.workers}")
    if config.k < 2:
        raise ConfigError(f"--k must be >= 2, got {config.k}")
    if config.mode not in ("phi", "phi2"):
        raise ConfigError(f"--mode must be phi or phi2, got {config.mode!r}")
    return config


def build_config(
    command: str,
    flags: dict,
    config_path: Optional[str] = None,
    experiment: Optional[str] = None,
    experiments_path: str = EXPERIMENTS_PATH,
) -> ExperimentConfig:
    """Merge every configuration source; flags set to None are ignored."""
    config = ExperimentConfig(command=command)
    layers = [("environment", _env_values())]
    if config_path:
        layers.append((config_path, _read_json(config_path)))
    if experiment:
        layers.append((f"experiment {experiment}", load_experiment(experiment, command, experiments_path)))
    layers.append(("command line", {k: v for k, v in flags.items() if v is not None}))
    for source, values in layers:
        values = _coerce(values, source)
        values.pop("command", None)
        try:
            config = replace(config, **values)
        except TypeError as e:
            raise ConfigError(f"bad values in {source}: {e}") from e
        logger.debug("config after %s: %s", source, values)
    return validate(config)
