"""
Run configuration.

Defaults, then environment (GADQEC_THREADS, GADQEC_OUTPUT_DIR), then a
config file, then command-line flags.
"""
import logging
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from dotenv import dotenv_values

from .utils import get_env_var, merge_dicts


logger = logging.getLogger(__name__)

ESTIMATORS = ("exact", "scheme")
FORMATS = ("csv", "json")
REPORT_FORMATS = ("html", "json", "both", "none")


class ConfigError(ValueError):
    """Invalid configuration; the CLI maps it to exit code 2."""


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""
    command: str = "sweep"
    codes: List[str] = field(default_factory=list)
    gamma: str = "0:0.1:11"
    eps_rule: str = "fixed:0"
    temp_sweep: bool = False
    gamma_rule: str = "10eps"
    max_weight: Optional[str] = None
    estimator: str = "exact"
    out: Optional[str] = None
    format: str = "csv"
    output_dir: str = "output"
    threads: int = 1
    seed: int = 0
    report: str = "both"
    verbose: bool = False

    def __post_init__(self):
        if isinstance(self.codes, str):
            self.codes = [c.strip() for c in self.codes.split(",") if c.strip()]
        self.threads = int(self.threads)
        self.seed = int(self.seed)
        for name in ("temp_sweep", "verbose"):
            value = getattr(self, name)
            if isinstance(value, str):
                setattr(self, name, value.strip().lower() in ("1", "true", "yes", "on"))
        if self.max_weight is not None:
            self.max_weight = str(self.max_weight)
        if self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"estimator must be one of {ESTIMATORS}, got '{self.estimator}'")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got '{self.format}'")
        if self.report not in REPORT_FORMATS:
            raise ConfigError(f"report must be one of {REPORT_FORMATS}, got '{self.report}'")

    def output_path(self, default_name: str) -> Path:
        """Explicit --out, else <output_dir>/<default_name>."""
        return Path(self.out) if self.out else Path(self.output_dir) / default_name

    def max_weight_value(self):
        """None, "full" or an int."""
        if self.max_weight in (None, "full"):
            return self.max_weight
        return int(self.max_weight)


FIELD_NAMES = {f.name for f in fields(RunConfig)}


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Read a config file: YAML for .yaml/.yml, flat key = value otherwise.

    Keys may use dashes or underscores.

    Raises:
        ConfigError: If the file is missing, malformed or has unknown keys
    """
    config_path = Path(path)
    if not config_path.exists():
        raise ConfigError(f"Config file not found: {path}")

    if config_path.suffix in (".yaml", ".yml"):
        with open(config_path, "r") as f:
            try:
                raw = yaml.safe_load(f) or {}
            except yaml.YAMLError as e:
                raise ConfigError(f"Invalid YAML in {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must contain a mapping")
    else:
        raw = dict(dotenv_values(config_path))

    values = {str(k).replace("-", "_").lower(): v for k, v in raw.items()}
    unknown = sorted(set(values) - FIELD_NAMES)
    if unknown:
        raise ConfigError(f"Unknown config keys in {path}: {', '.join(unknown)}")
    return values


def env_overrides() -> Dict[str, Any]:
    """Values taken from GADQEC_* environment variables."""
    values: Dict[str, Any] = {}
    threads = get_env_var("GADQEC_THREADS")
    if threads:
        values["threads"] = threads
    output_dir = get_env_var("GADQEC_OUTPUT_DIR")
    if output_dir:
        values["output_dir"] = output_dir
    return values


def load_config(config_file: Optional[str] = None, flags: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Build a RunConfig from every source.

    Args:
        config_file: Optional path given by --config
        flags: Values given on the command line; None means not given

    Returns:
        RunConfig

    Raises:
        ConfigError: For unknown keys or invalid values
    """
    values: Dict[str, Any] = {}
    values = merge_dicts(values, env_overrides())
    if config_file:
        values = merge_dicts(values, read_config_file(config_file))
        logger.info(f"Loaded config file {config_file}")
    values = merge_dicts(values, {k: v for k, v in (flags or {}).items() if k in FIELD_NAMES})
    try:
        return RunConfig(**values)
    except (TypeError, ValueError) as e:
        raise ConfigError(str(e)) from e
