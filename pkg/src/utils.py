"""
Utility functions for the GAD QEC simulator.
"""
import csv
import json
import os
from dataclasses import asdict, is_dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from dotenv import load_dotenv


def load_env() -> None:
    """Load environment variables from .env file."""
    load_dotenv()


def get_env_var(key: str, default: Optional[str] = None) -> Optional[str]:
    """
    Get environment variable value.

    Args:
        key: Environment variable name
        default: Default value if not found

    Returns:
        Environment variable value or default
    """
    return os.getenv(key, default)


def ensure_directory(path: str) -> Path:
    """
    Ensure directory exists, create if it doesn't.

    Args:
        path: Directory path

    Returns:
        Path object
    """
    dir_path = Path(path)
    dir_path.mkdir(parents=True, exist_ok=True)
    return dir_path


def get_timestamp() -> str:
    """
    Get current timestamp in a filename-safe format.

    Returns:
        Timestamp string (YYYYMMDD_HHMMSS)
    """
    return datetime.now().strftime("%Y%m%d_%H%M%S")


def get_iso_timestamp() -> str:
    """Get current timestamp in ISO format."""
    return datetime.now().isoformat()


def format_duration(seconds: float) -> str:
    """
    Format duration in seconds to human-readable format.

    Args:
        seconds: Duration in seconds

    Returns:
        Formatted string (e.g., "1.23s")
    """
    if seconds < 1:
        return f"{seconds * 1000:.0f}ms"
    if seconds < 60:
        return f"{seconds:.2f}s"
    minutes, rest = divmod(seconds, 60)
    return f"{int(minutes)}m {rest:.0f}s"


def safe_json_dump(data: Any, indent: int = 2) -> str:
    """
    Safely dump data to JSON string.

    Dataclasses and numpy scalars are converted; anything else falls back to str.
    """
    def convert(value: Any) -> Any:
        if is_dataclass(value) and not isinstance(value, type):
            return asdict(value)
        if isinstance(value, np.generic):
            return value.item()
        if isinstance(value, np.ndarray):
            return value.tolist()
        return str(value)

    try:
        return json.dumps(data, indent=indent, default=convert)
    except (TypeError, ValueError):
        return "{}"


def merge_dicts(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """
    Merge two dictionaries, with override taking precedence.

    Keys whose override value is None keep the base value.
    """
    result = base.copy()
    result.update({k: v for k, v in override.items() if v is not None})
    return result


def parse_grid(spec: str) -> List[float]:
    """
    Parse a ``start:end:count`` grid into evenly spaced values.

    A single number is a one-point grid.

    Raises:
        ValueError: For a malformed spec or a count below 1
    """
    parts = spec.strip().split(":")
    try:
        if len(parts) == 1:
            return [float(parts[0])]
        if len(parts) != 3:
            raise ValueError
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise ValueError(f"grid must be 'start:end:count' or a single value, got '{spec}'") from None
    if count < 1:
        raise ValueError(f"grid '{spec}' is empty")
    if count == 1:
        return [start]
    return [float(v) for v in np.linspace(start, end, count)]


def parse_eps_rule(spec: str) -> Callable[[float], float]:
    """
    Parse an epsilon rule: ``fixed:<v>`` or ``prop:<c>`` (epsilon = c * gamma).

    Raises:
        ValueError: For an unknown rule kind or a non-numeric value
    """
    kind, _, value = spec.strip().partition(":")
    try:
        number = float(value)
    except ValueError:
        raise ValueError(f"epsilon rule needs a number, got '{spec}'") from None
    if kind == "fixed":
        return lambda gamma: number
    if kind == "prop":
        return lambda gamma: number * gamma
    raise ValueError(f"epsilon rule must be fixed:<v> or prop:<c>, got '{spec}'")


def parse_gamma_rule(spec: str) -> float:
    """Parse ``<c>eps`` (gamma = c * epsilon) and return c."""
    text = spec.strip()
    if not text.endswith("eps"):
        raise ValueError(f"gamma rule must look like '10eps', got '{spec}'")
    try:
        return float(text[:-3] or 1.0)
    except ValueError:
        raise ValueError(f"gamma rule must look like '10eps', got '{spec}'") from None


def format_float(value: float) -> str:
    """17 significant digits, enough to round-trip any double."""
    return format(float(value), ".17g")


def write_table(rows: Sequence[Dict[str, Any]], fieldnames: Sequence[str], path: str, fmt: str = "csv") -> Path:
    """
    Write rows as CSV or JSON.

    Floats are written with 17 significant digits in CSV; JSON keeps
    Python's shortest round-trip repr.

    Raises:
        ValueError: For an unknown format
        OSError: If the path is not writable
    """
    out = Path(path)
    if out.parent != Path(""):
        ensure_directory(str(out.parent))
    if fmt == "csv":
        with open(out, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=list(fieldnames), extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: format_float(v) if isinstance(v, float) else v for k, v in row.items()})
    elif fmt == "json":
        with open(out, "w", encoding="utf-8") as f:
            f.write(json.dumps([{k: row.get(k) for k in fieldnames} for row in rows], indent=2))
            f.write("\n")
    else:
        raise ValueError(f"Unknown format: {fmt}")
    return out


def read_table(path: str) -> List[Dict[str, Any]]:
    """Read a CSV written by write_table, converting numeric cells back."""
    def convert(cell: str) -> Any:
        for cast in (int, float):
            try:
                return cast(cell)
            except ValueError:
                continue
        return cell

    with open(path, newline="", encoding="utf-8") as f:
        return [{k: convert(v) for k, v in row.items()} for row in csv.DictReader(f)]
