"""
Configuration manager for modulus approximation runs
Reads and writes flat `key = value` run files and merges them with defaults and flags
"""

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Dict, Optional


class ConfigError(ValueError):
    """Invalid or unreadable run configuration"""


@dataclass
class RunConfig:
    input: Optional[str] = None
    generator: Optional[str] = None
    epsilon: float = 0.25
    bign: int = 4
    k_override: Optional[float] = None
    mesh: float = 0.1
    dmax: int = 16
    walks: int = 100_000
    seed: int = 0
    out: str = "output"
    render: bool = False
    workers: int = 1
    verify_depth: Optional[int] = None
    admissible_points: int = 50
    exterior_points: int = 100
    conclusion_samples: int = 1000
    chunk_walks: int = 25_000
    square_budget: int = 20_000
    strict_interpolation: bool = False
    min_separation: float = 0.0
    max_carleson: float = math.inf

    @property
    def K(self) -> float:
        return 2.0 * self.bign if self.k_override is None else self.k_override

    @property
    def contour_epsilon(self) -> float:
        """Accuracy the contour is built for; the far field then has |B| < epsilon / 2"""
        return 0.5 * self.epsilon

    @property
    def net_depth(self) -> int:
        return self.dmax if self.verify_depth is None else self.verify_depth

    def validate(self) -> "RunConfig":
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.bign < 0:
            raise ConfigError(f"bign must be non-negative, got {self.bign}")
        if self.k_override is not None and self.k_override < 0:
            raise ConfigError(f"k_override must be non-negative, got {self.k_override}")
        if not self.mesh > 0:
            raise ConfigError(f"mesh must be positive, got {self.mesh}")
        for name in ("dmax", "walks", "workers", "net_depth", "admissible_points",
                     "exterior_points", "conclusion_samples", "chunk_walks", "square_budget"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.input and self.generator:
            raise ConfigError("give either input or generator, not both")
        return self

    def to_dict(self) -> Dict:
        data = asdict(self)
        if math.isinf(data["max_carleson"]):
            data["max_carleson"] = "inf"
        return data


_FIELDS = {f.name: f for f in fields(RunConfig)}

_OPTIONAL = {"input", "generator", "k_override", "verify_depth"}


def _convert(key: str, raw: str):
    default = getattr(RunConfig(), key)
    if key in _OPTIONAL and raw.lower() in ("", "none"):
        return None
    if key in ("input", "generator", "out"):
        return raw
    if key == "k_override":
        return float(raw)
    if key == "verify_depth":
        return int(raw)
    if isinstance(default, bool):
        lowered = raw.lower()
        if lowered in ("true", "yes", "1", "on"):
            return True
        if lowered in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if isinstance(default, int):
        return int(raw)
    return float(raw)


class ConfigManager:
    def __init__(self, config_file: Optional[Path] = None):
        self.config_file = Path(config_file) if config_file else None

    def load_config(self) -> Dict:
        """Load `key = value` pairs from the config file, typed"""
        if self.config_file is None:
            return {}
        try:
            text = self.config_file.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {self.config_file}: {e}") from e

        config = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{self.config_file}:{number}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _FIELDS:
                raise ConfigError(f"{self.config_file}:{number}: unknown key {key!r}")
            try:
                config[key] = _convert(key, value)
            except ValueError as e:
                raise ConfigError(f"{self.config_file}:{number}: bad value for {key}: {e}") from e
        return config

    def save_config(self, config: RunConfig, path: Optional[Path] = None):
        """Save configuration to file"""
        target = Path(path) if path else self.config_file
        if target is None:
            raise ConfigError("no config file to save to")
        lines = ["# modulus approximation run"]
        for key, value in config.to_dict().items():
            if value is None:
                value = "none"
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text("\n".join(lines) + "\n")

    def get_preference(self, key: str, default=None):
        """Get a single configured value"""
        return self.load_config().get(key, default)

    def build(self, overrides: Optional[Dict] = None) -> RunConfig:
        """Defaults, then the config file, then non-None overrides"""
        values = self.load_config()
        overrides = overrides or {}
        # a source given on the command line replaces the file's source
        if overrides.get("input"):
            values.pop("generator", None)
        if overrides.get("generator"):
            values.pop("input", None)
        for key, value in overrides.items():
            if key not in _FIELDS:
                raise ConfigError(f"unknown setting {key!r}")
            if value is not None:
                values[key] = value
        return RunConfig(**values).validate()
