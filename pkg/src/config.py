"""config.py - Run configuration for every subcommand.

Configuration files are flat `section.key = value` lines with `#` comments.
Lists are comma separated, angles may be written as fractions of pi and
amplitudes as Python complex literals or `1/sqrt2`. Values are layered as
defaults < config file < --set overrides < global command-line flags.
"""

__author__ = "Abiola Raji"
__version__ = "2.0"
__date__ = "2026-10-17"

import logging
import math
import re
import typing
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import List, Optional

from .epr import MODES as EPR_MODES
from .epr import parse_amplitude
from .errors import ValidationError
from .fokker_planck import DEFAULT_KAPPA, SCHEMES

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
FORMATS = ("csv", "json", "both")
LOG_LEVELS = ("debug", "info", "warning", "error")
PI_FRACTION = re.compile(r"^([+-]?\d*\.?\d*)\*?pi(?:/(\d+\.?\d*))?$")


@dataclass
class ReduceConfig:
    p0: List[float] = field(default_factory=lambda: [0.5, 0.5])
    tau_red: float = 1.0
    dt: Optional[float] = None
    max_time: Optional[float] = None
    n_trajectories: int = 10000
    absorption_threshold: float = 1e-12
    n_saved: int = 101
    schedule: str = "constant"
    xi0: float = 0.0
    xi_init: float = 0.0
    tau_signal: float = 0.0
    tau_red_at_zero: float = 0.0
    max_unresolved_fraction: float = 0.01

    def __post_init__(self):
        if not 0.0 <= self.max_unresolved_fraction <= 1.0:
            raise ValidationError("reduce.max_unresolved_fraction must lie in [0, 1]")


@dataclass
class FpConfig:
    p_start: float = 0.5
    cells: int = 400
    t_end: float = 20.0
    dt: float = 1e-3
    scheme: str = "crank-nicolson"
    startup_steps: int = 4
    diffusion_scale: float = DEFAULT_KAPPA
    record_every: int = 10
    compare: bool = False
    compare_trajectories: int = 100000
    max_deviation: float = 0.02

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"fp.scheme must be one of {sorted(SCHEMES)}, got '{self.scheme}'")


@dataclass
class RateConfig:
    L: float = 1.0
    a: float = 3e-8
    d: float = 3e-6
    lambda_mfp: float = 3e-7
    c_s: float = 3e5
    Delta: float = 1e-9
    T_over_Theta: float = 1.0
    alpha: Optional[float] = 1.0
    hbar_omega_over_kT: Optional[float] = None
    xi: float = 0.0
    xi_sweep: List[float] = field(default_factory=list)
    dt: Optional[float] = None


@dataclass
class EprConfig:
    a: complex = complex(1.0 / math.sqrt(2.0))
    b: complex = complex(-1.0 / math.sqrt(2.0))
    thetas: List[float] = field(default_factory=lambda: [0.0, math.pi / 6, math.pi / 3, math.pi / 2])
    schedule: str = "simultaneous"
    compare_schedule: Optional[str] = None
    tau_red_1: float = 1.0
    tau_red_2: float = 1.0
    start_delay_2: float = 0.0
    n_runs: int = 10000

    def __post_init__(self):
        for mode in (self.schedule, self.compare_schedule):
            if mode is not None and mode not in EPR_MODES:
                raise ValidationError(f"epr schedule must be one of {EPR_MODES}, got '{mode}'")


@dataclass
class FactorizeConfig:
    input: Optional[str] = None
    example: str = "random"
    shape: List[int] = field(default_factory=lambda: [16, 16])
    rank: int = 1
    complex_values: bool = False
    outer_axis: Optional[int] = None

    def __post_init__(self):
        if self.example not in ("random", "product", "two-term"):
            raise ValidationError(f"factorize.example must be random, product or two-term, got '{self.example}'")
        if self.input is None and len(self.shape) not in (2, 3):
            raise ValidationError(f"factorize.shape needs 2 or 3 node counts, got {self.shape}")


@dataclass
class SelfcheckConfig:
    scale: str = "quick"

    def __post_init__(self):
        if self.scale not in ("quick", "full"):
            raise ValidationError(f"selfcheck.scale must be quick or full, got '{self.scale}'")


SECTIONS = {
    "reduce": ReduceConfig,
    "fp": FpConfig,
    "rate": RateConfig,
    "epr": EprConfig,
    "factorize": FactorizeConfig,
    "selfcheck": SelfcheckConfig,
}


@dataclass
class RunConfig:
    """Resolved configuration of one run.

    Attributes:
        seed (int): Master seed of all random streams.
        out (str): Output directory.
        format (str): csv, json or both.
        threads (int): Worker threads; never affects results.
        log_level (str): Logging level name.
    """

    seed: int = 0
    out: str = "results"
    format: str = "json"
    threads: int = 1
    log_level: str = "warning"
    reduce: ReduceConfig = field(default_factory=ReduceConfig)
    fp: FpConfig = field(default_factory=FpConfig)
    rate: RateConfig = field(default_factory=RateConfig)
    epr: EprConfig = field(default_factory=EprConfig)
    factorize: FactorizeConfig = field(default_factory=FactorizeConfig)
    selfcheck: SelfcheckConfig = field(default_factory=SelfcheckConfig)

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValidationError(f"format must be one of {FORMATS}, got '{self.format}'")
        if self.log_level not in LOG_LEVELS:
            raise ValidationError(f"log level must be one of {LOG_LEVELS}, got '{self.log_level}'")
        if self.threads < 1:
            raise ValidationError(f"threads must be >= 1, got {self.threads}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValidationError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def echo(self, section: Optional[str] = None) -> dict:
        """Resolved config for JSON outputs; threads is left out."""
        values = asdict(self)
        values.pop("threads")
        if section is not None:
            values = {key: values[key] for key in ("seed", "out", "format", "log_level", section)}
        return {"schema_version": SCHEMA_VERSION, **_jsonable(values)}


def _jsonable(value):
    if isinstance(value, complex):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    return value


def _parse_float(text: str) -> float:
    cleaned = text.strip().replace(" ", "")
    match = PI_FRACTION.match(cleaned)
    if match:
        factor = match.group(1)
        factor = -1.0 if factor == "-" else 1.0 if factor in ("", "+") else float(factor)
        return factor * math.pi / (float(match.group(2)) if match.group(2) else 1.0)
    return float(cleaned)


def _parse_int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise ValueError(f"{text} is not an integer")
    return int(value)


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "on", "1"):
        return True
    if lowered in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"{text} is not a boolean")


def _coerce(text: str, kind):
    """Convert config text to the annotated field type."""
    origin = typing.get_origin(kind)
    if origin is typing.Union:
        inner = [arg for arg in typing.get_args(kind) if arg is not type(None)][0]
        return None if text.strip().lower() in ("", "none") else _coerce(text, inner)
    if origin in (list, List):
        (inner,) = typing.get_args(kind)
        return [_coerce(item, inner) for item in text.split(",") if item.strip()]
    if kind is bool:
        return _parse_bool(text)
    if kind is int:
        return _parse_int(text)
    if kind is float:
        return _parse_float(text)
    if kind is complex:
        return parse_amplitude(text)
    return text.strip()


def _set_value(config: RunConfig, dotted: str, text: str, origin: str) -> RunConfig:
    section, _, key = dotted.strip().partition(".")
    if section not in SECTIONS or not key:
        raise ValidationError(f"{origin}: unknown setting '{dotted.strip()}'")
    section_type = SECTIONS[section]
    kinds = {f.name: f.type for f in fields(section_type)}
    if key not in kinds:
        raise ValidationError(f"{origin}: unknown key '{key}' in section '{section}'")
    try:
        value = _coerce(text, kinds[key])
    except ValueError as e:
        raise ValidationError(f"{origin}: bad value for {section}.{key}: {e}") from None
    return replace(config, **{section: replace(getattr(config, section), **{key: value})})


def parse_config_text(text: str, config: Optional[RunConfig] = None, source: str = "<config>") -> RunConfig:
    """Apply `section.key = value` lines on top of `config`.

    Raises:
        ValidationError: On malformed lines, unknown keys or bad values.
    """
    config = RunConfig() if config is None else config
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{source}:{number}: expected 'section.key = value', got '{line}'")
        dotted, value = line.split("=", 1)
        config = _set_value(config, dotted, value, f"{source}:{number}")
    return config


def load_config(path: str, config: Optional[RunConfig] = None) -> RunConfig:
    """Read a config file.

    Args:
        path (str): Path of the file.
        config (RunConfig): Values the file is layered on.

    Returns:
        RunConfig: Updated configuration.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ValidationError(f"cannot read config file {path}: {e}") from None
    logger.debug("loaded config file %s", path)
    return parse_config_text(text, config, source=path)


def apply_overrides(config: RunConfig, overrides) -> RunConfig:
    """Apply `section.key=value` strings from the command line."""
    for item in overrides or []:
        if "=" not in item:
            raise ValidationError(f"--set expects section.key=value, got '{item}'")
        dotted, value = item.split("=", 1)
        config = _set_value(config, dotted, value, "--set")
    return config
