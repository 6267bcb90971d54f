import tomllib
from pathlib import Path
from typing import Any, Dict, Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from ajdn.errors import ConfigurationError


class ScalesConfig(NamedTuple):
    """
    Parameters:
        s_min (float, optional, default 0.0):
            Smallest scale. 0 selects the rule of thumb.

        s_max (float, optional, default 0.0):
            Largest scale. 0 selects the rule of thumb.

        delta_n (int, optional, default 0):
            Number of scales. 0 derives it from C and epsilon, capped at delta_cap.
    """

    s_min: float = 0.0
    s_max: float = 0.0
    delta_n: int = 0
    delta_cap: int = 40
    C: float = 1e-3
    epsilon: float = 0.51


class BootstrapConfig(NamedTuple):
    k0: int = 500
    # 0 selects the block length from the long-run variance ratio
    s_prime: float = 0.0
    seed: int = 0


class DetectConfig(NamedTuple):
    alpha: float = 0.05
    c: float = 0.01
    threads: int = 1


class RefineConfig(NamedTuple):
    enabled: bool = True
    alpha_tilde: float = -0.5
    # 0 means half the smallest scale
    z_n: float = 0.0


class TuneConfig(NamedTuple):
    s_min: Tuple[float, ...] = ()
    s_max: Tuple[float, ...] = ()
    ns_prime: Tuple[int, ...] = ()
    pilot_alpha: float = 0.2
    pilot_k0: int = 100
    # explicit jump-free [start, stop] for the block length choice, 1-based inclusive
    segment: Tuple[int, ...] = ()
    segment_dimension: int = 0


class SimulateConfig(NamedTuple):
    process: str = "IID"
    n: int = 1000
    p: int = 10
    with_trend: bool = False
    scenario: str = ""
    gamma: float = 1.0
    delta: float = 5.0
    seed: int = 0


class BenchConfig(NamedTuple):
    runs: int = 100
    # 0 derives the matching margin from n, p and delta
    margin: float = 0.0


SECTIONS = {
    "scales": ScalesConfig,
    "bootstrap": BootstrapConfig,
    "detect": DetectConfig,
    "refine": RefineConfig,
    "tune": TuneConfig,
    "simulate": SimulateConfig,
    "bench": BenchConfig,
}


class AjdnConfig(NamedTuple):
    """
    Complete configuration, one field per section of the configuration file.

    Examples:
        >>> config = load_config("ajdn.toml").with_overrides({"detect.alpha": 0.1})
        >>> config.detect.alpha
        0.1
    """

    scales: ScalesConfig = ScalesConfig()
    bootstrap: BootstrapConfig = BootstrapConfig()
    detect: DetectConfig = DetectConfig()
    refine: RefineConfig = RefineConfig()
    tune: TuneConfig = TuneConfig()
    simulate: SimulateConfig = SimulateConfig()
    bench: BenchConfig = BenchConfig()

    @staticmethod
    def from_mapping(mapping: Mapping[str, Any]) -> "AjdnConfig":
        sections = {}
        for name, values in mapping.items():
            if name not in SECTIONS:
                raise ConfigurationError(f"Unknown configuration section [{name}]")
            if not isinstance(values, Mapping):
                raise ConfigurationError(f"[{name}] must be a table")
            sections[name] = _build_section(name, SECTIONS[name](), values)
        return AjdnConfig(**sections)

    def with_overrides(self, overrides: Mapping[str, Any]) -> "AjdnConfig":
        """Applies dotted keys such as "detect.alpha"; None values are skipped."""
        config = self
        for dotted, value in overrides.items():
            if value is None:
                continue
            section, _, key = dotted.partition(".")
            if section not in SECTIONS:
                raise ConfigurationError(f"Unknown configuration section [{section}]")
            current = getattr(config, section)
            config = config._replace(
                **{section: _build_section(section, current, {key: value})}
            )
        return config

    def to_json(self) -> Mapping[str, Any]:
        return {name: dict(getattr(self, name)._asdict()) for name in SECTIONS}


def _build_section(name: str, base: NamedTuple, values: Mapping[str, Any]) -> Any:
    defaults = type(base)._field_defaults
    updates: Dict[str, Any] = {}
    for key, value in values.items():
        if key not in defaults:
            raise ConfigurationError(f"Unknown configuration key {name}.{key}")
        updates[key] = _coerce(f"{name}.{key}", defaults[key], value)
    return base._replace(**updates)


def _coerce(key: str, default: Any, value: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{key} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigurationError(f"{key} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigurationError(f"{key} must be a string, got {value!r}")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or any(
            isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
        ):
            raise ConfigurationError(f"{key} must be a list of numbers, got {value!r}")
        return tuple(value)
    raise ConfigurationError(f"Unsupported configuration key {key}")


def load_config(path: Optional[Union[str, Path]]) -> AjdnConfig:
    """Reads a TOML configuration file. No path gives the defaults."""
    if path is None:
        return AjdnConfig()
    try:
        with open(path, "rb") as f:
            mapping = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError(f"Cannot parse {path}: {e}") from e
    except FileNotFoundError as e:
        raise ConfigurationError(f"Configuration file {path} not found") from e
    return AjdnConfig.from_mapping(mapping)


def dump_toml(sections: Mapping[str, Mapping[str, Any]]) -> str:
    """Writes flat sections of scalars and lists of scalars as TOML."""
    lines = []
    for name, values in sections.items():
        lines.append(f"[{name}]")
        for key, value in values.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    return "\n".join(lines)


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"Cannot write {value!r} as TOML")


class RunConfig(NamedTuple):
    """
    Everything one CLI command needs: the resolved configuration plus file locations.

    Parameters:
        config (AjdnConfig, required):
            Configuration after applying file values and flag overrides.

        input (str, optional, default None):
            Panel path or http(s) URL.

        output (str, optional, default None):
            Main output file.

        summary (str, optional, default None):
            Per-dimension summary text file.

        dump_field (str, optional, default None):
            Directory for per-dimension G traces.

        dump_variance (str, optional, default None):
            CSV file for the local variance field.

        threads (int, optional, default 1):
            Cap on worker threads.
    """

    config: AjdnConfig
    input: Optional[str] = None
    output: Optional[str] = None
    summary: Optional[str] = None
    dump_field: Optional[str] = None
    dump_variance: Optional[str] = None
    threads: int = 1

    def validate(self) -> "RunConfig":
        alpha = self.config.detect.alpha
        if not 0.0 < alpha < 1.0:
            raise ConfigurationError(f"detect.alpha must lie in (0, 1), got {alpha}")
        if self.threads < 1:
            raise ConfigurationError(f"threads must be at least 1, got {self.threads}")
        for path in (self.output, self.summary, self.dump_variance):
            if path is not None and not Path(path).parent.exists():
                raise ConfigurationError(f"Output directory of {path} does not exist")
        return self
