"""Scenario configuration for the NR-U offloading engine."""

import dataclasses
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Type

import toml
import yaml

from . import constants as C
from .exceptions import ConfigError

# Try to import tomllib (Python 3.11+) or fall back to toml
try:
    import tomllib  # type: ignore[import-not-found]
except ImportError:  # pragma: no cover - exercised on Python < 3.11
    tomllib = None

logger = logging.getLogger(__name__)

STRATEGIES = ("baseline", "fat", "slim")
LOSS_WEIGHTS = ("printed", "ring_only")
RATE_MAPS = ("geometric", "mean")
FADING_METHODS = ("quadrature", "closed_form")
SWEEP_PARAMETERS = (
    "bs_density",
    "min_rate",
    "initial_cw_nru",
    "blocker_density",
    "max_retries",
)


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


@dataclass(frozen=True)
class DeploymentConfig:
    """Densities and heights of the deployment."""

    bs_density: float = C.DEFAULT_BS_DENSITY
    nru_ue_density: float = C.DEFAULT_NRU_UE_DENSITY
    wigig_ue_density: float = C.DEFAULT_WIGIG_UE_DENSITY
    blocker_density: float = C.DEFAULT_BLOCKER_DENSITY
    bs_height: float = C.DEFAULT_BS_HEIGHT
    ap_height: float = C.DEFAULT_AP_HEIGHT
    ue_height: float = C.DEFAULT_UE_HEIGHT
    blocker_height: float = C.DEFAULT_BLOCKER_HEIGHT
    blocker_radius: float = C.DEFAULT_BLOCKER_RADIUS

    def validate(self) -> None:
        for name in ("bs_density", "nru_ue_density", "wigig_ue_density", "blocker_density"):
            _require(getattr(self, name) >= 0, f"deployment.{name} must be >= 0")
        _require(self.ue_height > 0, "deployment.ue_height must be > 0")
        _require(
            self.blocker_height > self.ue_height,
            "deployment.blocker_height must exceed ue_height",
        )
        _require(
            self.bs_height > self.blocker_height,
            "deployment.bs_height must exceed blocker_height",
        )
        _require(
            self.ap_height > self.blocker_height,
            "deployment.ap_height must exceed blocker_height",
        )
        _require(self.blocker_radius > 0, "deployment.blocker_radius must be > 0")


@dataclass(frozen=True)
class RadioConfig:
    """Link budget of one band.

    ``pathloss_constant`` is the linear constant A of the power-law path loss;
    when unset it follows the UMi intercept 10^(2·log10(f_c) + 3.24).
    ``mcs_table`` points to an MCS table file; unset means the bundled table
    for the band.
    """

    carrier_freq_ghz: float = C.NR_CARRIER_GHZ
    bandwidth_hz: float = C.NR_BANDWIDTH_HZ
    tx_power_dbm: float = C.NR_TX_POWER_DBM
    tx_elements: Tuple[int, ...] = C.NR_TX_ELEMENTS
    rx_elements: Tuple[int, ...] = C.NR_RX_ELEMENTS
    interference_margin_db: float = C.INTERFERENCE_MARGIN_DB
    noise_psd_dbm_hz: float = C.NOISE_PSD_DBM_HZ
    outage_sinr_db: float = C.NR_OUTAGE_SINR_DB
    edge_outage_prob: float = C.EDGE_OUTAGE_PROB
    shadow_sigma_blocked_db: float = C.BLOCKED_SHADOW_SIGMA_DB
    shadow_sigma_los_db: float = C.LOS_SHADOW_SIGMA_DB
    pathloss_exponent_los: float = C.LOS_PATHLOSS_EXPONENT
    pathloss_exponent_blocked: float = C.BLOCKED_PATHLOSS_EXPONENT
    pathloss_constant: Optional[float] = None
    mcs_table: Optional[str] = None

    @classmethod
    def licensed_default(cls) -> "RadioConfig":
        return cls()

    @classmethod
    def unlicensed_default(cls) -> "RadioConfig":
        return cls(
            carrier_freq_ghz=C.WIGIG_CARRIER_GHZ,
            bandwidth_hz=C.WIGIG_BANDWIDTH_HZ,
            tx_power_dbm=C.WIGIG_TX_POWER_DBM,
            tx_elements=C.WIGIG_TX_ELEMENTS,
            rx_elements=C.WIGIG_RX_ELEMENTS,
            outage_sinr_db=C.WIGIG_OUTAGE_SINR_DB,
        )

    @property
    def path_loss_constant(self) -> float:
        if self.pathloss_constant is not None:
            return self.pathloss_constant
        return 10.0 ** (2.0 * math.log10(self.carrier_freq_ghz) + 3.24)

    def validate(self, section: str = "radio") -> None:
        _require(self.carrier_freq_ghz > 0, f"{section}.carrier_freq_ghz must be > 0")
        _require(self.bandwidth_hz > 0, f"{section}.bandwidth_hz must be > 0")
        _require(
            0 < self.edge_outage_prob < 1,
            f"{section}.edge_outage_prob must lie in (0, 1)",
        )
        _require(
            self.pathloss_exponent_blocked > self.pathloss_exponent_los > 0,
            f"{section}: pathloss exponents must satisfy blocked > los > 0",
        )
        _require(
            self.shadow_sigma_blocked_db > 0 and self.shadow_sigma_los_db > 0,
            f"{section}: shadow sigmas must be > 0",
        )
        for name in ("tx_elements", "rx_elements"):
            elements = getattr(self, name)
            _require(
                len(elements) >= 1 and all(int(n) >= 1 for n in elements),
                f"{section}.{name} must list positive element counts",
            )
        if self.pathloss_constant is not None:
            _require(self.pathloss_constant > 0, f"{section}.pathloss_constant must be > 0")


@dataclass(frozen=True)
class TrafficConfig:
    """Session arrival and service parameters of both populations."""

    session_rate: float = C.DEFAULT_SESSION_RATE
    wigig_session_rate: float = C.DEFAULT_WIGIG_SESSION_RATE
    nru_active_prob: float = C.DEFAULT_NRU_ACTIVE_PROB
    wigig_active_prob: float = C.DEFAULT_WIGIG_ACTIVE_PROB
    service_rate: float = C.DEFAULT_SERVICE_RATE
    wigig_service_rate: float = C.DEFAULT_WIGIG_SERVICE_RATE
    min_rate: float = C.DEFAULT_MIN_RATE

    def validate(self) -> None:
        for name in ("session_rate", "wigig_session_rate", "service_rate",
                     "wigig_service_rate", "min_rate"):
            _require(getattr(self, name) > 0, f"traffic.{name} must be > 0")
        for name in ("nru_active_prob", "wigig_active_prob"):
            _require(0 <= getattr(self, name) <= 1, f"traffic.{name} must lie in [0, 1]")


@dataclass(frozen=True)
class ContentionConfig:
    """Listen-before-talk parameters.

    ``blockage_prob`` unset means the pipeline derives it from the unlicensed
    coverage disk; standalone contention analysis then treats it as zero.
    """

    initial_cw_nru: int = C.DEFAULT_INITIAL_CW
    initial_cw_wigig: int = C.DEFAULT_INITIAL_CW
    max_retries: int = C.DEFAULT_MAX_RETRIES
    blockage_prob: Optional[float] = None
    tolerance: float = C.FIXED_POINT_TOLERANCE
    max_iterations: int = C.FIXED_POINT_MAX_ITERATIONS
    damping: float = C.FIXED_POINT_DAMPING
    max_attempts: int = C.FIXED_POINT_ATTEMPTS
    shared_collision: bool = False

    @property
    def p_b(self) -> float:
        return 0.0 if self.blockage_prob is None else self.blockage_prob

    def validate(self) -> None:
        _require(self.initial_cw_nru >= 1, "contention.initial_cw_nru must be >= 1")
        _require(self.initial_cw_wigig >= 1, "contention.initial_cw_wigig must be >= 1")
        _require(self.max_retries >= 0, "contention.max_retries must be >= 0")
        _require(0 <= self.p_b < 1, "contention.blockage_prob must lie in [0, 1)")
        _require(self.tolerance > 0, "contention.tolerance must be > 0")
        _require(self.max_iterations >= 1, "contention.max_iterations must be >= 1")
        _require(0 < self.damping <= 1, "contention.damping must lie in (0, 1]")
        _require(self.max_attempts >= 1, "contention.max_attempts must be >= 1")


@dataclass(frozen=True)
class StrategyConfig:
    """Offloading thresholds.

    An unset threshold is derived from the mean offloadable demand and
    ``threshold_offset``; ``inf`` disables the fat rule and ``-1`` the slim one.
    """

    fat_threshold: Optional[float] = None
    slim_threshold: Optional[float] = None
    threshold_offset: float = 0.0
    evaluate: Tuple[str, ...] = STRATEGIES

    def validate(self) -> None:
        _require(len(self.evaluate) > 0, "strategies.evaluate must not be empty")
        unknown = [s for s in self.evaluate if s not in STRATEGIES]
        _require(not unknown, f"strategies.evaluate has unknown entries: {unknown}")
        if self.fat_threshold is not None:
            _require(self.fat_threshold >= 0, "strategies.fat_threshold must be >= 0")
        if self.slim_threshold is not None:
            _require(self.slim_threshold >= -1, "strategies.slim_threshold must be >= -1")
        _require(self.threshold_offset >= 0, "strategies.threshold_offset must be >= 0")


@dataclass(frozen=True)
class ModelOptions:
    """Modelling switches that select between documented readings."""

    resource_unit_bw: float = C.RESOURCE_UNIT_BW_HZ
    servers: Optional[int] = None
    loss_weight: str = "printed"
    rate_map: str = "geometric"
    fading_method: str = "quadrature"
    infeasible_in_qos: bool = False
    truncation_mass: float = C.POISSON_TRUNCATION_MASS

    def validate(self) -> None:
        _require(self.resource_unit_bw > 0, "model.resource_unit_bw must be > 0")
        if self.servers is not None:
            _require(self.servers >= 1, "model.servers must be >= 1")
        _require(self.loss_weight in LOSS_WEIGHTS, f"model.loss_weight must be one of {LOSS_WEIGHTS}")
        _require(self.rate_map in RATE_MAPS, f"model.rate_map must be one of {RATE_MAPS}")
        _require(
            self.fading_method in FADING_METHODS,
            f"model.fading_method must be one of {FADING_METHODS}",
        )
        _require(
            0 < self.truncation_mass <= 1e-6,
            "model.truncation_mass must lie in (0, 1e-6]",
        )


@dataclass(frozen=True)
class SweepConfig:
    parameter: str = "bs_density"
    values: Tuple[float, ...] = C.DEFAULT_SWEEP_DENSITIES
    target_loss: float = C.DEFAULT_TARGET_LOSS
    plot_script: bool = True
    jobs: int = 1

    def validate(self) -> None:
        _require(
            self.parameter in SWEEP_PARAMETERS,
            f"sweep.parameter must be one of {SWEEP_PARAMETERS}",
        )
        _require(len(self.values) > 0, "sweep.values must not be empty")
        _require(
            all(a < b for a, b in zip(self.values, self.values[1:])),
            "sweep.values must be strictly ascending",
        )
        _require(0 <= self.target_loss <= 1, "sweep.target_loss must lie in [0, 1]")
        _require(self.jobs >= 1, "sweep.jobs must be >= 1")


@dataclass(frozen=True)
class ValidationConfig:
    seed: int = C.DEFAULT_SEED
    event_budget: int = C.DEFAULT_EVENT_BUDGET
    slot_budget: int = C.DEFAULT_SLOT_BUDGET
    batch_count: int = C.DEFAULT_BATCH_COUNT
    confidence: float = C.DEFAULT_CONFIDENCE
    lbt_model_tolerance: float = C.LBT_MODEL_TOLERANCE
    populations: Tuple[int, ...] = (1, 3, 5)
    monte_carlo_samples: int = 100_000

    def validate(self) -> None:
        _require(0 <= self.seed < 2**64, "validation.seed must be a 64-bit unsigned integer")
        _require(self.event_budget > 0, "validation.event_budget must be > 0")
        _require(self.slot_budget > 0, "validation.slot_budget must be > 0")
        _require(self.batch_count >= 2, "validation.batch_count must be >= 2")
        _require(0 < self.confidence < 1, "validation.confidence must lie in (0, 1)")
        _require(self.lbt_model_tolerance >= 0, "validation.lbt_model_tolerance must be >= 0")
        _require(
            len(self.populations) > 0 and all(n >= 1 for n in self.populations),
            "validation.populations must list counts >= 1",
        )
        _require(self.monte_carlo_samples >= 1000, "validation.monte_carlo_samples must be >= 1000")


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"

    def validate(self) -> None:
        _require(
            self.level.upper() in ("DEBUG", "INFO", "WARNING", "ERROR"),
            f"logging.level is not a known level: {self.level!r}",
        )


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete parameterization of one evaluation."""

    deployment: DeploymentConfig = field(default_factory=DeploymentConfig)
    licensed: RadioConfig = field(default_factory=RadioConfig.licensed_default)
    unlicensed: RadioConfig = field(default_factory=RadioConfig.unlicensed_default)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    contention: ContentionConfig = field(default_factory=ContentionConfig)
    strategies: StrategyConfig = field(default_factory=StrategyConfig)
    model: ModelOptions = field(default_factory=ModelOptions)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    validation: ValidationConfig = field(default_factory=ValidationConfig)
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def validate(self) -> "ScenarioConfig":
        self.deployment.validate()
        self.licensed.validate("licensed")
        self.unlicensed.validate("unlicensed")
        self.traffic.validate()
        self.contention.validate()
        self.strategies.validate()
        self.model.validate()
        self.sweep.validate()
        self.validation.validate()
        self.logging.validate()
        return self

    def with_values(self, section: str, **changes: Any) -> "ScenarioConfig":
        """Return a copy with fields of one section replaced."""
        current = getattr(self, section)
        return dataclasses.replace(self, **{section: dataclasses.replace(current, **changes)})


SECTION_DEFAULTS = {f.name: f for f in dataclasses.fields(ScenarioConfig)}


def _section_default(name: str) -> Any:
    spec = SECTION_DEFAULTS[name]
    return spec.default_factory()  # type: ignore[misc]


def _coerce(section: str, key: str, default: Any, value: Any) -> Any:
    where = f"{section}.{key}"
    if isinstance(default, bool):
        _require(isinstance(value, bool), f"{where} must be a boolean")
        return value
    if isinstance(default, tuple):
        _require(isinstance(value, (list, tuple)), f"{where} must be a list")
        return tuple(value)
    if isinstance(default, int):
        _require(
            isinstance(value, int) and not isinstance(value, bool),
            f"{where} must be an integer",
        )
        return value
    if isinstance(default, float):
        _require(
            isinstance(value, (int, float)) and not isinstance(value, bool),
            f"{where} must be a number",
        )
        return float(value)
    if isinstance(default, str):
        _require(isinstance(value, str), f"{where} must be a string")
        return value
    # optional fields default to None
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise ConfigError(f"{where} has an unsupported value: {value!r}")
    return value


def scenario_from_dict(data: Dict[str, Any]) -> ScenarioConfig:
    """Build a validated scenario from nested section dictionaries.

    Raises:
        ConfigError: on unknown sections or keys (all of them are listed), on
            type mismatches and on violated invariants.
    """
    unknown: List[str] = []
    sections: Dict[str, Any] = {}

    for section, values in data.items():
        if section not in SECTION_DEFAULTS:
            unknown.append(section)
            continue
        if not isinstance(values, dict):
            raise ConfigError(f"[{section}] must be a table of key = value pairs")
        base = _section_default(section)
        known = {f.name for f in dataclasses.fields(base)}
        changes = {}
        for key, value in values.items():
            if key not in known:
                unknown.append(f"{section}.{key}")
                continue
            changes[key] = _coerce(section, key, getattr(base, key), value)
        sections[section] = dataclasses.replace(base, **changes)

    if unknown:
        raise ConfigError(f"Unknown configuration keys: {', '.join(sorted(unknown))}")

    return ScenarioConfig(**sections).validate()


def scenario_to_dict(scenario: ScenarioConfig) -> Dict[str, Dict[str, Any]]:
    """Flatten a scenario into section dictionaries, omitting unset values."""
    data: Dict[str, Dict[str, Any]] = {}
    for spec in dataclasses.fields(scenario):
        section = getattr(scenario, spec.name)
        entries = {}
        for item in dataclasses.fields(section):
            value = getattr(section, item.name)
            if value is None:
                continue
            entries[item.name] = list(value) if isinstance(value, tuple) else value
        data[spec.name] = entries
    return data


def dump_scenario(scenario: ScenarioConfig) -> str:
    """Render a scenario as TOML that re-parses to an equal scenario."""
    return toml.dumps(scenario_to_dict(scenario))


def parse_scenario_text(text: str, fmt: str = "toml") -> ScenarioConfig:
    """Parse configuration text in TOML or YAML."""
    try:
        if fmt == "toml":
            data = tomllib.loads(text) if tomllib else toml.loads(text)
        elif fmt in ("yaml", "yml"):
            data = yaml.safe_load(text) or {}
        else:
            raise ConfigError(f"Unknown config format: {fmt}")
    except (ValueError, yaml.YAMLError, toml.TomlDecodeError) as e:
        raise ConfigError(f"Cannot parse {fmt} configuration: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("Configuration root must be a table")
    return scenario_from_dict(data)


class ConfigManager:
    """Locates, loads and saves scenario configuration files."""

    DEFAULT_CONFIG_PATHS = [
        Path("nru-offload.toml"),
        Path("nru-offload.yaml"),
        Path.home() / ".config" / "nru-offload" / "config.toml",
    ]

    ENV_MAP: Dict[str, Tuple[str, str, Type[Any]]] = {
        f"{C.ENV_PREFIX}LOG_LEVEL": ("logging", "level", str),
        f"{C.ENV_PREFIX}SEED": ("validation", "seed", int),
        f"{C.ENV_PREFIX}JOBS": ("sweep", "jobs", int),
    }

    def __init__(self, config_path: Optional[Path] = None):
        """Initialize config manager.

        Args:
            config_path: Optional path to a TOML or YAML config file
        """
        self.config_path = Path(config_path) if config_path else None
        self.config = ScenarioConfig()

    def load(self) -> ScenarioConfig:
        """Load the scenario from file, falling back to defaults."""
        config_file = self._find_config_file()

        if config_file:
            logger.info(f"Loading config from {config_file}")
            fmt = config_file.suffix.lstrip(".").lower()
            if fmt not in ("toml", "yaml", "yml"):
                raise ConfigError(f"Unknown config file format: {config_file}")
            self.config = parse_scenario_text(config_file.read_text(encoding="utf-8"), fmt)
        else:
            logger.info("No config file found, using defaults")

        self.config = self._load_env_vars(self.config)
        return self.config

    def save(self, path: Path) -> Path:
        """Write the current scenario to ``path`` as TOML or YAML."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if path.suffix in (".yaml", ".yml"):
            text = yaml.safe_dump(scenario_to_dict(self.config), default_flow_style=False)
        else:
            text = dump_scenario(self.config)
        path.write_text(text, encoding="utf-8")
        logger.info(f"Configuration saved to {path}")
        return path

    def _find_config_file(self) -> Optional[Path]:
        if self.config_path:
            if not self.config_path.exists():
                raise ConfigError(f"Config file not found: {self.config_path}")
            return self.config_path

        for path in self.DEFAULT_CONFIG_PATHS:
            if path.exists():
                return path

        return None

    def _load_env_vars(self, scenario: ScenarioConfig) -> ScenarioConfig:
        """Apply NRU_OFFLOAD_* environment overrides."""
        for env_var, (section, key, kind) in self.ENV_MAP.items():
            raw = os.environ.get(env_var)
            if not raw:
                continue
            try:
                value = kind(raw)
            except ValueError:
                raise ConfigError(f"{env_var} is not a valid {kind.__name__}: {raw!r}") from None
            scenario = scenario.with_values(section, **{key: value})
            logger.info(f"Overriding {section}.{key} from environment: {value}")
        return scenario.validate()
