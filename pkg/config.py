"""
Configuration management for the query evolution engine

Two layers live here:
- ``Settings``: runtime knobs (logging, HTTP timeout, mock server address)
  read from the environment / ``.env`` file.
- ``Config``: the algorithm parameters of one evolution run, read from a flat
  ``key = value`` file whose keys are the parameter codes g1..g4, f1..f8, c1,
  m1, e1..e3 plus a few service keys.
"""
import os
import logging
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Union

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from exceptions import ConfigError

# Load environment variables
load_dotenv()

logger = logging.getLogger(__name__)


class Settings:
    """Runtime settings (never algorithm parameters)"""

    # Logging
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO").upper()

    # HTTP adapter
    HTTP_TIMEOUT: float = float(os.getenv("HTTP_TIMEOUT", "10"))
    HTTP_ATTEMPTS: int = 3
    HTTP_BACKOFF: float = 0.5  # seconds, doubled after each failed attempt

    # Mock engine server
    MOCK_HOST: str = os.getenv("MOCK_HOST", "127.0.0.1")
    MOCK_PORT: int = int(os.getenv("MOCK_PORT", "8765"))

    # Dictionaries shipped with the package
    DICT_DIR: str = os.getenv("DICT_DIR", str(Path(__file__).parent / "data"))


settings = Settings()


class EngineKind(str, Enum):
    LOCAL = "Local"
    HTTP_ADAPTER = "HttpAdapter"


class AggregationMode(str, Enum):
    MEAN = "Mean"
    MEDIAN = "Median"


class CrossoverType(str, Enum):
    ONE_POINT = "OnePoint"
    DISCRETE = "Discrete"


class NormalizerKind(str, Enum):
    RULES = "Rules"
    PORTER = "Porter"


class Config(BaseModel):
    """Parameters of one evolution run"""

    model_config = ConfigDict(frozen=True, use_enum_values=False)

    # General
    engine_kind: EngineKind = Field(EngineKind.LOCAL, description="g1: search engine")
    population_size: int = Field(8, description="g2: queries per population")
    genes_per_query: int = Field(3, description="g3: keywords per query")
    keyword_pool_path: Optional[str] = Field(None, description="g4: keyword pool file")

    # Fitness function
    results_per_query: int = Field(10, description="f1: result list depth per query")
    max_results_per_population: int = Field(200, description="f2: resources kept per population")
    max_results_total: int = Field(1000, description="f3: resources kept across populations")
    same_host_coeff: float = Field(0.8, description="f4: damping for documents on the same host")
    weight_position: float = Field(1 / 3, description="f5: weight of the position score")
    weight_recurrence: float = Field(1 / 3, description="f6: weight of the recurrence score")
    weight_similarity: float = Field(1 / 3, description="f7: weight of the similarity score")
    aggregation_mode: AggregationMode = Field(AggregationMode.MEAN, description="f8: Mean or Median")

    # Genetic operations
    parent_criterion_mult: float = Field(1.0, description="c1: parent threshold multiplier")
    mutation_prob: float = Field(0.1, description="m1: probability of mutating a query")
    synonym_swap_prob: float = Field(0.2, description="Probability of a synonym swap per child gene")
    crossover_type: CrossoverType = Field(CrossoverType.ONE_POINT, description="OnePoint or Discrete")

    # Termination
    target_generations: int = Field(10, description="e1: normal number of generations")
    sigma_threshold: float = Field(0.01, description="e2: fitness standard deviation for stability")
    max_generations_cap: int = Field(50, description="e3: hard generation cap")

    # Service
    rng_seed: int = Field(42, description="Random generator seed")
    autosave: bool = Field(False, description="Save the state after every generation")
    state_path: Optional[str] = Field(None, description="State file used by autosave")
    corpus_dir: Optional[str] = Field(None, description="Local engine corpus directory")
    adapter_url: Optional[str] = Field(None, description="HTTP adapter base URL")
    dict_dir: Optional[str] = Field(None, description="Dictionary directory")
    normalizer: NormalizerKind = Field(NormalizerKind.RULES, description="Token normalizer: Rules or Porter")

    @field_validator(
        "keyword_pool_path", "state_path", "corpus_dir", "adapter_url", "dict_dir", mode="before"
    )
    @classmethod
    def _blank_is_none(cls, value):
        if isinstance(value, str) and not value.strip():
            return None
        return value


# File key -> Config field. Field names are accepted as keys too.
PARAMETER_KEYS: Dict[str, str] = {
    "g1": "engine_kind",
    "g2": "population_size",
    "g3": "genes_per_query",
    "g4": "keyword_pool_path",
    "f1": "results_per_query",
    "f2": "max_results_per_population",
    "f3": "max_results_total",
    "f4": "same_host_coeff",
    "f5": "weight_position",
    "f6": "weight_recurrence",
    "f7": "weight_similarity",
    "f8": "aggregation_mode",
    "c1": "parent_criterion_mult",
    "m1": "mutation_prob",
    "e1": "target_generations",
    "e2": "sigma_threshold",
    "e3": "max_generations_cap",
}
FIELD_KEYS: Dict[str, str] = {field: key for key, field in PARAMETER_KEYS.items()}

MAX_SEED = 2 ** 64 - 1


def default_config() -> Config:
    return Config()


def resolve_key(key: str) -> str:
    """Map a file key (``g2``) or a field name (``population_size``) to the field name"""
    key = key.strip()
    if key in PARAMETER_KEYS:
        return PARAMETER_KEYS[key]
    if key in Config.model_fields:
        return key
    raise ConfigError([f"unknown key '{key}'"])


def validate(config: Config) -> Config:
    """
    Check every cross-field and range invariant of a config

    Args:
        config: Candidate configuration

    Returns:
        The same config when valid

    Raises:
        ConfigError carrying the complete list of violations
    """
    errors: List[str] = []
    c = config

    if c.population_size < 2:
        errors.append("population_size ≥ 2")
    if c.genes_per_query < 1:
        errors.append("genes_per_query ≥ 1")
    elif c.crossover_type == CrossoverType.ONE_POINT and c.genes_per_query < 2:
        errors.append("genes_per_query ≥ 2 for OnePoint crossover")
    for name in ("results_per_query", "max_results_per_population", "max_results_total"):
        if getattr(c, name) < 1:
            errors.append(f"{name} ≥ 1")
    if not 0 < c.same_host_coeff <= 1:
        errors.append("same_host_coeff out of (0,1]")
    weights = (c.weight_position, c.weight_recurrence, c.weight_similarity)
    for name, weight in zip(("weight_position", "weight_recurrence", "weight_similarity"), weights):
        if not weight >= 0:
            errors.append(f"{name} ≥ 0")
    if not sum(weights) > 0:
        errors.append("f5 + f6 + f7 > 0")
    if not c.parent_criterion_mult > 0:
        errors.append("parent_criterion_mult > 0")
    for name in ("mutation_prob", "synonym_swap_prob"):
        if not 0 <= getattr(c, name) <= 1:
            errors.append(f"{name} out of [0,1]")
    if c.target_generations < 0:
        errors.append("target_generations ≥ 0")
    if not c.sigma_threshold >= 0:
        errors.append("sigma_threshold ≥ 0")
    if c.max_generations_cap < 1:
        errors.append("max_generations_cap ≥ 1")
    if c.target_generations > c.max_generations_cap:
        errors.append("e1 ≤ e3")
    if not 0 <= c.rng_seed <= MAX_SEED:
        errors.append("rng_seed out of 64-bit unsigned range")
    if c.autosave and not c.state_path:
        errors.append("autosave requires state_path")

    if errors:
        raise ConfigError(errors)
    return config


def _build(values: Dict[str, object], path: Optional[str] = None) -> Config:
    try:
        return Config(**values)
    except ValidationError as e:
        messages = [
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}" for err in e.errors()
        ]
        raise ConfigError(messages, path=path)


def parse_config_text(text: str, path: Optional[str] = None) -> Dict[str, str]:
    """Parse the ``key = value`` document into raw field values"""
    values: Dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError([f"line {number}: expected 'key = value', got '{line}'"], path=path)
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            field = resolve_key(key)
        except ConfigError:
            raise ConfigError([f"line {number}: unknown key '{key}'"], path=path)
        if field in values:
            raise ConfigError([f"line {number}: duplicate key '{key}'"], path=path)
        values[field] = value
    return values


def load_config(path: Union[str, Path]) -> Config:
    """
    Load and validate a configuration file

    Args:
        path: Path to a ``key = value`` file

    Returns:
        Validated Config; keys absent from the file keep their defaults

    Raises:
        FileNotFoundError if the file does not exist
        ConfigError on unparseable lines, unknown keys, or invalid values
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"Config file not found: {path}")

    values = parse_config_text(path.read_text(encoding="utf-8"), path=str(path))
    config = _build(values, path=str(path))
    try:
        validate(config)
    except ConfigError as e:
        raise ConfigError(e.errors, path=str(path))

    logger.info(f"Loaded config from {path} ({len(values)} keys set)")
    return config


def with_overrides(config: Config, overrides: Dict[str, object]) -> Config:
    """
    Apply overrides (file keys or field names) on top of a config and revalidate

    Args:
        config: Base configuration
        overrides: Raw values keyed by parameter code or field name

    Returns:
        New validated Config
    """
    values = config.model_dump()
    for key, value in overrides.items():
        values[resolve_key(key)] = value
    return validate(_build(values))


def _format_value(value: object) -> str:
    if value is None:
        return ""
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def format_config(config: Config) -> str:
    """Render a config in the file format, one line per field"""
    lines = ["# Query evolution parameters"]
    for field in Config.model_fields:
        key = FIELD_KEYS.get(field, field)
        lines.append(f"{key} = {_format_value(getattr(config, field))}")
    return "\n".join(lines) + "\n"


def save_config(config: Config, path: Union[str, Path]) -> None:
    """Write a config so that ``load_config`` reads back an equal Config"""
    Path(path).write_text(format_config(config), encoding="utf-8")
    logger.info(f"Saved config to {path}")
