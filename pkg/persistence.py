"""
State persistence - save and load evolution runs

The state file (``.gaf``) is a JSON document rooted at ``GAF`` whose sections
are KeyWords, AllKeyWordsSeen, Options, Populations (history), InitPopulation,
CurrentPopulation, AllResources, StopReason, ErrorText, RngState and
FormatVersion.
"""
import os
import json
import logging
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from config import Config, validate
from exceptions import ConfigError, StateError
from models import Gene, GenerationSummary, Population, Resource, RngState, RunState, StopReason

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
STATE_SUFFIX = ".gaf"

OPTION_GROUPS: Dict[str, List[str]] = {
    "OptionsGeneral": ["engine_kind", "population_size", "genes_per_query", "keyword_pool_path"],
    "OptionsFitnessFunction": [
        "results_per_query",
        "max_results_per_population",
        "max_results_total",
        "same_host_coeff",
        "weight_position",
        "weight_recurrence",
        "weight_similarity",
        "aggregation_mode",
    ],
    "OptionsCrossover": ["parent_criterion_mult", "crossover_type", "synonym_swap_prob"],
    "OptionsMutation": ["mutation_prob"],
    "OptionsStop": ["target_generations", "sigma_threshold", "max_generations_cap"],
    "OptionsService": [
        "rng_seed", "autosave", "state_path", "corpus_dir", "adapter_url", "dict_dir", "normalizer",
    ],
}


class GafDocument(BaseModel):
    """Sections of the state document"""
    model_config = ConfigDict(populate_by_name=True)

    format_version: int = Field(..., alias="FormatVersion")
    key_words: List[Gene] = Field(..., alias="KeyWords")
    all_key_words_seen: List[str] = Field(default_factory=list, alias="AllKeyWordsSeen")
    options: Dict[str, Dict[str, Any]] = Field(..., alias="Options")
    populations: List[GenerationSummary] = Field(default_factory=list, alias="Populations")
    init_population: Optional[Population] = Field(None, alias="InitPopulation")
    current_population: Optional[Population] = Field(None, alias="CurrentPopulation")
    all_resources: List[Resource] = Field(default_factory=list, alias="AllResources")
    stop_reason: StopReason = Field(..., alias="StopReason")
    error_text: Optional[str] = Field(None, alias="ErrorText")
    rng_state: RngState = Field(..., alias="RngState")


class StateDocument(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    gaf: GafDocument = Field(..., alias="GAF")


def options_of(config: Config) -> Dict[str, Dict[str, Any]]:
    values = config.model_dump(mode="json")
    return {group: {name: values[name] for name in names} for group, names in OPTION_GROUPS.items()}


def config_from_options(options: Dict[str, Dict[str, Any]]) -> Config:
    flat: Dict[str, Any] = {}
    for group, values in options.items():
        if group not in OPTION_GROUPS:
            raise StateError(f"unknown option group '{group}'", where="GAF/Options")
        for name, value in values.items():
            if name not in OPTION_GROUPS[group]:
                raise StateError(f"unknown option '{name}'", where=f"GAF/Options/{group}")
            flat[name] = value
    try:
        return validate(Config(**flat))
    except ValidationError as e:
        raise StateError(str(e), where="GAF/Options")
    except ConfigError as e:
        raise StateError("; ".join(e.errors), where="GAF/Options")


def to_document(state: RunState) -> StateDocument:
    return StateDocument(
        gaf=GafDocument(
            format_version=FORMAT_VERSION,
            key_words=state.keyword_pool,
            all_key_words_seen=state.keywords_seen,
            options=options_of(state.config),
            populations=state.history,
            init_population=state.init_population,
            current_population=state.current_population,
            all_resources=state.all_resources,
            stop_reason=state.stop_reason,
            error_text=state.error_text,
            rng_state=state.rng_state,
        )
    )


def dumps_state(state: RunState) -> str:
    """Deterministic JSON rendering of a run state"""
    return to_document(state).model_dump_json(by_alias=True, indent=2) + "\n"


def _check_population(population: Optional[Population], config: Config, where: str) -> None:
    if population is None:
        return
    if len(population.queries) != config.population_size:
        raise StateError(
            f"{len(population.queries)} queries, expected {config.population_size}", where=where
        )
    for i, query in enumerate(population.queries):
        keys = [g.lemma_key for g in query.genes]
        if len(keys) != config.genes_per_query or len(set(keys)) != len(keys):
            raise StateError(
                f"expected {config.genes_per_query} distinct genes", where=f"{where}/queries/{i}"
            )
    for i, resource in enumerate(population.resources):
        indexes = [a.query_index for a in resource.appearances]
        if not indexes or len(set(indexes)) != len(indexes):
            raise StateError("appearances must be non-empty and unique per query", where=f"{where}/resources/{i}")


def _check_state(state: RunState) -> None:
    config = state.config
    _check_population(state.init_population, config, "GAF/InitPopulation")
    _check_population(state.current_population, config, "GAF/CurrentPopulation")
    numbers = [row.generation_number for row in state.history]
    if any(b <= a for a, b in zip(numbers, numbers[1:])):
        raise StateError("generation numbers must strictly increase", where="GAF/Populations")
    if len(state.all_resources) > config.max_results_total:
        raise StateError(
            f"{len(state.all_resources)} resources exceed f3 = {config.max_results_total}",
            where="GAF/AllResources",
        )


def loads_state(text: str, path: Optional[str] = None) -> RunState:
    """
    Parse a state document

    Args:
        text: Document text
        path: Source path used in error messages

    Returns:
        RunState satisfying all invariants

    Raises:
        StateError naming the failing location in the document
    """
    try:
        raw = json.loads(text)
    except ValueError as e:
        raise StateError(f"parse error: {str(e)}", path=path)

    if not isinstance(raw, dict) or not isinstance(raw.get("GAF"), dict):
        raise StateError("expected an object with a 'GAF' object", path=path, where="GAF")
    version = raw["GAF"].get("FormatVersion")
    if version != FORMAT_VERSION:
        raise StateError(f"format version {version!r}, expected {FORMAT_VERSION}", path=path, where="GAF/FormatVersion")

    try:
        document = StateDocument.model_validate(raw)
    except ValidationError as e:
        first = e.errors()[0]
        where = "/".join(str(part) for part in first["loc"])
        raise StateError(first["msg"], path=path, where=where)

    gaf = document.gaf
    try:
        config = config_from_options(gaf.options)
    except StateError as e:
        raise StateError(str(e), path=path)
    state = RunState(
        config=config,
        keyword_pool=gaf.key_words,
        init_population=gaf.init_population,
        current_population=gaf.current_population,
        history=gaf.populations,
        all_resources=gaf.all_resources,
        stop_reason=gaf.stop_reason,
        error_text=gaf.error_text,
        rng_state=gaf.rng_state,
        keywords_seen=gaf.all_key_words_seen,
    )
    try:
        _check_state(state)
    except StateError as e:
        raise StateError(str(e), path=path)
    return state


def save_state(state: RunState, path: Union[str, Path]) -> None:
    """
    Write the state atomically (temporary file + rename)

    Raises:
        StateError naming the path when the file cannot be written
    """
    path = Path(path)
    text = dumps_state(state)
    tmp_name = None
    try:
        with tempfile.NamedTemporaryFile(
            "w", encoding="utf-8", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False,
        ) as handle:
            tmp_name = handle.name
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp_name, path)
    except OSError as e:
        if tmp_name and os.path.exists(tmp_name):
            os.remove(tmp_name)
        logger.error(f"Failed to save state to {path}: {str(e)}")
        raise StateError(f"cannot write state: {str(e)}", path=str(path))
    logger.info(f"State saved to {path} (generation {len(state.history) - 1 if state.history else 0})")


def load_state(path: Union[str, Path]) -> RunState:
    path = Path(path)
    if not path.is_file():
        raise StateError("file not found", path=str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as e:
        raise StateError(f"cannot read state: {str(e)}", path=str(path))
    state = loads_state(text, path=str(path))
    logger.info(f"State loaded from {path}: {state.stop_reason.value}")
    return state
