"""
Pydantic models for the evolution domain: hits, resources, queries, populations
"""
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field

from config import Config


class Gene(BaseModel):
    """One keyword concept of a query"""
    model_config = ConfigDict(frozen=True)

    lemma_key: str = Field(..., description="Lemmatized, space-joined identity of the concept")
    surface: str = Field(..., description="Text sent to the engine")


class SearchHit(BaseModel):
    """One element of an engine's result list"""
    location: str = Field(..., min_length=1, description="Resource address")
    title: str = Field("", description="Resource title")
    snippet: str = Field("", description="Resource description")
    engine: str = Field(..., description="Engine that found the resource")
    rank: int = Field(..., ge=1, description="1-based position in the result list")
    score: Optional[float] = Field(None, description="Engine relevance score, when reported")


class Appearance(BaseModel):
    """Where a resource appeared: which query of the population, at which rank"""
    model_config = ConfigDict(frozen=True)

    query_index: int = Field(..., ge=0)
    rank: int = Field(..., ge=1)


class FitnessAttributes(BaseModel):
    """Intermediate values of the fitness function for one resource"""
    p_bar: float = 0.0
    p_score: float = 0.0
    r: int = 0
    r_score: float = 0.0
    s: float = 0.0
    w: float = 0.0


class Resource(BaseModel):
    """A deduplicated document retrieved by the queries of a population"""
    location: str
    title: str = ""
    snippet: str = ""
    engine: str = ""
    true_content: List[str] = Field(default_factory=list, description="Lemmatized title + snippet")
    appearances: List[Appearance] = Field(default_factory=list)
    fitness_attrs: FitnessAttributes = Field(default_factory=FitnessAttributes)


class Query(BaseModel):
    """A search query: the individual of the population"""
    genes: List[Gene]
    results: List[SearchHit] = Field(default_factory=list)
    fitness: Optional[float] = None

    @computed_field
    @property
    def query_text(self) -> str:
        return " ".join(gene.surface for gene in self.genes)

    def gene_keys(self) -> frozenset:
        return frozenset(gene.lemma_key for gene in self.genes)


class Population(BaseModel):
    """A generation of queries evaluated together"""
    generation_number: int = Field(0, ge=0)
    loop_number: int = Field(0, ge=0, description="Number of completed evolution loops")
    queries: List[Query] = Field(default_factory=list)
    resources: List[Resource] = Field(default_factory=list)
    fitness: Optional[float] = None
    sigma_fitness: Optional[float] = None

    def best_query(self) -> Optional[Query]:
        scored = [q for q in self.queries if q.fitness is not None]
        if not scored:
            return None
        return max(scored, key=lambda q: q.fitness)


class StopReason(str, Enum):
    RUNNING = "Running"
    STABILITY = "Stability"
    GENERATION_TARGET = "GenerationTarget"
    HARD_CAP = "HardCap"
    ERROR = "Error"


TERMINAL_REASONS = {
    StopReason.STABILITY,
    StopReason.GENERATION_TARGET,
    StopReason.HARD_CAP,
}


class GenerationSummary(BaseModel):
    """One row of the run history"""
    generation_number: int
    fitness: float
    sigma_fitness: float
    best_query_text: str
    pairs: int = 0
    children: int = 0
    mutations: int = 0


class RngState(BaseModel):
    """Serialized ``random.Random`` state"""
    version: int
    internal: List[int]
    gauss_next: Optional[float] = None

    @classmethod
    def capture(cls, rng) -> "RngState":
        version, internal, gauss_next = rng.getstate()
        return cls(version=version, internal=list(internal), gauss_next=gauss_next)

    def restore(self, rng) -> None:
        rng.setstate((self.version, tuple(self.internal), self.gauss_next))


class RunState(BaseModel):
    """Full state of an evolution run"""
    config: Config
    keyword_pool: List[Gene]
    init_population: Optional[Population] = None
    current_population: Optional[Population] = None
    history: List[GenerationSummary] = Field(default_factory=list)
    all_resources: List[Resource] = Field(default_factory=list)
    stop_reason: StopReason = StopReason.RUNNING
    error_text: Optional[str] = None
    rng_state: RngState
    keywords_seen: List[str] = Field(default_factory=list, description="Every gene lemma used so far")
