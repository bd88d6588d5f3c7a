"""
Shared test fixtures: bundled lexicon, a generated three-topic corpus and toy engines
"""
import random
from pathlib import Path
from typing import Callable, Dict, List, Tuple

import pytest

from config import Config, validate
from exceptions import EngineResponseError
from lexicon import Lexicon, load_keyword_pool, load_lexicon_dir
from models import SearchHit
from search import SNIPPET_LENGTH, LocalEngine, SearchEngine, index_corpus

ROOT = Path(__file__).parent

TOPIC_WORDS: Dict[str, List[str]] = {
    "solar": [
        "solar", "panel", "photovoltaic", "sunlight", "inverter", "battery", "rooftop",
        "installation", "module", "cell", "watt", "roof", "shading", "tilt", "meter",
    ],
    "genetics": [
        "genetic", "algorithm", "population", "crossover", "mutation", "fitness", "chromosome",
        "gene", "selection", "generation", "individual", "offspring", "evolution", "parent", "optimum",
    ],
    "cooking": [
        "recipe", "flour", "oven", "bake", "dough", "butter", "sugar", "soup", "onion",
        "garlic", "pepper", "salt", "kitchen", "knife", "sauce",
    ],
}
# Shared by every topic; the solar pool words among them reach other topics through leaky pages only
GENERAL_WORDS = [
    "report", "study", "result", "system", "design", "cost", "time", "year", "market",
    "review", "guide", "example", "detail", "question", "answer", "community", "project",
    "history", "future", "model", "energy", "grid", "efficiency",
]
TOPICS = sorted(TOPIC_WORDS)
CORPUS_SIZE = 200
HOST_COUNT = 20

SOLAR_POOL = [
    "solar", "photovoltaic", "sunlight", "inverter", "battery",
    "grid", "energy", "efficiency", "installation", "rooftop",
]
# Only overview pages use these, so a query holding two of them retrieves overview pages alone
OVERVIEW_FOCUS = ["solar", "photovoltaic", "inverter"]
# The first solar pages (i = 2, 5, ..., 41) land on distinct hosts
OVERVIEW_COUNT = 14
LEAK_WORDS = ["energy", "grid", "efficiency"]
GLUE_WORDS = ["and", "the", "for", "with", "of", "on", "to", "in"]

SOLAR_EXTRA = [w for w in TOPIC_WORDS["solar"] if w not in SOLAR_POOL]
FOCUS_WORDS = [w for w in SOLAR_POOL if w not in OVERVIEW_FOCUS]
NEUTRAL_WORDS = [w for w in GENERAL_WORDS if w not in SOLAR_POOL]


def _overview_page(rng: random.Random) -> Tuple[List[str], List[str]]:
    words = rng.sample(SOLAR_POOL, len(SOLAR_POOL))
    lead = " ".join(f"{rng.choice(GLUE_WORDS)} {w}" for w in words[3:])
    detail = OVERVIEW_FOCUS * 4 + rng.sample(SOLAR_EXTRA, 4) + rng.choices(NEUTRAL_WORDS, k=4)
    rng.shuffle(detail)
    # The lead fills the whole snippet: title + snippet name each pool word exactly once
    return words[:3], [lead.ljust(SNIPPET_LENGTH) + "\n" + " ".join(detail)]


def _focused_page(rng: random.Random) -> Tuple[List[str], List[str]]:
    focus = rng.choice(FOCUS_WORDS)
    title = [focus] + rng.sample(SOLAR_EXTRA, 2)
    rng.shuffle(title)
    body = [focus] * 6 + rng.choices(SOLAR_EXTRA, k=8) + rng.choices(NEUTRAL_WORDS, k=6)
    rng.shuffle(body)
    return title, body


def _topic_page(rng: random.Random, words: List[str], leaky: bool) -> Tuple[List[str], List[str]]:
    title = rng.sample(words, 3)
    body = [rng.choice(words if rng.random() < 0.55 else NEUTRAL_WORDS) for _ in range(rng.randint(25, 45))]
    if leaky:
        shared = rng.sample(LEAK_WORDS, 2)
        title[0] = shared[0]
        body += shared * 4
        rng.shuffle(body)
    return title, body


def generate_corpus(root: Path, size: int = CORPUS_SIZE, seed: int = 2024) -> None:
    """
    Write ``size`` documents ``siteNN/<topic>_<i>.txt`` under root

    Solar pages come in two grades. The first OVERVIEW_COUNT cover the whole
    keyword pool, the others repeat a single pool word. One cooking or
    genetics page in three leans on the pool words every topic shares, so
    queries built from those words pull off-topic pages in.
    """
    rng = random.Random(seed)
    overviews_left = OVERVIEW_COUNT
    for i in range(size):
        topic = TOPICS[i % len(TOPICS)]
        if topic != "solar":
            title, body = _topic_page(rng, TOPIC_WORDS[topic], leaky=(i // len(TOPICS)) % 3 == 0)
        elif overviews_left:
            overviews_left -= 1
            title, body = _overview_page(rng)
        else:
            title, body = _focused_page(rng)
        host = root / f"site{i % HOST_COUNT:02d}"
        host.mkdir(parents=True, exist_ok=True)
        text = " ".join(w.capitalize() for w in title) + "\n" + " ".join(body) + "\n"
        (host / f"{topic}_{i:03d}.txt").write_text(text, encoding="utf-8")


def topic_of(location: str) -> str:
    return location.rsplit("/", 1)[-1].split("_", 1)[0]


class StaticEngine(SearchEngine):
    """Engine answering from a fixed query_text -> [(location, title, snippet)] table"""

    name = "static"

    def __init__(self, table: Dict[str, List[tuple]]):
        self.table = table
        self.calls: List[str] = []

    async def search(self, query_text: str, limit: int) -> List[SearchHit]:
        self.calls.append(query_text)
        rows = self.table.get(query_text, [])[:limit]
        return [
            SearchHit(location=loc, title=title, snippet=snippet, engine=self.name, rank=rank)
            for rank, (loc, title, snippet) in enumerate(rows, start=1)
        ]


class BrokenEngine(SearchEngine):
    """Engine whose every answer is malformed"""

    name = "broken"

    async def search(self, query_text: str, limit: int) -> List[SearchHit]:
        raise EngineResponseError("Engine response is not a JSON array", query_text)


@pytest.fixture(scope="session")
def lexicon() -> Lexicon:
    return load_lexicon_dir(ROOT / "data")


@pytest.fixture(scope="session")
def toy_lexicon() -> Lexicon:
    return Lexicon(
        stopwords={"the", "of", "a"},
        stem_rules=[("ing", "")],
        synonym_groups=[{"car", "automobile", "vehicle"}],
    )


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    generate_corpus(root)
    return root


@pytest.fixture(scope="session")
def corpus_index(corpus_dir, lexicon):
    return index_corpus(corpus_dir, lexicon)


@pytest.fixture(scope="session")
def local_engine(corpus_index, lexicon) -> LocalEngine:
    return LocalEngine(corpus_index, lexicon)


@pytest.fixture(scope="session")
def pool_file(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("pool") / "keywords.txt"
    path.write_text("\n".join(SOLAR_POOL) + "\n", encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def solar_pool(pool_file, lexicon):
    return load_keyword_pool(pool_file, lexicon)


@pytest.fixture(scope="session")
def make_config() -> Callable[..., Config]:
    """Factory for validated configs with keyword overrides"""

    def factory(**overrides) -> Config:
        return validate(Config(**overrides))

    return factory
