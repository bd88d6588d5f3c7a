"""
Search layer - unified query execution over pluggable engines

The local engine indexes a directory of text documents (line 1 = title, the
rest = body) and ranks them by tf-idf cosine against the query, matching any
query lemma.
"""
import asyncio
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Set, Union

from exceptions import EngineError, EngineTransportError
from lexicon import LemmaList, Lexicon
from models import SearchHit
from similarity import DocVector, TermStats, build_term_stats, cosine, tf_idf_vector

logger = logging.getLogger(__name__)

SNIPPET_LENGTH = 200


@dataclass(frozen=True)
class IndexedDoc:
    location: str
    title: str
    body: str
    body_lemmas: LemmaList

    @property
    def snippet(self) -> str:
        return self.body[:SNIPPET_LENGTH]


@dataclass
class LocalIndex:
    """Inverted index over a local corpus"""
    docs: Dict[str, IndexedDoc] = field(default_factory=dict)
    postings: Dict[str, Set[str]] = field(default_factory=dict)
    stats: Optional[TermStats] = None
    vectors: Dict[str, DocVector] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.docs)


def build_index(docs: Sequence[IndexedDoc]) -> LocalIndex:
    """Build postings, statistics and document vectors from parsed documents"""
    index = LocalIndex()
    for doc in docs:
        if doc.location in index.docs:
            raise ValueError(f"Duplicate document id: {doc.location}")
        index.docs[doc.location] = doc
        for lemma in doc.body_lemmas:
            index.postings.setdefault(lemma, set()).add(doc.location)

    if index.docs:
        index.stats = build_term_stats([doc.body_lemmas for doc in index.docs.values()])
        index.vectors = {
            location: tf_idf_vector(doc.body_lemmas, index.stats) for location, doc in index.docs.items()
        }
    return index


def parse_document(location: str, text: str, lexicon: Lexicon) -> IndexedDoc:
    title, _, body = text.partition("\n")
    title = title.strip()
    return IndexedDoc(
        location=location,
        title=title,
        body=body,
        body_lemmas=lexicon.lemmatize_text(title + "\n" + body),
    )


def index_corpus(directory: Union[str, Path], lexicon: Lexicon) -> LocalIndex:
    """
    Index every file under a directory

    Args:
        directory: Corpus root; each file's relative path is its location
        lexicon: Lexicon used to lemmatize titles and bodies

    Returns:
        LocalIndex over all documents

    Raises:
        ValueError on a missing directory, an unreadable file, or a duplicate id
    """
    root = Path(directory)
    if not root.is_dir():
        raise ValueError(f"Corpus directory not found: {root}")

    logger.info(f"Indexing corpus: {root}")
    docs = []
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        location = path.relative_to(root).as_posix()
        if any(part.startswith(".") for part in location.split("/")):
            continue
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            logger.error(f"Unreadable corpus file {path}: {str(e)}")
            raise ValueError(f"Unreadable corpus file {path}: {str(e)}")
        docs.append(parse_document(location, text, lexicon))

    index = build_index(docs)
    logger.info(f"Indexed {len(index)} documents, {len(index.postings)} distinct lemmas")
    return index


def rank_local(query_lemmas: LemmaList, index: LocalIndex, limit: int) -> List[SearchHit]:
    """
    Rank the documents containing any query lemma

    Args:
        query_lemmas: Lemmatized query
        index: Local index
        limit: Maximum number of hits

    Returns:
        Hits sorted by (score desc, location asc), ranks 1..k
    """
    if not index.docs or not query_lemmas:
        return []

    candidates: Set[str] = set()
    for lemma in set(query_lemmas):
        candidates.update(index.postings.get(lemma, ()))
    if not candidates:
        return []

    query_vector = tf_idf_vector(query_lemmas, index.stats)
    scored = sorted(
        ((cosine(query_vector, index.vectors[location]), location) for location in candidates),
        key=lambda item: (-item[0], item[1]),
    )

    hits = []
    for rank, (score, location) in enumerate(scored[:limit], start=1):
        doc = index.docs[location]
        hits.append(
            SearchHit(
                location=location,
                title=doc.title,
                snippet=doc.snippet,
                engine=LocalEngine.name,
                rank=rank,
                score=score,
            )
        )
    return hits


class SearchEngine:
    """Engine interface: one coroutine returning a ranked hit list"""

    name = "engine"

    async def search(self, query_text: str, limit: int) -> List[SearchHit]:
        raise NotImplementedError


class LocalEngine(SearchEngine):
    """Deterministic engine over a LocalIndex"""

    name = "local"

    def __init__(self, index: LocalIndex, lexicon: Lexicon):
        self.index = index
        self.lexicon = lexicon

    async def search(self, query_text: str, limit: int) -> List[SearchHit]:
        return rank_local(self.lexicon.lemmatize_text(query_text), self.index, limit)


def execute(query_text: str, engine: SearchEngine, limit: int) -> List[SearchHit]:
    """
    Run one query

    Args:
        query_text: Text sent to the engine
        engine: Initialized engine
        limit: Result list depth (f1)

    Returns:
        At most ``limit`` hits ranked 1..k in engine order
    """
    if limit < 1:
        raise ValueError("limit must be ≥ 1")
    return asyncio.run(engine.search(query_text, limit))[:limit]


async def _gather(query_texts: Sequence[str], engine: SearchEngine, limit: int):
    return await asyncio.gather(
        *(engine.search(text, limit) for text in query_texts), return_exceptions=True
    )


def execute_all(query_texts: Sequence[str], engine: SearchEngine, limit: int) -> List[List[SearchHit]]:
    """
    Run the queries of one population concurrently

    Transport failures give an empty list for that query; other engine errors
    are raised (the first one in query order).

    Returns:
        One hit list per query, in query order
    """
    if limit < 1:
        raise ValueError("limit must be ≥ 1")
    if not query_texts:
        return []

    outcomes = asyncio.run(_gather(query_texts, engine, limit))
    results: List[List[SearchHit]] = []
    for text, outcome in zip(query_texts, outcomes):
        if isinstance(outcome, EngineTransportError):
            logger.warning(f"Query '{text}' failed, counted as empty: {outcome.reason}")
            results.append([])
        elif isinstance(outcome, BaseException):
            if not isinstance(outcome, EngineError):
                logger.error(f"Unexpected engine failure for '{text}': {str(outcome)}")
            raise outcome
        else:
            results.append(list(outcome)[:limit])
    return results
