"""
Vector space similarity between the search pattern and retrieved documents

Documents are sparse tf-idf vectors over a corpus vocabulary; similarity is
the cosine of the angle between two vectors.
"""
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Dict, List, Mapping, Sequence, Tuple

LemmaList = List[str]
DocVector = Dict[str, float]
LogFn = Callable[[float], float]


@dataclass(frozen=True)
class TermStats:
    """Document frequencies of a corpus"""
    doc_count: int
    doc_freq: Mapping[str, int]
    vocabulary: Tuple[str, ...]


def build_term_stats(docs: Sequence[LemmaList]) -> TermStats:
    """
    Count in how many documents each lemma occurs

    Args:
        docs: Lemmatized documents; empty documents count toward P

    Returns:
        TermStats with P = len(docs)
    """
    if not docs:
        raise ValueError("Cannot build term statistics from an empty document list")

    doc_freq: Counter = Counter()
    vocabulary: Dict[str, None] = {}
    for doc in docs:
        unique = dict.fromkeys(doc)
        doc_freq.update(unique.keys())
        vocabulary.update(unique)
    return TermStats(doc_count=len(docs), doc_freq=dict(doc_freq), vocabulary=tuple(vocabulary))


def idf(doc_count: int, term_doc_count: int, log: LogFn = math.log) -> float:
    """Inverse document frequency log((P + 1) / P_t)"""
    if not 1 <= term_doc_count <= doc_count:
        raise ValueError(f"Document frequency {term_doc_count} outside [1, {doc_count}]")
    return log((doc_count + 1) / term_doc_count)


def tf_idf_vector(doc: LemmaList, stats: TermStats, log: LogFn = math.log) -> DocVector:
    """Raw term count times idf; lemmas outside the vocabulary are skipped"""
    counts = Counter(lemma for lemma in doc if lemma in stats.doc_freq)
    return {
        lemma: count * idf(stats.doc_count, stats.doc_freq[lemma], log)
        for lemma, count in counts.items()
    }


def _norm(vector: DocVector) -> float:
    return math.sqrt(math.fsum(weight * weight for weight in vector.values()))


def cosine(v1: DocVector, v2: DocVector) -> float:
    """Cosine similarity in [0, 1]; 0 when either vector is empty"""
    if not v1 or not v2:
        return 0.0
    if len(v2) < len(v1):
        v1, v2 = v2, v1
    dot = math.fsum(weight * v2[lemma] for lemma, weight in v1.items() if lemma in v2)
    denominator = _norm(v1) * _norm(v2)
    if denominator == 0.0:
        return 0.0
    return min(1.0, max(0.0, dot / denominator))


def similarity(
    pattern: LemmaList, doc: LemmaList, corpus: Sequence[LemmaList], log: LogFn = math.log
) -> float:
    """Similarity of one document to the pattern with idf taken over ``corpus``"""
    stats = build_term_stats(corpus)
    return cosine(tf_idf_vector(pattern, stats, log), tf_idf_vector(doc, stats, log))


def similarity_scores(
    pattern: LemmaList, docs: Sequence[LemmaList], log: LogFn = math.log
) -> List[float]:
    """
    Similarity of every document to the pattern, sharing one set of statistics

    The idf corpus is the documents plus the pattern quasi-document itself.

    Args:
        pattern: Lemmatized search pattern
        docs: Lemmatized documents

    Returns:
        One score per document, in input order
    """
    stats = build_term_stats(list(docs) + [pattern])
    pattern_vector = tf_idf_vector(pattern, stats, log)
    return [cosine(pattern_vector, tf_idf_vector(doc, stats, log)) for doc in docs]
