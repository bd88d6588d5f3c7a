"""
Fitness function - aggregate result lists into resources and score them

Each resource gets w = f5 * p_score + f6 * r_score + f7 * s where
- p_score = (f1 + 1 - p_bar) / f1, p_bar the mean rank over the lists it appears in
- r_score = r / N, r the number of the N queries that retrieved it
- s the tf-idf cosine similarity of its title + snippet to the search pattern
"""
import math
import logging
from typing import Dict, List, Sequence, Tuple
from urllib.parse import urlsplit

import numpy as np

from config import AggregationMode, Config
from lexicon import LemmaList, Lexicon
from models import Appearance, FitnessAttributes, Gene, Resource, SearchHit
from similarity import similarity_scores

logger = logging.getLogger(__name__)


def pattern_document(pool: Sequence[Gene]) -> LemmaList:
    """The search pattern quasi-document: lemmas of every pool concept"""
    lemmas: LemmaList = []
    for gene in pool:
        lemmas.extend(gene.lemma_key.split())
    return lemmas


def aggregate_resources(results: Sequence[Sequence[SearchHit]], lexicon: Lexicon) -> List[Resource]:
    """
    Merge per-query result lists into one resource per location

    Args:
        results: One hit list per query, indexed 0..N-1
        lexicon: Lexicon used for the lemmatized description

    Returns:
        Resources in first-appearance order; a location repeated within one
        list keeps its best rank
    """
    resources: Dict[str, Resource] = {}
    for query_index, hits in enumerate(results):
        best: Dict[str, int] = {}
        for hit in hits:
            if hit.location not in resources:
                resources[hit.location] = Resource(
                    location=hit.location,
                    title=hit.title,
                    snippet=hit.snippet,
                    engine=hit.engine,
                    true_content=lexicon.lemmatize_text(hit.title + " " + hit.snippet),
                )
            best[hit.location] = min(hit.rank, best.get(hit.location, hit.rank))
        for location, rank in best.items():
            resources[location].appearances.append(Appearance(query_index=query_index, rank=rank))
    return list(resources.values())


def position_score(appearances: Sequence[Appearance], f1: int) -> Tuple[float, float]:
    """Mean rank p_bar and its normalized score (f1 + 1 - p_bar) / f1"""
    if not appearances:
        raise ValueError("Resource has no appearances")
    ranks = [a.rank for a in appearances]
    if max(ranks) > f1:
        raise ValueError(f"Rank {max(ranks)} exceeds result list depth {f1}")
    p_bar = math.fsum(ranks) / len(ranks)
    return p_bar, (f1 + 1 - p_bar) / f1


def occurrence_score(r: int, n: int) -> float:
    """Share r / N of the population's queries that retrieved the document"""
    if not 1 <= r <= n:
        raise ValueError(f"Occurrence count {r} outside [1, {n}]")
    return r / n


def resource_weight(p_score: float, r_score: float, s: float, config: Config) -> float:
    return config.weight_position * p_score + config.weight_recurrence * r_score + config.weight_similarity * s


def host_of(location: str) -> str:
    """URI authority, or the top-level directory of a corpus path"""
    parts = urlsplit(location)
    if parts.scheme and parts.netloc:
        return parts.netloc.lower()
    head, sep, _ = location.lstrip("/").partition("/")
    # A file at the corpus root is a host of its own
    return head if sep else location


def _ranked(resources: Sequence[Resource]) -> List[Resource]:
    return sorted(resources, key=lambda r: (-r.fitness_attrs.w, r.location))


def same_host_adjust(resources: Sequence[Resource], f4: float) -> List[Resource]:
    """
    Damp repeated documents from one host

    Within each host group ordered by w descending, the j-th document
    (j starting at 1) has its w multiplied by f4 ** (j - 1).

    Returns:
        New resources sorted by adjusted w descending, then location
    """
    groups: Dict[str, List[Resource]] = {}
    for resource in resources:
        groups.setdefault(host_of(resource.location), []).append(resource)

    adjusted = []
    for group in groups.values():
        for j, resource in enumerate(_ranked(group)):
            attrs = resource.fitness_attrs.model_copy(update={"w": resource.fitness_attrs.w * f4 ** j})
            adjusted.append(resource.model_copy(update={"fitness_attrs": attrs}))
    return _ranked(adjusted)


def _aggregate(values: Sequence[float], mode: AggregationMode) -> float:
    if mode == AggregationMode.MEDIAN:
        return float(np.median(values))
    return float(np.mean(values))


def query_fitness(weights: Sequence[float], mode: AggregationMode) -> float:
    """Mean or median w of the query's resources; 0 for an empty result list"""
    if not weights:
        return 0.0
    return _aggregate(weights, mode)


def population_fitness(query_fitnesses: Sequence[float], mode: AggregationMode) -> float:
    if not query_fitnesses:
        raise ValueError("Population has no queries")
    return _aggregate(query_fitnesses, mode)


def sigma_fitness(query_fitnesses: Sequence[float]) -> float:
    """Population standard deviation (N divisor)"""
    if not query_fitnesses:
        raise ValueError("Population has no queries")
    return float(np.std(query_fitnesses))


def score_resources(resources: Sequence[Resource], n: int, pattern: LemmaList, config: Config) -> List[Resource]:
    """Fill p, r, s and w of every resource (before same-host damping)"""
    scores = similarity_scores(pattern, [r.true_content for r in resources])
    scored = []
    for resource, s in zip(resources, scores):
        p_bar, p_score = position_score(resource.appearances, config.results_per_query)
        r = len(resource.appearances)
        r_score = occurrence_score(r, n)
        attrs = FitnessAttributes(
            p_bar=p_bar,
            p_score=p_score,
            r=r,
            r_score=r_score,
            s=s,
            w=resource_weight(p_score, r_score, s, config),
        )
        scored.append(resource.model_copy(update={"fitness_attrs": attrs}))
    return scored


def score_population(
    results: Sequence[Sequence[SearchHit]],
    lexicon: Lexicon,
    pattern: LemmaList,
    config: Config,
) -> Tuple[List[Resource], List[float]]:
    """
    Full fitness evaluation of one set of result lists

    Args:
        results: One hit list per query
        lexicon: Lexicon for the resource descriptions
        pattern: Lemmatized search pattern
        config: Fitness parameters (f1, f2, f4..f8)

    Returns:
        (resources sorted by w and capped at f2, fitness of every query over all
        its resources, including those the cap drops)
    """
    n = len(results)
    resources = aggregate_resources(results, lexicon)
    if not resources:
        return [], [0.0] * n

    resources = score_resources(resources, n, pattern, config)
    resources = same_host_adjust(resources, config.same_host_coeff)

    # Every scored resource counts toward query fitness, the f2 cap only trims what is kept
    weights: List[List[float]] = [[] for _ in range(n)]
    for resource in resources:
        for appearance in resource.appearances:
            weights[appearance.query_index].append(resource.fitness_attrs.w)
    fitnesses = [query_fitness(w, config.aggregation_mode) for w in weights]

    if len(resources) > config.max_results_per_population:
        logger.info(f"Keeping {config.max_results_per_population} of {len(resources)} resources")
        resources = resources[: config.max_results_per_population]
    return resources, fitnesses


def merge_resources(pool: Sequence[Resource], new: Sequence[Resource], cap: int) -> List[Resource]:
    """Cumulative resource pool: one record per location (highest w kept), capped"""
    merged: Dict[str, Resource] = {r.location: r for r in pool}
    for resource in new:
        current = merged.get(resource.location)
        if current is None or resource.fitness_attrs.w > current.fitness_attrs.w:
            merged[resource.location] = resource
    return _ranked(merged.values())[:cap]
