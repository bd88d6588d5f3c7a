"""
Genetic algorithm over search queries

One generation: select the fittest queries, pair them by maximal genotype
distance, recombine (one-point or discrete, with synonym swaps), mutate, then
keep the best queries of the joined parents + children population.
"""
import math
import random
import logging
from typing import Callable, List, Optional, Sequence, Tuple

from config import Config, CrossoverType, validate
from exceptions import EngineError, StateError
from fitness import merge_resources, pattern_document, population_fitness, score_population, sigma_fitness
from lexicon import LemmaList, Lexicon
from models import (
    Gene,
    GenerationSummary,
    Population,
    Query,
    RngState,
    RunState,
    StopReason,
)
from search import SearchEngine, execute_all
import persistence

logger = logging.getLogger(__name__)

# Relative slack when comparing a fitness with the parent threshold
THRESHOLD_TOLERANCE = 1e-12

GenerationCallback = Callable[[RunState], None]


def create_initial_population(pool: Sequence[Gene], config: Config, rng: random.Random) -> Population:
    """
    Random initial population

    Args:
        pool: Keyword concepts
        config: Population size (g2) and genes per query (g3)
        rng: Random generator

    Returns:
        Unevaluated generation 0
    """
    if len(pool) < config.genes_per_query:
        raise ValueError(
            f"Keyword pool has {len(pool)} concepts, {config.genes_per_query} needed per query"
        )
    queries = [Query(genes=rng.sample(list(pool), config.genes_per_query)) for _ in range(config.population_size)]
    return Population(generation_number=0, queries=queries)


def _score(queries: List[Query], results: List[list], lexicon: Lexicon, config: Config, pattern: LemmaList):
    resources, fitnesses = score_population(results, lexicon, pattern, config)
    scored = [
        query.model_copy(update={"results": hits, "fitness": fit})
        for query, hits, fit in zip(queries, results, fitnesses)
    ]
    return scored, resources


def _finish(population: Population, config: Config) -> Population:
    fitnesses = [q.fitness for q in population.queries]
    population.fitness = population_fitness(fitnesses, config.aggregation_mode)
    population.sigma_fitness = sigma_fitness(fitnesses)
    return population


def evaluate(
    population: Population,
    engine: SearchEngine,
    lexicon: Lexicon,
    config: Config,
    pattern: LemmaList,
) -> Population:
    """
    Run every query and compute resource and query fitness

    Args:
        population: Queries to evaluate
        engine: Search engine
        lexicon: Lexicon
        config: Run parameters
        pattern: Lemmatized search pattern

    Returns:
        Evaluated copy of the population
    """
    results = execute_all([q.query_text for q in population.queries], engine, config.results_per_query)
    queries, resources = _score(population.queries, results, lexicon, config, pattern)
    evaluated = population.model_copy(update={"queries": queries, "resources": resources})
    return _finish(evaluated, config)


def select_best(population: Population, config: Config) -> List[Query]:
    """
    Parents: queries with fitness ≥ c1 × mean fitness, best first

    Falls back to the two fittest queries when fewer qualify.
    """
    ranked = sorted(population.queries, key=lambda q: -q.fitness)
    mean = math.fsum(q.fitness for q in ranked) / len(ranked)
    threshold = config.parent_criterion_mult * mean
    slack = THRESHOLD_TOLERANCE * max(1.0, abs(threshold))
    selected = [q for q in ranked if q.fitness >= threshold - slack]
    if len(selected) < 2:
        selected = ranked[:2]
    return selected


def genotype_distance(q1: Query, q2: Query) -> float:
    """Jaccard distance between the lemma sets of two queries"""
    a, b = q1.gene_keys(), q2.gene_keys()
    union = a | b
    if not union:
        return 0.0
    return 1.0 - len(a & b) / len(union)


def select_parent_pairs(selected: Sequence[Query]) -> List[Tuple[Query, Query]]:
    """
    Outbreeding: pair each query with the most distant unpaired one

    Ties go to the fitter partner, then to the earlier one. An odd query out is
    paired with the most distant of the already paired queries.
    """
    if len(selected) < 2:
        raise ValueError("At least two parents are needed")

    def preference(i: int, j: int):
        return (genotype_distance(selected[i], selected[j]), selected[j].fitness or 0.0, -j)

    unpaired = list(range(len(selected)))
    pairs: List[Tuple[int, int]] = []
    while len(unpaired) >= 2:
        first = unpaired.pop(0)
        partner = max(unpaired, key=lambda j: preference(first, j))
        unpaired.remove(partner)
        pairs.append((first, partner))
    if unpaired:
        last = unpaired[0]
        partner = max((j for j in range(len(selected)) if j != last), key=lambda j: preference(last, j))
        pairs.append((last, partner))
    return [(selected[i], selected[j]) for i, j in pairs]


def _swap_synonyms(genes: List[Gene], lexicon: Lexicon, probability: float, rng: random.Random) -> List[Gene]:
    swapped = []
    for gene in genes:
        synonyms = sorted(lexicon.synonyms_of(gene.lemma_key))
        if synonyms and rng.random() < probability:
            lemma = rng.choice(synonyms)
            gene = Gene(lemma_key=lemma, surface=lemma)
        swapped.append(gene)
    return swapped


def _repair(genes: List[Gene], pool: Sequence[Gene], rng: random.Random) -> List[Gene]:
    genes = list(genes)
    keys = [g.lemma_key for g in genes]
    for i in range(len(genes)):
        if keys[i] not in keys[:i]:
            continue
        present = set(keys)
        available = [g for g in pool if g.lemma_key not in present]
        if not available:
            logger.warning(f"No unused concept left to repair duplicate '{keys[i]}'")
            continue
        genes[i] = rng.choice(available)
        keys[i] = genes[i].lemma_key
    return genes


def crossover(
    pair: Tuple[Query, Query],
    config: Config,
    lexicon: Lexicon,
    pool: Sequence[Gene],
    rng: random.Random,
    cut: Optional[int] = None,
) -> Tuple[Query, Query]:
    """
    Recombine two parents into two children

    Args:
        pair: Parents A and B
        config: Crossover type and synonym swap probability
        lexicon: Synonym groups
        pool: Concepts used to repair duplicate genes
        rng: Random generator
        cut: Forced one-point cut position (drawn when None)

    Returns:
        Two children with distinct genes
    """
    a, b = pair[0].genes, pair[1].genes
    if config.crossover_type == CrossoverType.ONE_POINT:
        k = cut if cut is not None else rng.randint(1, len(a) - 1)
        first, second = a[:k] + b[k:], b[:k] + a[k:]
    else:
        picks = [rng.random() < 0.5 for _ in a]
        first = [x if pick else y for x, y, pick in zip(a, b, picks)]
        second = [y if pick else x for x, y, pick in zip(a, b, picks)]

    children = []
    for genes in (first, second):
        genes = _swap_synonyms(list(genes), lexicon, config.synonym_swap_prob, rng)
        children.append(Query(genes=_repair(genes, pool, rng)))
    return children[0], children[1]


def mutate(query: Query, config: Config, pool: Sequence[Gene], rng: random.Random) -> Query:
    """
    With probability m1, replace one gene by an unused pool concept

    Returns:
        The same query object when not mutated
    """
    if not rng.random() < config.mutation_prob:
        return query
    present = query.gene_keys()
    candidates = [g for g in pool if g.lemma_key not in present]
    if not candidates:
        logger.warning(f"No unused concept to mutate '{query.query_text}'")
        return query
    genes = list(query.genes)
    genes[rng.randrange(len(genes))] = rng.choice(candidates)
    return Query(genes=genes)


def _random_fill(
    joined: List[Query], seen: set, pool: Sequence[Gene], config: Config, rng: random.Random
) -> None:
    while len(joined) < config.population_size:
        for _ in range(20):
            query = Query(genes=rng.sample(list(pool), config.genes_per_query))
            if query.gene_keys() not in seen:
                break
        seen.add(query.gene_keys())
        joined.append(query)


def join_and_evaluate(
    parents: Population,
    children: Sequence[Query],
    engine: SearchEngine,
    lexicon: Lexicon,
    config: Config,
    pool: Sequence[Gene],
    pattern: LemmaList,
    rng: random.Random,
) -> List[Query]:
    """
    Joined parents + children population, deduplicated by gene set and evaluated together

    Parents reuse their stored result lists; only new queries hit the engine.
    """
    joined: List[Query] = []
    seen: set = set()
    for query in list(parents.queries) + list(children):
        keys = query.gene_keys()
        if keys not in seen:
            seen.add(keys)
            joined.append(query)
    if len(joined) < config.population_size:
        logger.info(f"Only {len(joined)} distinct queries after joining, filling with random queries")
        _random_fill(joined, seen, pool, config, rng)

    pending = [i for i, q in enumerate(joined) if q.fitness is None]
    fetched = execute_all([joined[i].query_text for i in pending], engine, config.results_per_query)
    results = [list(q.results) for q in joined]
    for i, hits in zip(pending, fetched):
        results[i] = hits

    scored, _ = _score(joined, results, lexicon, config, pattern)
    return scored


def next_generation(
    parents: Population,
    children: Sequence[Query],
    engine: SearchEngine,
    lexicon: Lexicon,
    config: Config,
    pool: Sequence[Gene],
    pattern: LemmaList,
    rng: random.Random,
) -> Population:
    """
    Elitist survival from the joined parents + children population

    Survivors are chosen on the fitness of the joined evaluation, then
    re-scored among themselves: query fitness, resources and sigma of the
    returned population all describe the same set of result lists.

    Returns:
        Next generation with population_size queries
    """
    joined = join_and_evaluate(parents, children, engine, lexicon, config, pool, pattern, rng)
    order = sorted(range(len(joined)), key=lambda i: (-joined[i].fitness, i))
    survivors = [joined[i] for i in order[: config.population_size]]

    survivors, resources = _score(survivors, [list(q.results) for q in survivors], lexicon, config, pattern)
    population = Population(
        generation_number=parents.generation_number + 1,
        loop_number=parents.loop_number + 1,
        queries=survivors,
        resources=resources,
    )
    return _finish(population, config)


def should_stop(state: RunState, config: Config) -> StopReason:
    """Stability, then generation target, then hard cap"""
    population = state.current_population
    if population.sigma_fitness <= config.sigma_threshold:
        return StopReason.STABILITY
    if population.generation_number >= config.target_generations:
        return StopReason.GENERATION_TARGET
    if population.generation_number >= config.max_generations_cap:
        return StopReason.HARD_CAP
    return StopReason.RUNNING


def _summary(population: Population, pairs: int = 0, children: int = 0, mutations: int = 0) -> GenerationSummary:
    best = population.best_query()
    return GenerationSummary(
        generation_number=population.generation_number,
        fitness=population.fitness,
        sigma_fitness=population.sigma_fitness,
        best_query_text=best.query_text if best else "",
        pairs=pairs,
        children=children,
        mutations=mutations,
    )


def _record(state: RunState, population: Population, rng: random.Random, **counts) -> None:
    config = state.config
    state.current_population = population
    state.history.append(_summary(population, **counts))
    state.all_resources = merge_resources(state.all_resources, population.resources, config.max_results_total)
    seen = set(state.keywords_seen)
    for query in population.queries:
        seen.update(query.gene_keys())
    state.keywords_seen = sorted(seen)
    state.rng_state = RngState.capture(rng)
    state.stop_reason = should_stop(state, config)
    logger.info(
        f"Generation {population.generation_number}: fitness={population.fitness:.6f} "
        f"sigma={population.sigma_fitness:.6f} best='{state.history[-1].best_query_text}'"
    )


def _autosave(state: RunState) -> None:
    config = state.config
    if not config.autosave:
        return
    try:
        persistence.save_state(state, config.state_path)
    except StateError as e:
        logger.error(f"Autosave failed, continuing in memory: {str(e)}")


def _fail(state: RunState, error: Exception) -> RunState:
    logger.error(f"Run stopped with an error: {str(error)}")
    state.stop_reason = StopReason.ERROR
    state.error_text = str(error)
    _autosave(state)
    return state


def start(config: Config, lexicon: Lexicon, engine: SearchEngine, pool: Sequence[Gene]) -> RunState:
    """
    Create and evaluate the initial population

    Returns:
        RunState at generation 0 (stop_reason may already be terminal)
    """
    validate(config)
    rng = random.Random(config.rng_seed)
    state = RunState(config=config, keyword_pool=list(pool), rng_state=RngState.capture(rng))
    try:
        population = create_initial_population(pool, config, rng)
        population = evaluate(population, engine, lexicon, config, pattern_document(pool))
    except (EngineError, ValueError) as e:
        return _fail(state, e)

    state.init_population = population
    _record(state, population, rng)
    _autosave(state)
    return state


def step(state: RunState, lexicon: Lexicon, engine: SearchEngine) -> RunState:
    """
    Run one generation: select, pair, recombine, mutate, join, check stop

    A failing engine leaves the population and generator state untouched and
    marks the run as Error, so a resume repeats the same generation.
    """
    config = state.config
    pool = state.keyword_pool
    pattern = pattern_document(pool)
    rng = random.Random()
    state.rng_state.restore(rng)

    parents = state.current_population
    try:
        selected = select_best(parents, config)
        pairs = select_parent_pairs(selected)
        children: List[Query] = []
        for pair in pairs:
            children.extend(crossover(pair, config, lexicon, pool, rng))
        mutations = 0
        for i, child in enumerate(children):
            mutated = mutate(child, config, pool, rng)
            if mutated is not child:
                mutations += 1
                children[i] = mutated
        population = next_generation(parents, children, engine, lexicon, config, pool, pattern, rng)
    except EngineError as e:
        return _fail(state, e)

    _record(state, population, rng, pairs=len(pairs), children=len(children), mutations=mutations)
    _autosave(state)
    return state


def resume(
    state: RunState,
    lexicon: Lexicon,
    engine: SearchEngine,
    on_generation: Optional[GenerationCallback] = None,
) -> RunState:
    """Continue a Running or Error state until a terminal stop reason"""
    if state.stop_reason == StopReason.ERROR:
        logger.info(f"Retrying after error: {state.error_text}")
        state.stop_reason = StopReason.RUNNING
        state.error_text = None
        if state.current_population is None:
            return run(state.config, lexicon, engine, state.keyword_pool, on_generation)
        state.stop_reason = should_stop(state, state.config)

    while state.stop_reason == StopReason.RUNNING:
        step(state, lexicon, engine)
        if on_generation:
            on_generation(state)
    return state


def run(
    config: Config,
    lexicon: Lexicon,
    engine: SearchEngine,
    pool: Sequence[Gene],
    on_generation: Optional[GenerationCallback] = None,
) -> RunState:
    """
    Full evolution run

    Args:
        config: Validated parameters
        lexicon: Loaded lexicon
        engine: Initialized engine
        pool: Keyword concepts
        on_generation: Called after every evaluated generation

    Returns:
        Final RunState with a terminal or Error stop reason
    """
    logger.info(
        f"Starting run: {config.population_size} queries x {config.genes_per_query} genes, "
        f"pool of {len(pool)}, seed {config.rng_seed}"
    )
    state = start(config, lexicon, engine, pool)
    if on_generation:
        on_generation(state)
    if state.stop_reason != StopReason.RUNNING:
        return state
    return resume(state, lexicon, engine, on_generation)
