"""
Tests for the genetic operators and the evolution loop
"""
import random

import pytest
from hypothesis import given, strategies as st

from conftest import BrokenEngine, StaticEngine, topic_of
from config import AggregationMode, Config, CrossoverType
from evolve import (
    create_initial_population,
    crossover,
    evaluate,
    genotype_distance,
    join_and_evaluate,
    mutate,
    next_generation,
    run,
    select_best,
    select_parent_pairs,
    should_stop,
    start,
    step,
)
from fitness import pattern_document, population_fitness, score_population, sigma_fitness
from models import Gene, Population, Query, RngState, RunState, SearchHit, StopReason, TERMINAL_REASONS
from persistence import dumps_state
from search import SearchEngine

LETTERS = list("abcdefghij")


def gene(key):
    return Gene(lemma_key=key, surface=key)


def query(*keys, fitness=None):
    return Query(genes=[gene(k) for k in keys], fitness=fitness)


POOL = [gene(k) for k in LETTERS]


class ConstantEngine(SearchEngine):
    """Every query retrieves the same single document"""

    name = "constant"

    async def search(self, query_text, limit):
        return [SearchHit(location="same.txt", title="same", snippet="", engine=self.name, rank=1)]


def test_initial_population_shape():
    population = create_initial_population(POOL[:5], Config(population_size=4, genes_per_query=2), random.Random(1))
    assert population.generation_number == 0
    assert len(population.queries) == 4
    for q in population.queries:
        assert len(q.gene_keys()) == 2
        assert q.gene_keys() <= {g.lemma_key for g in POOL[:5]}
        assert q.fitness is None


def test_initial_population_forced_and_deterministic():
    config = Config(population_size=4, genes_per_query=3)
    forced = create_initial_population(POOL[:3], config, random.Random(3))
    assert {q.gene_keys() for q in forced.queries} == {frozenset("abc")}

    first = create_initial_population(POOL, config, random.Random(42))
    second = create_initial_population(POOL, config, random.Random(42))
    assert first.model_dump_json() == second.model_dump_json()

    with pytest.raises(ValueError):
        create_initial_population(POOL[:2], config, random.Random(0))


def test_evaluate_all_empty(lexicon):
    population = create_initial_population(POOL, Config(population_size=3), random.Random(0))
    evaluated = evaluate(population, StaticEngine({}), lexicon, Config(population_size=3), ["a"])
    assert [q.fitness for q in evaluated.queries] == [0.0, 0.0, 0.0]
    assert (evaluated.fitness, evaluated.sigma_fitness) == (0.0, 0.0)


def test_evaluate_is_pure(local_engine, lexicon, solar_pool):
    config = Config()
    population = create_initial_population(solar_pool, config, random.Random(5))
    pattern = pattern_document(solar_pool)
    once = evaluate(population, local_engine, lexicon, config, pattern)
    twice = evaluate(population, local_engine, lexicon, config, pattern)
    assert once.model_dump_json() == twice.model_dump_json()
    assert once.fitness == pytest.approx(population_fitness([q.fitness for q in once.queries], AggregationMode.MEAN))
    assert once.sigma_fitness == pytest.approx(sigma_fitness([q.fitness for q in once.queries]))


def population_with(fitnesses):
    keys = [LETTERS[i:i + 3] for i in range(len(fitnesses))]
    return Population(queries=[query(*k, fitness=f) for k, f in zip(keys, fitnesses)])


def test_select_best():
    selected = select_best(population_with([0.5, 0.9, 0.1]), Config())
    assert [q.fitness for q in selected] == [0.9, 0.5]
    assert len(select_best(population_with([0.4] * 5), Config())) == 5
    huge = select_best(population_with([0.9, 0.5, 0.1]), Config(parent_criterion_mult=10))
    assert [q.fitness for q in huge] == [0.9, 0.5]


def test_genotype_distance_examples():
    assert genotype_distance(query("a", "b", "c"), query("c", "b", "a")) == 0.0
    assert genotype_distance(query("a", "b", "c"), query("x", "y", "z")) == 1.0
    assert genotype_distance(query("a", "b", "c"), query("a", "b", "d")) == 0.5


key_sets = st.lists(st.sampled_from(LETTERS), min_size=1, max_size=5, unique=True)


@given(key_sets, key_sets)
def test_genotype_distance_properties(a, b):
    qa, qb = query(*a), query(*b)
    d = genotype_distance(qa, qb)
    assert d == genotype_distance(qb, qa)
    assert 0.0 <= d <= 1.0
    assert (d == 0.0) == (set(a) == set(b))


def test_pairs_of_two():
    q1, q2 = query("a", "b", fitness=0.5), query("a", "b", fitness=0.4)
    assert select_parent_pairs([q1, q2]) == [(q1, q2)]


def test_pairs_prefer_most_distant():
    q1 = query("a", "b", "c", fitness=0.9)
    q2 = query("a", "b", "d", fitness=0.8)
    q3 = query("a", "c", "e", fitness=0.7)
    q4 = query("x", "y", "z", fitness=0.6)
    pairs = select_parent_pairs([q1, q2, q3, q4])
    assert pairs[0] == (q1, q4)
    assert len(pairs) == 2


def test_pairs_of_identical_queries():
    selected = [query("a", "b", fitness=f) for f in (0.9, 0.8, 0.7)]
    pairs = select_parent_pairs(selected)
    assert len(pairs) == 2
    assert pairs[0] == (selected[0], selected[1])
    assert pairs[1] == (selected[2], selected[0])


def test_one_point_crossover_with_forced_cut(toy_lexicon):
    config = Config(synonym_swap_prob=0.0)
    children = crossover((query("a", "b", "c"), query("x", "y", "z")), config, toy_lexicon, POOL, random.Random(0), cut=1)
    assert [[g.lemma_key for g in c.genes] for c in children] == [["a", "y", "z"], ["x", "b", "c"]]
    assert children[0].query_text == "a y z"


def test_discrete_crossover_is_complementary(toy_lexicon):
    config = Config(synonym_swap_prob=0.0, crossover_type=CrossoverType.DISCRETE)
    rng = random.Random(11)
    a, b = query("a", "b", "c"), query("x", "y", "z")
    for _ in range(50):
        c1, c2 = crossover((a, b), config, toy_lexicon, POOL, rng)
        for i in range(3):
            assert {c1.genes[i].lemma_key, c2.genes[i].lemma_key} == {a.genes[i].lemma_key, b.genes[i].lemma_key}


def test_crossover_of_identical_parents(toy_lexicon):
    config = Config(synonym_swap_prob=0.0)
    parent = query("a", "b", "c")
    c1, c2 = crossover((parent, parent), config, toy_lexicon, POOL, random.Random(2))
    assert c1.genes == parent.genes and c2.genes == parent.genes


def test_crossover_swaps_synonyms(toy_lexicon):
    config = Config(synonym_swap_prob=1.0)
    a, b = query("car", "b", "c"), query("car", "y", "z")
    for seed in range(20):
        c1, c2 = crossover((a, b), config, toy_lexicon, POOL, random.Random(seed))
        for child in (c1, c2):
            assert child.genes[0].lemma_key in {"automobile", "vehicle"}


def test_crossover_repairs_duplicates(toy_lexicon):
    config = Config(synonym_swap_prob=0.0)
    for seed in range(20):
        c1, c2 = crossover(
            (query("a", "b", "c"), query("b", "a", "d")), config, toy_lexicon, POOL, random.Random(seed), cut=1
        )
        for child in (c1, c2):
            assert len(child.gene_keys()) == 3
            assert child.gene_keys() <= set(LETTERS)


def random_queries(rng, count):
    return [query(*rng.sample(LETTERS, 3)) for _ in range(count)]


def test_mutation_off_is_identity():
    rng = random.Random(0)
    config = Config(mutation_prob=0.0)
    for q in random_queries(random.Random(1), 1000):
        assert mutate(q, config, POOL, rng) is q


def test_forced_mutation_changes_one_gene():
    rng = random.Random(0)
    config = Config(mutation_prob=1.0)
    for q in random_queries(random.Random(2), 200):
        mutated = mutate(q, config, POOL, rng)
        changed = [i for i in range(3) if mutated.genes[i] != q.genes[i]]
        assert len(changed) == 1
        assert len(mutated.gene_keys()) == 3


def test_mutation_rate():
    rng = random.Random(42)
    config = Config(mutation_prob=0.1)
    q = query("a", "b", "c")
    count = sum(mutate(q, config, POOL, rng) is not q for _ in range(10000))
    assert 800 <= count <= 1200


def test_mutation_without_unused_concept():
    q = query("a", "b", "c")
    assert mutate(q, Config(mutation_prob=1.0), POOL[:3], random.Random(0)) is q


def evaluated_parents(config, pool, engine, lexicon, seed):
    rng = random.Random(seed)
    population = create_initial_population(pool, config, rng)
    return evaluate(population, engine, lexicon, config, pattern_document(pool)), rng


def test_children_duplicating_parents(local_engine, lexicon, solar_pool):
    config = Config(population_size=4)
    pattern = pattern_document(solar_pool)
    parents = Population(queries=[Query(genes=solar_pool[i:i + 3]) for i in (0, 3, 6, 1)])
    parents = evaluate(parents, local_engine, lexicon, config, pattern)
    children = [Query(genes=list(reversed(q.genes))) for q in parents.queries]
    population = next_generation(
        parents, children, local_engine, lexicon, config, solar_pool, pattern, random.Random(0)
    )
    assert population.generation_number == 1
    assert population.loop_number == 1
    assert {q.gene_keys() for q in population.queries} == {q.gene_keys() for q in parents.queries}


def test_underflow_is_filled(local_engine, lexicon, solar_pool):
    config = Config(population_size=5)
    parents = Population(queries=[Query(genes=solar_pool[:3])] * 5)
    parents = evaluate(parents, local_engine, lexicon, config, pattern_document(solar_pool))
    population = next_generation(
        parents, [], local_engine, lexicon, config, solar_pool, pattern_document(solar_pool), random.Random(0)
    )
    assert len(population.queries) == 5
    assert all(q.fitness is not None for q in population.queries)


@pytest.mark.parametrize("seed", range(100))
def test_elitist_survival(local_engine, lexicon, solar_pool, seed):
    config = Config(population_size=4)
    pattern = pattern_document(solar_pool)
    parents, rng = evaluated_parents(config, solar_pool, local_engine, lexicon, seed)
    children = [Query(genes=rng.sample(solar_pool, 3)) for _ in range(4)]
    state = rng.getstate()

    joined = join_and_evaluate(parents, children, local_engine, lexicon, config, solar_pool, pattern, rng)
    rng.setstate(state)
    population = next_generation(parents, children, local_engine, lexicon, config, solar_pool, pattern, rng)

    assert len(population.queries) == config.population_size
    joined_fitness = {q.gene_keys(): q.fitness for q in joined}
    survivors = {q.gene_keys() for q in population.queries}
    dropped = [fit for keys, fit in joined_fitness.items() if keys not in survivors]
    if dropped:
        assert min(joined_fitness[keys] for keys in survivors) >= max(dropped)


@pytest.mark.parametrize("seed", range(5))
def test_survivors_are_scored_as_one_population(local_engine, lexicon, solar_pool, seed):
    config = Config(population_size=4)
    pattern = pattern_document(solar_pool)
    parents, rng = evaluated_parents(config, solar_pool, local_engine, lexicon, seed)
    children = [Query(genes=rng.sample(solar_pool, 3)) for _ in range(4)]
    population = next_generation(parents, children, local_engine, lexicon, config, solar_pool, pattern, rng)

    resources, fitnesses = score_population([q.results for q in population.queries], lexicon, pattern, config)
    assert [q.fitness for q in population.queries] == fitnesses
    assert [r.model_dump() for r in population.resources] == [r.model_dump() for r in resources]
    assert population.sigma_fitness == sigma_fitness(fitnesses)


def make_state(sigma, generation, config):
    population = Population(generation_number=generation, fitness=0.5, sigma_fitness=sigma)
    return RunState(
        config=config, keyword_pool=POOL, current_population=population, rng_state=RngState.capture(random.Random(0))
    )


@pytest.mark.parametrize(
    "sigma, generation, expected",
    [
        (0.0, 0, StopReason.STABILITY),
        (0.5, 10, StopReason.GENERATION_TARGET),
        (0.5, 3, StopReason.RUNNING),
    ],
)
def test_should_stop(sigma, generation, expected):
    config = Config(target_generations=10, sigma_threshold=0.01, max_generations_cap=50)
    assert should_stop(make_state(sigma, generation, config), config) == expected


def test_stop_checks_are_ordered():
    config = Config(target_generations=10, max_generations_cap=10)
    assert should_stop(make_state(0.5, 10, config), config) == StopReason.GENERATION_TARGET
    assert should_stop(make_state(0.0, 10, config), config) == StopReason.STABILITY
    # A target beyond the cap can only come from a hand-built config
    unbounded = Config(target_generations=30, max_generations_cap=12)
    assert should_stop(make_state(0.5, 12, unbounded), unbounded) == StopReason.HARD_CAP


def test_zero_target_stops_after_initial_population(local_engine, lexicon, solar_pool):
    config = Config(target_generations=0, sigma_threshold=0.0)
    state = run(config, lexicon, local_engine, solar_pool)
    assert state.stop_reason == StopReason.GENERATION_TARGET
    assert len(state.history) == 1
    assert state.current_population == state.init_population


def test_constant_population_is_stable(lexicon, solar_pool):
    state = run(Config(), lexicon, ConstantEngine(), solar_pool)
    assert state.stop_reason == StopReason.STABILITY
    assert [row.generation_number for row in state.history] == [0]


def test_engine_failure_ends_in_error(lexicon, solar_pool):
    state = run(Config(), lexicon, BrokenEngine(), solar_pool)
    assert state.stop_reason == StopReason.ERROR
    assert "not a JSON array" in state.error_text
    assert state.current_population is None


def test_step_failure_keeps_population(local_engine, lexicon, solar_pool):
    state = start(Config(sigma_threshold=0.0), lexicon, local_engine, solar_pool)
    before = state.current_population
    rng_before = state.rng_state
    step(state, lexicon, BrokenEngine())
    assert state.stop_reason == StopReason.ERROR
    assert state.current_population is before
    assert state.rng_state == rng_before


def test_run_is_deterministic(local_engine, lexicon, solar_pool):
    config = Config(target_generations=4)
    assert dumps_state(run(config, lexicon, local_engine, solar_pool)) == dumps_state(
        run(config, lexicon, local_engine, solar_pool)
    )


def test_ten_generation_run_is_consistent(local_engine, lexicon, solar_pool):
    config = Config(target_generations=10, sigma_threshold=0.0)
    seen = []
    state = run(config, lexicon, local_engine, solar_pool, on_generation=lambda s: seen.append(s.current_population))

    assert state.stop_reason in TERMINAL_REASONS
    assert len(state.history) <= config.target_generations + 1
    assert [row.generation_number for row in state.history] == list(range(len(state.history)))
    assert len(seen) == len(state.history)
    for row, population in zip(state.history, seen):
        fitnesses = [q.fitness for q in population.queries]
        assert row.fitness == pytest.approx(population_fitness(fitnesses, config.aggregation_mode), abs=1e-12)
        assert row.sigma_fitness == pytest.approx(sigma_fitness(fitnesses), abs=1e-12)
        assert len(population.queries) == config.population_size
        for q in population.queries:
            assert len(q.gene_keys()) == config.genes_per_query
        for resource in population.resources:
            assert resource.fitness_attrs.r == len(resource.appearances) <= config.population_size
    assert len(state.all_resources) <= config.max_results_total
    assert all(row.children == 2 * row.pairs for row in state.history[1:])


def test_gene_provenance(local_engine, lexicon, solar_pool):
    state = run(Config(target_generations=6, synonym_swap_prob=0.5), lexicon, local_engine, solar_pool)
    allowed = {g.lemma_key for g in solar_pool}
    allowed |= {s for key in list(allowed) for s in lexicon.synonyms_of(key)}
    assert set(state.keywords_seen) <= allowed


@pytest.mark.parametrize("seed", range(20))
def test_runs_always_terminate(local_engine, lexicon, solar_pool, seed):
    rng = random.Random(seed)
    cap = rng.randint(1, 20)
    config = Config(
        population_size=rng.randint(2, 5),
        genes_per_query=rng.randint(2, 4),
        target_generations=rng.randint(0, cap),
        max_generations_cap=cap,
        sigma_threshold=rng.choice([0.0, 0.01, 0.05]),
        mutation_prob=rng.random(),
        crossover_type=rng.choice(list(CrossoverType)),
        rng_seed=seed,
    )
    state = run(config, lexicon, local_engine, solar_pool)
    assert state.stop_reason in TERMINAL_REASONS
    assert state.current_population.generation_number <= cap


def top_resources(population, n=10):
    return population.resources[:n]


def mean_s(resources):
    return sum(r.fitness_attrs.s for r in resources) / len(resources)


def on_topic(resources):
    return sum(topic_of(r.location) == "solar" for r in resources) / len(resources)


def pool_query(pool, *keys):
    by_key = {g.lemma_key: g for g in pool}
    return Query(genes=[by_key[k] for k in keys])


def test_overview_pages_cover_the_pool(local_engine, lexicon, solar_pool):
    config = Config(population_size=2)
    population = Population(
        queries=[
            pool_query(solar_pool, "solar", "photovoltaic", "inverter"),
            pool_query(solar_pool, "inverter", "solar", "battery"),
        ]
    )
    population = evaluate(population, local_engine, lexicon, config, pattern_document(solar_pool))
    top = top_resources(population)
    assert on_topic(top) == 1.0
    assert mean_s(top) == pytest.approx(1.0)


def test_shared_words_pull_off_topic_pages(local_engine, lexicon, solar_pool):
    config = Config(population_size=2)
    population = Population(
        queries=[
            pool_query(solar_pool, "energy", "grid", "efficiency"),
            pool_query(solar_pool, "grid", "efficiency", "battery"),
        ]
    )
    population = evaluate(population, local_engine, lexicon, config, pattern_document(solar_pool))
    assert on_topic(top_resources(population)) < 1.0


@pytest.mark.slow
def test_desk_scale_convergence(local_engine, lexicon, solar_pool):
    similarity_wins = 0
    topic_wins = 0
    for seed in range(10):
        config = Config(population_size=8, genes_per_query=3, target_generations=10, rng_seed=seed)
        state = run(config, lexicon, local_engine, solar_pool)
        initial = top_resources(state.init_population)
        final = top_resources(state.current_population)
        similarity_wins += mean_s(final) >= mean_s(initial) - 1e-12
        topic_wins += on_topic(final) >= on_topic(initial)
    assert similarity_wins >= 8
    assert topic_wins >= 8
