"""
Tests for saving, loading and resuming evolution runs
"""
import json

import pytest
from hypothesis import given, settings, strategies as st

from config import Config
from evolve import resume, run, start, step
from exceptions import StateError
from models import StopReason
from persistence import FORMAT_VERSION, dumps_state, load_state, loads_state, save_state


@pytest.fixture(scope="module")
def finished_state(local_engine, lexicon, solar_pool):
    return run(Config(target_generations=4), lexicon, local_engine, solar_pool)


def test_round_trip(tmp_path, finished_state):
    path = tmp_path / "run.gaf"
    save_state(finished_state, path)
    loaded = load_state(path)
    assert loaded == finished_state
    assert loaded.rng_state == finished_state.rng_state


def test_two_saves_are_byte_identical(tmp_path, finished_state):
    save_state(finished_state, tmp_path / "a.gaf")
    save_state(finished_state, tmp_path / "b.gaf")
    assert (tmp_path / "a.gaf").read_bytes() == (tmp_path / "b.gaf").read_bytes()
    assert not [p for p in tmp_path.iterdir() if p.suffix == ".tmp"]


def test_element_names(finished_state):
    document = json.loads(dumps_state(finished_state))
    gaf = document["GAF"]
    for name in ("KeyWords", "Options", "Populations", "InitPopulation", "CurrentPopulation", "StopReason", "ErrorText"):
        assert name in gaf
    assert gaf["FormatVersion"] == FORMAT_VERSION
    assert set(gaf["Options"]) == {
        "OptionsGeneral",
        "OptionsFitnessFunction",
        "OptionsCrossover",
        "OptionsMutation",
        "OptionsStop",
        "OptionsService",
    }
    assert gaf["Options"]["OptionsGeneral"]["population_size"] == 8


@settings(max_examples=100, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2 ** 64 - 1),
    generations=st.integers(min_value=0, max_value=3),
    population_size=st.integers(min_value=2, max_value=5),
)
def test_round_trip_of_random_runs(local_engine, lexicon, solar_pool, seed, generations, population_size):
    config = Config(rng_seed=seed, target_generations=generations, population_size=population_size)
    state = run(config, lexicon, local_engine, solar_pool)
    text = dumps_state(state)
    assert loads_state(text) == state
    assert dumps_state(loads_state(text)) == text


def test_save_to_unwritable_path(tmp_path, finished_state):
    target = tmp_path / "missing-dir" / "run.gaf"
    with pytest.raises(StateError) as info:
        save_state(finished_state, target)
    assert str(target) in str(info.value)


def test_missing_file(tmp_path):
    with pytest.raises(StateError, match="file not found"):
        load_state(tmp_path / "absent.gaf")


def test_truncated_file(tmp_path, finished_state):
    text = dumps_state(finished_state)
    path = tmp_path / "cut.gaf"
    path.write_text(text[: len(text) // 2], encoding="utf-8")
    with pytest.raises(StateError, match="parse error"):
        load_state(path)


def test_version_mismatch(finished_state):
    document = json.loads(dumps_state(finished_state))
    document["GAF"]["FormatVersion"] = FORMAT_VERSION + 1
    with pytest.raises(StateError) as info:
        loads_state(json.dumps(document))
    assert info.value.where == "GAF/FormatVersion"


@pytest.mark.parametrize("text", ['{"GAF": []}', '{"GAF": "run"}', "[]", '{"Other": {}}', "null"])
def test_root_must_hold_a_gaf_object(text):
    with pytest.raises(StateError) as info:
        loads_state(text, path="odd.gaf")
    assert info.value.where == "GAF"
    assert info.value.path == "odd.gaf"


def test_normalizer_survives_save_and_load(tmp_path, local_engine, lexicon, solar_pool):
    state = run(Config(target_generations=1, normalizer="Porter"), lexicon, local_engine, solar_pool)
    path = tmp_path / "porter.gaf"
    save_state(state, path)
    assert load_state(path).config.normalizer.value == "Porter"


def test_invariant_violation_names_the_location(finished_state):
    document = json.loads(dumps_state(finished_state))
    document["GAF"]["CurrentPopulation"]["queries"].pop()
    with pytest.raises(StateError, match="GAF/CurrentPopulation"):
        loads_state(json.dumps(document))


def test_type_error_names_the_location(finished_state):
    document = json.loads(dumps_state(finished_state))
    document["GAF"]["StopReason"] = "Paused"
    with pytest.raises(StateError) as info:
        loads_state(json.dumps(document))
    assert "StopReason" in info.value.where


def test_unknown_option_is_rejected(finished_state):
    document = json.loads(dumps_state(finished_state))
    document["GAF"]["Options"]["OptionsStop"]["e9"] = 1
    with pytest.raises(StateError, match="unknown option 'e9'"):
        loads_state(json.dumps(document))


def test_resume_equivalence(tmp_path, local_engine, lexicon, solar_pool):
    config = Config(target_generations=8, sigma_threshold=0.0)
    straight = run(config, lexicon, local_engine, solar_pool)

    interrupted = start(config, lexicon, local_engine, solar_pool)
    for _ in range(3):
        step(interrupted, lexicon, local_engine)
    assert interrupted.stop_reason == StopReason.RUNNING
    path = tmp_path / "interrupted.gaf"
    save_state(interrupted, path)

    resumed = resume(load_state(path), lexicon, local_engine)
    assert dumps_state(resumed) == dumps_state(straight)


def test_autosave_writes_every_generation(tmp_path, local_engine, lexicon, solar_pool):
    path = tmp_path / "auto.gaf"
    generations = []
    config = Config(target_generations=3, sigma_threshold=0.0, autosave=True, state_path=str(path))
    run(config, lexicon, local_engine, solar_pool, on_generation=lambda s: generations.append(len(load_state(path).history)))
    assert generations == [1, 2, 3, 4]
