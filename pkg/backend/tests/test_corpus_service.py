import pytest

from config import Config
from services.corpus_service import (CheckResult, check_commutativity, check_composition, check_courcelle,
                                     check_even_cardinality, check_flip_battery, check_lex_lemma, check_parikh,
                                     check_sibling_semantics, check_synthesis, check_type_oracle, load_corpus)
from services.errors import InputError


@pytest.fixture(scope="module")
def corpus():
    return load_corpus(Config())


def test_corpus_contents(corpus):
    assert sorted(dfa.name for dfa in corpus.dfas) == ["ab_star", "even_a", "mod_product"]
    assert sorted(ta.name for ta in corpus.tree_automata) == ["leaf_even_a", "sorted_children"]
    assert len(corpus.trees) == 8
    assert sorted(corpus.formulas) == ["count_even.txt", "count_mod3.txt", "has_edge.txt", "min_has_edge.txt",
                                       "phi_even.txt"]
    assert corpus.structure_files == ("graphs.txt", "sets.txt")


def test_missing_corpus_directory(tmp_path):
    with pytest.raises(InputError) as info:
        load_corpus(Config(corpus_dir=str(tmp_path / "absent")))
    assert info.value.code == "file-not-found"


def test_check_result_line():
    assert CheckResult("parikh", True, "dfas=3").line() == "parikh pass dfas=3"
    assert CheckResult("synthesis", False).line() == "synthesis fail"


@pytest.mark.parametrize("check", [check_commutativity, check_even_cardinality, check_synthesis, check_composition,
                                   check_type_oracle, check_flip_battery, check_lex_lemma])
def test_quick_checks_without_corpus(check, config):
    result = check(False, config)
    assert result.passed, result.line()


@pytest.mark.parametrize("check", [check_parikh, check_sibling_semantics, check_courcelle])
def test_quick_checks_over_corpus(check, corpus, config):
    result = check(corpus, False, config)
    assert result.passed, result.line()


def test_flip_battery_compares_shared_components(config):
    result = check_flip_battery(False, config)
    assert result.passed, result.line()
    assert "sentences=6" in result.detail
    assert "violations=0" in result.detail
    shared = int(result.detail.split("shared=")[1].split()[0])
    assert shared > 0


def test_type_oracle_plays_every_class(config):
    result = check_type_oracle(False, config)
    assert result.passed, result.line()
    assert result.detail.startswith("up-to 2 structures=13 ")
    assert "disagreements=0" in result.detail


def test_composition_quick_run_checks_stability(config):
    result = check_composition(False, config)
    assert result.passed, result.line()
    assert result.detail.startswith("tables=3 ")


def test_synthesis_compares_consecutive_bounds(config):
    result = check_synthesis(False, config)
    assert result.passed, result.line()
    assert result.detail.startswith("up-to 3 ")
    assert result.detail.endswith("splits=0")
