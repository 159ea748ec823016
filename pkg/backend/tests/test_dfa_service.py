import random

import pytest

from config import Config
from models.automata import Dfa, Progression
from services.dfa_service import (DfaService, commutativity_counterexample, dfa_service, equivalent,
                                  is_commutative, is_empty, minimize, modular_count_dfa, parikh_decompose,
                                  parikh_vector, permutation_closed_upto, product, random_commutative_dfa, random_dfa,
                                  shortest_accepted, unary_semilinear, witness_text, words)
from services.errors import GuardError, NotCommutativeError


def test_ab_star_is_not_commutative(corpus_dfas):
    dfa = corpus_dfas["ab_star"]
    assert not is_commutative(dfa)
    assert witness_text(dfa) == "ab/ba"
    assert commutativity_counterexample(dfa) == (("a", "b"), ("b", "a"))
    assert not permutation_closed_upto(dfa, 3)


def test_modular_languages_are_commutative(corpus_dfas):
    for name in ("even_a", "mod_product"):
        assert is_commutative(corpus_dfas[name])
        assert witness_text(corpus_dfas[name]) == ""
        assert commutativity_counterexample(corpus_dfas[name]) is None


def test_parikh_decomposition_of_even_a(corpus_dfas):
    semilinear = parikh_decompose(corpus_dfas["even_a"])
    assert str(semilinear) == "{(S[0,2], S[0,1])}"
    assert (4, 7) in semilinear
    assert (3, 0) not in semilinear


def test_parikh_decomposition_matches_acceptance(corpus_dfas):
    dfa = corpus_dfas["mod_product"]
    semilinear = parikh_decompose(dfa, require_commutativity=True)
    for word in words(dfa.alphabet, 6):
        assert (parikh_vector(word, dfa.alphabet) in semilinear) == dfa.accepts(word)


def test_decomposition_can_demand_commutativity(corpus_dfas):
    with pytest.raises(NotCommutativeError) as info:
        parikh_decompose(corpus_dfas["ab_star"], require_commutativity=True)
    assert info.value.diag() == "DIAG not-commutative witness=ab/ba"


def test_parikh_alphabet_guard():
    dfa = modular_count_dfa(["a", "b", "c", "d", "e"], {"a": (0, 2)})
    with pytest.raises(GuardError):
        parikh_decompose(dfa)


def test_minimize_merges_equivalent_states(corpus_dfas):
    padded = Dfa.build(["a"], ["p", "q", "r", "s"], "p", ["p", "r"],
                       {("p", "a"): "q", ("q", "a"): "r", ("r", "a"): "s", ("s", "a"): "p"})
    minimal = minimize(padded)
    assert minimal.states == ("0", "1")
    assert equivalent(padded, minimal)
    assert len(minimize(corpus_dfas["mod_product"]).states) == 6


def test_unary_lasso():
    dfa = Dfa.build(["a"], ["0", "1", "2", "3"], "0", ["1", "3"],
                    {("0", "a"): "1", ("1", "a"): "2", ("2", "a"): "3", ("3", "a"): "2"})
    assert unary_semilinear(dfa) == (Progression(1, 0), Progression(3, 2))


def test_product_and_emptiness(corpus_dfas):
    even_a = corpus_dfas["even_a"]
    assert is_empty(product(even_a, even_a, "diff"))
    assert not is_empty(product(even_a, corpus_dfas["ab_star"], "and"))
    assert shortest_accepted(corpus_dfas["ab_star"]) == ()
    assert shortest_accepted(corpus_dfas["mod_product"]) == ("b",)


def test_random_commutative_machines_are_commutative():
    rng = random.Random(3)
    for _ in range(10):
        dfa = random_commutative_dfa(("a", "b"), rng)
        assert is_commutative(dfa)
        assert permutation_closed_upto(dfa, 5)


def test_decision_agrees_with_brute_force():
    rng = random.Random(0)
    for i in range(25):
        dfa = random_dfa(("a", "b"), rng.randint(1, 3), rng, f"R{i}")
        horizon = max(2 * len(minimize(dfa).states) - 1, 2)
        assert is_commutative(dfa) == permutation_closed_upto(dfa, horizon)


def test_service_decompose(corpus_dfas):
    assert len(dfa_service.decompose(corpus_dfas["even_a"])) == 1
    assert dfa_service.is_commutative(corpus_dfas["mod_product"])


def test_service_commutativity_guard_is_configurable(corpus_dfas):
    with pytest.raises(GuardError) as info:
        DfaService(Config(max_commutativity_states=5)).is_commutative(corpus_dfas["mod_product"])
    assert info.value.diag() == "DIAG guard-exceeded dfa-states=6 cap=5"
    assert DfaService(Config(max_commutativity_states=6)).is_commutative(corpus_dfas["mod_product"])
