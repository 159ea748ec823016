import pytest

from config import Config
from models.automata import Dfa, TreeAutomaton
from models.structures import SiblingOrder
from services.errors import GuardError, InputError, NondeterminismError
from services.formula_parser import parse_formula
from services.structure_service import enumerate_trees, tree_key
from services.text_formats import parse_tree, parse_trees
from services.tree_automata_service import (accepts_unordered, count_leaves, count_threshold_dfa,
                                            courcelle_equivalence_check, determinize, downward_closure,
                                            is_deterministic, is_sibling_invariant, leaf_count_automaton,
                                            nondeterminism_witness, permutation_violations, run, run_counting, synthesize_invariant_type_ta,
                                            to_counting_automaton)
from services.type_service import MSO, TypeRegistry

AB = ("a", "b")


def corpus_trees(corpus_file):
    with open(corpus_file("trees", "small.txt")) as handle:
        return parse_trees(handle.read())


def everything(states, name):
    return Dfa.build(states, ["0"], "0", ["0"], {("0", s): "0" for s in states}, name)


def guessing_automaton():
    states = ("p", "q")
    return TreeAutomaton(("a",), states, frozenset(["p"]),
                         ((("p", "a"), everything(states, "p/a")), (("q", "a"), everything(states, "q/a"))), "guess")


def test_sorted_children_depends_on_child_order(sorted_children):
    assert is_deterministic(sorted_children)
    assert not is_sibling_invariant(sorted_children)
    assert run(sorted_children, parse_tree("a(a, b)")).accepted
    blocked = run(sorted_children, parse_tree("a(b, a)"))
    assert not blocked.accepted
    assert blocked.failure == ()
    assert blocked.state_at((1,)) == "qb"


def test_run_follows_the_given_sibling_order(sorted_children):
    tree = parse_tree("a(b, a)")
    swapped = SiblingOrder((((), ((2,), (1,))),))
    assert run(sorted_children, tree, swapped).accepted


def test_unordered_acceptance_needs_invariance(sorted_children):
    with pytest.raises(InputError) as info:
        accepts_unordered(sorted_children, parse_tree("a"))
    assert info.value.code == "not-invariant"
    with pytest.raises(InputError):
        to_counting_automaton(sorted_children)


def test_leaf_parity_automaton(leaf_even_a, corpus_file):
    assert is_deterministic(leaf_even_a)
    assert is_sibling_invariant(leaf_even_a)
    for tree in corpus_trees(corpus_file) + enumerate_trees(AB, 4):
        assert run(leaf_even_a, tree).accepted == (count_leaves(tree, "a") % 2 == 0), tree_key(tree)
        assert accepts_unordered(leaf_even_a, tree) == run(leaf_even_a, tree).accepted


def test_generated_leaf_counter_matches_corpus_automaton(leaf_even_a):
    generated = leaf_count_automaton(AB, "a")
    for tree in enumerate_trees(AB, 4):
        assert run(generated, tree).accepted == run(leaf_even_a, tree).accepted


def test_leaf_counter_modulo_three():
    automaton = leaf_count_automaton(AB, "a", modulus=3)
    assert is_deterministic(automaton)
    for tree in enumerate_trees(AB, 5):
        assert run(automaton, tree).accepted == (count_leaves(tree, "a") % 3 == 0)


def test_labels_outside_the_alphabet(leaf_even_a):
    with pytest.raises(InputError) as info:
        run(leaf_even_a, parse_tree("a(c)"))
    assert info.value.code == "label-outside"


def test_counting_automaton_agrees_with_the_run(leaf_even_a, corpus_file):
    counting = to_counting_automaton(leaf_even_a)
    assert counting.states == leaf_even_a.states
    assert counting.name == "count(leaf_even_a)"
    for tree in corpus_trees(corpus_file) + enumerate_trees(AB, 4):
        assert run_counting(counting, tree) == run(leaf_even_a, tree).accepted


def test_nondeterministic_runs_use_subsets():
    automaton = guessing_automaton()
    assert not is_deterministic(automaton)
    assert nondeterminism_witness(automaton) == ("p", "q", "a")
    outcome = run(automaton, parse_tree("a(a, a)"))
    assert outcome.accepted
    assert outcome.states == ()


def test_counting_run_rejects_ambiguous_nodes():
    counting = to_counting_automaton(guessing_automaton())
    with pytest.raises(NondeterminismError) as info:
        run_counting(counting, parse_tree("a"))
    assert info.value.diag() == "DIAG nondeterministic node=root candidates=2"


def test_determinize_preserves_acceptance(leaf_even_a):
    det = determinize(leaf_even_a)
    assert len(det.states) == 4
    assert "{c0}" in det.final
    assert is_deterministic(det)
    for tree in enumerate_trees(AB, 4):
        assert run(det, tree).accepted == run(leaf_even_a, tree).accepted


def test_determinize_guessing_automaton():
    det = determinize(guessing_automaton())
    assert is_deterministic(det)
    assert run(det, parse_tree("a(a)")).state_at(()) == "{p,q}"


def test_determinize_state_guard():
    states = tuple(f"q{i}" for i in range(5))
    automaton = TreeAutomaton(("a",), states, frozenset(), ())
    with pytest.raises(GuardError):
        determinize(automaton)


def test_downward_closure():
    assert downward_closure({(1, 2)}, 2) == {(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)}
    assert downward_closure(set(), 3) == {(0, 0, 0)}


def test_count_threshold_dfa():
    states = ("x", "y")
    dfa = count_threshold_dfa(states, {(1, 0)}, downward_closure({(1, 0)}, 2), "t")
    assert dfa.accepts(("x",))
    assert not dfa.accepts(())
    assert not dfa.accepts(("x", "x"))
    assert not dfa.accepts(("y",))


def test_synthesized_automaton_reproduces_its_table():
    result = synthesize_invariant_type_ta(("a",), 1, 3, MSO, registry=TypeRegistry())
    assert result.diagnostics.trees == 4
    assert result.diagnostics.passed
    assert result.diagnostics.lines()[0].startswith("trees=4 ")
    automaton = result.automaton
    assert is_sibling_invariant(automaton)
    for tree in enumerate_trees(("a",), 3):
        assert run(automaton, tree).state_at(()) == result.tree_states[tree_key(tree)]


def test_synthesis_guards():
    with pytest.raises(GuardError):
        synthesize_invariant_type_ta(("a",), 2, 3)
    with pytest.raises(GuardError):
        synthesize_invariant_type_ta(("a", "b", "c"), 1, 3)
    with pytest.raises(GuardError):
        synthesize_invariant_type_ta(("a",), 1, 9)


def test_counting_sentence_against_ordered_sentence():
    even_a = parse_formula("(count 2 x (P_a x))")
    assert courcelle_equivalence_check(even_a, even_a, AB, 3).equivalent
    verdict = courcelle_equivalence_check(even_a, parse_formula("(exists x (P_a x))"), AB, 3)
    assert not verdict.equivalent
    assert verdict.describe() == "differ a cmso=false ordered=true"


def test_order_dependent_sentence_is_refused():
    ordered = parse_formula("(exists x (exists y (and (sib x y) (P_a x) (P_b y))))")
    with pytest.raises(InputError) as info:
        courcelle_equivalence_check(parse_formula("(count 2 x (P_a x))"), ordered, AB, 3)
    assert info.value.code == "not-invariant"


def test_determinize_state_guard_is_configurable():
    automaton = TreeAutomaton(("a",), tuple(f"q{i}" for i in range(5)), frozenset(), ())
    det = determinize(automaton, Config(max_determinize_states=5))
    assert len(det.states) == 32


def test_permutation_violations_catch_order_dependent_horizontals(sorted_children):
    problems = permutation_violations(sorted_children, {("a", ("qa", "qb")): "qa"})
    assert "qa/a not permutation-closed" in problems
    assert "a[qb qa] misses qa" in problems
    assert permutation_violations(sorted_children, {("b", ("qa", "qb")): "qb"}) == ["qa/a not permutation-closed"]


def test_permutation_violations_report_missing_horizontal(leaf_even_a):
    problems = permutation_violations(leaf_even_a, {("a", ()): "absent"})
    assert problems == ["a[] misses absent"]


def test_synthesized_horizontals_accept_every_child_order():
    result = synthesize_invariant_type_ta(AB, 1, 4, MSO, registry=TypeRegistry())
    assert result.diagnostics.permutation_independent
    assert permutation_violations(result.automaton, result.table) == []
