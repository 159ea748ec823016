import pytest

from models.formulas import Count, Eq, Var
from models.structures import LinearOrder, SiblingOrder, Structure, Vocabulary
from services.errors import InputError, VocabularyError
from services.formula_parser import parse_formula
from services.logic_service import (evaluate, expand_counting, free_variables, logic_service,
                                    order_divisibility_sentence, phi_even, quantifier_rank, sib_order_formula,
                                    uses_order)
from services.structure_service import dfs_order, node_index, tree_to_structure, tree_vocabulary, with_order
from services.text_formats import parse_tree
from tests.conftest import graph, pure_set

UNARY = Vocabulary.create([("P", 1)])


def ordered(structure):
    return with_order(structure, LinearOrder.natural(structure.size))


def test_quantifier_rank_of_divisibility_sentences():
    assert quantifier_rank(phi_even()) == 4
    assert quantifier_rank(expand_counting(Count(3, "x", Eq(Var("x"), Var("x"))))) == 5
    assert quantifier_rank(parse_formula("(and (exists x (= x x)) (count 2 y (exists z (= y z))))")) == 2


def test_phi_even_decides_parity_on_ordered_sets():
    for n in range(7):
        assert evaluate(ordered(pure_set(n)), phi_even()) == (n % 2 == 0)


def test_phi_even_needs_an_order():
    with pytest.raises(VocabularyError):
        evaluate(pure_set(2), phi_even())


def test_counting_quantifier_semantics():
    q2 = Count(2, "x", Eq(Var("x"), Var("x")))
    assert evaluate(pure_set(4), q2)
    assert not evaluate(pure_set(3), q2)
    assert evaluate(pure_set(0), q2)


def test_expanded_counting_matches_counting_quantifier():
    counting = parse_formula("(count 2 x (P x))", UNARY)
    expanded = expand_counting(counting)
    assert not uses_order(counting)
    assert uses_order(expanded)
    for marked in [set(), {0}, {0, 2}, {0, 1, 2}]:
        structure = Structure.build(UNARY, 3, {"P": [(a,) for a in marked]})
        assert evaluate(ordered(structure), expanded) == evaluate(structure, counting)


def test_divisibility_sentence_keeps_parameters_free():
    psi = parse_formula("(E x y)", Vocabulary.create([("E", 2)]), free=["x", "y"])
    sentence = order_divisibility_sentence(2, psi, "x")
    assert free_variables(sentence) == ({"y"}, set())
    star = graph(3, [(0, 2), (1, 2)])
    assert evaluate(ordered(star), sentence, {"y": 2})
    assert not evaluate(ordered(graph(3, [(0, 2)])), sentence, {"y": 2})


def test_divisibility_over_a_formula_without_the_counted_variable():
    psi = parse_formula("(E y y)", Vocabulary.create([("E", 2)]), free=["y"])
    sentence = order_divisibility_sentence(2, psi, "x")
    assert free_variables(sentence) == ({"y"}, set())
    looped = graph(3, [(1, 1)])
    assert not evaluate(ordered(looped), sentence, {"y": 1})
    assert evaluate(ordered(looped), sentence, {"y": 0})
    assert evaluate(ordered(graph(2, [(1, 1)])), sentence, {"y": 1})


def test_divisibility_needs_modulus_two_or_more():
    with pytest.raises(InputError):
        order_divisibility_sentence(1, Eq(Var("x"), Var("x")), "x")


def test_evaluation_with_assignment():
    path = graph(3, [(0, 1), (1, 2)])
    edge = parse_formula("(E x y)", path.vocab, free=["x", "y"])
    assert evaluate(path, edge, {"x": 0, "y": 1})
    assert not evaluate(path, edge, {"x": 1, "y": 0})
    member = parse_formula("(exists x (in x X))", path.vocab, free_sets=["X"])
    assert evaluate(path, member, {"X": frozenset({2})})
    assert not evaluate(path, member, {"X": frozenset()})


def test_missing_assignment_is_an_input_error():
    path = graph(2, [(0, 1)])
    with pytest.raises(InputError) as info:
        evaluate(path, parse_formula("(E x x)", path.vocab, free=["x"]))
    assert info.value.code == "unbound-variable"


def test_vocabulary_mismatch():
    with pytest.raises(VocabularyError):
        evaluate(pure_set(1), parse_formula("(exists x (E x x))", Vocabulary.create([("E", 2)])))


def test_dfs_macro_defines_preorder():
    tree = parse_tree("a(b, a(b, a))")
    order = SiblingOrder.text_order(tree)
    structure = tree_to_structure(tree, order)
    formula = logic_service.parse("(dfs_lt x y)", tree_vocabulary(("a", "b"), ordered=True), free=["x", "y"])
    position = dfs_order(tree, order).positions()
    nodes = list(node_index(tree).values())
    for x in nodes:
        for y in nodes:
            assert evaluate(structure, formula, {"x": x, "y": y}) == (position[x] < position[y])


def test_sib_ordered_parity_sentence_on_trees():
    sentence = sib_order_formula(phi_even())
    assert not uses_order(sentence)
    for text, even in [("a", False), ("a(b)", True), ("a(b, a)", False), ("a(b(a), a)", True)]:
        tree = parse_tree(text)
        structure = tree_to_structure(tree, SiblingOrder.text_order(tree), ("a", "b"))
        assert evaluate(structure, sentence) == even
