import pytest

from models.automata import Progression
from services.errors import InputError, ParseError
from services.text_formats import (dump_counting_automaton, dump_structure, dump_tree, dump_tree_automaton,
                                   parse_alphabet, parse_counting_automaton, parse_dfa, parse_semilinear,
                                   parse_structure, parse_structures, parse_tree, parse_tree_automata,
                                   parse_tree_automaton, parse_vocabulary)
from services.tree_automata_service import to_counting_automaton


def test_corpus_structures(corpus_file):
    with open(corpus_file("structures", "graphs.txt")) as handle:
        found = parse_structures(handle.read())
    assert [s.name for s, _ in found] == ["path3", "cycle3", "loop1", "empty2"]
    assert found[1][0].relation("E") == {(0, 1), (1, 2), (2, 0)}
    assert found[3][0].relation("E") == frozenset()


def test_order_annotation(corpus_file):
    with open(corpus_file("structures", "sets.txt")) as handle:
        found = dict((s.name, order) for s, order in parse_structures(handle.read()))
    assert found["set3"].perm == (2, 0, 1)
    assert found["set2"] is None


def test_structure_dump_parses_back():
    text = "structure G\ndomain 3\nrel E/2: (0,1) (2,2)\nrel P/1: (1)\norder: 1 2 0\nend\n"
    structure, order = parse_structure(text)
    assert dump_structure(structure, order) == text


def test_structure_errors_carry_positions():
    with pytest.raises(ParseError) as info:
        parse_structure("structure A\ndomain x\nend\n")
    assert info.value.diag() == "DIAG parse-error at 2:8 expected an integer, found 'x'"
    with pytest.raises(ParseError):
        parse_structure("structure A\ndomain 2\n")
    with pytest.raises(ParseError):
        parse_structure("structure A\ndomain 2\nrel E/2: (0,1,1)\nend\n")
    with pytest.raises(InputError):
        parse_structure("structure A\ndomain 2\nrel E/2: (0,5)\nend\n")


def test_trees():
    tree = parse_tree("a(b, c(a))")
    assert len(tree) == 4
    assert dump_tree(tree) == "a(b, c(a))"
    with pytest.raises(ParseError):
        parse_tree("a(b")
    with pytest.raises(ParseError):
        parse_tree("a(b) c")


def test_dfa_block_needs_initial_state():
    with pytest.raises(ParseError):
        parse_dfa("dfa M\nalphabet a\nstates 0\ntrans 0 a 0\nend\n")


def test_partial_dfa_is_invalid():
    with pytest.raises(InputError) as info:
        parse_dfa("dfa M\nalphabet a b\nstates 0\ninitial 0\ntrans 0 a 0\nend\n")
    assert info.value.code == "invalid-dfa"


def test_corpus_tree_automata(corpus_file):
    with open(corpus_file("tree_automata", "leaf_even_a.txt")) as handle:
        automata = parse_tree_automata(handle.read())
    assert len(automata) == 1
    automaton = automata[0]
    assert automaton.states == ("c0", "c1")
    assert automaton.final == {"c0"}
    assert len(automaton.delta) == 4
    assert parse_tree_automaton(dump_tree_automaton(automaton)) == automaton


def test_semilinear_text():
    semilinear = parse_semilinear("{(S[0,2], S[1,0]) (S[3,0], S[0,1])}")
    assert semilinear.arity == 2
    assert (2, 1) in semilinear
    assert (3, 9) in semilinear
    assert (1, 1) not in semilinear
    assert (Progression(0, 2), Progression(1, 0)) in semilinear.tuples
    with pytest.raises(ParseError):
        parse_semilinear("(S[0,2])")


def test_counting_automaton_text(leaf_even_a):
    counting = to_counting_automaton(leaf_even_a)
    text = dump_counting_automaton(counting)
    assert text.startswith("counting count(leaf_even_a)\n")
    assert parse_counting_automaton(text) == counting


def test_vocabulary_text():
    vocab = parse_vocabulary("E/2, P/1; c")
    assert vocab.relations == (("E", 2), ("P", 1))
    assert vocab.constants == ("c",)
    assert parse_vocabulary("").relations == ()
    with pytest.raises(ParseError):
        parse_vocabulary("E")
    with pytest.raises(InputError) as info:
        parse_vocabulary("P_left/1")
    assert info.value.code == "vocabulary-error"


def test_alphabet_text():
    assert parse_alphabet("b,a,b") == ("a", "b")
    with pytest.raises(InputError):
        parse_alphabet(" , ")
