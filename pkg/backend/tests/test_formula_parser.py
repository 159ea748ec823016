import pytest

from models.formulas import Count, Eq, Exists, ExistsSet, In, Lt, Rel, Var
from models.structures import Vocabulary
from services.errors import InputError, ParseError
from services.formula_parser import parse_formula, read_sexpr, relation_symbols, to_sexpr

EDGE = Vocabulary.create([("E", 2)])


def test_parses_quantifiers_and_atoms():
    formula = parse_formula("(exists x (E x y))", EDGE, free=["y"])
    assert formula == Exists("x", Rel("E", (Var("x"), Var("y"))))


def test_shadowed_binders_are_renamed():
    formula = parse_formula("(exists x (exists x (E x x)))", EDGE)
    assert formula == Exists("x", Exists("x_1", Rel("E", (Var("x_1"), Var("x_1")))))


def test_set_quantifier_and_membership():
    formula = parse_formula("(existsS X (exists x (in x X)))")
    assert formula == ExistsSet("X", Exists("x", In(Var("x"), "X")))


def test_counting_quantifier():
    assert parse_formula("(count 3 x (= x x))") == Count(3, "x", Eq(Var("x"), Var("x")))
    with pytest.raises(ParseError):
        parse_formula("(count 0 x (= x x))")


def test_order_atom():
    formula = parse_formula("(lt x y)", free=["x", "y"])
    assert formula == Lt(Var("x"), Var("y"))
    assert relation_symbols(formula) == {("<", 2)}


def test_comments_are_skipped():
    text = "; reflexive\n(= x x) # trailing\n"
    assert parse_formula(text, free=["x"]) == Eq(Var("x"), Var("x"))


@pytest.mark.parametrize("text, code", [
    ("(R x)", "unknown-symbol"),
    ("(E x)", "arity-mismatch"),
    ("(E x y)", "unbound-variable"),
])
def test_vocabulary_errors(text, code):
    with pytest.raises(InputError) as info:
        parse_formula(text, EDGE, free=["x"])
    assert info.value.code == code


def test_unbalanced_input_reports_position():
    with pytest.raises(ParseError) as info:
        read_sexpr("(exists x\n  (E x x)")
    assert (info.value.line, info.value.column) == (1, 1)
    assert info.value.diag() == "DIAG parse-error at 1:1 unbalanced '('"


def test_trailing_input_is_rejected():
    with pytest.raises(ParseError) as info:
        read_sexpr("(= x x) (= y y)")
    assert info.value.column == 9


def test_printed_formula_parses_back():
    text = "(forall x (implies (E x x) (not (exists y (and (E x y) (in y X))))))"
    formula = parse_formula(text, EDGE, free_sets=["X"])
    assert to_sexpr(formula) == text
    assert parse_formula(to_sexpr(formula), EDGE, free_sets=["X"]) == formula
