"""
S-expression reader and printer for formulas.

Grammar: (and ...) (or ...) (not f) (implies f g) (exists x f) (forall x f)
(existsS X f) (forallS X f) (count p x f) (= x y) (lt x y) (in x X) (R x y ...)
Bound variables are alpha-renamed so no binder shadows another name.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Set, Tuple, Union

from models.formulas import (And, Const, Count, Defined, Eq, Exists, ExistsSet, Forall, ForallSet, Formula,
                             Implies, In, Lt, Not, Or, Rel, Term, Var)
from models.structures import Vocabulary
from services.errors import InputError, ParseError, VocabularyError

_TOKEN = re.compile(r"\s*(?:(;[^\n]*)|(\()|(\))|([^\s()]+))")

MacroFactory = Callable[[Tuple[Term, ...]], Defined]


@dataclass
class _Node:
    value: Union[str, List["_Node"]]
    line: int
    column: int

    @property
    def is_list(self) -> bool:
        return isinstance(self.value, list)


def _position(text: str, offset: int) -> Tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    column = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, column


def read_sexpr(text: str) -> _Node:
    """Read exactly one s-expression (comments start with ';' or '#')."""
    text = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
    stack: List[_Node] = []
    root: Optional[_Node] = None
    offset = 0
    while offset < len(text):
        match = _TOKEN.match(text, offset)
        if not match or match.end() == offset:
            break
        start = match.start(match.lastindex) if match.lastindex else match.end()
        line, column = _position(text, start)
        offset = match.end()
        comment, open_paren, close_paren, atom = match.groups()
        if comment:
            continue
        if root is not None:
            raise ParseError("trailing input after formula", line, column)
        if open_paren:
            stack.append(_Node([], line, column))
        elif close_paren:
            if not stack:
                raise ParseError("unbalanced ')'", line, column)
            node = stack.pop()
            if stack:
                stack[-1].value.append(node)
            else:
                root = node
        elif atom:
            node = _Node(atom, line, column)
            if stack:
                stack[-1].value.append(node)
            else:
                root = node
    if stack:
        raise ParseError("unbalanced '('", stack[-1].line, stack[-1].column)
    if root is None:
        raise ParseError("empty input", 1, 1)
    return root


class _Scope:
    def __init__(self, constants: Iterable[str]):
        self.constants = set(constants)
        self.elements: Dict[str, str] = {}
        self.sets: Dict[str, str] = {}
        self.used: Set[str] = set(self.constants)

    def fresh(self, name: str) -> str:
        if name not in self.used:
            self.used.add(name)
            return name
        index = 1
        while f"{name}_{index}" in self.used:
            index += 1
        renamed = f"{name}_{index}"
        self.used.add(renamed)
        return renamed


class FormulaParser:
    BINARY_FORMS = {"exists": Exists, "forall": Forall, "existsS": ExistsSet, "forallS": ForallSet}

    def __init__(self, vocab: Optional[Vocabulary] = None, free: Iterable[str] = (),
                 free_sets: Iterable[str] = (), macros: Optional[Mapping[str, Tuple[int, MacroFactory]]] = None):
        self.vocab = vocab
        self.macros = dict(macros or {})
        self.scope = _Scope(vocab.constants if vocab else ())
        for name in free:
            self.scope.elements[name] = name
            self.scope.used.add(name)
        for name in free_sets:
            self.scope.sets[name] = name
            self.scope.used.add(name)

    def parse(self, text: str) -> Formula:
        return self._formula(read_sexpr(text))

    # ---------------------- helpers ----------------------

    def _term(self, node: _Node) -> Term:
        if node.is_list:
            raise ParseError("expected a variable or constant", node.line, node.column)
        name = node.value
        if name in self.scope.elements:
            return Var(self.scope.elements[name])
        if name in self.scope.constants:
            return Const(name)
        if name in self.scope.sets:
            raise ParseError(f"set variable {name} used as an element", node.line, node.column)
        raise InputError(f"unbound variable {name} at {node.line}:{node.column}", code="unbound-variable")

    def _bind(self, table: Dict[str, str], name_node: _Node, body: _Node) -> Tuple[str, Formula]:
        if name_node.is_list:
            raise ParseError("expected a variable name", name_node.line, name_node.column)
        name = name_node.value
        saved = (dict(self.scope.elements), dict(self.scope.sets))
        renamed = self.scope.fresh(name)
        self.scope.elements.pop(name, None)
        self.scope.sets.pop(name, None)
        table[name] = renamed
        try:
            return renamed, self._formula(body)
        finally:
            self.scope.elements, self.scope.sets = saved

    def _formula(self, node: _Node) -> Formula:
        if not node.is_list:
            if node.value == "true":
                return And(())
            if node.value == "false":
                return Or(())
            raise ParseError(f"expected '(' but found {node.value}", node.line, node.column)
        items = node.value
        if not items or items[0].is_list:
            raise ParseError("expected an operator", node.line, node.column)
        head, args = items[0].value, items[1:]

        def arity(expected: int) -> None:
            if len(args) != expected:
                raise ParseError(f"{head} expects {expected} argument(s), got {len(args)}", node.line, node.column)

        if head == "and":
            return And(tuple(self._formula(a) for a in args))
        if head == "or":
            return Or(tuple(self._formula(a) for a in args))
        if head == "not":
            arity(1)
            return Not(self._formula(args[0]))
        if head == "implies":
            arity(2)
            return Implies(self._formula(args[0]), self._formula(args[1]))
        if head in ("exists", "forall"):
            arity(2)
            var, body = self._bind(self.scope.elements, args[0], args[1])
            return self.BINARY_FORMS[head](var, body)
        if head in ("existsS", "forallS"):
            arity(2)
            var, body = self._bind(self.scope.sets, args[0], args[1])
            return self.BINARY_FORMS[head](var, body)
        if head == "count":
            arity(3)
            if args[0].is_list or not args[0].value.isdigit() or int(args[0].value) < 1:
                raise ParseError("count expects a modulus p >= 1", args[0].line, args[0].column)
            var, body = self._bind(self.scope.elements, args[1], args[2])
            return Count(int(args[0].value), var, body)
        if head == "=":
            arity(2)
            return Eq(self._term(args[0]), self._term(args[1]))
        if head == "lt":
            arity(2)
            return Lt(self._term(args[0]), self._term(args[1]))
        if head == "in":
            arity(2)
            set_node = args[1]
            if set_node.is_list or set_node.value not in self.scope.sets:
                raise InputError(f"unbound set variable at {set_node.line}:{set_node.column}",
                                 code="unbound-variable")
            return In(self._term(args[0]), self.scope.sets[set_node.value])
        if head in self.macros:
            expected, factory = self.macros[head]
            arity(expected)
            return factory(tuple(self._term(a) for a in args))
        return self._relation(head, args, node)

    def _relation(self, head: str, args: List[_Node], node: _Node) -> Formula:
        if self.vocab is not None:
            expected = self.vocab.arity(head)
            if expected is None:
                raise InputError(f"unknown symbol {head} at {node.line}:{node.column}", code="unknown-symbol")
            if expected != len(args):
                raise InputError(f"arity mismatch for {head}: expected {expected}, got {len(args)} "
                                 f"at {node.line}:{node.column}", code="arity-mismatch")
        return Rel(head, tuple(self._term(a) for a in args))


def parse_formula(text: str, vocab: Optional[Vocabulary] = None, free: Iterable[str] = (),
                  free_sets: Iterable[str] = (), macros=None) -> Formula:
    return FormulaParser(vocab, free, free_sets, macros).parse(text)


# ---------------------- printing ----------------------

def _term_text(term: Term) -> str:
    return term.name


def to_sexpr(formula: Formula) -> str:
    if isinstance(formula, Rel):
        return f"({' '.join([formula.name] + [_term_text(t) for t in formula.args])})"
    if isinstance(formula, Eq):
        return f"(= {_term_text(formula.left)} {_term_text(formula.right)})"
    if isinstance(formula, Lt):
        return f"(lt {_term_text(formula.left)} {_term_text(formula.right)})"
    if isinstance(formula, In):
        return f"(in {_term_text(formula.elem)} {formula.set_var})"
    if isinstance(formula, Not):
        return f"(not {to_sexpr(formula.body)})"
    if isinstance(formula, And):
        return "(and" + "".join(" " + to_sexpr(p) for p in formula.parts) + ")"
    if isinstance(formula, Or):
        return "(or" + "".join(" " + to_sexpr(p) for p in formula.parts) + ")"
    if isinstance(formula, Implies):
        return f"(implies {to_sexpr(formula.left)} {to_sexpr(formula.right)})"
    if isinstance(formula, Count):
        return f"(count {formula.p} {formula.var} {to_sexpr(formula.body)})"
    if isinstance(formula, Defined):
        return f"({' '.join([formula.name] + [_term_text(t) for t in formula.args])})"
    keyword = {Exists: "exists", Forall: "forall", ExistsSet: "existsS", ForallSet: "forallS"}[type(formula)]
    return f"({keyword} {formula.var} {to_sexpr(formula.body)})"


def relation_symbols(formula: Formula) -> Set[Tuple[str, int]]:
    """(name, arity) of every relation atom, including those inside defined relations."""
    found: Set[Tuple[str, int]] = set()

    def walk(f: Formula) -> None:
        if isinstance(f, Rel):
            found.add((f.name, len(f.args)))
        elif isinstance(f, Lt):
            found.add(("<", 2))
        elif isinstance(f, Defined):
            walk(f.body)
        elif isinstance(f, (Not, Exists, Forall, ExistsSet, ForallSet, Count)):
            walk(f.body)
        elif isinstance(f, (And, Or)):
            for part in f.parts:
                walk(part)
        elif isinstance(f, Implies):
            walk(f.left)
            walk(f.right)

    walk(formula)
    return found
