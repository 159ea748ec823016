"""
Logic Service
Quantifier rank, naive evaluation of FO/MSO/CMSO formulas on finite
structures, the order-based divisibility sentences (phi_even and its mod-p
generalisation), counting-quantifier elimination into order-invariant MSO,
and the tree-order macro library (linear order definable from sib).
"""
from __future__ import annotations

import logging
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Set, Tuple, Union

from config import Config, default_config
from models.formulas import (TRUE, And, Const, Count, Defined, Eq, Exists, ExistsSet, Forall, ForallSet,
                             Formula, Implies, In, Lt, Not, Or, Rel, Term, Var)
from models.structures import CHILD, ORDER, SIB, Structure, Vocabulary
from services.errors import InputError, VocabularyError
from services.formula_parser import parse_formula, relation_symbols

logger = logging.getLogger(__name__)

Value = Union[int, FrozenSet[int]]
Assignment = Mapping[str, Value]


# ---------------------- Syntax utilities ----------------------

def quantifier_rank(formula: Formula) -> int:
    """Max nesting of ∃x, ∀x, ∃X, ∀X and Q_p (each one level)."""
    if isinstance(formula, (Rel, Eq, Lt, In)):
        return 0
    if isinstance(formula, Defined):
        return quantifier_rank(formula.body)
    if isinstance(formula, Not):
        return quantifier_rank(formula.body)
    if isinstance(formula, (And, Or)):
        return max((quantifier_rank(p) for p in formula.parts), default=0)
    if isinstance(formula, Implies):
        return max(quantifier_rank(formula.left), quantifier_rank(formula.right))
    return 1 + quantifier_rank(formula.body)


def _term_vars(terms: Iterable[Term]) -> Set[str]:
    return {t.name for t in terms if isinstance(t, Var)}


def free_variables(formula: Formula) -> Tuple[Set[str], Set[str]]:
    """(free element variables, free set variables)."""
    if isinstance(formula, (Rel, Defined)):
        return _term_vars(formula.args), set()
    if isinstance(formula, (Eq, Lt)):
        return _term_vars((formula.left, formula.right)), set()
    if isinstance(formula, In):
        return _term_vars((formula.elem,)), {formula.set_var}
    if isinstance(formula, Not):
        return free_variables(formula.body)
    if isinstance(formula, (And, Or, Implies)):
        parts = formula.parts if not isinstance(formula, Implies) else (formula.left, formula.right)
        elements: Set[str] = set()
        sets: Set[str] = set()
        for part in parts:
            e, s = free_variables(part)
            elements |= e
            sets |= s
        return elements, sets
    elements, sets = free_variables(formula.body)
    if isinstance(formula, (ExistsSet, ForallSet)):
        return elements, sets - {formula.var}
    return elements - {formula.var}, sets


def variable_names(formula: Formula) -> Set[str]:
    """Every variable name occurring (bound or free), used to pick fresh names."""
    names: Set[str] = set()

    def walk(f: Formula) -> None:
        if isinstance(f, (Rel, Defined)):
            names.update(_term_vars(f.args))
            if isinstance(f, Defined):
                walk(f.body)
        elif isinstance(f, (Eq, Lt)):
            names.update(_term_vars((f.left, f.right)))
        elif isinstance(f, In):
            names.update(_term_vars((f.elem,)))
            names.add(f.set_var)
        elif isinstance(f, (And, Or)):
            for part in f.parts:
                walk(part)
        elif isinstance(f, Implies):
            walk(f.left)
            walk(f.right)
        elif isinstance(f, Not):
            walk(f.body)
        else:
            names.add(f.var)
            walk(f.body)

    walk(formula)
    return names


class FreshNames:
    def __init__(self, taken: Iterable[str]):
        self.taken = set(taken)

    def __call__(self, stem: str) -> str:
        index = 0
        while f"{stem}{index}" in self.taken:
            index += 1
        name = f"{stem}{index}"
        self.taken.add(name)
        return name


def substitute(formula: Formula, mapping: Mapping[str, str]) -> Formula:
    """Rename free element variables. Callers pick targets not bound inside formula."""
    def term(t: Term) -> Term:
        return Var(mapping[t.name]) if isinstance(t, Var) and t.name in mapping else t

    if isinstance(formula, Rel):
        return Rel(formula.name, tuple(term(t) for t in formula.args))
    if isinstance(formula, Defined):
        return Defined(formula.name, tuple(term(t) for t in formula.args), formula.params, formula.body)
    if isinstance(formula, Eq):
        return Eq(term(formula.left), term(formula.right))
    if isinstance(formula, Lt):
        return Lt(term(formula.left), term(formula.right))
    if isinstance(formula, In):
        return In(term(formula.elem), formula.set_var)
    if isinstance(formula, Not):
        return Not(substitute(formula.body, mapping))
    if isinstance(formula, And):
        return And(tuple(substitute(p, mapping) for p in formula.parts))
    if isinstance(formula, Or):
        return Or(tuple(substitute(p, mapping) for p in formula.parts))
    if isinstance(formula, Implies):
        return Implies(substitute(formula.left, mapping), substitute(formula.right, mapping))
    inner = {k: v for k, v in mapping.items() if k != formula.var}
    if isinstance(formula, Count):
        return Count(formula.p, formula.var, substitute(formula.body, inner))
    return type(formula)(formula.var, substitute(formula.body, inner))


# ---------------------- Evaluation ----------------------

class Evaluator:
    """Recursive-descent evaluator over one structure. Set variables are bitmasks."""

    def __init__(self, structure: Structure):
        self.structure = structure
        self.relations = {name: tuples for name, tuples in structure.interp}
        self.constants = dict(structure.consts)
        self.all_sets = range(1 << structure.size)
        self.defined: Dict[Tuple[str, Tuple[int, ...]], bool] = {}

    def term(self, t: Term, env: Dict[str, int]) -> int:
        if isinstance(t, Const):
            return self.constants[t.name]
        return env[t.name]

    def holds(self, f: Formula, env: Dict[str, int], sets: Dict[str, int]) -> bool:
        if isinstance(f, Rel):
            return tuple(self.term(t, env) for t in f.args) in self.relations[f.name]
        if isinstance(f, Eq):
            return self.term(f.left, env) == self.term(f.right, env)
        if isinstance(f, Lt):
            return (self.term(f.left, env), self.term(f.right, env)) in self.relations[ORDER]
        if isinstance(f, In):
            return bool(sets[f.set_var] >> self.term(f.elem, env) & 1)
        if isinstance(f, Not):
            return not self.holds(f.body, env, sets)
        if isinstance(f, And):
            return all(self.holds(p, env, sets) for p in f.parts)
        if isinstance(f, Or):
            return any(self.holds(p, env, sets) for p in f.parts)
        if isinstance(f, Implies):
            return not self.holds(f.left, env, sets) or self.holds(f.right, env, sets)
        if isinstance(f, Exists):
            return any(self.holds(f.body, {**env, f.var: a}, sets) for a in self.structure.domain)
        if isinstance(f, Forall):
            return all(self.holds(f.body, {**env, f.var: a}, sets) for a in self.structure.domain)
        if isinstance(f, ExistsSet):
            return any(self.holds(f.body, env, {**sets, f.var: m}) for m in self.all_sets)
        if isinstance(f, ForallSet):
            return all(self.holds(f.body, env, {**sets, f.var: m}) for m in self.all_sets)
        if isinstance(f, Count):
            hits = sum(1 for a in self.structure.domain if self.holds(f.body, {**env, f.var: a}, sets))
            return hits % f.p == 0
        if isinstance(f, Defined):
            values = tuple(self.term(t, env) for t in f.args)
            key = (f.name, values)
            if key not in self.defined:
                self.defined[key] = self.holds(f.body, dict(zip(f.params, values)), {})
            return self.defined[key]
        raise InputError(f"unsupported formula node {type(f).__name__}")


def _to_mask(value: Value, size: int) -> int:
    mask = 0
    for a in value:
        if not 0 <= a < size:
            raise InputError(f"set value {sorted(value)} outside domain", code="assignment-error")
        mask |= 1 << a
    return mask


def check_vocabulary(structure: Structure, formula: Formula) -> None:
    for name, arity in relation_symbols(formula):
        if structure.vocab.arity(name) != arity:
            raise VocabularyError(f"formula uses {name}/{arity}, structure has {structure.vocab.key()}")


def evaluate(structure: Structure, formula: Formula, assignment: Optional[Assignment] = None) -> bool:
    """Classical truth value; Q_p x ψ holds iff the number of ψ-satisfiers is ≡ 0 mod p."""
    assignment = dict(assignment or {})
    check_vocabulary(structure, formula)
    free_elements, free_sets = free_variables(formula)
    env: Dict[str, int] = {}
    sets: Dict[str, int] = {}
    for name in sorted(free_elements):
        if name not in assignment:
            raise InputError(f"unbound free variable {name}", code="unbound-variable")
        value = assignment[name]
        if not isinstance(value, int) or not 0 <= value < structure.size:
            raise InputError(f"value of {name} outside domain", code="assignment-error")
        env[name] = value
    for name in sorted(free_sets):
        if name not in assignment:
            raise InputError(f"unbound free set variable {name}", code="unbound-variable")
        sets[name] = _to_mask(assignment[name], structure.size)
    return Evaluator(structure).holds(formula, env, sets)


# ---------------------- Divisibility sentences ----------------------

def order_divisibility_sentence(p: int, psi: Formula, x: str) -> Formula:
    """
    MSO over σ∪{<}: |{a : ψ(a)}| ≡ 0 mod p on every ordered structure.

    p−1 marker sets slice the ψ-satisfiers by position mod p (residue 0 is the
    rest of the satisfiers); the first satisfier sits in slice 1, <-successive
    satisfiers advance the slice by one, and the last one sits in slice 0.
    Free variables of ψ other than x stay free. When x is not free in ψ the
    satisfiers are all elements or none, whatever else ψ mentions.
    """
    if p < 2:
        raise InputError(f"divisibility sentence needs p >= 2, got {p}", code="invalid-modulus")
    fresh = FreshNames(variable_names(psi) | {x})
    markers = [fresh("X") for _ in range(p - 1)]
    v, w, z = fresh("v"), fresh("w"), fresh("z")

    def sat(var: str) -> Formula:
        return substitute(psi, {x: var})

    def slice_(j: int, var: str) -> Formula:
        if j == 0:
            return And((sat(var),) + tuple(Not(In(Var(var), m)) for m in markers))
        return In(Var(var), markers[j - 1])

    inside = And(tuple(Implies(In(Var(v), m), sat(v)) for m in markers))
    disjoint = And(tuple(Not(And((In(Var(v), markers[i]), In(Var(v), markers[j]))))
                         for i in range(len(markers)) for j in range(i + 1, len(markers))))
    first = Implies(And((sat(v), Not(Exists(w, And((sat(w), Lt(Var(w), Var(v)))))))), slice_(1, v))
    successor = And((sat(v), sat(w), Lt(Var(v), Var(w)),
                     Not(Exists(z, And((sat(z), Lt(Var(v), Var(z)), Lt(Var(z), Var(w))))))))
    step = And(tuple(Implies(slice_(j, v), slice_((j + 1) % p, w)) for j in range(p)))
    last = Implies(And((sat(v), Not(Exists(w, And((sat(w), Lt(Var(v), Var(w)))))))), slice_(0, v))
    body: Formula = And((
        Forall(v, And((inside, disjoint, first, last))),
        Forall(v, Forall(w, Implies(successor, step))),
    ))
    for marker in reversed(markers):
        body = ExistsSet(marker, body)
    return body


def phi_even() -> Formula:
    """Even cardinality of the domain, via an order-based marker set."""
    return order_divisibility_sentence(2, Eq(Var("x"), Var("x")), "x")


DIVISIBILITY_RANK_OFFSET = 2  # qr = p + 2 + qr(ψ)


def expand_counting(formula: Formula) -> Formula:
    """Replace every Q_p x ψ by the order-based divisibility construction (<-invariant MSO)."""
    if isinstance(formula, Count):
        inner = expand_counting(formula.body)
        if formula.p == 1:
            return TRUE
        return order_divisibility_sentence(formula.p, inner, formula.var)
    if isinstance(formula, (Rel, Eq, Lt, In, Defined)):
        return formula
    if isinstance(formula, Not):
        return Not(expand_counting(formula.body))
    if isinstance(formula, And):
        return And(tuple(expand_counting(p) for p in formula.parts))
    if isinstance(formula, Or):
        return Or(tuple(expand_counting(p) for p in formula.parts))
    if isinstance(formula, Implies):
        return Implies(expand_counting(formula.left), expand_counting(formula.right))
    return type(formula)(formula.var, expand_counting(formula.body))


def uses_order(formula: Formula) -> bool:
    return ("<", 2) in relation_symbols(formula)


def uses_sets(formula: Formula) -> bool:
    """Set quantifiers or membership atoms anywhere in the formula."""
    if isinstance(formula, (ExistsSet, ForallSet, In)):
        return True
    if isinstance(formula, (Rel, Eq, Lt)):
        return False
    if isinstance(formula, (And, Or)):
        return any(uses_sets(p) for p in formula.parts)
    if isinstance(formula, Implies):
        return uses_sets(formula.left) or uses_sets(formula.right)
    return uses_sets(formula.body)


# ---------------------- Tree-order macros ----------------------

def tree_macros(edge_semantics: str = "child") -> Dict[str, Tuple[int, object]]:
    """anc_or_self, desc and dfs_lt as defined relations over child/sib."""
    a, b, u, v, S = "ta", "tb", "tu", "tv", "TS"

    if edge_semantics == "descendant":
        anc_body: Formula = Or((Eq(Var(a), Var(b)), Rel(CHILD, (Var(a), Var(b)))))
    else:
        closed = Forall(u, Forall(v, Implies(And((In(Var(u), S), Rel(CHILD, (Var(u), Var(v))))), In(Var(v), S))))
        anc_body = ForallSet(S, Implies(And((In(Var(a), S), closed)), In(Var(b), S)))

    def anc_or_self(args: Tuple[Term, ...]) -> Defined:
        return Defined("anc_or_self", args, (a, b), anc_body)

    def desc(args: Tuple[Term, ...]) -> Defined:
        body = And((Not(Eq(Var(a), Var(b))), anc_or_self((Var(a), Var(b)))))
        return Defined("desc", args, (a, b), body)

    def dfs_lt(args: Tuple[Term, ...]) -> Defined:
        earlier = Exists(u, Exists(v, And((Rel(SIB, (Var(u), Var(v))),
                                              anc_or_self((Var(u), Var(a))),
                                              anc_or_self((Var(v), Var(b)))))))
        return Defined("dfs_lt", args, (a, b), Or((desc((Var(a), Var(b))), earlier)))

    return {"anc_or_self": (2, anc_or_self), "desc": (2, desc), "dfs_lt": (2, dfs_lt)}


def sib_order_formula(formula: Formula, edge_semantics: str = "child") -> Formula:
    """Replace every `lt` atom by the depth-first order defined from child and sib."""
    dfs_lt = tree_macros(edge_semantics)["dfs_lt"][1]
    if isinstance(formula, Lt):
        return dfs_lt((formula.left, formula.right))
    if isinstance(formula, (Rel, Eq, In, Defined)):
        return formula
    if isinstance(formula, Not):
        return Not(sib_order_formula(formula.body, edge_semantics))
    if isinstance(formula, And):
        return And(tuple(sib_order_formula(p, edge_semantics) for p in formula.parts))
    if isinstance(formula, Or):
        return Or(tuple(sib_order_formula(p, edge_semantics) for p in formula.parts))
    if isinstance(formula, Implies):
        return Implies(sib_order_formula(formula.left, edge_semantics),
                       sib_order_formula(formula.right, edge_semantics))
    if isinstance(formula, Count):
        return Count(formula.p, formula.var, sib_order_formula(formula.body, edge_semantics))
    return type(formula)(formula.var, sib_order_formula(formula.body, edge_semantics))


class LogicService:
    def __init__(self, config: Config = default_config):
        self.config = config

    def parse(self, text: str, vocab: Optional[Vocabulary] = None, free: Iterable[str] = (),
              free_sets: Iterable[str] = ()) -> Formula:
        macros = None
        if vocab is not None and vocab.has_relation(CHILD):
            macros = tree_macros(self.config.edge_semantics)
        return parse_formula(text, vocab, free, free_sets, macros)

    def evaluate(self, structure: Structure, formula: Formula, assignment: Optional[Assignment] = None) -> bool:
        result = evaluate(structure, formula, assignment)
        logger.info(f"Evaluated qr={quantifier_rank(formula)} formula on size {structure.size}: {result}")
        return result


logic_service = LogicService()
