"""
FO / MSO / CMSO abstract syntax.

Terms are variables or vocabulary constants; set variables only occur as
the right-hand side of membership atoms and as binders.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str


Term = Union[Var, Const]


class Formula:
    """Marker base for formula nodes."""
    __slots__ = ()


@dataclass(frozen=True)
class Rel(Formula):
    name: str
    args: Tuple[Term, ...]


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class Lt(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class In(Formula):
    elem: Term
    set_var: str


@dataclass(frozen=True)
class Not(Formula):
    body: Formula


@dataclass(frozen=True)
class And(Formula):
    parts: Tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    parts: Tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Forall(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ExistsSet(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class ForallSet(Formula):
    var: str
    body: Formula


@dataclass(frozen=True)
class Count(Formula):
    """Q_p x body: the number of satisfiers is divisible by p."""
    p: int
    var: str
    body: Formula


@dataclass(frozen=True)
class Defined(Formula):
    """Named definable relation; body's free first-order variables are exactly params."""
    name: str
    args: Tuple[Term, ...]
    params: Tuple[str, ...]
    body: Formula


TRUE = And(())
FALSE = Or(())

ELEMENT_QUANTIFIERS = (Exists, Forall, Count)
SET_QUANTIFIERS = (ExistsSet, ForallSet)
QUANTIFIERS = ELEMENT_QUANTIFIERS + SET_QUANTIFIERS
