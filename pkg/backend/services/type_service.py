"""
Type Service
Canonical rank-k FO/MSO types by Hintikka recursion, hash-consed in a
TypeRegistry, plus an independent Ehrenfeucht-Fraisse game solver used as
the correctness oracle.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from config import Config, default_config
from models.formulas import And, Const, Eq, Exists, Forall, Formula, Not, Or, Rel, Term, Var
from models.structures import ORDER, Structure, Vocabulary
from services.errors import InputError, VocabularyError, check_guard
from services.structure_service import enumerate_structures, permute

logger = logging.getLogger(__name__)

FO = "FO"
MSO = "MSO"
LOGICS = (FO, MSO)

Diagram = Tuple
TypeKey = Tuple


@dataclass(frozen=True)
class TypeId:
    logic: str
    rank: int
    vocab: str
    profile: Tuple[int, int]
    index: int

    def __str__(self) -> str:
        return f"{self.logic}/{self.rank}#{self.index}"


class TypeRegistry:
    """
    Append-only interning table from canonical type trees to integer ids.

    The per-structure recursion memo is least-recently-used and holds at most
    `memo_structures` structures; interned types are never evicted.
    """

    def __init__(self, memo_structures: int = default_config.type_memo_structures):
        self._lock = threading.Lock()
        self._table: Dict[TypeKey, int] = {}
        self._entries: List[TypeKey] = []
        self._vocabularies: Dict[str, Vocabulary] = {}
        self._serial: Dict[int, str] = {}
        self.memo_structures = memo_structures
        # per canonical structure: (pins, sets, k) -> index
        self._memo: "OrderedDict[Tuple[str, Structure], Dict[Tuple, int]]" = OrderedDict()

    def __len__(self) -> int:
        return len(self._entries)

    def memo_for(self, logic: str, structure: Structure) -> Dict[Tuple, int]:
        key = (logic, structure)
        with self._lock:
            found = self._memo.get(key)
            if found is None:
                found = self._memo[key] = {}
                while len(self._memo) > self.memo_structures:
                    self._memo.popitem(last=False)
            else:
                self._memo.move_to_end(key)
            return found

    def memo_size(self) -> int:
        return len(self._memo)

    def intern(self, key: TypeKey) -> int:
        found = self._table.get(key)
        if found is not None:
            return found
        with self._lock:
            found = self._table.get(key)
            if found is None:
                found = len(self._entries)
                self._entries.append(key)
                self._table[key] = found
            return found

    def entry(self, index: int) -> TypeKey:
        return self._entries[index]

    def remember_vocabulary(self, vocab: Vocabulary) -> None:
        self._vocabularies.setdefault(vocab.key(), vocab)

    def vocabulary(self, key: str) -> Vocabulary:
        return self._vocabularies[key]

    def serialize(self, index: int) -> str:
        """Deterministic nested-parenthesis text of a canonical type tree."""
        cached = self._serial.get(index)
        if cached is not None:
            return cached
        logic, rank, vocab, profile, diag, elements, sets = self._entries[index]
        parts = [f"{logic} {rank} {vocab} {profile[0]}.{profile[1]} {_diag_text(diag)}"]
        if rank > 0:
            parts.append("[" + " ".join(sorted(self.serialize(c) for c in elements)) + "]")
            if logic == MSO:
                parts.append("[" + " ".join(sorted(self.serialize(c) for c in sets)) + "]")
        text = "(" + " ".join(parts) + ")"
        self._serial[index] = text
        return text

    def type_id(self, index: int) -> TypeId:
        logic, rank, vocab, profile, *_ = self._entries[index]
        return TypeId(logic, rank, vocab, profile, index)


def _diag_text(diag: Diagram) -> str:
    classes, relations, members = diag
    rels = ";".join(f"{name}:{','.join(''.join(map(str, t)) for t in sorted(tuples))}"
                    for name, tuples in relations)
    mem = ";".join("".join(map(str, row)) for row in members)
    return f"<{''.join(map(str, classes))}|{rels}|{mem}>"


def type_hash(registry: TypeRegistry, type_id: TypeId) -> str:
    return hashlib.sha1(registry.serialize(type_id.index).encode()).hexdigest()[:12]


default_registry = TypeRegistry()


# ---------------------- Hintikka recursion ----------------------

def _order_positions(structure: Structure) -> Optional[List[int]]:
    """Rank of every element when `<` is a strict linear order, else None."""
    if not structure.vocab.has_relation(ORDER):
        return None
    order = structure.relation(ORDER)
    n = structure.size
    if len(order) != n * (n - 1) // 2:
        return None
    below = [0] * n
    for _, b in order:
        below[b] += 1
    if sorted(below) != list(range(n)):
        return None
    for a, b in order:
        if below[a] >= below[b]:
            return None
    return below


class _TypeComputation:
    def __init__(self, structure: Structure, logic: str, registry: TypeRegistry):
        self.structure = structure
        self.logic = logic
        self.registry = registry
        self.vocab_key = structure.vocab.key()
        self.relations = [(name, arity, tuples) for (name, tuples), (_, arity)
                          in zip(structure.interp, structure.vocab.relations)]
        self.constants = tuple(v for _, v in structure.consts)
        self.all_sets = range(1 << structure.size) if logic == MSO else range(0)
        self.memo = registry.memo_for(logic, structure)

    def diagram(self, pins: Tuple[int, ...], sets: Tuple[int, ...]) -> Diagram:
        terms = self.constants + pins
        seen: Dict[int, int] = {}
        classes = tuple(seen.setdefault(t, len(seen)) for t in terms)
        relations = []
        for name, arity, tuples in self.relations:
            hits = frozenset(
                idx for idx in itertools.product(range(len(terms)), repeat=arity)
                if tuple(terms[i] for i in idx) in tuples
            )
            relations.append((name, hits))
        members = tuple(tuple(m >> t & 1 for t in terms) for m in sets)
        return classes, tuple(relations), members

    def type_of(self, pins: Tuple[int, ...], sets: Tuple[int, ...], k: int) -> int:
        key = (pins, sets, k)
        found = self.memo.get(key)
        if found is not None:
            return found
        diag = self.diagram(pins, sets)
        if k == 0:
            elements: FrozenSet[int] = frozenset()
            set_children: FrozenSet[int] = frozenset()
        else:
            elements = frozenset(self.type_of(pins + (a,), sets, k - 1) for a in self.structure.domain)
            set_children = frozenset(self.type_of(pins, sets + (m,), k - 1) for m in self.all_sets)
        index = self.registry.intern(
            (self.logic, k, self.vocab_key, (len(pins), len(sets)), diag, elements, set_children))
        self.memo[key] = index
        return index


def _check_type_guards(size: int, k: int, logic: str, config: Config) -> None:
    if logic not in LOGICS:
        raise InputError(f"unknown logic {logic}", code="unknown-logic")
    if k < 0:
        raise InputError(f"negative rank {k}", code="invalid-rank")
    if logic == FO:
        check_guard(size, config.max_structure_size, "size")
        check_guard(k, config.max_fo_rank, "fo-rank")
    else:
        check_guard(size, config.max_mso_size, "size")
        check_guard(k, config.max_mso_rank, "mso-rank")


def rank_type(structure: Structure, k: int, logic: str = FO,
              pins: Sequence[int] = (), sets: Sequence[Iterable[int]] = (),
              registry: Optional[TypeRegistry] = None, config: Config = default_config) -> TypeId:
    """Canonical rank-k type of (A, pinned elements, pinned sets)."""
    registry = registry if registry is not None else default_registry
    _check_type_guards(structure.size, k, logic, config)
    if sets and logic != MSO:
        raise InputError("set parameters need MSO", code="invalid-parameter")
    for a in pins:
        if not 0 <= a < structure.size:
            raise InputError(f"pinned element {a} outside domain", code="invalid-parameter")
    masks = []
    for s in sets:
        mask = 0
        for a in s:
            if not 0 <= a < structure.size:
                raise InputError(f"pinned set element {a} outside domain", code="invalid-parameter")
            mask |= 1 << a
        masks.append(mask)
    pins = tuple(pins)
    positions = _order_positions(structure)
    if positions is not None:
        # ordered structures are rigid: relabel by order position so isomorphic copies share work
        structure = permute(structure, positions).renamed("")
        pins = tuple(positions[a] for a in pins)
        masks = [sum(1 << positions[a] for a in range(structure.size) if m >> a & 1) for m in masks]
    else:
        structure = structure.renamed("")
    registry.remember_vocabulary(structure.vocab)
    index = _TypeComputation(structure, logic, registry).type_of(pins, tuple(masks), k)
    return registry.type_id(index)


def realized_types(vocab: Vocabulary, k: int, logic: str = FO, max_n: int = 3,
                   registry: Optional[TypeRegistry] = None,
                   config: Config = default_config) -> List[Tuple[TypeId, Structure]]:
    """Every type of a structure of size ≤ max_n, with its first witness in enumeration order."""
    registry = registry if registry is not None else default_registry
    _check_type_guards(max_n, k, logic, config)
    found: Dict[TypeId, Structure] = {}
    for n in range(max_n + 1):
        for structure in enumerate_structures(vocab, n, up_to_iso=True, config=config):
            tid = rank_type(structure, k, logic, registry=registry, config=config)
            found.setdefault(tid, structure)
    logger.info(f"Realized {len(found)} {logic} rank-{k} types over {vocab.key()} up to size {max_n}")
    return list(found.items())


# ---------------------- Type-defining sentences ----------------------

def materialize_type_sentence(type_id: TypeId, registry: Optional[TypeRegistry] = None) -> Formula:
    """Hintikka sentence of an FO type: true exactly on structures of that type."""
    registry = registry if registry is not None else default_registry
    if type_id.logic != FO:
        raise InputError("type-defining sentences are only materialized for FO", code="unsupported-logic")
    check_guard(type_id.rank, 2, "materialize-rank")
    vocab = registry.vocabulary(type_id.vocab)
    check_guard(len(vocab.relations), 2, "materialize-relations")
    return _hintikka(type_id.index, registry, vocab, ())


def _hintikka(index: int, registry: TypeRegistry, vocab: Vocabulary, variables: Tuple[str, ...]) -> Formula:
    logic, rank, _, _, diag, elements, _ = registry.entry(index)
    terms: List[Term] = [Const(c) for c in vocab.constants] + [Var(v) for v in variables]
    classes, relations, _ = diag
    atoms: List[Formula] = []
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            atom = Eq(terms[i], terms[j])
            atoms.append(atom if classes[i] == classes[j] else Not(atom))
    for name, hits in relations:
        arity = vocab.arity(name)
        for idx in itertools.product(range(len(terms)), repeat=arity):
            atom = Rel(name, tuple(terms[i] for i in idx))
            atoms.append(atom if idx in hits else Not(atom))
    if rank == 0:
        return And(tuple(atoms))
    fresh = f"h{len(variables) + 1}"
    children = sorted(elements, key=registry.serialize)
    extended = variables + (fresh,)
    subformulas = [_hintikka(c, registry, vocab, extended) for c in children]
    realized = [Exists(fresh, f) for f in subformulas]
    closure = Forall(fresh, Or(tuple(subformulas)))
    return And(tuple(atoms) + tuple(realized) + (closure,))


# ---------------------- EF games ----------------------

class EFGame:
    """Exhaustive minimax over spoiler/duplicator moves; set moves for MSO."""

    def __init__(self, a: Structure, b: Structure, logic: str):
        self.a, self.b, self.logic = a, b, logic
        self.rels = [(name, arity, a.relation(name), b.relation(name)) for name, arity in a.vocab.relations]
        self.consts_a = tuple(v for _, v in a.consts)
        self.consts_b = tuple(v for _, v in b.consts)
        self.sets_a = range(1 << a.size) if logic == MSO else range(0)
        self.sets_b = range(1 << b.size) if logic == MSO else range(0)
        self.memo: Dict[Tuple, bool] = {}

    def partial_isomorphism(self, pa, pb, sa, sb) -> bool:
        ta = self.consts_a + pa
        tb = self.consts_b + pb
        for i in range(len(ta)):
            for j in range(i, len(ta)):
                if (ta[i] == ta[j]) != (tb[i] == tb[j]):
                    return False
        for _, arity, rel_a, rel_b in self.rels:
            for idx in itertools.product(range(len(ta)), repeat=arity):
                if (tuple(ta[i] for i in idx) in rel_a) != (tuple(tb[i] for i in idx) in rel_b):
                    return False
        for ma, mb in zip(sa, sb):
            for x, y in zip(ta, tb):
                if (ma >> x & 1) != (mb >> y & 1):
                    return False
        return True

    def duplicator_wins(self, pa=(), pb=(), sa=(), sb=(), rounds: int = 0) -> bool:
        if not self.partial_isomorphism(pa, pb, sa, sb):
            return False
        if rounds == 0:
            return True
        key = (pa, pb, sa, sb, rounds)
        if key in self.memo:
            return self.memo[key]
        r = rounds - 1
        result = (
            all(any(self.duplicator_wins(pa + (x,), pb + (y,), sa, sb, r) for y in self.b.domain)
                for x in self.a.domain)
            and all(any(self.duplicator_wins(pa + (x,), pb + (y,), sa, sb, r) for x in self.a.domain)
                    for y in self.b.domain)
            and all(any(self.duplicator_wins(pa, pb, sa + (u,), sb + (v,), r) for v in self.sets_b)
                    for u in self.sets_a)
            and all(any(self.duplicator_wins(pa, pb, sa + (u,), sb + (v,), r) for u in self.sets_a)
                    for v in self.sets_b)
        )
        self.memo[key] = result
        return result


def ef_equivalent(a: Structure, b: Structure, k: int, logic: str = FO, config: Config = default_config) -> bool:
    """True iff the duplicator wins the k-round game (decides ≡_k)."""
    if a.vocab != b.vocab:
        raise VocabularyError(f"{a.vocab.key()} vs {b.vocab.key()}")
    if logic not in LOGICS:
        raise InputError(f"unknown logic {logic}", code="unknown-logic")
    check_guard(max(a.size, b.size), config.max_ef_size, "game-size")
    check_guard(k, config.max_ef_mso_rank if logic == MSO else config.max_fo_rank, "game-rank")
    return EFGame(a, b, logic).duplicator_wins(rounds=k)


class TypeService:
    def __init__(self, config: Config = default_config, registry: Optional[TypeRegistry] = None):
        self.config = config
        self.registry = registry if registry is not None else TypeRegistry(config.type_memo_structures)

    def rank_type(self, structure: Structure, k: int, logic: str = FO, pins=(), sets=()) -> TypeId:
        return rank_type(structure, k, logic, pins, sets, self.registry, self.config)

    def ef_equivalent(self, a: Structure, b: Structure, k: int, logic: str = FO) -> bool:
        return ef_equivalent(a, b, k, logic, self.config)

    def realized_types(self, vocab: Vocabulary, k: int, logic: str = FO, max_n: int = 3):
        return realized_types(vocab, k, logic, max_n, self.registry, self.config)

    def hash(self, type_id: TypeId) -> str:
        return type_hash(self.registry, type_id)


type_service = TypeService()
