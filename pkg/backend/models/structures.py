"""
Finite relational structures, orders and unranked trees.

All values are immutable and hashable so they can key memo tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Iterator, List, Optional, Tuple

from services.errors import InputError

ORDER = "<"
CHILD = "child"
SIB = "sib"
PART_PREFIX = "P_"
RESERVED = (ORDER, CHILD, SIB)

Address = Tuple[int, ...]


def is_reserved(name: str) -> bool:
    return name in RESERVED or name.startswith(PART_PREFIX)


@dataclass(frozen=True)
class Vocabulary:
    relations: Tuple[Tuple[str, int], ...] = ()
    constants: Tuple[str, ...] = ()

    def __post_init__(self):
        names = [name for name, _ in self.relations] + list(self.constants)
        if len(set(names)) != len(names):
            raise InputError(f"duplicate symbol in vocabulary {names}", code="vocabulary-error")
        for name, arity in self.relations:
            if arity < 1:
                raise InputError(f"relation {name} has arity {arity}", code="vocabulary-error")

    @classmethod
    def create(cls, relations: Iterable[Tuple[str, int]] = (), constants: Iterable[str] = ()) -> "Vocabulary":
        """User-facing constructor; reserved names are kept for the designated builders."""
        relations = tuple((name, int(arity)) for name, arity in relations)
        for name in [name for name, _ in relations] + list(constants):
            if is_reserved(name):
                raise InputError(f"symbol {name} is reserved", code="vocabulary-error")
        return cls(relations, tuple(constants))

    def extend(self, *relations: Tuple[str, int]) -> "Vocabulary":
        """Add relations (reserved names allowed). Used by the structure builders."""
        return Vocabulary(self.relations + tuple(relations), self.constants)

    def arity(self, name: str) -> Optional[int]:
        for rel, arity in self.relations:
            if rel == name:
                return arity
        return None

    def has_relation(self, name: str) -> bool:
        return self.arity(name) is not None

    @property
    def relation_names(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.relations)

    def key(self) -> str:
        rels = ",".join(f"{name}/{arity}" for name, arity in self.relations)
        return f"[{rels};{','.join(self.constants)}]"


EMPTY_VOCABULARY = Vocabulary()


@dataclass(frozen=True)
class Structure:
    vocab: Vocabulary
    size: int
    interp: Tuple[Tuple[str, FrozenSet[Tuple[int, ...]]], ...]
    consts: Tuple[Tuple[str, int], ...] = ()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.size < 0:
            raise InputError(f"negative domain size {self.size}", code="invalid-structure")
        if tuple(name for name, _ in self.interp) != self.vocab.relation_names:
            raise InputError("interpretation does not match vocabulary", code="vocabulary-mismatch")
        if tuple(name for name, _ in self.consts) != self.vocab.constants:
            raise InputError("constants do not match vocabulary", code="vocabulary-mismatch")
        if self.size == 0 and self.vocab.constants:
            raise InputError("empty structure over a vocabulary with constants", code="invalid-structure")
        for (name, tuples), (_, arity) in zip(self.interp, self.vocab.relations):
            for tup in tuples:
                if len(tup) != arity or any(not 0 <= a < self.size for a in tup):
                    raise InputError(f"tuple {tup} invalid for {name}/{arity} over size {self.size}",
                                     code="invalid-structure")
        for name, value in self.consts:
            if not 0 <= value < self.size:
                raise InputError(f"constant {name}={value} outside domain", code="invalid-structure")

    @classmethod
    def build(cls, vocab: Vocabulary, size: int, relations: Optional[Dict[str, Iterable]] = None,
              consts: Optional[Dict[str, int]] = None, name: str = "") -> "Structure":
        relations = relations or {}
        consts = consts or {}
        unknown = set(relations) - set(vocab.relation_names)
        if unknown:
            raise InputError(f"unknown relation(s) {sorted(unknown)}", code="unknown-symbol")
        interp = tuple(
            (rel, frozenset(tuple(t) for t in relations.get(rel, ())))
            for rel in vocab.relation_names
        )
        missing = [c for c in vocab.constants if c not in consts]
        if missing:
            raise InputError(f"constant(s) {missing} not interpreted", code="invalid-structure")
        return cls(vocab, size, interp, tuple((c, int(consts[c])) for c in vocab.constants), name)

    @property
    def domain(self) -> range:
        return range(self.size)

    def relation(self, name: str) -> FrozenSet[Tuple[int, ...]]:
        for rel, tuples in self.interp:
            if rel == name:
                return tuples
        raise InputError(f"relation {name} not in vocabulary {self.vocab.key()}", code="vocabulary-mismatch")

    def const(self, name: str) -> int:
        for c, value in self.consts:
            if c == name:
                return value
        raise InputError(f"constant {name} not in vocabulary {self.vocab.key()}", code="vocabulary-mismatch")

    def renamed(self, name: str) -> "Structure":
        return Structure(self.vocab, self.size, self.interp, self.consts, name)

    def with_relation(self, rel: str, arity: int, tuples: Iterable[Tuple[int, ...]]) -> "Structure":
        """Expansion by one relation; reserved names allowed (designated builders only)."""
        vocab = self.vocab.extend((rel, arity))
        return Structure(vocab, self.size, self.interp + ((rel, frozenset(tuples)),), self.consts, self.name)


@dataclass(frozen=True)
class LinearOrder:
    perm: Tuple[int, ...]

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise InputError(f"order {list(self.perm)} is not a permutation", code="invalid-order")

    def __len__(self) -> int:
        return len(self.perm)

    def positions(self) -> Dict[int, int]:
        return {element: index for index, element in enumerate(self.perm)}

    def pairs(self) -> Iterator[Tuple[int, int]]:
        for i, a in enumerate(self.perm):
            for b in self.perm[i + 1:]:
                yield (a, b)

    @classmethod
    def natural(cls, n: int) -> "LinearOrder":
        return cls(tuple(range(n)))


@dataclass(frozen=True)
class UnrankedTree:
    """Unranked tree over tree-domain addresses; labels sorted in preorder."""
    labels: Tuple[Tuple[Address, str], ...]

    def __post_init__(self):
        addresses = [address for address, _ in self.labels]
        present = set(addresses)
        if len(present) != len(addresses):
            raise InputError("node listed twice", code="invalid-tree")
        if addresses and () not in present:
            raise InputError("tree has no root", code="invalid-tree")
        for address in addresses:
            if address and address[:-1] not in present:
                raise InputError(f"address {address} is not prefix-closed", code="invalid-tree")
            if address and address[-1] < 1:
                raise InputError(f"address {address} uses a non-positive index", code="invalid-tree")
            if address and address[-1] > 1 and address[:-1] + (address[-1] - 1,) not in present:
                raise InputError(f"address {address} skips a sibling", code="invalid-tree")
        if list(self.labels) != sorted(self.labels):
            object.__setattr__(self, "labels", tuple(sorted(self.labels)))

    @classmethod
    def node(cls, label: str, *children: "UnrankedTree") -> "UnrankedTree":
        labels: List[Tuple[Address, str]] = [((), label)]
        for index, child in enumerate(children, start=1):
            labels.extend(((index,) + address, lab) for address, lab in child.labels)
        return cls(tuple(sorted(labels)))

    @property
    def nodes(self) -> Tuple[Address, ...]:
        return tuple(address for address, _ in self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def label(self, address: Address) -> str:
        return dict(self.labels)[address]

    def label_map(self) -> Dict[Address, str]:
        return dict(self.labels)

    @property
    def alphabet(self) -> Tuple[str, ...]:
        return tuple(sorted({label for _, label in self.labels}))

    def children(self, address: Address) -> Tuple[Address, ...]:
        depth = len(address) + 1
        return tuple(a for a, _ in self.labels if len(a) == depth and a[:-1] == address)

    def subtree(self, address: Address) -> "UnrankedTree":
        cut = len(address)
        return UnrankedTree(tuple((a[cut:], lab) for a, lab in self.labels if a[:cut] == address))

    def root_label(self) -> str:
        return self.labels[0][1]

    def child_trees(self) -> Tuple["UnrankedTree", ...]:
        return tuple(self.subtree(child) for child in self.children(()))


@dataclass(frozen=True)
class SiblingOrder:
    """Per node, its children listed in increasing sibling order."""
    groups: Tuple[Tuple[Address, Tuple[Address, ...]], ...]

    def group(self, address: Address) -> Tuple[Address, ...]:
        for parent, kids in self.groups:
            if parent == address:
                return kids
        return ()

    @classmethod
    def text_order(cls, tree: UnrankedTree) -> "SiblingOrder":
        return cls(tuple((a, tree.children(a)) for a in tree.nodes if tree.children(a)))

    def validate(self, tree: UnrankedTree) -> None:
        declared = {parent for parent, _ in self.groups}
        for address in tree.nodes:
            kids = tree.children(address)
            if not kids:
                if address in declared and self.group(address):
                    raise InputError(f"sibling order lists children of leaf {address}", code="invalid-order")
                continue
            if sorted(self.group(address)) != sorted(kids):
                raise InputError(f"sibling order at {address} is not a linear order of its children",
                                 code="invalid-order")
        for parent in declared:
            if parent not in set(tree.nodes):
                raise InputError(f"sibling order mentions unknown node {parent}", code="invalid-order")
