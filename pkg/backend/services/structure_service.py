"""
Structure Service
Algebraic constructions on finite structures (union, product, lex order),
tree and word encodings, and bounded enumeration of structures, orders,
sibling orders and unordered trees.
"""
from __future__ import annotations

import itertools
import logging
import math
import random
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from config import Config, default_config
from models.structures import (CHILD, ORDER, PART_PREFIX, SIB, Address, LinearOrder, SiblingOrder,
                               Structure, UnrankedTree, Vocabulary)
from services.errors import InputError, VocabularyError, check_guard

logger = logging.getLogger(__name__)

P_LEFT = PART_PREFIX + "left"
P_RIGHT = PART_PREFIX + "right"
CODE_BLOCK = 1 << 16
RELABEL_BLOCK = 1 << 16


# ---------------------- Constructions ----------------------

def _require_same_vocab(a: Structure, b: Structure) -> None:
    if a.vocab != b.vocab:
        raise VocabularyError(f"{a.vocab.key()} vs {b.vocab.key()}")
    if a.vocab.constants:
        raise InputError("constants are not supported by this construction", code="constants-present")


def disjoint_union(a: Structure, b: Structure) -> Structure:
    """A ⊔ B with B shifted by |A| and fresh part predicates P_left / P_right."""
    _require_same_vocab(a, b)
    if a.vocab.has_relation(P_LEFT) or a.vocab.has_relation(P_RIGHT):
        raise VocabularyError("vocabulary already carries part predicates")
    shift = a.size
    relations = {
        rel: set(a.relation(rel)) | {tuple(x + shift for x in t) for t in b.relation(rel)}
        for rel in a.vocab.relation_names
    }
    vocab = a.vocab.extend((P_LEFT, 1), (P_RIGHT, 1))
    relations[P_LEFT] = {(x,) for x in range(a.size)}
    relations[P_RIGHT] = {(x + shift,) for x in range(b.size)}
    name = f"({a.name}+{b.name})" if a.name or b.name else ""
    return Structure.build(vocab, a.size + b.size, relations, name=name)


def pair_code(x: int, y: int, size_a: int) -> int:
    return x + size_a * y


def direct_product(a: Structure, b: Structure) -> Structure:
    """A × B over pair codes a + |A|·b, relations componentwise."""
    _require_same_vocab(a, b)
    if a.size == 0 or b.size == 0:
        raise InputError("empty factor in product", code="empty-factor")
    relations: Dict[str, set] = {}
    for rel in a.vocab.relation_names:
        tuples = set()
        for ta in a.relation(rel):
            for tb in b.relation(rel):
                tuples.add(tuple(pair_code(x, y, a.size) for x, y in zip(ta, tb)))
        relations[rel] = tuples
    name = f"({a.name}x{b.name})" if a.name or b.name else ""
    return Structure.build(a.vocab, a.size * b.size, relations, name=name)


def lex_product_order(order_a: LinearOrder, order_b: LinearOrder, sizes: Tuple[int, int]) -> LinearOrder:
    """(a,b) < (a',b') iff b <_B b', or b = b' and a <_A a'."""
    size_a, size_b = sizes
    if len(order_a) != size_a or len(order_b) != size_b:
        raise InputError(f"orders of lengths {len(order_a)},{len(order_b)} do not match sizes {sizes}",
                         code="size-mismatch")
    return LinearOrder(tuple(pair_code(x, y, size_a) for y in order_b.perm for x in order_a.perm))


def with_order(a: Structure, order: LinearOrder) -> Structure:
    """(A, <) expansion."""
    if len(order) != a.size:
        raise InputError(f"order over {len(order)} elements for structure of size {a.size}",
                         code="size-mismatch")
    if a.vocab.has_relation(ORDER):
        raise VocabularyError("structure already carries an order")
    return a.with_relation(ORDER, 2, order.pairs())


def tree_alphabet(tree: UnrankedTree, alphabet: Optional[Sequence[str]] = None) -> Tuple[str, ...]:
    if alphabet is None:
        return tree.alphabet
    missing = set(tree.alphabet) - set(alphabet)
    if missing:
        raise InputError(f"labels {sorted(missing)} outside alphabet {list(alphabet)}", code="label-outside")
    return tuple(sorted(alphabet))


def tree_vocabulary(alphabet: Sequence[str], ordered: bool = False) -> Vocabulary:
    relations = [(CHILD, 2)] + [(PART_PREFIX + label, 1) for label in sorted(alphabet)]
    if ordered:
        relations.append((SIB, 2))
    return Vocabulary(tuple(relations))


def node_index(tree: UnrankedTree) -> Dict[Address, int]:
    """Preorder numbering of nodes (root = 0)."""
    return {address: index for index, address in enumerate(tree.nodes)}


def tree_to_structure(tree: UnrankedTree, order: Optional[SiblingOrder] = None,
                      alphabet: Optional[Sequence[str]] = None,
                      edge_semantics: str = "child") -> Structure:
    """(D, child, (P_a)) with optional sibling order `sib`."""
    alphabet = tree_alphabet(tree, alphabet)
    index = node_index(tree)
    if edge_semantics == "descendant":
        edges = {(index[a], index[d]) for a in tree.nodes for d in tree.nodes
                 if len(d) > len(a) and d[:len(a)] == a}
    else:
        edges = {(index[address[:-1]], index[address]) for address in tree.nodes if address}
    relations: Dict[str, set] = {CHILD: edges}
    labels = tree.label_map()
    for label in alphabet:
        relations[PART_PREFIX + label] = {(index[a],) for a in tree.nodes if labels[a] == label}
    if order is not None:
        order.validate(tree)
        sib = set()
        for _, kids in order.groups:
            for i, u in enumerate(kids):
                for v in kids[i + 1:]:
                    sib.add((index[u], index[v]))
        relations[SIB] = sib
    return Structure.build(tree_vocabulary(alphabet, order is not None), len(tree), relations)


def dfs_order(tree: UnrankedTree, order: Optional[SiblingOrder] = None) -> LinearOrder:
    """The depth-first linear order a sibling order defines."""
    order = order or SiblingOrder.text_order(tree)
    index = node_index(tree)
    result: List[int] = []
    stack: List[Address] = [()] if len(tree) else []
    while stack:
        address = stack.pop()
        result.append(index[address])
        stack.extend(reversed(order.group(address)))
    return LinearOrder(tuple(result))


def word_to_structure(word: Sequence[str], alphabet: Optional[Sequence[str]] = None) -> Structure:
    """Word as ({1..n} shifted to 0, <, (P_a))."""
    alphabet = tuple(sorted(alphabet if alphabet is not None else set(word)))
    vocab = Vocabulary(tuple((PART_PREFIX + a, 1) for a in alphabet))
    relations = {PART_PREFIX + a: {(i,) for i, letter in enumerate(word) if letter == a} for a in alphabet}
    base = Structure.build(vocab, len(word), relations, name="".join(word))
    return with_order(base, LinearOrder.natural(len(word)))


def permute(a: Structure, perm: Sequence[int]) -> Structure:
    """Isomorphic copy where element x becomes perm[x]."""
    relations = {rel: {tuple(perm[x] for x in t) for t in a.relation(rel)} for rel in a.vocab.relation_names}
    consts = {c: perm[v] for c, v in a.consts}
    return Structure.build(a.vocab, a.size, relations, consts, name=a.name)


def _relabeling_rows(a: Structure, positions: np.ndarray) -> np.ndarray:
    """One uint8 row per relabeling: relation membership bitmaps, then constant values."""
    n = a.size
    count = len(positions)
    columns = [np.zeros((count, 1), dtype=np.uint8)]
    for (_, tuples), (_, arity) in zip(a.interp, a.vocab.relations):
        bitmap = np.zeros((count, n ** arity), dtype=np.uint8)
        if tuples:
            source = np.array(sorted(tuples), dtype=np.int64).reshape(len(tuples), arity)
            target = np.zeros((count, len(tuples)), dtype=np.int64)
            for i in range(arity):
                target = target * n + positions[:, source[:, i]]
            bitmap[np.arange(count)[:, None], target] = 1
        columns.append(bitmap)
    if a.consts:
        columns.append(positions[:, [v for _, v in a.consts]].astype(np.uint8))
    return np.ascontiguousarray(np.concatenate(columns, axis=1))


def distinct_relabelings(a: Structure, config: Config = default_config) -> Iterator[Tuple[LinearOrder, Structure]]:
    """
    For each order in permutation order, the copy of A whose i-th element is i, skipping copies
    already produced. One entry per isomorphism class of (A, <), witnessed by its first order.
    """
    n = a.size
    check_guard(math.factorial(n), config.order_cap, "orders")
    orders = itertools.permutations(range(n))
    seen = set()
    while True:
        chunk = list(itertools.islice(orders, RELABEL_BLOCK))
        if not chunk:
            return
        block = np.array(chunk, dtype=np.int64).reshape(len(chunk), n)
        positions = np.argsort(block, axis=1)
        rows = _relabeling_rows(a, positions)
        keys = rows.view(np.dtype((np.void, rows.shape[1]))).ravel()
        _, first = np.unique(keys, return_index=True)
        for index in np.sort(first):
            key = rows[index].tobytes()
            if key in seen:
                continue
            seen.add(key)
            yield LinearOrder(tuple(chunk[index])), permute(a, positions[index].tolist())


# ---------------------- Encoding / canonical forms ----------------------

class _Encoding:
    """Bit listing of a vocabulary at size n, plus the bit maps of every permutation."""

    def __init__(self, vocab: Vocabulary, n: int):
        self.vocab = vocab
        self.n = n
        self.listing: List[Tuple[str, Tuple[int, ...]]] = [
            (rel, t) for rel, arity in vocab.relations for t in itertools.product(range(n), repeat=arity)
        ]
        self.bits = len(self.listing)
        self.position = {entry: i for i, entry in enumerate(self.listing)}
        self.const_base = n ** len(vocab.constants) if vocab.constants else 1
        self._sources = None

    @property
    def perms(self) -> np.ndarray:
        return np.array(list(itertools.permutations(range(self.n))), dtype=np.int64).reshape(
            math.factorial(self.n), self.n)

    @property
    def sources(self) -> np.ndarray:
        """sources[m, j] = listing index read by position j under permutation m."""
        if self._sources is None:
            perms = self.perms
            inverse = np.argsort(perms, axis=1)
            src = np.zeros((len(perms), self.bits), dtype=np.int64)
            for j, (rel, t) in enumerate(self.listing):
                for m in range(len(perms)):
                    src[m, j] = self.position[(rel, tuple(int(inverse[m, x]) for x in t))]
            self._sources = src
        return self._sources

    @property
    def weights(self) -> np.ndarray:
        return np.array([1 << (self.bits - 1 - j) for j in range(self.bits)], dtype=np.int64)

    def bits_code(self, a: Structure) -> int:
        code = 0
        for rel, tuples in a.interp:
            for t in tuples:
                code |= 1 << (self.bits - 1 - self.position[(rel, t)])
        return code

    def const_code(self, values: Sequence[int]) -> int:
        code = 0
        for v in values:
            code = code * self.n + v
        return code

    def decode(self, code: int, const_values: Sequence[int] = ()) -> Structure:
        relations: Dict[str, set] = {rel: set() for rel in self.vocab.relation_names}
        for j, (rel, t) in enumerate(self.listing):
            if code >> (self.bits - 1 - j) & 1:
                relations[rel].add(t)
        consts = dict(zip(self.vocab.constants, const_values))
        return Structure.build(self.vocab, self.n, relations, consts)

    def orbit_min(self, codes: np.ndarray, const_values: Sequence[int]) -> np.ndarray:
        """Minimal combined (bits, consts) code over all permutations, vectorized over codes."""
        shifts = np.array([self.bits - 1 - j for j in range(self.bits)], dtype=np.int64)
        matrix = (codes[:, None] >> shifts[None, :]) & 1
        perms = self.perms
        best = None
        for m in range(len(perms)):
            permuted = matrix[:, self.sources[m]] @ self.weights if self.bits else np.zeros(len(codes), np.int64)
            consts = self.const_code([int(perms[m, v]) for v in const_values])
            combined = permuted * self.const_base + consts
            best = combined if best is None else np.minimum(best, combined)
        return best


@lru_cache(maxsize=64)
def _encoding(vocab: Vocabulary, n: int) -> _Encoding:
    return _Encoding(vocab, n)


def canonical_code(a: Structure, config: Config = default_config) -> Tuple[int, int]:
    """Lexicographically minimal encoding over all n! relabelings."""
    if a.size == 0:
        return 0, 0
    check_guard(math.factorial(a.size), config.order_cap, "relabelings")
    enc = _encoding(a.vocab, a.size)
    check_guard(enc.bits, config.enumeration_bit_cap, "relation-bits")
    values = [v for _, v in a.consts]
    best = int(enc.orbit_min(np.array([enc.bits_code(a)], dtype=np.int64), values)[0])
    return a.size, best


def are_isomorphic(a: Structure, b: Structure, config: Config = default_config) -> bool:
    return a.vocab == b.vocab and a.size == b.size and canonical_code(a, config) == canonical_code(b, config)


def structure_code(a: Structure) -> int:
    enc = _encoding(a.vocab, a.size)
    return enc.bits_code(a) * enc.const_base + enc.const_code([v for _, v in a.consts])


# ---------------------- Enumeration ----------------------

def enumerate_structures(vocab: Vocabulary, n: int, up_to_iso: bool = False,
                         config: Config = default_config) -> Iterator[Structure]:
    """All structures of size exactly n, in increasing encoding order, scanned in fixed-size code blocks."""
    if n == 0:
        if not vocab.constants:
            yield Structure.build(vocab, 0, name="s0_0")
        return
    enc = _encoding(vocab, n)
    check_guard(enc.bits, config.enumeration_bit_cap, "relation-bits")
    if up_to_iso:
        check_guard(math.factorial(n), config.order_cap, "relabelings")
    total = 1 << enc.bits
    for const_values in itertools.product(range(n), repeat=len(vocab.constants)):
        const_code = enc.const_code(const_values)
        for start in range(0, total, CODE_BLOCK):
            codes = np.arange(start, min(start + CODE_BLOCK, total), dtype=np.int64)
            if up_to_iso:
                keep = codes[enc.orbit_min(codes, const_values) == codes * enc.const_base + const_code]
            else:
                keep = codes
            for code in keep:
                structure = enc.decode(int(code), const_values)
                yield structure.renamed(f"s{n}_{int(code) * enc.const_base + const_code}")


def enumerate_structures_upto(vocab: Vocabulary, max_n: int, up_to_iso: bool = True,
                              config: Config = default_config) -> Iterator[Structure]:
    for n in range(max_n + 1):
        yield from enumerate_structures(vocab, n, up_to_iso, config)


def enumerate_orders(n: int, config: Config = default_config) -> Iterator[LinearOrder]:
    check_guard(math.factorial(n), config.order_cap, "orders")
    for perm in itertools.permutations(range(n)):
        yield LinearOrder(perm)


def count_sibling_orders(tree: UnrankedTree) -> int:
    return math.prod(math.factorial(len(tree.children(a))) for a in tree.nodes)


def sibling_orders(tree: UnrankedTree, config: Config = default_config) -> Iterator[SiblingOrder]:
    check_guard(count_sibling_orders(tree), config.order_cap, "sibling-orders")
    parents = [a for a in tree.nodes if tree.children(a)]
    choices = [list(itertools.permutations(tree.children(a))) for a in parents]
    for picked in itertools.product(*choices):
        yield SiblingOrder(tuple(zip(parents, picked)))


def random_sibling_order(tree: UnrankedTree, rng: random.Random) -> SiblingOrder:
    groups = []
    for a in tree.nodes:
        kids = list(tree.children(a))
        if kids:
            rng.shuffle(kids)
            groups.append((a, tuple(kids)))
    return SiblingOrder(tuple(groups))


def tree_key(tree: UnrankedTree) -> str:
    """Canonical text of an unordered tree (children sorted)."""
    kids = sorted(tree_key(child) for child in tree.child_trees())
    return tree.root_label() + (f"({', '.join(kids)})" if kids else "")


def canonical_tree(tree: UnrankedTree) -> UnrankedTree:
    kids = sorted((canonical_tree(child) for child in tree.child_trees()), key=tree_key)
    return UnrankedTree.node(tree.root_label(), *kids)


def enumerate_trees(alphabet: Sequence[str], max_nodes: int) -> List[UnrankedTree]:
    """All unordered trees with 1..max_nodes nodes, one canonical representative each."""
    alphabet = sorted(alphabet)
    by_size: Dict[int, List[UnrankedTree]] = {}
    catalogue: List[Tuple[int, UnrankedTree]] = []

    def forests(budget: int, start: int) -> Iterator[List[UnrankedTree]]:
        if budget == 0:
            yield []
            return
        for i in range(start, len(catalogue)):
            size, tree = catalogue[i]
            if size <= budget:
                for rest in forests(budget - size, i):
                    yield [tree] + rest

    for n in range(1, max_nodes + 1):
        made = []
        for label in alphabet:
            for forest in forests(n - 1, 0):
                made.append(UnrankedTree.node(label, *forest))
        made.sort(key=tree_key)
        by_size[n] = made
        catalogue.extend((n, t) for t in made)
        catalogue.sort(key=lambda entry: (entry[0], tree_key(entry[1])))
    result = [t for n in range(1, max_nodes + 1) for t in by_size[n]]
    logger.info(f"Enumerated {len(result)} unordered trees over {alphabet} up to {max_nodes} nodes")
    return result


def random_structure(vocab: Vocabulary, n: int, rng: random.Random, density: float = 0.4) -> Structure:
    relations = {
        rel: {t for t in itertools.product(range(n), repeat=arity) if rng.random() < density}
        for rel, arity in vocab.relations
    }
    consts = {c: rng.randrange(n) for c in vocab.constants} if n else {}
    return Structure.build(vocab, n, relations, consts, name=f"r{n}")


def random_tree(alphabet: Sequence[str], max_nodes: int, rng: random.Random) -> UnrankedTree:
    """Random tree built by attaching each new node to a uniformly chosen earlier node."""
    count = rng.randint(1, max_nodes)
    parents = [None] + [rng.randrange(i) for i in range(1, count)]
    labels = [rng.choice(sorted(alphabet)) for _ in range(count)]

    def build(i: int) -> UnrankedTree:
        return UnrankedTree.node(labels[i], *[build(j) for j in range(count) if parents[j] == i])

    return build(0)


class StructureService:
    """Guarded entry points used by the CLI and API."""

    def __init__(self, config: Config = default_config):
        self.config = config

    def enumerate(self, vocab: Vocabulary, n: int, up_to_iso: bool = False) -> Iterator[Structure]:
        check_guard(n, self.config.max_structure_size, "size")
        return enumerate_structures(vocab, n, up_to_iso, self.config)

    def orders(self, n: int) -> Iterator[LinearOrder]:
        return enumerate_orders(n, self.config)

    def tree_structure(self, tree: UnrankedTree, order: Optional[SiblingOrder] = None,
                       alphabet: Optional[Sequence[str]] = None) -> Structure:
        return tree_to_structure(tree, order, alphabet, self.config.edge_semantics)


structure_service = StructureService()
