"""
Composition Service
Empirical composition tables for disjoint unions and products: the invariant
type of the composite looked up from the invariant types of the factors,
with the lex-order game lemma and flip transport checked alongside.
"""
from __future__ import annotations

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

from config import Config, default_config
from models.structures import LinearOrder, Structure, Vocabulary
from services.errors import InputError, MissingKeyError, check_guard
from services.invariance_service import (FlipPartition, InvariantTypeId, build_flip_partition, invariant_type_of,
                                         order_expansions, partition_over_structures)
from services.structure_service import (P_LEFT, P_RIGHT, direct_product, disjoint_union, enumerate_structures,
                                        lex_product_order, random_structure, with_order)
from services.type_service import FO, MSO, EFGame, TypeRegistry, rank_type

logger = logging.getLogger(__name__)

UNION = "union"
PRODUCT = "product"
OPERATIONS: Dict[str, Callable[[Structure, Structure], Structure]] = {
    UNION: disjoint_union,
    PRODUCT: direct_product,
}

Key = Tuple[InvariantTypeId, InvariantTypeId]


def sum_order(order_a: LinearOrder, order_b: LinearOrder) -> LinearOrder:
    """Left part first, each part in its own order (elements of B shifted by |A|)."""
    shift = len(order_a)
    return LinearOrder(order_a.perm + tuple(shift + x for x in order_b.perm))


def composite_order(op: str, order_a: LinearOrder, order_b: LinearOrder) -> LinearOrder:
    if op == UNION:
        return sum_order(order_a, order_b)
    return lex_product_order(order_a, order_b, (len(order_a), len(order_b)))


def swap_parts(structure: Structure) -> Structure:
    """Exchange the interpretations of P_left and P_right."""
    relations = {name: tuples for name, tuples in structure.interp}
    relations[P_LEFT], relations[P_RIGHT] = relations[P_RIGHT], relations[P_LEFT]
    return Structure.build(structure.vocab, structure.size, relations, name=structure.name)


@dataclass
class CompositionDiagnostics:
    pairs: int = 0
    violations: List[str] = field(default_factory=list)

    @property
    def functional(self) -> bool:
        return not self.violations


@dataclass
class CompositionTable:
    op: str
    vocab: Vocabulary
    rank: int
    logic: str
    bound: int
    factors: FlipPartition
    composites: FlipPartition
    entries: Dict[Key, InvariantTypeId] = field(default_factory=dict)
    witnesses: Dict[Key, Tuple[Structure, Structure]] = field(default_factory=dict)

    def dump(self) -> str:
        """Sorted entries; factor types are over the bare vocabulary, composite types over the composite one."""
        lines = [f"table {self.op} {self.logic} k={self.rank} vocab={self.vocab.key()} up-to={self.bound} "
                 f"composite-vocab={self.composites.vocab.key()} composite-up-to={self.composites.bound}"]
        for key in sorted(self.entries, key=lambda pair: (pair[0].key, pair[1].key)):
            a, b = self.witnesses[key]
            lines.append(f"{key[0].key} {key[1].key} -> {self.entries[key].key} witness={a.name},{b.name}")
        return "\n".join(lines) + "\n"

    def __len__(self) -> int:
        return len(self.entries)


def composite_config(config: Config) -> Config:
    """Type guards widened to the composite size cap; factors keep the ordinary size guard."""
    return config.model_copy(update={"max_structure_size": max(config.max_structure_size, config.max_composite_size)})


def _check_table_guards(op: str, k: int, logic: str, bound: int, config: Config) -> None:
    if op not in OPERATIONS:
        raise InputError(f"unknown operation {op}", code="invalid-parameter")
    check_guard(k, config.max_fv_rank, "fv-rank")
    if op == PRODUCT:
        if logic != FO:
            raise InputError("product tables are FO only", code="unsupported-logic")
        check_guard(bound, config.max_fv_product_size, "fv-product-size")
    else:
        check_guard(bound, config.max_fv_union_size, "fv-union-size")
        if logic == MSO:
            check_guard(k, 1, "fv-mso-rank")


def build_composition_table(op: str, vocab: Vocabulary, k: int, bound: int, logic: str = FO,
                            registry: Optional[TypeRegistry] = None,
                            config: Config = default_config) -> Tuple[CompositionTable, CompositionDiagnostics]:
    """
    Every pair of factors of size ≤ bound, keyed by their invariant types, mapped to the
    invariant type of the composite. The composite partition's universe is the set of composites.
    """
    _check_table_guards(op, k, logic, bound, config)
    registry = registry if registry is not None else TypeRegistry(config.type_memo_structures)
    combine = OPERATIONS[op]
    smallest = 1 if op == PRODUCT else 0
    factors = [a for n in range(smallest, bound + 1) for a in enumerate_structures(vocab, n, True, config)]
    factor_partition = build_flip_partition(vocab, k, logic, bound=bound, registry=registry, config=config)

    pairs: List[Tuple[Structure, Structure, Structure]] = []
    universe: Dict[Structure, Structure] = {}
    for a in factors:
        for b in factors:
            composite = combine(a, b)
            pairs.append((a, b, universe.setdefault(composite, composite.renamed(f"c{len(universe)}"))))
    composite_bound = max(c.size for c in universe.values())
    check_guard(composite_bound, config.max_composite_size, "composite-size")
    composite_vocab = next(iter(universe.values())).vocab
    wide = composite_config(config)
    composite_partition = partition_over_structures(
        sorted(universe.values(), key=lambda c: c.size), composite_vocab, k, logic, composite_bound, registry, wide)

    table = CompositionTable(op, vocab, k, logic, bound, factor_partition, composite_partition)
    diagnostics = CompositionDiagnostics(pairs=len(pairs))
    for a, b, composite in pairs:
        key = (invariant_type_of(a, factor_partition, config), invariant_type_of(b, factor_partition, config))
        value = invariant_type_of(composite, composite_partition, wide)
        previous = table.entries.setdefault(key, value)
        if previous == value:
            table.witnesses.setdefault(key, (a, b))
        else:
            first = table.witnesses[key]
            diagnostics.violations.append(
                f"{key[0].key} {key[1].key}: ({first[0].name},{first[1].name}) -> {previous.key} vs "
                f"({a.name},{b.name}) -> {value.key}")
    logger.info(f"Composition table {op} k={k} up to {bound}: {len(table)} entries, "
                f"{len(diagnostics.violations)} violations")
    return table, diagnostics


def compose(table: CompositionTable, left: InvariantTypeId, right: InvariantTypeId) -> InvariantTypeId:
    try:
        return table.entries[(left, right)]
    except KeyError:
        raise MissingKeyError(f"pair ({left.key}, {right.key}) not realized up to {table.bound}")


def replay(table: CompositionTable, samples: int = 20, seed: int = 0,
           config: Config = default_config) -> List[str]:
    """Fresh random factor pairs: compose must agree with the composite's own invariant type."""
    rng = random.Random(seed)
    smallest = 1 if table.op == PRODUCT else 0
    mismatches = []
    for _ in range(samples):
        a = random_structure(table.vocab, rng.randint(smallest, table.bound), rng)
        b = random_structure(table.vocab, rng.randint(smallest, table.bound), rng)
        expected = compose(table, invariant_type_of(a, table.factors, config),
                           invariant_type_of(b, table.factors, config))
        actual = invariant_type_of(OPERATIONS[table.op](a, b), table.composites, composite_config(config))
        if expected != actual:
            mismatches.append(f"{a.name}/{a.size} {b.name}/{b.size}: {expected.key} vs {actual.key}")
    return mismatches


def union_swap_symmetric(table: CompositionTable, config: Config = default_config) -> List[str]:
    """(tA,tB) -> tC implies (tB,tA) -> the type of tC's witness with its parts exchanged."""
    if table.op != UNION:
        raise InputError("swap symmetry applies to union tables", code="invalid-parameter")
    problems = []
    for (left, right), value in sorted(table.entries.items(), key=lambda item: (item[0][0].key, item[0][1].key)):
        a, b = table.witnesses[(left, right)]
        mirrored = table.entries.get((right, left))
        if mirrored is None:
            problems.append(f"missing mirror of {left.key} {right.key}")
            continue
        swapped = invariant_type_of(swap_parts(disjoint_union(a, b)), table.composites, composite_config(config))
        if swapped != mirrored:
            problems.append(f"{left.key} {right.key}: mirror {mirrored.key} vs swapped {swapped.key}")
    return problems


def stability_violations(smaller: CompositionTable, larger: CompositionTable,
                         config: Config = default_config) -> List[str]:
    """
    Factor pairs the smaller table sends to one composite type but the larger table
    sends to several. Raising the bound may merge composite types, never split them.
    """
    same_shape = (smaller.op, smaller.vocab, smaller.rank, smaller.logic) == \
        (larger.op, larger.vocab, larger.rank, larger.logic)
    if not same_shape or smaller.bound > larger.bound:
        raise InputError("stability compares tables of one shape with growing bounds", code="invalid-parameter")
    smallest = 1 if smaller.op == PRODUCT else 0
    factors = [a for a in smaller.factors.members.values() if a.size >= smallest]
    images: Dict[InvariantTypeId, Dict[InvariantTypeId, Tuple[str, str]]] = {}
    for a in factors:
        for b in factors:
            before = compose(smaller, invariant_type_of(a, smaller.factors, config),
                             invariant_type_of(b, smaller.factors, config))
            after = compose(larger, invariant_type_of(a, larger.factors, config),
                            invariant_type_of(b, larger.factors, config))
            images.setdefault(before, {}).setdefault(after, (a.name, b.name))
    problems = []
    for before, found in sorted(images.items(), key=lambda item: item[0].key):
        if len(found) > 1:
            ordered = sorted(found.items(), key=lambda item: item[0].key)
            problems.append(f"{before.key} splits: " + " ".join(f"({a},{b})->{after.key}" for after, (a, b) in ordered))
    return problems


# ---------------------- Game lemma and flip transport ----------------------

def _composites_equivalent(first: Structure, second: Structure, k: int, config: Config) -> bool:
    check_guard(max(first.size, second.size), config.max_composite_size, "composite-size")
    return EFGame(first, second, FO).duplicator_wins(rounds=k)


@dataclass(frozen=True)
class LemmaVerdict:
    checked: int
    violations: Tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return not self.violations

    def describe(self) -> str:
        return f"{'pass' if self.passed else 'fail'} checked={self.checked}"


def verify_lex_ef_lemma(k: int, max_size: int, vocab: Vocabulary, registry: Optional[TypeRegistry] = None,
                        config: Config = default_config) -> LemmaVerdict:
    """
    Ordered factors of size 1..max_size, grouped into ≡_k classes; every product with the
    lex order must be ≡_k to the product of the class representatives.
    """
    check_guard(k, config.max_fv_rank, "fv-rank")
    check_guard(max_size, config.max_fv_product_size, "fv-product-size")
    registry = registry if registry is not None else TypeRegistry(config.type_memo_structures)
    ordered: List[Tuple[Structure, LinearOrder]] = []
    for n in range(1, max_size + 1):
        for a in enumerate_structures(vocab, n, False, config):
            ordered.append((a, LinearOrder.natural(n)))
    representative: Dict[int, Tuple[Structure, LinearOrder]] = {}
    classes: List[int] = []
    for a, order in ordered:
        index = rank_type(with_order(a, order), k, FO, registry=registry, config=config).index
        representative.setdefault(index, (a, order))
        classes.append(index)

    def lex(a: Structure, oa: LinearOrder, b: Structure, ob: LinearOrder) -> Structure:
        return with_order(direct_product(a, b), lex_product_order(oa, ob, (a.size, b.size)))

    violations = []
    checked = 0
    for (a, oa), ca in zip(ordered, classes):
        ra, rao = representative[ca]
        for (b, ob), cb in zip(ordered, classes):
            rb, rbo = representative[cb]
            checked += 1
            if not _composites_equivalent(lex(a, oa, b, ob), lex(ra, rao, rb, rbo), k, config):
                violations.append(f"{a.name}x{b.name} vs {ra.name}x{rb.name}")
    logger.info(f"Lex game lemma k={k} up to {max_size}: {checked} products, {len(violations)} violations")
    return LemmaVerdict(checked, tuple(violations))


def _flip_path(partition: FlipPartition, start: str, goal: str) -> Optional[List[Tuple[str, int]]]:
    """Alternating structure/type path: [(S0, -1), (S1, t01), (S2, t12), …] where t is the shared ordered type."""
    by_node: Dict[int, List[str]] = {}
    nodes_of: Dict[str, Tuple[int, ...]] = {}
    for name, members in partition.groups:
        nodes_of[name] = members
        for node in members:
            by_node.setdefault(node, []).append(name)
    parent: Dict[str, Optional[Tuple[str, int]]] = {start: None}
    queue = deque([start])
    while queue:
        current = queue.popleft()
        if current == goal:
            path = [(current, -1)]
            while parent[path[-1][0]] is not None:
                previous, node = parent[path[-1][0]]
                path[-1] = (path[-1][0], node)
                path.append((previous, -1))
            return list(reversed(path))
        for node in nodes_of[current]:
            for other in by_node[node]:
                if other not in parent:
                    parent[other] = (current, node)
                    queue.append(other)
    return None


def _order_realizing(partition: FlipPartition, structure: Structure, node: int, config: Config) -> LinearOrder:
    target = partition.type_of_node[node]
    for ordered, order in order_expansions(structure, config).items():
        if rank_type(ordered, partition.rank, partition.logic, registry=partition.registry,
                     config=config).index == target:
            return order
    raise InputError(f"no order of {structure.name} realizes the shared type", code="invalid-parameter")


def verify_flip_transport(op: str, k: int, bound: int, vocab: Vocabulary, samples: int = 10, seed: int = 0,
                          registry: Optional[TypeRegistry] = None, config: Config = default_config) -> LemmaVerdict:
    """
    Sampled flip paths between factors of one invariant type, each step carried to the composite
    with a fixed ordered partner: order steps keep the composite structure, type jumps must stay ≡_k.
    """
    _check_table_guards(op, k, FO, bound, config)
    registry = registry if registry is not None else TypeRegistry(config.type_memo_structures)
    partition = build_flip_partition(vocab, k, FO, bound=bound, registry=registry, config=config)
    smallest = 1 if op == PRODUCT else 0
    names = [name for name in partition.universe if partition.members[name].size >= smallest]
    by_component: Dict[InvariantTypeId, List[str]] = {}
    for name in names:
        by_component.setdefault(invariant_type_of(partition.members[name], partition, config), []).append(name)
    candidates = [group for _, group in sorted(by_component.items(), key=lambda item: item[0].key)
                  if len(group) > 1] or [group for group in by_component.values()]
    rng = random.Random(seed)
    combine = OPERATIONS[op]
    violations = []
    checked = 0
    for _ in range(samples):
        group = rng.choice(candidates)
        start, goal = rng.choice(group), rng.choice(group)
        partner = partition.members[rng.choice(names)]
        partner_order = LinearOrder.natural(partner.size)
        path = _flip_path(partition, start, goal)
        if path is None:
            violations.append(f"no flip path {start} -> {goal}")
            continue
        for (left_name, _), (right_name, node) in zip(path, path[1:]):
            left, right = partition.members[left_name], partition.members[right_name]
            left_order = _order_realizing(partition, left, node, config)
            right_order = _order_realizing(partition, right, node, config)
            first = with_order(combine(left, partner), composite_order(op, left_order, partner_order))
            second = with_order(combine(right, partner), composite_order(op, right_order, partner_order))
            checked += 1
            if not _composites_equivalent(first, second, k, config):
                violations.append(f"{left_name} -> {right_name} with partner {partner.name}")
    logger.info(f"Flip transport {op} k={k}: {checked} steps, {len(violations)} violations")
    return LemmaVerdict(checked, tuple(violations))


class CompositionService:
    def __init__(self, config: Config = default_config):
        self.config = config

    def table(self, op: str, vocab: Vocabulary, k: int, bound: int, logic: str = FO):
        """Each table interns its types into a registry of its own."""
        return build_composition_table(op, vocab, k, bound, logic, config=self.config)


composition_service = CompositionService()
