"""
Invariance Service
k-flip components over a bounded universe, order-invariant (and
sibling-invariant) rank-k types, bounded invariance checking and
membership in the class a verified-invariant sentence defines.
"""
from __future__ import annotations

import hashlib
import logging
import time
from collections import OrderedDict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

from config import Config, default_config
from models.formulas import Formula
from models.structures import ORDER, LinearOrder, SiblingOrder, Structure, UnrankedTree, Vocabulary
from services.errors import InputError, check_guard
from services.logic_service import evaluate
from services.structure_service import (canonical_code, distinct_relabelings, enumerate_orders,
                                        enumerate_structures, enumerate_trees, permute, sibling_orders, tree_key,
                                        tree_to_structure, tree_vocabulary, with_order)
from services.type_service import FO, TypeRegistry, default_registry, rank_type

logger = logging.getLogger(__name__)

LINEAR_ORDERS = "linear"
SIBLING_ORDERS = "sibling"


class DisjointSet:
    """Growable union-find with union by rank and path compression."""

    def __init__(self, count: int = 0):
        self.parent = list(range(count))
        self.rank = [0] * count
        self.groups = count

    def add(self) -> int:
        self.parent.append(len(self.parent))
        self.rank.append(0)
        self.groups += 1
        return len(self.parent) - 1

    def find(self, element: int) -> int:
        root = element
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[element] != root:
            self.parent[element], element = root, self.parent[element]
        return root

    def unite(self, first: int, second: int) -> bool:
        """Merge two groups; false if they already coincide."""
        rep_first = self.find(first)
        rep_second = self.find(second)
        if rep_first == rep_second:
            return False
        if self.rank[rep_first] == self.rank[rep_second]:
            self.rank[rep_first] += 1
            self.parent[rep_second] = rep_first
        elif self.rank[rep_first] > self.rank[rep_second]:
            self.parent[rep_second] = rep_first
        else:
            self.parent[rep_first] = rep_second
        self.groups -= 1
        return True

    def __len__(self) -> int:
        return self.groups

    def to_list(self) -> List[List[int]]:
        result: Dict[int, List[int]] = {}
        for i in range(len(self.parent)):
            result.setdefault(self.find(i), []).append(i)
        return list(result.values())


@dataclass(frozen=True)
class InvariantTypeId:
    logic: str
    rank: int
    vocab: str
    aux: str
    bound: int
    key: str

    def __str__(self) -> str:
        return f"{self.logic}/{self.rank}/{self.aux}~{self.key}"


@dataclass
class FlipPartition:
    """Components of ordered rank-k types under k-flips, computed up to `bound`."""
    vocab: Vocabulary
    rank: int
    logic: str
    aux: str
    bound: int
    registry: TypeRegistry
    sets: DisjointSet = field(default_factory=DisjointSet)
    nodes: Dict[int, int] = field(default_factory=dict)
    type_of_node: List[int] = field(default_factory=list)
    witnesses: Dict[int, Tuple[str, str]] = field(default_factory=dict)
    groups: List[Tuple[str, Tuple[int, ...]]] = field(default_factory=list)
    universe: List[str] = field(default_factory=list)
    members: Dict[str, Structure] = field(default_factory=dict)
    _ids: Optional[Dict[int, InvariantTypeId]] = None

    def node(self, type_index: int, witness: Tuple[str, str]) -> int:
        found = self.nodes.get(type_index)
        if found is None:
            found = self.sets.add()
            self.nodes[type_index] = found
            self.type_of_node.append(type_index)
            self.witnesses[found] = witness
        return found

    def merge(self, name: str, type_indices: Sequence[int], witnesses: Sequence[str]) -> None:
        """All expansions of one underlying structure share a component."""
        members = tuple(self.node(t, (name, w)) for t, w in zip(type_indices, witnesses))
        for other in members[1:]:
            self.sets.unite(members[0], other)
        self.groups.append((name, members))
        self.universe.append(name)
        self._ids = None

    def is_fixpoint(self) -> bool:
        """Re-running every recorded merge changes nothing."""
        return all(self.sets.find(members[0]) == self.sets.find(m) for _, members in self.groups for m in members)

    def component_ids(self) -> Dict[int, InvariantTypeId]:
        if self._ids is None:
            best: Dict[int, str] = {}
            for node, type_index in enumerate(self.type_of_node):
                text = self.registry.serialize(type_index)
                root = self.sets.find(node)
                if root not in best or text < best[root]:
                    best[root] = text
            self._ids = {
                root: InvariantTypeId(self.logic, self.rank, self.vocab.key(), self.aux, self.bound,
                                      hashlib.sha1(text.encode()).hexdigest()[:12])
                for root, text in best.items()
            }
        return self._ids

    def component_of_type(self, type_index: int) -> Optional[InvariantTypeId]:
        node = self.nodes.get(type_index)
        if node is None:
            return None
        return self.component_ids()[self.sets.find(node)]

    def same_component(self, first: int, second: int) -> bool:
        return self.component_of_type(first) == self.component_of_type(second)

    def __len__(self) -> int:
        return len(self.sets)

    def dump(self) -> str:
        """component <id> followed by the canonical ordered-type serializations it contains."""
        by_component: Dict[str, List[str]] = {}
        ids = self.component_ids()
        for node, type_index in enumerate(self.type_of_node):
            key = ids[self.sets.find(node)].key
            by_component.setdefault(key, []).append(self.registry.serialize(type_index))
        lines = [f"partition {self.logic} k={self.rank} vocab={self.vocab.key()} aux={self.aux} "
                 f"up-to={self.bound}"]
        for key in sorted(by_component):
            lines.append(f"component {key}")
            lines.extend(f"  {text}" for text in sorted(by_component[key]))
        return "\n".join(lines) + "\n"


def parse_partition_dump(text: str) -> Dict[str, List[str]]:
    """Component key -> member serializations, as written by FlipPartition.dump."""
    components: Dict[str, List[str]] = {}
    current: Optional[str] = None
    for number, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("partition "):
            continue
        if line.startswith("component "):
            current = line.split(None, 1)[1].strip()
            components[current] = []
        elif line.startswith("  ") and current is not None:
            components[current].append(line.strip())
        else:
            raise InputError(f"bad partition dump line {number}", code="parse-error")
    return components


# ---------------------- Expansions ----------------------

def order_expansions(a: Structure, config: Config = default_config) -> Dict[Structure, LinearOrder]:
    """(A, <) for every order, deduplicated up to isomorphism by relabeling along the order."""
    return {with_order(b, LinearOrder.natural(b.size)): order for order, b in distinct_relabelings(a, config)}


def _order_text(order: LinearOrder) -> str:
    return "order: " + " ".join(map(str, order.perm))


def _sibling_text(order: SiblingOrder) -> str:
    return "sib: " + " ".join(
        "".join(map(str, parent)) + ":" + ",".join("".join(map(str, kid)) for kid in kids)
        for parent, kids in order.groups)


def _check_partition_guards(k: int, logic: str, bound: int, config: Config) -> None:
    check_guard(bound, config.max_mso_size if logic != FO else config.max_structure_size, "universe-bound")
    check_guard(k, config.max_mso_rank if logic != FO else config.max_fo_rank, "rank")


def _run_groups(tasks: Iterable[Tuple[str, Callable[[], List[Tuple[int, str]]]]],
                jobs: int) -> Iterator[Tuple[str, List[Tuple[int, str]]]]:
    tasks = list(tasks)
    if jobs <= 1:
        for name, task in tasks:
            yield name, task()
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        yield from zip((name for name, _ in tasks), pool.map(lambda entry: entry[1](), tasks))


def partition_over_structures(structures: Iterable[Structure], vocab: Vocabulary, k: int, logic: str,
                              bound: int, registry: Optional[TypeRegistry] = None,
                              config: Config = default_config) -> FlipPartition:
    """Flip partition whose universe is an explicit list of structures, with linear orders as aux."""
    registry = registry if registry is not None else default_registry
    partition = FlipPartition(vocab, k, logic, LINEAR_ORDERS, bound, registry)

    def expansion_types(a: Structure) -> Callable[[], List[Tuple[int, str]]]:
        def compute() -> List[Tuple[int, str]]:
            return [(rank_type(ordered, k, logic, registry=registry, config=config).index, _order_text(order))
                    for ordered, order in order_expansions(a, config).items()]
        return compute

    started = time.time()
    structures = list(structures)
    partition.members.update((a.name, a) for a in structures)
    tasks = ((a.name, expansion_types(a)) for a in structures)
    for name, results in _run_groups(tasks, config.jobs):
        partition.merge(name, [t for t, _ in results], [w for _, w in results])
    logger.info(f"Flip partition {logic} k={k} up to {bound}: {len(partition.universe)} structures, "
                f"{len(partition.nodes)} ordered types, {len(partition)} components "
                f"in {time.time() - started:.2f}s")
    return partition


def build_flip_partition(vocab: Vocabulary, k: int, logic: str = FO, aux: str = LINEAR_ORDERS, bound: int = 3,
                         alphabet: Sequence[str] = (), registry: Optional[TypeRegistry] = None,
                         config: Config = default_config) -> FlipPartition:
    """
    Partition of realized ordered rank-k types into k-flip components.

    aux=linear: universe is every σ-structure of size ≤ bound up to isomorphism.
    aux=sibling: universe is every unordered tree over `alphabet` with ≤ bound nodes.
    """
    _check_partition_guards(k, logic, bound, config)
    if aux == LINEAR_ORDERS:
        if vocab.has_relation(ORDER):
            raise InputError("base vocabulary already contains <", code="vocabulary-mismatch")
        universe = (a for n in range(bound + 1) for a in enumerate_structures(vocab, n, True, config))
        return partition_over_structures(universe, vocab, k, logic, bound, registry, config)
    if aux == SIBLING_ORDERS:
        return build_sibling_partition(alphabet, k, logic, bound, registry, config)
    raise InputError(f"unknown aux class {aux}", code="invalid-parameter")


def build_sibling_partition(alphabet: Sequence[str], k: int, logic: str = FO, bound: int = 3,
                            registry: Optional[TypeRegistry] = None,
                            config: Config = default_config) -> FlipPartition:
    registry = registry if registry is not None else default_registry
    if not alphabet:
        raise InputError("sibling partitions need a label alphabet", code="invalid-parameter")
    _check_partition_guards(k, logic, bound, config)
    alphabet = tuple(sorted(alphabet))
    partition = FlipPartition(tree_vocabulary(alphabet), k, logic, SIBLING_ORDERS, bound, registry)

    def expansion_types(tree: UnrankedTree) -> Callable[[], List[Tuple[int, str]]]:
        def compute() -> List[Tuple[int, str]]:
            return [(rank_type(tree_to_structure(tree, order, alphabet, config.edge_semantics), k, logic,
                               registry=registry, config=config).index, _sibling_text(order))
                    for order in sibling_orders(tree, config)]
        return compute

    tasks = ((tree_key(t), expansion_types(t)) for t in enumerate_trees(alphabet, bound))
    for name, results in _run_groups(tasks, config.jobs):
        partition.merge(name, [t for t, _ in results], [w for _, w in results])
    logger.info(f"Sibling flip partition {logic} k={k} over {alphabet} up to {bound} nodes: "
                f"{len(partition)} components")
    return partition


def invariant_type_of(a: Structure, partition: FlipPartition, config: Config = default_config) -> InvariantTypeId:
    """Component of (A, <) for the natural order; independent of the order by construction."""
    if partition.aux != LINEAR_ORDERS:
        raise InputError("use tree_invariant_type_of for sibling partitions", code="invalid-parameter")
    if a.size > partition.bound:
        raise InputError(f"size {a.size} exceeds partition bound {partition.bound}", code="size-exceeds-bound")
    if a.vocab != partition.vocab:
        raise InputError(f"structure over {a.vocab.key()}, partition over {partition.vocab.key()}",
                         code="vocabulary-mismatch")
    ordered = with_order(a, LinearOrder.natural(a.size))
    tid = rank_type(ordered, partition.rank, partition.logic, registry=partition.registry, config=config)
    found = partition.component_of_type(tid.index)
    if found is None:
        raise InputError(f"structure {a.name} not realized in the partition universe", code="size-exceeds-bound")
    return found


def tree_invariant_type_of(tree: UnrankedTree, partition: FlipPartition,
                           config: Config = default_config) -> InvariantTypeId:
    if partition.aux != SIBLING_ORDERS:
        raise InputError("partition is not over sibling orders", code="invalid-parameter")
    if len(tree) > partition.bound:
        raise InputError(f"tree of {len(tree)} nodes exceeds partition bound {partition.bound}",
                         code="size-exceeds-bound")
    alphabet = tuple(name[2:] for name in partition.vocab.relation_names if name.startswith("P_"))
    structure = tree_to_structure(tree, SiblingOrder.text_order(tree), alphabet, config.edge_semantics)
    tid = rank_type(structure, partition.rank, partition.logic, registry=partition.registry, config=config)
    found = partition.component_of_type(tid.index)
    if found is None:
        raise InputError(f"tree {tree_key(tree)} not realized in the partition universe",
                         code="size-exceeds-bound")
    return found


# ---------------------- Invariance checking ----------------------

@dataclass(frozen=True)
class Counterexample:
    structure: Structure
    first: str
    second: str

    def describe(self) -> str:
        return f"{self.structure.name} {self.first} | {self.second}"


@dataclass(frozen=True)
class InvarianceVerdict:
    bound: int
    counterexample: Optional[Counterexample] = None

    @property
    def invariant(self) -> bool:
        return self.counterexample is None

    def describe(self) -> str:
        if self.invariant:
            return f"invariant-up-to {self.bound}"
        return f"not-invariant {self.counterexample.describe()}"


def check_invariance(formula: Formula, vocab: Vocabulary, bound: int,
                     config: Config = default_config) -> InvarianceVerdict:
    """Exhaustive scan of every σ-structure ≤ bound (up to iso) and every order; first disagreement wins."""
    check_guard(bound, config.max_mso_size, "universe-bound")
    for n in range(bound + 1):
        for a in enumerate_structures(vocab, n, True, config):
            verdicts: Dict[Structure, bool] = {}
            reference: Optional[Tuple[bool, LinearOrder]] = None
            for order in enumerate_orders(n, config):
                relabeled = permute(a, [order.positions()[x] for x in range(n)])
                if relabeled not in verdicts:
                    verdicts[relabeled] = evaluate(with_order(relabeled, LinearOrder.natural(n)), formula)
                value = verdicts[relabeled]
                if reference is None:
                    reference = (value, order)
                elif value != reference[0]:
                    logger.info(f"Order dependence found on {a.name}")
                    return InvarianceVerdict(bound, Counterexample(a, _order_text(reference[1]), _order_text(order)))
    return InvarianceVerdict(bound)


def check_sibling_invariance(formula: Formula, alphabet: Sequence[str], bound: int,
                             config: Config = default_config) -> InvarianceVerdict:
    """Same scan over unordered trees ≤ bound nodes and all their sibling orders."""
    check_guard(bound, config.max_mso_size, "universe-bound")
    alphabet = tuple(sorted(alphabet))
    for tree in enumerate_trees(alphabet, bound):
        reference: Optional[Tuple[bool, SiblingOrder]] = None
        for order in sibling_orders(tree, config):
            value = evaluate(tree_to_structure(tree, order, alphabet, config.edge_semantics), formula)
            if reference is None:
                reference = (value, order)
            elif value != reference[0]:
                structure = tree_to_structure(tree, None, alphabet, config.edge_semantics).renamed(tree_key(tree))
                return InvarianceVerdict(bound, Counterexample(structure, _sibling_text(reference[1]),
                                                               _sibling_text(order)))
    return InvarianceVerdict(bound)


def query_membership(formula: Formula, a: Structure) -> bool:
    """A ∈ Q_φ, evaluated on the natural order 0 < 1 < …"""
    return evaluate(with_order(a, LinearOrder.natural(a.size)), formula)


def tree_query_membership(formula: Formula, tree: UnrankedTree, alphabet: Optional[Sequence[str]] = None,
                          edge_semantics: str = "child") -> bool:
    return evaluate(tree_to_structure(tree, SiblingOrder.text_order(tree), alphabet, edge_semantics), formula)


def same_isomorphism_class(a: Structure, b: Structure, config: Config = default_config) -> bool:
    return canonical_code(a, config) == canonical_code(b, config)


class InvarianceService:
    """Flip partitions cached per (vocabulary, rank, logic, bound), least recently used first out."""

    def __init__(self, config: Config = default_config, cached_partitions: int = 16):
        self.config = config
        self.cached_partitions = cached_partitions
        self._partitions: "OrderedDict[Tuple, FlipPartition]" = OrderedDict()

    def partition(self, vocab: Vocabulary, k: int, logic: str = FO, bound: Optional[int] = None) -> FlipPartition:
        bound = self.config.invariant_type_bound if bound is None else bound
        key = (vocab, k, logic, bound)
        found = self._partitions.get(key)
        if found is None:
            found = build_flip_partition(vocab, k, logic, LINEAR_ORDERS, bound,
                                         registry=TypeRegistry(self.config.type_memo_structures), config=self.config)
            self._partitions[key] = found
            while len(self._partitions) > self.cached_partitions:
                self._partitions.popitem(last=False)
        else:
            self._partitions.move_to_end(key)
        return found

    def invariant_type(self, a: Structure, k: int, logic: str = FO, bound: Optional[int] = None) -> InvariantTypeId:
        """Component against the partition at `bound`, or at the configured invariant_type_bound when None."""
        return invariant_type_of(a, self.partition(a.vocab, k, logic, bound), self.config)

    def check(self, formula: Formula, vocab: Vocabulary, bound: int) -> InvarianceVerdict:
        return check_invariance(formula, vocab, bound, self.config)


invariance_service = InvarianceService()
