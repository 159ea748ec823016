import pytest

from config import Config
from models.structures import Vocabulary
from services.errors import InputError
from services.formula_parser import parse_formula
from services.invariance_service import (SIBLING_ORDERS, DisjointSet, InvarianceService, build_flip_partition,
                                         build_sibling_partition, check_invariance, check_sibling_invariance,
                                         invariant_type_of, parse_partition_dump, query_membership,
                                         tree_invariant_type_of)
from services.logic_service import phi_even
from services.structure_service import tree_vocabulary
from services.text_formats import parse_tree
from services.type_service import FO, TypeRegistry
from tests.conftest import graph, pure_set

MIN_HAS_EDGE = "(exists x (and (forall y (not (lt y x))) (exists y (E x y))))"


def test_disjoint_set_merges_groups():
    groups = DisjointSet(4)
    assert groups.unite(0, 1)
    assert groups.unite(2, 3)
    assert not groups.unite(1, 0)
    assert groups.unite(1, 3)
    assert len(groups) == 1
    assert groups.find(0) == groups.find(2)
    extra = groups.add()
    assert len(groups) == 2
    assert sorted(map(sorted, groups.to_list())) == [[0, 1, 2, 3], [extra]]


def test_pure_sets_split_by_size_up_to_rank():
    partition = build_flip_partition(Vocabulary(), 2, FO, bound=4, registry=TypeRegistry())
    assert len(partition) == 4
    assert partition.is_fixpoint()
    kinds = [invariant_type_of(pure_set(n), partition) for n in range(5)]
    assert kinds[3] == kinds[4]
    assert len(set(kinds[:4])) == 4
    assert str(kinds[0]).startswith("FO/2/linear~")


def test_order_dependent_types_share_a_component(edge_vocab):
    partition = build_flip_partition(edge_vocab, 2, FO, bound=2, registry=TypeRegistry())
    assert len(partition.nodes) > len(partition)
    forward, backward = graph(2, [(0, 1)]), graph(2, [(1, 0)])
    assert invariant_type_of(forward, partition) == invariant_type_of(backward, partition)


def test_partition_dump_parses_back():
    partition = build_flip_partition(Vocabulary(), 2, FO, bound=3, registry=TypeRegistry())
    text = partition.dump()
    assert text.startswith("partition FO k=2")
    components = parse_partition_dump(text)
    assert len(components) == len(partition)
    assert sum(len(members) for members in components.values()) == len(partition.nodes)


def test_partition_dump_rejects_garbage():
    with pytest.raises(InputError):
        parse_partition_dump("component abc\nnot indented\n")


def test_structures_beyond_the_bound_are_rejected():
    partition = build_flip_partition(Vocabulary(), 1, FO, bound=2, registry=TypeRegistry())
    with pytest.raises(InputError) as info:
        invariant_type_of(pure_set(3), partition)
    assert info.value.code == "size-exceeds-bound"


def test_parity_sentence_is_order_invariant():
    verdict = check_invariance(phi_even(), Vocabulary(), 4)
    assert verdict.invariant
    assert verdict.describe() == "invariant-up-to 4"
    assert query_membership(phi_even(), pure_set(4))
    assert not query_membership(phi_even(), pure_set(5))


def test_order_dependent_sentence_is_caught(edge_vocab):
    formula = parse_formula(MIN_HAS_EDGE, edge_vocab)
    assert check_invariance(formula, edge_vocab, 1).invariant
    verdict = check_invariance(formula, edge_vocab, 2)
    assert not verdict.invariant
    assert verdict.counterexample.structure.size == 2
    assert verdict.describe().startswith("not-invariant ")


def test_sibling_partition_ignores_child_order():
    partition = build_sibling_partition(("a", "b"), 1, FO, bound=3, registry=TypeRegistry())
    assert partition.aux == SIBLING_ORDERS
    assert tree_invariant_type_of(parse_tree("a(b, a)"), partition) == \
        tree_invariant_type_of(parse_tree("a(a, b)"), partition)


def test_first_child_sentence_is_not_sibling_invariant():
    vocab = tree_vocabulary(("a", "b"), ordered=True)
    formula = parse_formula("(exists x (exists y (and (child x y) (P_a y) (not (exists z (sib z y))))))", vocab)
    assert check_sibling_invariance(formula, ("a", "b"), 2).invariant
    verdict = check_sibling_invariance(formula, ("a", "b"), 3)
    assert not verdict.invariant
    assert verdict.counterexample.first.startswith("sib: ")


def test_service_caches_partitions():
    service = InvarianceService()
    assert service.partition(Vocabulary(), 1, FO, 2) is service.partition(Vocabulary(), 1, FO, 2)
    assert service.invariant_type(pure_set(2), 1, FO, 3) == service.invariant_type(pure_set(3), 1, FO, 3)


def test_invariant_type_defaults_to_the_configured_bound():
    service = InvarianceService(Config(invariant_type_bound=2))
    assert service.invariant_type(pure_set(1), 1).bound == 2
    assert service.invariant_type(pure_set(2), 1) == service.invariant_type(pure_set(1), 1)
    with pytest.raises(InputError) as info:
        service.invariant_type(pure_set(3), 1)
    assert info.value.code == "size-exceeds-bound"
    assert service.invariant_type(pure_set(3), 1, bound=3).bound == 3


def test_partition_cache_drops_least_recently_used():
    service = InvarianceService(cached_partitions=1)
    first = service.partition(Vocabulary(), 1, FO, 2)
    service.partition(Vocabulary(), 1, FO, 3)
    assert service.partition(Vocabulary(), 1, FO, 2) is not first
