import pytest

from config import Config
from models.structures import Vocabulary
from services.errors import GuardError, InputError, VocabularyError
from services.logic_service import evaluate
from services.structure_service import enumerate_structures
from services.type_service import (FO, MSO, TypeRegistry, ef_equivalent, materialize_type_sentence, rank_type,
                                   realized_types, type_hash)
from tests.conftest import graph, pure_set


@pytest.mark.parametrize("logic, k, equal", [
    (FO, 1, True), (FO, 2, True), (FO, 3, False),
    (MSO, 1, True), (MSO, 2, True), (MSO, 3, False),
])
def test_sets_of_size_two_and_three(logic, k, equal):
    registry = TypeRegistry()
    same = rank_type(pure_set(2), k, logic, registry=registry) == rank_type(pure_set(3), k, logic, registry=registry)
    assert same == equal
    assert ef_equivalent(pure_set(2), pure_set(3), k, logic) == equal


@pytest.mark.parametrize("k, count", [(0, 1), (1, 2), (2, 3)])
def test_realized_types_over_the_empty_vocabulary(k, count):
    assert len(realized_types(Vocabulary(), k, FO, max_n=3, registry=TypeRegistry())) == count


def test_types_agree_with_the_game_on_small_graphs(edge_vocab):
    structures = [a for n in range(3) for a in enumerate_structures(edge_vocab, n, up_to_iso=True)]
    registry = TypeRegistry()
    for k in (1, 2):
        types = [rank_type(a, k, FO, registry=registry) for a in structures]
        for i, a in enumerate(structures):
            for j, b in enumerate(structures):
                assert (types[i] == types[j]) == ef_equivalent(a, b, k, FO)


def test_isomorphic_copies_share_a_type():
    registry = TypeRegistry()
    forward = rank_type(graph(2, [(0, 1)]), 2, FO, registry=registry)
    backward = rank_type(graph(2, [(1, 0)]), 2, FO, registry=registry)
    assert forward == backward


def test_hash_is_stable_across_registries():
    first, second = TypeRegistry(), TypeRegistry()
    path = graph(3, [(0, 1), (1, 2)])
    assert type_hash(first, rank_type(path, 2, FO, registry=first)) == \
        type_hash(second, rank_type(path, 2, FO, registry=second))


def test_pinned_elements():
    registry = TypeRegistry()
    path = graph(2, [(0, 1)])
    assert rank_type(path, 0, pins=(0,), registry=registry) == rank_type(path, 0, pins=(1,), registry=registry)
    assert rank_type(path, 1, pins=(0,), registry=registry) != rank_type(path, 1, pins=(1,), registry=registry)


def test_set_parameters_need_mso():
    with pytest.raises(InputError):
        rank_type(pure_set(2), 1, FO, sets=[{0}])
    assert rank_type(pure_set(2), 1, MSO, sets=[{0}], registry=TypeRegistry()).logic == MSO


def test_rank_guards():
    with pytest.raises(GuardError):
        rank_type(pure_set(2), 5, FO)
    with pytest.raises(GuardError):
        rank_type(pure_set(2), 4, MSO)
    with pytest.raises(InputError) as info:
        rank_type(pure_set(2), 1, "SO")
    assert info.value.code == "unknown-logic"


def test_game_needs_one_vocabulary():
    with pytest.raises(VocabularyError):
        ef_equivalent(pure_set(1), graph(1, []), 1)


@pytest.mark.parametrize("k", [1, 2])
def test_materialized_sentence_defines_the_type(edge_vocab, k):
    registry = TypeRegistry()
    structures = [a for n in range(3) for a in enumerate_structures(edge_vocab, n, up_to_iso=True)]
    target = rank_type(graph(2, [(0, 1)]), k, FO, registry=registry)
    sentence = materialize_type_sentence(target, registry)
    for a in structures:
        assert evaluate(a, sentence) == (rank_type(a, k, FO, registry=registry) == target)


def test_materialization_is_fo_only():
    registry = TypeRegistry()
    with pytest.raises(InputError) as info:
        materialize_type_sentence(rank_type(pure_set(1), 1, MSO, registry=registry), registry)
    assert info.value.code == "unsupported-logic"


def test_registry_memo_keeps_only_recent_structures():
    registry = TypeRegistry(memo_structures=2)
    first = rank_type(pure_set(0), 1, FO, registry=registry)
    for n in range(1, 5):
        rank_type(pure_set(n), 1, FO, registry=registry)
    assert registry.memo_size() == 2
    assert rank_type(pure_set(0), 1, FO, registry=registry) == first
    assert registry.memo_size() == 2


def test_registry_memo_cap_defaults_to_config():
    assert TypeRegistry().memo_structures == Config().type_memo_structures
