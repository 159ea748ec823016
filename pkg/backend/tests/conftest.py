import sys
from pathlib import Path

import pytest

BACKEND = Path(__file__).resolve().parent.parent
if str(BACKEND) not in sys.path:
    sys.path.insert(0, str(BACKEND))

from config import Config  # noqa: E402
from models.structures import Structure, Vocabulary  # noqa: E402
from services.text_formats import parse_dfas, parse_tree_automaton  # noqa: E402

CORPUS = BACKEND / "corpus"


@pytest.fixture
def config():
    return Config()


@pytest.fixture
def edge_vocab():
    return Vocabulary.create([("E", 2)])


@pytest.fixture
def unary_vocab():
    return Vocabulary.create([("P", 1)])


@pytest.fixture
def empty_vocab():
    return Vocabulary.create()


def pure_set(n: int) -> Structure:
    return Structure.build(Vocabulary(), n, name=f"set{n}")


def graph(n: int, edges, name: str = "G") -> Structure:
    return Structure.build(Vocabulary.create([("E", 2)]), n, {"E": edges}, name=name)


@pytest.fixture
def corpus_dfas():
    found = {}
    for path in sorted((CORPUS / "dfas").glob("*.txt")):
        for dfa in parse_dfas(path.read_text()):
            found[dfa.name] = dfa
    return found


@pytest.fixture
def leaf_even_a():
    return parse_tree_automaton((CORPUS / "tree_automata" / "leaf_even_a.txt").read_text())


@pytest.fixture
def sorted_children():
    return parse_tree_automaton((CORPUS / "tree_automata" / "sorted_children.txt").read_text())


@pytest.fixture
def corpus_file():
    def locate(*parts: str) -> str:
        return str(CORPUS.joinpath(*parts))
    return locate
