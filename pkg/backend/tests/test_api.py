from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from main import app
from services.type_service import type_service
from tests.conftest import CORPUS

PAIR = "structure A\ndomain 2\nrel E/2: (0,1)\nend\n"


def corpus_text(*parts: str) -> str:
    return Path(CORPUS, *parts).read_text()


@pytest.fixture(scope="module")
def client():
    with TestClient(app) as client:
        yield client


def test_root(client):
    response = client.get("/")
    assert response.status_code == 200
    assert response.json()["status"] == "running"


def test_backend_root_echoes_config(client):
    body = client.get("/api/").json()
    assert body["config"]["max_fo_rank"] == 4


def test_eval(client):
    response = client.post("/api/logic/eval", json={"structure": PAIR, "formula": "(exists x (exists y (E x y)))"})
    assert response.status_code == 200
    assert response.json() == {"result": True, "quantifier_rank": 2, "order_used": False}


def test_eval_with_order(client):
    response = client.post("/api/logic/eval", json={"structure": PAIR, "formula": "(exists x (exists y (lt x y)))"})
    body = response.json()
    assert body["order_used"]
    assert body["result"]


def test_eval_bad_formula(client):
    response = client.post("/api/logic/eval", json={"structure": PAIR, "formula": "(exists x"})
    assert response.status_code == 400
    assert response.json()["detail"].startswith("DIAG ")


def test_type_and_game(client):
    body = client.post("/api/logic/type", json={"structure": PAIR, "k": 1}).json()
    assert body["logic"] == "FO"
    assert body["witness"] == "A"
    response = client.post("/api/logic/ef", json={"first": PAIR, "second": PAIR, "k": 2})
    assert response.json()["equivalent"]


def test_game_guard(client):
    response = client.post("/api/logic/ef", json={"first": PAIR, "second": PAIR, "k": 9})
    assert response.status_code == 422
    assert response.json()["detail"].startswith("DIAG guard-exceeded")


def test_commutative(client):
    response = client.post("/api/automata/commutative", json={"dfa": corpus_text("dfas", "ab_star.txt")})
    assert response.json() == {"commutative": False, "witness": "ab/ba"}


def test_parikh(client):
    body = client.post("/api/automata/parikh", json={"dfa": corpus_text("dfas", "even_a.txt")}).json()
    assert body["semilinear"] == "{(S[0,2], S[0,1])}"
    assert body["alphabet"] == ["a", "b"]
    assert body["tuples"] == 1


def test_tree_run(client):
    automaton = corpus_text("tree_automata", "sorted_children.txt")
    body = client.post("/api/automata/run", json={"automaton": automaton, "tree": "a(b, a)"}).json()
    assert body["accepted"] is False
    assert body["failure"] == "root"
    body = client.post("/api/automata/run", json={"automaton": automaton, "tree": "a(a, b)"}).json()
    assert body["accepted"] is True
    assert "root=qa" in body["states"]


def test_tree_automaton_checks(client):
    automaton = corpus_text("tree_automata", "leaf_even_a.txt")
    body = client.post("/api/automata/check-invariant", json={"automaton": automaton}).json()
    assert body == {"invariant": True, "deterministic": True}
    body = client.post("/api/automata/to-counting", json={"automaton": automaton}).json()
    assert body["counting_automaton"].startswith("counting count(leaf_even_a)")


def test_invariance_check(client):
    response = client.post("/api/invariance/check", json={"formula": corpus_text("formulas", "min_has_edge.txt"),
                                                          "vocabulary": "E/2", "max_size": 2})
    body = response.json()
    assert body["invariant"] is False
    assert body["verdict"].startswith("not-invariant ")


def test_invariant_type(client):
    body = client.post("/api/invariance/type", json={"structure": PAIR, "k": 1}).json()
    assert body["bound"] == 3
    assert body["id"].startswith("FO/1/linear~")


def test_composition_table(client):
    response = client.post("/api/composition/table", json={"op": "union", "vocabulary": "E/2", "k": 1, "bound": 1})
    body = response.json()
    assert body["functional"] is True
    assert body["entries"] == 9
    assert body["table"].startswith("table union FO k=1")


def test_invariant_type_bound_is_fixed_not_structure_sized(client):
    single = "structure B\ndomain 1\nend\n"
    triple = "structure C\ndomain 3\nend\n"
    first = client.post("/api/invariance/type", json={"structure": single, "k": 1}).json()
    second = client.post("/api/invariance/type", json={"structure": triple, "k": 1}).json()
    assert first["bound"] == second["bound"] == 3
    assert first["id"] == second["id"]


def test_invariant_type_bound_zero_is_honoured(client):
    response = client.post("/api/invariance/type", json={"structure": PAIR, "k": 1, "bound": 0})
    assert response.status_code == 400
    assert response.json()["detail"].startswith("DIAG size-exceeds-bound")


def test_type_requests_do_not_grow_the_shared_registry(client):
    before = len(type_service.registry)
    first = client.post("/api/logic/type", json={"structure": PAIR, "k": 2}).json()
    second = client.post("/api/logic/type", json={"structure": PAIR, "k": 2}).json()
    assert first["id"] == second["id"]
    assert len(type_service.registry) == before
