import pytest

import cli
from cli import dispatch, main


@pytest.fixture
def write(tmp_path):
    def make(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return make


def test_eval_single_structure(write, corpus_file):
    structure = write("a.txt", "structure A\ndomain 2\nrel E/2: (0,1)\nend\n")
    status, report = dispatch(["eval", "--structure", structure, "--formula", corpus_file("formulas", "has_edge.txt")])
    assert status == 0
    assert report.results == ["true"]
    assert "RESULT true\n" in report.render()


def test_eval_names_each_structure(corpus_file):
    status, report = dispatch(["eval", "--structure", corpus_file("structures", "graphs.txt"),
                               "--formula", corpus_file("formulas", "has_edge.txt")])
    assert status == 0
    assert report.results == ["path3 true", "cycle3 true", "loop1 true", "empty2 false"]


def test_eval_with_assignment(write):
    structure = write("a.txt", "structure A\ndomain 3\nrel E/2: (0,1)\nend\n")
    formula = write("f.txt", "(exists y (E x y))")
    _, report = dispatch(["eval", "--structure", structure, "--formula", formula, "--assign", "x=0"])
    assert report.results == ["true"]
    _, report = dispatch(["eval", "--structure", structure, "--formula", formula, "--assign", "x=2"])
    assert report.results == ["false"]


def test_tabular_format(write, corpus_file):
    structure = write("a.txt", "structure A\ndomain 1\nrel E/2: (0,0)\nend\n")
    _, report = dispatch(["eval", "--structure", structure, "--formula", corpus_file("formulas", "has_edge.txt"),
                          "--format", "tabular"])
    assert "RESULT\ttrue" in report.render().splitlines()


def test_check_invariance_reports_counterexample(corpus_file):
    status, report = dispatch(["check-invariance", "--formula", corpus_file("formulas", "min_has_edge.txt"),
                               "--vocab", "E/2", "--max-size", "2"])
    assert status == 0
    assert report.results == ["not-invariant"]
    assert len(report.counterexamples) == 1
    assert "order: " in report.counterexamples[0]


def test_check_invariance_of_even_cardinality(corpus_file):
    status, report = dispatch(["check-invariance", "--formula", corpus_file("formulas", "phi_even.txt"),
                               "--max-size", "4"])
    assert status == 0
    assert report.results == ["invariant-up-to 4"]


def test_commutative_reports_witness(corpus_file):
    status, report = dispatch(["commutative", "--dfa", corpus_file("dfas", "ab_star.txt")])
    assert status == 0
    assert report.results == ["ab_star not-commutative witness=ab/ba"]
    assert report.counterexamples == ["ab_star ab ba"]


def test_parikh_requiring_commutativity(corpus_file):
    status, report = dispatch(["parikh", "--dfa", corpus_file("dfas", "ab_star.txt"), "--require-commutative"])
    assert status == 1
    assert report.diagnostics == ["DIAG not-commutative witness=ab/ba"]


def test_parikh_without_requirement(corpus_file):
    status, report = dispatch(["parikh", "--dfa", corpus_file("dfas", "ab_star.txt")])
    assert status == 0
    assert "partitioned words only" in report.diagnostics[0]
    _, report = dispatch(["parikh", "--dfa", corpus_file("dfas", "even_a.txt")])
    assert report.results[-1] == "even_a {(S[0,2], S[0,1])}"
    assert report.diagnostics == []


def test_usage_errors():
    status, report = dispatch(["nosuch"])
    assert status == 1
    assert report.diagnostics[0].startswith("DIAG usage")
    status, report = dispatch([])
    assert status == 1
    assert report.diagnostics == ["DIAG usage missing subcommand"]


def test_missing_file():
    status, report = dispatch(["commutative", "--dfa", "/nonexistent/dfa.txt"])
    assert status == 1
    assert report.diagnostics[0].startswith("DIAG file-not-found")


def test_guard_exceeded():
    status, report = dispatch(["type", "--vocab", "", "-k", "9"])
    assert status == 2
    assert report.diagnostics == ["DIAG guard-exceeded fo-rank=9 cap=4"]


def test_config_file_lowers_a_guard(write):
    config = write("ordinv.env", "max_fo_rank=1\n")
    status, report = dispatch(["type", "--vocab", "", "-k", "2", "--config", config])
    assert status == 2
    assert "max_fo_rank=1" in report.config


def test_realized_types():
    status, report = dispatch(["type", "--vocab", "", "-k", "2", "--max-size", "3"])
    assert status == 0
    assert report.results == ["realized 3 up-to 3"]
    assert len(report.types) == 3
    assert all(line.startswith("FO k=2 id=") for line in report.types)


def test_invariant_types_of_sets(corpus_file):
    status, report = dispatch(["inv-type", "--structure", corpus_file("structures", "sets.txt"), "-k", "2",
                               "--bound", "4"])
    assert status == 0
    ids = dict(line.split()[:2] for line in report.results)
    assert ids["set3"] == ids["set4"]
    assert ids["set2"] != ids["set3"]


def test_tree_automaton_run(write, corpus_file):
    trees = write("trees.txt", "a(a, b)\na(b, a)\n")
    status, report = dispatch(["ta-run", "--automaton", corpus_file("tree_automata", "sorted_children.txt"),
                               "--tree", trees])
    assert status == 0
    assert report.results == ["a(a, b) accept", "a(b, a) reject blocked=root"]


def test_tree_automaton_checks(corpus_file):
    _, report = dispatch(["ta-check-invariant", "--automaton", corpus_file("tree_automata", "sorted_children.txt")])
    assert report.results == ["sorted_children not-invariant", "sorted_children deterministic"]
    assert report.counterexamples[0].startswith("delta qa a witness=")


def test_tree_automaton_to_counting(corpus_file, tmp_path):
    output = tmp_path / "counting.txt"
    status, report = dispatch(["ta-to-counting", "--automaton", corpus_file("tree_automata", "leaf_even_a.txt"),
                               "--output", str(output)])
    assert status == 0
    assert report.results[0] == "counting count(leaf_even_a)"
    assert output.read_text().startswith("counting count(leaf_even_a)\n")


def test_union_table():
    status, report = dispatch(["fv-table", "--op", "union", "--vocab", "E/2", "-k", "1", "--bound", "1",
                               "--replay", "5"])
    assert status == 0
    assert report.results == ["union FO k=1 up-to 1 entries=9 functional=yes", "replay 5 mismatches=0",
                              "swap-symmetric yes"]


def test_main_writes_the_report(capsys, write, corpus_file):
    structure = write("a.txt", "structure A\ndomain 2\nend\n")
    assert main(["eval", "--structure", structure, "--formula", corpus_file("formulas", "count_even.txt")]) == 0
    out = capsys.readouterr().out
    assert out.startswith("COMMAND eval ")
    assert "RESULT true\n" in out


def test_unexpected_failure_becomes_an_internal_error_diag(write, monkeypatch, capsys):
    def explode(args, config, report):
        raise RuntimeError("boom")

    monkeypatch.setitem(cli.COMMANDS, "eval", explode)
    structure = write("a.txt", "structure A\ndomain 1\nend\n")
    formula = write("f.txt", "(exists x (= x x))")
    status, report = dispatch(["eval", "--structure", structure, "--formula", formula])
    assert status == 1
    assert report.diagnostics == ["DIAG internal-error RuntimeError: boom"]
    assert main(["eval", "--structure", structure, "--formula", formula]) == 1
    assert "DIAG internal-error RuntimeError: boom" in capsys.readouterr().out
