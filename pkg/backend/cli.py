"""
Command-line surface of the order-invariant types toolkit.

    python cli.py <subcommand> [options]

Reports go to stdout as RESULT / TYPE / COUNTEREXAMPLE / DIAG lines; logs go
to stderr. Exit status: 0 when a verdict was computed (negative verdicts
included), 1 on input errors, 2 when a configured guard is exceeded.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

from config import Config, load_config
from models.formulas import Formula
from models.schemas import Report
from models.structures import ORDER, LinearOrder, Structure
from services.composition_service import (OPERATIONS, UNION, build_composition_table, replay, union_swap_symmetric,
                                          verify_flip_transport, verify_lex_ef_lemma)
from services.corpus_service import run_battery
from services.dfa_service import commutativity_counterexample, is_commutative, parikh_decompose, witness_text
from services.errors import InputError, ToolkitError
from services.formula_parser import to_sexpr
from services.invariance_service import (build_flip_partition, build_sibling_partition, check_invariance,
                                         check_sibling_invariance, invariant_type_of, tree_invariant_type_of)
from services.logic_service import LogicService, sib_order_formula, uses_order
from services.structure_service import tree_vocabulary, with_order
from services.text_formats import (dump_counting_automaton, dump_tree, dump_tree_automaton, format_word,
                                   parse_alphabet, parse_dfas, parse_structure, parse_structures,
                                   parse_tree_automaton, parse_trees, parse_vocabulary)
from services.tree_automata_service import (address_text, courcelle_equivalence_check, is_sibling_invariant,
                                            nondeterminism_witness, run, synthesis_splits,
                                            synthesize_invariant_type_ta, to_counting_automaton)
from services.type_service import FO, LOGICS, TypeRegistry, ef_equivalent, materialize_type_sentence, rank_type, \
    realized_types, type_hash

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors raised as input errors instead of exiting."""

    def error(self, message: str):
        raise InputError(message, code="usage")


def _read(path: str) -> str:
    file = Path(path)
    if not file.is_file():
        raise InputError(f"file not found: {path}", code="file-not-found")
    return file.read_text()


def _ordered(structure: Structure, order: Optional[LinearOrder]) -> Structure:
    if structure.vocab.has_relation(ORDER):
        return structure
    return with_order(structure, order or LinearOrder.natural(structure.size))


def _assignment(items: List[str]) -> Tuple[Dict[str, object], List[str], List[str]]:
    """x=1 binds an element, X={0,2} binds a set."""
    values: Dict[str, object] = {}
    for item in items or []:
        name, eq, value = item.partition("=")
        value = value.strip()
        if not eq or not name.strip():
            raise InputError(f"expected NAME=VALUE, found {item!r}", code="assignment-error")
        try:
            if value.startswith("{") and value.endswith("}"):
                values[name.strip()] = frozenset(int(v) for v in value[1:-1].split(",") if v.strip())
            else:
                values[name.strip()] = int(value)
        except ValueError:
            raise InputError(f"bad value in {item!r}", code="assignment-error")
    elements = [n for n, v in values.items() if isinstance(v, int)]
    sets = [n for n, v in values.items() if not isinstance(v, int)]
    return values, elements, sets


def _logic(value: str) -> str:
    logic = value.upper()
    if logic not in LOGICS:
        raise InputError(f"unknown logic {value}", code="unknown-logic")
    return logic


# ---------------------- logic ----------------------

def cmd_eval(args, config: Config, report: Report) -> None:
    structures = parse_structures(_read(args.structure))
    text = _read(args.formula)
    values, elements, sets = _assignment(args.assign)
    service = LogicService(config)
    for structure, order in structures:
        formula = service.parse(text, structure.vocab, elements, sets)
        target = _ordered(structure, order) if uses_order(formula) else structure
        value = service.evaluate(target, formula, values)
        prefix = f"{structure.name} " if len(structures) > 1 else ""
        report.results.append(f"{prefix}{str(value).lower()}")


def cmd_type(args, config: Config, report: Report) -> None:
    logic = _logic(args.logic)
    registry = TypeRegistry(config.type_memo_structures)
    if args.structure:
        found = [(rank_type(_ordered(s, o) if o else s, args.k, logic, registry=registry, config=config), s)
                 for s, o in parse_structures(_read(args.structure))]
    else:
        found = realized_types(parse_vocabulary(args.vocab), args.k, logic, args.max_size, registry, config)
        report.results.append(f"realized {len(found)} up-to {args.max_size}")
    for tid, witness in found:
        report.types.append(f"{logic} k={args.k} id={type_hash(registry, tid)} witness={witness.name}")
        if args.materialize:
            report.results.append(f"{witness.name} {to_sexpr(materialize_type_sentence(tid, registry))}")


def cmd_ef(args, config: Config, report: Report) -> None:
    logic = _logic(args.logic)
    (a, order_a), (b, order_b) = parse_structure(_read(args.first)), parse_structure(_read(args.second))
    if order_a is not None or order_b is not None:
        a, b = _ordered(a, order_a), _ordered(b, order_b)
    verdict = ef_equivalent(a, b, args.k, logic, config)
    report.results.append(f"{'equivalent' if verdict else 'not-equivalent'} {logic} k={args.k}")


# ---------------------- invariance ----------------------

def cmd_inv_type(args, config: Config, report: Report) -> None:
    logic = _logic(args.logic)
    registry = TypeRegistry(config.type_memo_structures)
    built = []
    if args.tree:
        trees = parse_trees(_read(args.tree))
        alphabet = parse_alphabet(args.alphabet) if args.alphabet else \
            tuple(sorted({label for tree in trees for label in tree.alphabet}))
        bound = args.bound if args.bound is not None else config.invariant_type_bound
        partition = build_sibling_partition(alphabet, args.k, logic, bound, registry, config)
        built.append(partition)
        for tree in trees:
            report.results.append(f"{dump_tree(tree)} {tree_invariant_type_of(tree, partition, config)} "
                                  f"up-to {bound}")
    else:
        structures = [s for s, _ in parse_structures(_read(args.structure))]
        bound = args.bound if args.bound is not None else config.invariant_type_bound
        partitions = {}
        for structure in structures:
            if structure.vocab not in partitions:
                partitions[structure.vocab] = build_flip_partition(structure.vocab, args.k, logic, bound=bound,
                                                                   registry=registry, config=config)
                built.append(partitions[structure.vocab])
            partition = partitions[structure.vocab]
            report.results.append(f"{structure.name} {invariant_type_of(structure, partition, config)} "
                                  f"up-to {bound}")
    if args.dump:
        Path(args.dump).write_text("".join(p.dump() for p in built))


def cmd_check_invariance(args, config: Config, report: Report) -> None:
    service = LogicService(config)
    text = _read(args.formula)
    if args.trees:
        alphabet = parse_alphabet(args.trees)
        formula = service.parse(text, tree_vocabulary(alphabet, ordered=True))
        if uses_order(formula):
            formula = sib_order_formula(formula, config.edge_semantics)
        verdict = check_sibling_invariance(formula, alphabet, args.max_size, config)
    else:
        vocab = parse_vocabulary(args.vocab)
        verdict = check_invariance(service.parse(text, vocab), vocab, args.max_size, config)
    if verdict.invariant:
        report.results.append(verdict.describe())
    else:
        report.results.append("not-invariant")
        report.counterexamples.append(verdict.counterexample.describe())


# ---------------------- automata ----------------------

def cmd_commutative(args, config: Config, report: Report) -> None:
    for dfa in parse_dfas(_read(args.dfa)):
        if is_commutative(dfa):
            report.results.append(f"{dfa.name} commutative")
            continue
        report.results.append(f"{dfa.name} not-commutative witness={witness_text(dfa)}")
        left, right = commutativity_counterexample(dfa)
        report.counterexamples.append(f"{dfa.name} {format_word(left)} {format_word(right)}")


def cmd_parikh(args, config: Config, report: Report) -> None:
    for dfa in parse_dfas(_read(args.dfa)):
        semilinear = parikh_decompose(dfa, args.require_commutative, config)
        if not args.require_commutative and not is_commutative(dfa):
            report.diagnostics.append(f"DIAG not-commutative witness={witness_text(dfa)} "
                                      f"decomposition describes {dfa.name} on partitioned words only")
        report.results.append(f"{dfa.name} alphabet={','.join(dfa.alphabet)} tuples={len(semilinear)}")
        report.results.append(f"{dfa.name} {semilinear}")


def cmd_ta_run(args, config: Config, report: Report) -> None:
    automaton = parse_tree_automaton(_read(args.automaton))
    for tree in parse_trees(_read(args.tree)):
        outcome = run(automaton, tree)
        line = f"{dump_tree(tree)} {'accept' if outcome.accepted else 'reject'}"
        if outcome.failure is not None:
            line += f" blocked={address_text(outcome.failure)}"
        report.results.append(line)


def cmd_ta_check_invariant(args, config: Config, report: Report) -> None:
    automaton = parse_tree_automaton(_read(args.automaton))
    invariant = is_sibling_invariant(automaton)
    report.results.append(f"{automaton.name} {'invariant' if invariant else 'not-invariant'}")
    for (q, a), dfa in automaton.delta:
        if not is_commutative(dfa):
            report.counterexamples.append(f"delta {q} {a} witness={witness_text(dfa)}")
    witness = nondeterminism_witness(automaton)
    if witness is None:
        report.results.append(f"{automaton.name} deterministic")
    else:
        report.results.append(f"{automaton.name} nondeterministic states={witness[0]},{witness[1]} "
                              f"label={witness[2]}")


def cmd_ta_to_counting(args, config: Config, report: Report) -> None:
    automaton = parse_tree_automaton(_read(args.automaton))
    counting = to_counting_automaton(automaton, config)
    text = dump_counting_automaton(counting)
    if args.output:
        Path(args.output).write_text(text)
    report.results.extend(text.splitlines())


def cmd_ta_synth(args, config: Config, report: Report) -> None:
    alphabet = parse_alphabet(args.alphabet)
    logic = _logic(args.logic)
    sentence: Optional[Formula] = None
    if args.sentence:
        service = LogicService(config)
        sentence = service.parse(_read(args.sentence), tree_vocabulary(alphabet, ordered=True))
        if uses_order(sentence):
            sentence = sib_order_formula(sentence, config.edge_semantics)
    registry = TypeRegistry(config.type_memo_structures)
    result = synthesize_invariant_type_ta(alphabet, args.k, args.bound, logic, sentence, registry, config)
    report.results += [f"synth {line}" for line in result.diagnostics.lines()]
    report.results.append(f"synth final={','.join(q for q in result.automaton.states if q in result.automaton.final)}")
    if args.compare:
        larger = synthesize_invariant_type_ta(alphabet, args.k, args.compare, logic, sentence, registry, config)
        splits = synthesis_splits(result, larger)
        report.results.append(f"splits-at {args.compare} {len(splits)}")
        report.counterexamples += [f"split {line}" for line in splits]
    if not result.diagnostics.passed:
        report.diagnostics.append("DIAG synthesis-inconsistent universe bound too small for the flip quotient")
    if args.output:
        Path(args.output).write_text(dump_tree_automaton(result.automaton))


def cmd_courcelle_check(args, config: Config, report: Report) -> None:
    alphabet = parse_alphabet(args.alphabet)
    service = LogicService(config)
    counting = service.parse(_read(args.counting), tree_vocabulary(alphabet))
    ordered = service.parse(_read(args.ordered), tree_vocabulary(alphabet, ordered=True))
    if uses_order(ordered):
        ordered = sib_order_formula(ordered, config.edge_semantics)
    verdict = courcelle_equivalence_check(counting, ordered, alphabet, args.bound, config)
    report.results.append(verdict.describe())
    if not verdict.equivalent:
        report.counterexamples.append(verdict.counterexample)


# ---------------------- composition ----------------------

def cmd_fv_table(args, config: Config, report: Report) -> None:
    logic = _logic(args.logic)
    vocab = parse_vocabulary(args.vocab)
    if args.op not in OPERATIONS:
        raise InputError(f"unknown operation {args.op}", code="invalid-parameter")
    table, diagnostics = build_composition_table(args.op, vocab, args.k, args.bound, logic, config=config)
    report.results.append(f"{args.op} {logic} k={args.k} up-to {args.bound} entries={len(table)} "
                          f"functional={'yes' if diagnostics.functional else 'no'}")
    report.diagnostics += [f"DIAG fv-violation {line}" for line in diagnostics.violations]
    mismatches = replay(table, args.replay, config.seed, config) if args.replay else []
    if args.replay:
        report.results.append(f"replay {args.replay} mismatches={len(mismatches)}")
    report.counterexamples += [f"replay {line}" for line in mismatches]
    if args.op == UNION:
        asymmetric = union_swap_symmetric(table, config)
        report.results.append(f"swap-symmetric {'yes' if not asymmetric else 'no'}")
        report.counterexamples += [f"swap {line}" for line in asymmetric]
    if args.lemma:
        verdict = verify_lex_ef_lemma(args.k, min(args.bound, config.max_fv_product_size), vocab, config=config)
        report.results.append(f"lex-lemma {verdict.describe()}")
        report.counterexamples += [f"lex {line}" for line in verdict.violations]
    if args.transport:
        verdict = verify_flip_transport(args.op, args.k, args.bound, vocab, args.transport, config.seed,
                                        config=config)
        report.results.append(f"flip-transport {verdict.describe()}")
        report.counterexamples += [f"transport {line}" for line in verdict.violations]
    if args.output:
        Path(args.output).write_text(table.dump())


def cmd_corpus(args, config: Config, report: Report) -> None:
    if args.action != "verify":
        raise InputError(f"unknown corpus action {args.action}", code="usage")
    results = run_battery(args.full, config)
    report.results += [result.line() for result in results]
    failed = [result.name for result in results if not result.passed]
    if failed:
        report.diagnostics.append(f"DIAG corpus-failure {','.join(failed)}")
        report.exit_status = 1


# ---------------------- dispatch ----------------------

COMMANDS: Dict[str, Callable] = {
    "eval": cmd_eval,
    "type": cmd_type,
    "ef": cmd_ef,
    "inv-type": cmd_inv_type,
    "check-invariance": cmd_check_invariance,
    "commutative": cmd_commutative,
    "parikh": cmd_parikh,
    "ta-run": cmd_ta_run,
    "ta-check-invariant": cmd_ta_check_invariant,
    "ta-to-counting": cmd_ta_to_counting,
    "ta-synth": cmd_ta_synth,
    "courcelle-check": cmd_courcelle_check,
    "fv-table": cmd_fv_table,
    "corpus": cmd_corpus,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key=value file overriding guard defaults")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int)
    common.add_argument("--format", dest="report_format", choices=["plain", "tabular"])
    common.add_argument("--edge-semantics", choices=["child", "descendant"])
    common.add_argument("--log-level")

    parser = _Parser(prog="ordinv", description="Order-invariant types toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("eval", parents=[common], help="evaluate a formula on structures")
    p.add_argument("--structure", required=True)
    p.add_argument("--formula", required=True)
    p.add_argument("--assign", action="append", default=[])

    p = sub.add_parser("type", parents=[common], help="rank-k types")
    p.add_argument("--structure")
    p.add_argument("--vocab", default="")
    p.add_argument("--max-size", type=int, default=2)
    p.add_argument("-k", "--k", type=int, default=1)
    p.add_argument("--logic", default=FO)
    p.add_argument("--materialize", action="store_true")

    p = sub.add_parser("ef", parents=[common], help="k-round game between two structures")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("-k", "--k", type=int, default=1)
    p.add_argument("--logic", default=FO)

    p = sub.add_parser("inv-type", parents=[common], help="order-invariant types")
    p.add_argument("--structure")
    p.add_argument("--tree")
    p.add_argument("--alphabet")
    p.add_argument("-k", "--k", type=int, default=1)
    p.add_argument("--logic", default=FO)
    p.add_argument("--bound", type=int)
    p.add_argument("--dump")

    p = sub.add_parser("check-invariance", parents=[common], help="order invariance of a sentence")
    p.add_argument("--formula", required=True)
    p.add_argument("--vocab", default="")
    p.add_argument("--trees", help="label alphabet; checks sibling-order invariance over trees")
    p.add_argument("--max-size", type=int, default=4)

    p = sub.add_parser("commutative", parents=[common], help="permutation closure of DFA languages")
    p.add_argument("--dfa", required=True)

    p = sub.add_parser("parikh", parents=[common], help="semilinear decomposition")
    p.add_argument("--dfa", required=True)
    p.add_argument("--require-commutative", action="store_true")

    p = sub.add_parser("ta-run", parents=[common], help="run a tree automaton")
    p.add_argument("--automaton", required=True)
    p.add_argument("--tree", required=True)

    p = sub.add_parser("ta-check-invariant", parents=[common], help="sibling invariance of a tree automaton")
    p.add_argument("--automaton", required=True)

    p = sub.add_parser("ta-to-counting", parents=[common], help="counting automaton of an invariant automaton")
    p.add_argument("--automaton", required=True)
    p.add_argument("--output")

    p = sub.add_parser("ta-synth", parents=[common], help="synthesize the invariant-type tree automaton")
    p.add_argument("--alphabet", required=True)
    p.add_argument("-k", "--k", type=int, default=1)
    p.add_argument("--bound", type=int, default=4)
    p.add_argument("--logic", default=FO)
    p.add_argument("--sentence")
    p.add_argument("--compare", type=int)
    p.add_argument("--output")

    p = sub.add_parser("courcelle-check", parents=[common], help="CMSO against sib-ordered MSO on trees")
    p.add_argument("--counting", required=True)
    p.add_argument("--ordered", required=True)
    p.add_argument("--alphabet", required=True)
    p.add_argument("--bound", type=int, default=4)

    p = sub.add_parser("fv-table", parents=[common], help="composition table for unions or products")
    p.add_argument("--op", default=UNION)
    p.add_argument("--vocab", default="E/2")
    p.add_argument("-k", "--k", type=int, default=1)
    p.add_argument("--bound", type=int, default=2)
    p.add_argument("--logic", default=FO)
    p.add_argument("--replay", type=int, default=20)
    p.add_argument("--lemma", action="store_true")
    p.add_argument("--transport", type=int, default=0)
    p.add_argument("--output")

    p = sub.add_parser("corpus", parents=[common], help="run the shipped example battery")
    p.add_argument("action", choices=["verify"])
    p.add_argument("--full", action="store_true")
    return parser


def dispatch(argv: List[str]) -> Tuple[int, Report]:
    report = Report(command=" ".join(argv))
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise InputError("missing subcommand", code="usage")
        config = load_config(args.config, seed=args.seed, jobs=args.jobs, report_format=args.report_format,
                             edge_semantics=args.edge_semantics, log_level=args.log_level)
        level = logging.getLevelName(config.log_level.upper())
        if isinstance(level, int):
            logging.getLogger().setLevel(level)
        report.config = config.echo()
        report.report_format = config.report_format
        COMMANDS[args.command](args, config, report)
    except ToolkitError as e:
        logger.error(f"{e.code}: {e.message}")
        report.diagnostics.append(e.diag())
        report.exit_status = e.exit_status
    except Exception as e:
        logger.exception(f"Unexpected failure running {report.command}")
        report.diagnostics.append(f"DIAG internal-error {type(e).__name__}: {e}".rstrip())
        report.exit_status = 1
    return report.exit_status, report


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    status, report = dispatch(argv)
    sys.stdout.write(report.render())
    return status


if __name__ == "__main__":
    sys.exit(main())
