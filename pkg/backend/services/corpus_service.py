"""
Corpus Service
The shipped example corpus and the acceptance battery run by `corpus verify`.
Quick mode scales every sweep down to unit-test time; full mode runs the
desk-scale bounds.
"""
from __future__ import annotations

import logging
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, List, Tuple

from config import Config, default_config
from models.automata import Dfa, TreeAutomaton
from models.formulas import Count, Eq, Formula, Var
from models.structures import Structure, UnrankedTree, Vocabulary
from services.composition_service import (PRODUCT, UNION, build_composition_table, replay, stability_violations,
                                          union_swap_symmetric, verify_flip_transport, verify_lex_ef_lemma)
from services.dfa_service import (is_commutative, minimize, parikh_decompose, parikh_vector, permutation_closed_upto,
                                  random_commutative_dfa, random_dfa, words)
from services.errors import InputError
from services.formula_parser import parse_formula
from services.invariance_service import (FlipPartition, InvariantTypeId, build_flip_partition, check_invariance,
                                         invariant_type_of, query_membership)
from services.logic_service import expand_counting, phi_even, quantifier_rank, sib_order_formula, uses_sets
from services.structure_service import enumerate_structures, enumerate_trees, sibling_orders
from services.text_formats import parse_dfas, parse_structures, parse_tree_automata, parse_trees
from services.tree_automata_service import (courcelle_equivalence_check, is_sibling_invariant, run, run_counting,
                                            synthesis_splits, synthesize_invariant_type_ta, to_counting_automaton)
from services.type_service import FO, MSO, TypeId, TypeRegistry, ef_equivalent, rank_type

logger = logging.getLogger(__name__)

EDGE = Vocabulary.create([("E", 2)])
UNARY = Vocabulary.create([("P", 1)])
EMPTY = Vocabulary.create()


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{self.name} {'pass' if self.passed else 'fail'} {self.detail}".rstrip()


@dataclass(frozen=True)
class Corpus:
    dfas: Tuple[Dfa, ...]
    tree_automata: Tuple[TreeAutomaton, ...]
    trees: Tuple[UnrankedTree, ...]
    formulas: Dict[str, str]
    structure_files: Tuple[str, ...]


def _texts(root: Path, folder: str) -> List[Tuple[str, str]]:
    directory = root / folder
    if not directory.is_dir():
        return []
    return [(path.name, path.read_text()) for path in sorted(directory.glob("*.txt"))]


def load_corpus(config: Config = default_config) -> Corpus:
    root = Path(config.corpus_dir)
    if not root.is_dir():
        raise InputError(f"corpus directory not found: {root}", code="file-not-found")
    dfas = [dfa for _, text in _texts(root, "dfas") for dfa in parse_dfas(text)]
    automata = [ta for _, text in _texts(root, "tree_automata") for ta in parse_tree_automata(text)]
    trees = [tree for _, text in _texts(root, "trees") for tree in parse_trees(text)]
    formulas = {name: text for name, text in _texts(root, "formulas")}
    structures = []
    for name, text in _texts(root, "structures"):
        parse_structures(text)
        structures.append(name)
    logger.info(f"Loaded corpus from {root}: {len(dfas)} DFAs, {len(automata)} tree automata, "
                f"{len(trees)} trees, {len(formulas)} formulas")
    return Corpus(tuple(dfas), tuple(automata), tuple(trees), formulas, tuple(structures))


# ---------------------- Checks ----------------------

def check_type_oracle(full: bool, config: Config) -> CheckResult:
    """
    rank_type equality agrees with the game oracle on every small graph. Each type class is
    played member against representative and the representatives against one another, which
    covers every pair since ≡_k is an equivalence.
    """
    max_size = 4 if full else 2
    structures = [a for n in range(max_size + 1) for a in enumerate_structures(EDGE, n, True, config)]
    registry = TypeRegistry(config.type_memo_structures)
    disagreements = 0
    games = 0
    for logic in (FO, MSO):
        for k in (1, 2):
            classes: Dict[TypeId, List[Structure]] = {}
            for a in structures:
                classes.setdefault(rank_type(a, k, logic, registry=registry, config=config), []).append(a)
            representatives = [members[0] for members in classes.values()]
            for members in classes.values():
                for other in members[1:]:
                    games += 1
                    if not ef_equivalent(members[0], other, k, logic, config):
                        disagreements += 1
                        logger.warning(f"Same {logic} k={k} type, game lost: {members[0].name} {other.name}")
            for i, a in enumerate(representatives):
                for b in representatives[i + 1:]:
                    games += 1
                    if ef_equivalent(a, b, k, logic, config):
                        disagreements += 1
                        logger.warning(f"Different {logic} k={k} types, game won: {a.name} {b.name}")
    return CheckResult("type-oracle", disagreements == 0,
                       f"up-to {max_size} structures={len(structures)} games={games} disagreements={disagreements}")


def check_even_cardinality(full: bool, config: Config) -> CheckResult:
    phi = phi_even()
    bound = 6 if full else 4
    problems = []
    if quantifier_rank(phi) != 4:
        problems.append(f"qr={quantifier_rank(phi)}")
    verdict = check_invariance(phi, EMPTY, bound, config)
    if not verdict.invariant:
        problems.append(verdict.describe())
    for n in range(9 if full else 7):
        a = next(enumerate_structures(EMPTY, n, True, config))
        if query_membership(phi, a) != (n % 2 == 0):
            problems.append(f"even n={n}")
    mod3 = expand_counting(Count(3, "x", Eq(Var("x"), Var("x"))))
    for n in range(10 if full else 7):
        a = next(enumerate_structures(EMPTY, n, True, config))
        if query_membership(mod3, a) != (n % 3 == 0):
            problems.append(f"mod3 n={n}")
    return CheckResult("even-cardinality", not problems,
                       f"up-to {bound} " + " ".join(problems) if problems else f"up-to {bound}")


def _battery(vocab: Vocabulary) -> List[Tuple[str, Formula]]:
    sentences = [("even", phi_even()), ("all-equal", parse_formula("(forall x (forall y (= x y)))", vocab))]
    if vocab.has_relation("P"):
        sentences.append(("some-P", parse_formula("(exists x (P x))", vocab)))
        sentences.append(("even-P", expand_counting(parse_formula("(count 2 x (P x))", vocab))))
    return sentences


def check_flip_battery(full: bool, config: Config) -> CheckResult:
    """
    Structures in one flip component agree on every verified-invariant battery sentence. Each
    sentence is judged against the partition at its own quantifier rank, in MSO when it uses sets.
    """
    bound = 4 if full else 3
    # the battery runs at the rank of φ_even even where that exceeds the general MSO rank cap
    wide = config.model_copy(update={"max_mso_rank": max(config.max_mso_rank, quantifier_rank(phi_even()))})
    registry = TypeRegistry(config.type_memo_structures)
    violations = 0
    compared = 0
    shared = 0
    evaluated: List[str] = []
    for vocab in (EMPTY, UNARY):
        structures = [a for n in range(bound + 1) for a in enumerate_structures(vocab, n, True, config)]
        partitions: Dict[Tuple[str, int], FlipPartition] = {}
        for label, phi in _battery(vocab):
            if not check_invariance(phi, vocab, bound, config).invariant:
                logger.warning(f"Battery sentence {label} is not invariant over {vocab.key()}; skipped")
                continue
            shape = (MSO if uses_sets(phi) else FO, quantifier_rank(phi))
            if shape not in partitions:
                partitions[shape] = build_flip_partition(vocab, shape[1], shape[0], bound=bound, registry=registry,
                                                         config=wide)
            groups: Dict[InvariantTypeId, List[Structure]] = {}
            for a in structures:
                groups.setdefault(invariant_type_of(a, partitions[shape], wide), []).append(a)
            evaluated.append(f"{vocab.key()}{label}")
            for members in groups.values():
                compared += 1
                shared += len(members) > 1
                if len({query_membership(phi, a) for a in members}) > 1:
                    violations += 1
                    logger.warning(f"Flip component splits {label}: {' '.join(a.name for a in members)}")
    even_everywhere = all(f"{vocab.key()}even" in evaluated for vocab in (EMPTY, UNARY))
    passed = violations == 0 and shared > 0 and even_everywhere
    return CheckResult("flip-battery", passed, f"up-to {bound} sentences={len(evaluated)} groups={compared} "
                                               f"shared={shared} violations={violations}")


def _small_commutative_dfas(corpus: Corpus, count: int, rng: random.Random) -> List[Dfa]:
    found = [dfa for dfa in corpus.dfas if is_commutative(dfa) and len(dfa.alphabet) <= 3]
    while len(found) < count:
        alphabet = ("a", "b", "c")[:rng.randint(1, 3)]
        dfa = random_commutative_dfa(alphabet, rng, max_modulus=2, name=f"C{len(found)}")
        if len(minimize(dfa).states) <= 8:
            found.append(dfa)
    return found[:count]


def check_parikh(corpus: Corpus, full: bool, config: Config) -> CheckResult:
    rng = random.Random(config.seed)
    max_length = 10 if full else 6
    mismatches = 0
    dfas = _small_commutative_dfas(corpus, 50 if full else 10, rng)
    for dfa in dfas:
        semilinear = parikh_decompose(dfa, True, config)
        seen: Dict[Tuple[int, ...], bool] = {}
        for word in words(dfa.alphabet, max_length):
            vector = parikh_vector(word, dfa.alphabet)
            if vector not in seen:
                seen[vector] = vector in semilinear
            if seen[vector] != dfa.accepts(word):
                mismatches += 1
    return CheckResult("parikh", mismatches == 0, f"dfas={len(dfas)} words<={max_length} mismatches={mismatches}")


def check_commutativity(full: bool, config: Config) -> CheckResult:
    rng = random.Random(config.seed)
    mismatches = 0
    count = 200 if full else 50
    for i in range(count):
        alphabet = ("a", "b", "c")[:rng.randint(2, 3)]
        dfa = random_dfa(alphabet, rng.randint(1, 4), rng, f"R{i}")
        # a shortest non-commutativity witness in an n-state minimal DFA has length ≤ 2n-1
        horizon = 2 * len(minimize(dfa).states) - 1
        if is_commutative(dfa) != permutation_closed_upto(dfa, max(horizon, 2)):
            mismatches += 1
    return CheckResult("commutativity", mismatches == 0, f"dfas={count} mismatches={mismatches}")


def check_sibling_semantics(corpus: Corpus, full: bool, config: Config) -> CheckResult:
    """Invariant automata give one verdict over every sibling order; the others are caught."""
    bound = 6 if full else 4
    problems = []
    for automaton in corpus.tree_automata:
        invariant = is_sibling_invariant(automaton)
        order_dependent = False
        for tree in enumerate_trees(automaton.alphabet, bound):
            verdicts = {run(automaton, tree, order).accepted for order in sibling_orders(tree, config)}
            order_dependent = order_dependent or len(verdicts) > 1
        if invariant and order_dependent:
            problems.append(f"{automaton.name} invariant but order-dependent")
        if not invariant and not order_dependent:
            logger.info(f"{automaton.name} is not invariant but no tree up to {bound} nodes shows it")
    return CheckResult("sibling-semantics", not problems,
                       f"automata={len(corpus.tree_automata)} up-to {bound} " + " ".join(problems))


def check_courcelle(corpus: Corpus, full: bool, config: Config) -> CheckResult:
    bound = 8 if full else 5
    mismatches = 0
    checked = 0
    for automaton in corpus.tree_automata:
        if not is_sibling_invariant(automaton):
            continue
        counting = to_counting_automaton(automaton, config)
        for tree in enumerate_trees(automaton.alphabet, bound):
            checked += 1
            if run_counting(counting, tree) != run(automaton, tree).accepted:
                mismatches += 1
    sentence_bound = 5 if full else 3
    verdict = courcelle_equivalence_check(Count(2, "x", Eq(Var("x"), Var("x"))),
                                          sib_order_formula(phi_even(), config.edge_semantics),
                                          ("a", "b"), sentence_bound, config)
    passed = mismatches == 0 and verdict.equivalent
    return CheckResult("courcelle", passed, f"trees={checked} mismatches={mismatches} {verdict.describe()}")


def check_synthesis(full: bool, config: Config) -> CheckResult:
    bound = 6 if full else 3
    registry = TypeRegistry(config.type_memo_structures)
    smaller = synthesize_invariant_type_ta(("a", "b"), 1, bound - 1, FO, registry=registry, config=config)
    larger = synthesize_invariant_type_ta(("a", "b"), 1, bound, FO, registry=registry, config=config)
    splits = synthesis_splits(smaller, larger)
    diagnostics = larger.diagnostics
    return CheckResult("synthesis", diagnostics.passed and not splits,
                       f"up-to {bound} states={diagnostics.states} transitions={diagnostics.transitions} "
                       f"splits={len(splits)}")


def check_composition(full: bool, config: Config) -> CheckResult:
    """
    Union and product tables are functional, replay on fresh pairs, unions are swap-symmetric and
    consecutive bounds of one table never split a composite type.
    """
    registry = TypeRegistry(config.type_memo_structures)
    problems = []
    if full:
        runs = [(UNION, EDGE, FO, 1, 2), (UNION, EDGE, FO, 1, 3), (PRODUCT, EDGE, FO, 1, 2),
                (PRODUCT, UNARY, FO, 1, 2), (PRODUCT, UNARY, FO, 1, 3), (UNION, EDGE, MSO, 1, 1)]
    else:
        runs = [(UNION, EDGE, FO, 1, 1), (UNION, EDGE, FO, 1, 2), (PRODUCT, EDGE, FO, 1, 2)]
    entries = 0
    previous = {}
    for op, vocab, logic, k, bound in runs:
        table, diagnostics = build_composition_table(op, vocab, k, bound, logic, registry, config)
        entries += len(table)
        problems += diagnostics.violations
        problems += replay(table, 20, config.seed, config)
        if op == UNION:
            problems += union_swap_symmetric(table, config)
        shape = (op, vocab.key(), logic, k)
        if shape in previous:
            problems += stability_violations(previous[shape], table, config)
        previous[shape] = table
    return CheckResult("composition", not problems, f"tables={len(runs)} entries={entries} "
                                                    f"problems={len(problems)}")


def check_lex_lemma(full: bool, config: Config) -> CheckResult:
    runs = [(1, 3, EDGE), (2, 2, EDGE), (2, 3, UNARY)] if full else [(1, 2, EDGE)]
    verdicts = [verify_lex_ef_lemma(k, max_size, vocab, config=config) for k, max_size, vocab in runs]
    transport = [verify_flip_transport(op, 1, 3 if full else 2, EDGE, 10, config.seed, config=config)
                 for op in (UNION, PRODUCT)]
    passed = all(v.passed for v in verdicts) and all(t.passed for t in transport)
    return CheckResult("lex-lemma", passed, "lemma " + " ".join(v.describe() for v in verdicts) +
                       " transport " + " ".join(t.describe() for t in transport))


def run_battery(full: bool = False, config: Config = default_config) -> List[CheckResult]:
    corpus = load_corpus(config)
    checks: List[Tuple[str, Callable[[], CheckResult]]] = [
        ("type-oracle", lambda: check_type_oracle(full, config)),
        ("even-cardinality", lambda: check_even_cardinality(full, config)),
        ("flip-battery", lambda: check_flip_battery(full, config)),
        ("parikh", lambda: check_parikh(corpus, full, config)),
        ("commutativity", lambda: check_commutativity(full, config)),
        ("sibling-semantics", lambda: check_sibling_semantics(corpus, full, config)),
        ("courcelle", lambda: check_courcelle(corpus, full, config)),
        ("synthesis", lambda: check_synthesis(full, config)),
        ("composition", lambda: check_composition(full, config)),
        ("lex-lemma", lambda: check_lex_lemma(full, config)),
    ]
    results = []
    for name, check in checks:
        started = time.time()
        result = check()
        logger.info(f"Check {name}: {'pass' if result.passed else 'fail'} in {time.time() - started:.1f}s")
        results.append(result)
    return results

