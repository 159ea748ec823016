"""
Tree Automata Service
Unranked tree automata with DFA horizontal languages: runs, determinism and
sibling-invariance checks, subset determinization, translation to counting
automata (semilinear horizontal constraints), and bounded synthesis of the
automaton that labels a tree with its sibling-invariant rank-k type.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from config import Config, default_config
from models.automata import CountingTreeAutomaton, Dfa, Run, SemilinearSet, TreeAutomaton
from models.formulas import Formula
from models.structures import Address, SiblingOrder, UnrankedTree
from services.dfa_service import is_commutative, is_empty, parikh_decompose, product
from services.errors import InputError, NondeterminismError, check_guard
from services.invariance_service import (InvarianceVerdict, build_sibling_partition, check_sibling_invariance,
                                         tree_invariant_type_of)
from services.logic_service import evaluate
from services.structure_service import enumerate_trees, tree_key, tree_to_structure
from services.type_service import MSO, TypeRegistry

logger = logging.getLogger(__name__)


def address_text(address: Address) -> str:
    return ".".join(map(str, address)) or "root"


def _check_labels(automaton, tree: UnrankedTree) -> None:
    outside = set(tree.alphabet) - set(automaton.alphabet)
    if outside:
        raise InputError(f"labels {sorted(outside)} outside alphabet {list(automaton.alphabet)}",
                         code="label-outside")


# ---------------------- Structural checks ----------------------

def is_deterministic(automaton: TreeAutomaton) -> bool:
    """No two states share a horizontal word for the same label (pairwise product emptiness)."""
    return nondeterminism_witness(automaton) is None


def nondeterminism_witness(automaton: TreeAutomaton) -> Optional[Tuple[str, str, str]]:
    for a in automaton.alphabet:
        present = [q for q in automaton.states if automaton.horizontal(q, a) is not None]
        for i, q in enumerate(present):
            for r in present[i + 1:]:
                both = product(_aligned(automaton.horizontal(q, a), automaton.states),
                               _aligned(automaton.horizontal(r, a), automaton.states), "and")
                if not is_empty(both):
                    return q, r, a
    return None


def _aligned(dfa: Dfa, states: Sequence[str]) -> Dfa:
    """Same DFA with its alphabet listed in state order."""
    if dfa.alphabet == tuple(states):
        return dfa
    return Dfa(tuple(states), dfa.states, dfa.initial, dfa.accepting, dfa.transitions, dfa.name)


def is_sibling_invariant(automaton: TreeAutomaton) -> bool:
    """Every horizontal language is closed under permutation."""
    return all(is_commutative(dfa) for _, dfa in automaton.delta)


def require_invariant(automaton: TreeAutomaton) -> None:
    for (q, a), dfa in automaton.delta:
        if not is_commutative(dfa):
            raise InputError(f"horizontal language ({q}, {a}) is not permutation-closed", code="not-invariant")


# ---------------------- Runs ----------------------

def run(automaton: TreeAutomaton, tree: UnrankedTree, order: Optional[SiblingOrder] = None) -> Run:
    """Bottom-up run along `order` (text order by default)."""
    _check_labels(automaton, tree)
    order = order or SiblingOrder.text_order(tree)
    order.validate(tree)
    if not is_deterministic(automaton):
        accepted = bool(_subset_states(automaton, tree, order, ()) & automaton.final)
        return Run(accepted)
    labels = tree.label_map()
    assigned: Dict[Address, str] = {}
    for address in sorted(tree.nodes, key=len, reverse=True):
        word = tuple(assigned[kid] for kid in order.group(address))
        candidates = [q for q in automaton.states
                      if automaton.horizontal(q, labels[address]) is not None
                      and automaton.horizontal(q, labels[address]).accepts(word)]
        if not candidates:
            logger.info(f"Run of {automaton.name} blocked at {address_text(address)}")
            return Run(False, tuple(sorted(assigned.items())), address)
        assigned[address] = candidates[0]
    return Run(assigned[()] in automaton.final, tuple(sorted(assigned.items())))


def _subset_states(automaton: TreeAutomaton, tree: UnrankedTree, order: SiblingOrder,
                   address: Address) -> FrozenSet[str]:
    """States reachable at `address` by some run of a nondeterministic automaton."""
    child_sets = [_subset_states(automaton, tree, order, kid) for kid in order.group(address)]
    label = tree.label(address)
    result = set()
    for q in automaton.states:
        dfa = automaton.horizontal(q, label)
        if dfa is None:
            continue
        current = {dfa.initial}
        for options in child_sets:
            current = {dfa.step(s, letter) for s in current for letter in options}
        if current & dfa.accepting:
            result.add(q)
    return frozenset(result)


def accepts_unordered(automaton: TreeAutomaton, tree: UnrankedTree) -> bool:
    """Verdict on an unordered tree; any sibling order gives the same answer for invariant automata."""
    require_invariant(automaton)
    return run(automaton, tree).accepted


# ---------------------- Determinization ----------------------

def subset_name(states: FrozenSet[str], order: Sequence[str]) -> str:
    return "{" + ",".join(q for q in order if q in states) + "}"


def determinize(automaton: TreeAutomaton, config: Config = default_config) -> TreeAutomaton:
    """Subset construction: a node's new state is the set of old states some run can assign."""
    check_guard(len(automaton.states), config.max_determinize_states, "determinize-states")
    subsets = [frozenset(c) for n in range(len(automaton.states) + 1)
               for c in itertools.combinations(automaton.states, n)]
    letters = [subset_name(s, automaton.states) for s in subsets]
    by_name = dict(zip(letters, subsets))
    delta: Dict[Tuple[str, str], Dfa] = {}
    for a in automaton.alphabet:
        horizontals = [(q, automaton.horizontal(q, a)) for q in automaton.states]
        horizontals = [(q, d) for q, d in horizontals if d is not None]
        start = tuple(frozenset([d.initial]) for _, d in horizontals)
        seen = {start: "0"}
        queue = [start]
        transitions: Dict[Tuple[str, str], str] = {}
        while queue:
            vector = queue.pop(0)
            for letter in letters:
                options = by_name[letter]
                nxt = tuple(frozenset(d.step(s, o) for s in part for o in options)
                            for (_, d), part in zip(horizontals, vector))
                if nxt not in seen:
                    seen[nxt] = str(len(seen))
                    queue.append(nxt)
                transitions[(seen[vector], letter)] = seen[nxt]
        check_guard(len(seen), config.max_determinized_dfa_states, "determinize-dfa-states")
        for target, name in zip(subsets, letters):
            accepting = [seen[v] for v in seen
                         if frozenset(q for (q, d), part in zip(horizontals, v) if part & d.accepting) == target]
            if accepting:
                delta[(name, a)] = Dfa.build(letters, list(seen.values()), "0", accepting, transitions,
                                             f"{name}/{a}")
    final = [name for name, s in zip(letters, subsets) if s & automaton.final]
    result = TreeAutomaton(automaton.alphabet, tuple(letters), frozenset(final), tuple(delta.items()),
                           f"det({automaton.name})")
    logger.info(f"Determinized {automaton.name}: {len(automaton.states)} -> {len(letters)} states")
    return result


# ---------------------- Counting automata ----------------------

def to_counting_automaton(automaton: TreeAutomaton, config: Config = default_config) -> CountingTreeAutomaton:
    """Replace every horizontal DFA by its Parikh decomposition over child-state counts."""
    require_invariant(automaton)
    delta = []
    for (q, a), dfa in automaton.delta:
        decomposed = parikh_decompose(dfa, False, config)
        index = [dfa.alphabet.index(s) for s in automaton.states]
        reordered = frozenset(tuple(entry[i] for i in index) for entry in decomposed.tuples)
        delta.append(((q, a), SemilinearSet(len(automaton.states), reordered)))
    return CountingTreeAutomaton(automaton.alphabet, automaton.states, automaton.final, tuple(delta),
                                 f"count({automaton.name})")


def run_counting(automaton: CountingTreeAutomaton, tree: UnrankedTree) -> bool:
    """Bottom-up on the unordered tree; every node must have exactly one candidate state."""
    _check_labels(automaton, tree)
    labels = tree.label_map()
    index = {q: i for i, q in enumerate(automaton.states)}
    assigned: Dict[Address, str] = {}
    for address in sorted(tree.nodes, key=len, reverse=True):
        vector = [0] * len(automaton.states)
        for kid in tree.children(address):
            vector[index[assigned[kid]]] += 1
        candidates = [q for q in automaton.states
                      if automaton.constraint(q, labels[address]) is not None
                      and tuple(vector) in automaton.constraint(q, labels[address])]
        if len(candidates) != 1:
            raise NondeterminismError(address_text(address), len(candidates))
        assigned[address] = candidates[0]
    return assigned[()] in automaton.final


# ---------------------- Synthesis ----------------------

@dataclass
class SynthesisDiagnostics:
    trees: int = 0
    states: int = 0
    transitions: int = 0
    functional: bool = True
    permutation_independent: bool = True
    conflicts: List[str] = field(default_factory=list)
    horizon: int = 0

    def lines(self) -> List[str]:
        found = [f"trees={self.trees} states={self.states} transitions={self.transitions}",
                 f"functional-consistency {'pass' if self.functional else 'fail'}",
                 f"permutation-independence {'pass' if self.permutation_independent else 'fail'}",
                 f"partial beyond bound {self.horizon}"]
        return found + [f"conflict {c}" for c in self.conflicts]

    @property
    def passed(self) -> bool:
        return self.functional and self.permutation_independent


@dataclass
class SynthesisResult:
    automaton: TreeAutomaton
    diagnostics: SynthesisDiagnostics
    table: Dict[Tuple[str, Tuple[str, ...]], str]
    tree_states: Dict[str, str]


def count_threshold_dfa(states: Sequence[str], accepted: Set[Tuple[int, ...]], universe: Set[Tuple[int, ...]],
                        name: str) -> Dfa:
    """DFA over `states` tracking the child-count vector inside a downward-closed universe; outside it, a sink."""

    def label(vector: Tuple[int, ...]) -> str:
        return "v" + "-".join(map(str, vector))

    delta = {("sink", s): "sink" for s in states}
    for vector in universe:
        for i, s in enumerate(states):
            nxt = vector[:i] + (vector[i] + 1,) + vector[i + 1:]
            delta[(label(vector), s)] = label(nxt) if nxt in universe else "sink"
    names = [label(v) for v in sorted(universe)] + ["sink"]
    return Dfa.build(states, names, label(tuple(0 for _ in states)), [label(v) for v in accepted], delta, name)


def downward_closure(vectors: Set[Tuple[int, ...]], width: int) -> Set[Tuple[int, ...]]:
    closed = {tuple(0 for _ in range(width))}
    for vector in vectors:
        closed.update(itertools.product(*[range(c + 1) for c in vector]))
    return closed


def permutation_violations(automaton: TreeAutomaton, table: Dict[Tuple[str, Tuple[str, ...]], str]) -> List[str]:
    """
    Horizontal languages that are not permutation-closed, and table rows (label, children) -> target
    whose children read in some order miss the target's horizontal DFA.
    """
    problems = [f"{q}/{a} not permutation-closed" for (q, a), dfa in automaton.delta if not is_commutative(dfa)]
    for (label, kids), target in sorted(table.items()):
        dfa = automaton.horizontal(target, label)
        for permutation in sorted(set(itertools.permutations(kids))):
            if dfa is None or not dfa.accepts(permutation):
                problems.append(f"{label}[{' '.join(permutation)}] misses {target}")
                break
    return problems


def synthesize_invariant_type_ta(alphabet: Sequence[str], k: int, bound: int, logic: str = MSO,
                                 sentence: Optional[Formula] = None, registry: Optional[TypeRegistry] = None,
                                 config: Config = default_config) -> SynthesisResult:
    """
    Automaton whose state at a node is the sibling-invariant rank-k type of the subtree there,
    known for every tree of at most `bound` nodes.
    """
    alphabet = tuple(sorted(alphabet))
    check_guard(len(alphabet), config.max_synth_alphabet, "synth-alphabet")
    check_guard(k, config.max_synth_rank, "synth-rank")
    check_guard(bound, config.max_synth_nodes, "synth-nodes")
    registry = registry if registry is not None else TypeRegistry(config.type_memo_structures)
    partition = build_sibling_partition(alphabet, k, logic, bound, registry, config)
    trees = enumerate_trees(alphabet, bound)
    names: Dict[object, str] = {}
    witness: Dict[str, UnrankedTree] = {}
    tree_states: Dict[str, str] = {}
    for tree in trees:
        component = tree_invariant_type_of(tree, partition, config)
        state = names.setdefault(component, f"t{len(names)}")
        witness.setdefault(state, tree)
        tree_states[tree_key(tree)] = state
    states = tuple(names.values())

    diagnostics = SynthesisDiagnostics(trees=len(trees), states=len(states), horizon=bound)
    table: Dict[Tuple[str, Tuple[str, ...]], str] = {}
    for tree in trees:
        target = tree_states[tree_key(tree)]
        kids = [tree_states[tree_key(child)] for child in tree.child_trees()]
        key = (tree.root_label(), tuple(sorted(kids)))
        previous = table.setdefault(key, target)
        if previous != target:
            diagnostics.functional = False
            diagnostics.conflicts.append(f"{key[0]}[{' '.join(key[1])}] -> {previous} vs {target}")
    diagnostics.transitions = len(table)

    delta = []
    for a in alphabet:
        observed = {tuple(kids.count(s) for s in states) for (label, kids) in table if label == a}
        universe = downward_closure(observed, len(states))
        for state in states:
            accepted = set()
            for (label, kids), target in table.items():
                if label == a and target == state:
                    accepted.add(tuple(kids.count(s) for s in states))
            if accepted:
                delta.append(((state, a), count_threshold_dfa(states, accepted, universe, f"{state}/{a}")))
    if sentence is None:
        final = frozenset(states)
    else:
        final = frozenset(s for s in states
                          if evaluate(tree_to_structure(witness[s], SiblingOrder.text_order(witness[s]), alphabet,
                                                        config.edge_semantics), sentence))
    automaton = TreeAutomaton(alphabet, states, final, tuple(delta), f"synth-{logic}-k{k}-n{bound}")
    order_problems = permutation_violations(automaton, table)
    diagnostics.permutation_independent = not order_problems
    diagnostics.conflicts.extend(order_problems)
    logger.info(f"Synthesized {len(states)} states, {len(table)} transitions over {len(trees)} trees")
    return SynthesisResult(automaton, diagnostics, table, tree_states)


def synthesis_splits(smaller: SynthesisResult, larger: SynthesisResult) -> List[str]:
    """Trees the smaller build puts together that the larger build separates."""
    splits = []
    groups: Dict[str, List[str]] = {}
    for key, state in smaller.tree_states.items():
        groups.setdefault(state, []).append(key)
    for state, keys in sorted(groups.items()):
        targets = {larger.tree_states[key] for key in keys if key in larger.tree_states}
        if len(targets) > 1:
            splits.append(f"{state}: {' | '.join(sorted(keys))}")
    return splits


# ---------------------- Bounded equivalence of CMSO and sibling-invariant MSO ----------------------

@dataclass(frozen=True)
class EquivalenceVerdict:
    bound: int
    counterexample: Optional[str] = None
    counting_value: Optional[bool] = None
    ordered_value: Optional[bool] = None

    @property
    def equivalent(self) -> bool:
        return self.counterexample is None

    def describe(self) -> str:
        if self.equivalent:
            return f"equivalent-up-to {self.bound}"
        return f"differ {self.counterexample} cmso={str(self.counting_value).lower()} " \
               f"ordered={str(self.ordered_value).lower()}"


def courcelle_equivalence_check(counting: Formula, ordered: Formula, alphabet: Sequence[str], bound: int,
                                config: Config = default_config) -> EquivalenceVerdict:
    """First tree ≤ bound nodes where the CMSO sentence and the sib-ordered MSO sentence disagree."""
    alphabet = tuple(sorted(alphabet))
    verdict: InvarianceVerdict = check_sibling_invariance(ordered, alphabet, bound, config)
    if not verdict.invariant:
        raise InputError(f"ordered sentence is not sibling-invariant: {verdict.counterexample.describe()}",
                         code="not-invariant")
    for tree in enumerate_trees(alphabet, bound):
        plain = tree_to_structure(tree, None, alphabet, config.edge_semantics)
        with_sib = tree_to_structure(tree, SiblingOrder.text_order(tree), alphabet, config.edge_semantics)
        left, right = evaluate(plain, counting), evaluate(with_sib, ordered)
        if left != right:
            return EquivalenceVerdict(bound, tree_key(tree), left, right)
    return EquivalenceVerdict(bound)


def leaf_count_automaton(alphabet: Sequence[str], letter: str, modulus: int = 2, name: str = "N") -> TreeAutomaton:
    """
    Deterministic invariant automaton: state c<i> means the subtree has ≡ i mod `modulus`
    leaves labeled `letter`; accepts when the count is ≡ 0.
    """
    states = tuple(f"c{i}" for i in range(modulus))
    delta = []
    for a in alphabet:
        for i, q in enumerate(states):
            # horizontal DFA sums child residues; a leaf contributes its own label
            transitions = {(f"s{r}", s): f"s{(r + j) % modulus}"
                           for r in range(modulus) for j, s in enumerate(states)}
            transitions.update({("e", s): f"s{j % modulus}" for j, s in enumerate(states)})
            accept = [f"s{i}"]
            if i == (1 % modulus if a == letter else 0):
                accept.append("e")
            dfa = Dfa.build(states, ["e"] + [f"s{r}" for r in range(modulus)], "e", accept, transitions,
                            f"{q}/{a}")
            delta.append(((q, a), dfa))
    return TreeAutomaton(tuple(sorted(alphabet)), states, frozenset([states[0]]), tuple(delta), name)


def count_leaves(tree: UnrankedTree, letter: str) -> int:
    return sum(1 for a in tree.nodes if not tree.children(a) and tree.label(a) == letter)
