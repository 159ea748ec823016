"""
DFA Service
Minimization, products, emptiness, permutation-closure testing and the
decomposition of commutative regular languages into tuples of arithmetic
progressions over letter counts.
"""
from __future__ import annotations

import itertools
import logging
import random
from collections import deque
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from config import Config, default_config
from models.automata import Dfa, ParikhVector, Progression, SemilinearSet, Word
from services.errors import InputError, NotCommutativeError, check_guard

logger = logging.getLogger(__name__)

PRODUCT_MODES = {
    "and": lambda x, y: x and y,
    "or": lambda x, y: x or y,
    "xor": lambda x, y: x != y,
    "diff": lambda x, y: x and not y,
}


def reachable_states(dfa: Dfa) -> List[str]:
    """States reachable from the initial one, in BFS order over the alphabet order."""
    seen = {dfa.initial}
    order = [dfa.initial]
    queue = deque(order)
    while queue:
        q = queue.popleft()
        for a in dfa.alphabet:
            target = dfa.step(q, a)
            if target not in seen:
                seen.add(target)
                order.append(target)
                queue.append(target)
    return order


def trim(dfa: Dfa) -> Dfa:
    keep = reachable_states(dfa)
    delta = {(q, a): dfa.step(q, a) for q in keep for a in dfa.alphabet}
    return Dfa.build(dfa.alphabet, keep, dfa.initial, dfa.accepting & set(keep), delta, dfa.name)


def minimize(dfa: Dfa) -> Dfa:
    """Moore refinement on the reachable part; states renamed 0, 1, … in BFS order."""
    states = reachable_states(dfa)
    block = {q: int(q in dfa.accepting) for q in states}
    while True:
        signatures = {q: (block[q],) + tuple(block[dfa.step(q, a)] for a in dfa.alphabet) for q in states}
        numbering: Dict[Tuple[int, ...], int] = {}
        refined = {q: numbering.setdefault(signatures[q], len(numbering)) for q in states}
        if len(numbering) == len(set(block.values())):
            break
        block = refined
    representative: Dict[int, str] = {}
    for q in states:
        representative.setdefault(block[q], q)
    names: Dict[int, str] = {}
    queue = deque([block[dfa.initial]])
    names[block[dfa.initial]] = "0"
    while queue:
        b = queue.popleft()
        for a in dfa.alphabet:
            target = block[dfa.step(representative[b], a)]
            if target not in names:
                names[target] = str(len(names))
                queue.append(target)
    delta = {(names[b], a): names[block[dfa.step(representative[b], a)]] for b in names for a in dfa.alphabet}
    accepting = {names[b] for b in names if representative[b] in dfa.accepting}
    ordered = sorted(names.values(), key=int)
    return Dfa.build(dfa.alphabet, ordered, "0", accepting, delta, dfa.name)


def product(first: Dfa, second: Dfa, mode: str = "and") -> Dfa:
    if first.alphabet != second.alphabet:
        raise InputError(f"alphabets differ: {list(first.alphabet)} vs {list(second.alphabet)}",
                         code="alphabet-mismatch")
    combine = PRODUCT_MODES.get(mode)
    if combine is None:
        raise InputError(f"unknown product mode {mode}", code="invalid-parameter")

    def name(pair: Tuple[str, str]) -> str:
        return f"({pair[0]},{pair[1]})"

    start = (first.initial, second.initial)
    seen = {start}
    order = [start]
    queue = deque(order)
    delta: Dict[Tuple[str, str], str] = {}
    while queue:
        p, q = queue.popleft()
        for a in first.alphabet:
            target = (first.step(p, a), second.step(q, a))
            delta[(name((p, q)), a)] = name(target)
            if target not in seen:
                seen.add(target)
                order.append(target)
                queue.append(target)
    accepting = [name(pair) for pair in order
                 if combine(pair[0] in first.accepting, pair[1] in second.accepting)]
    return Dfa.build(first.alphabet, [name(pair) for pair in order], name(start), accepting, delta,
                     f"{first.name}*{second.name}")


def shortest_accepted(dfa: Dfa, start: Optional[str] = None) -> Optional[Word]:
    """Shortest accepted word from `start`, ties broken by alphabet order; None if the language is empty."""
    start = dfa.initial if start is None else start
    parent: Dict[str, Optional[Tuple[str, str]]] = {start: None}
    queue = deque([start])
    while queue:
        q = queue.popleft()
        if q in dfa.accepting:
            word: List[str] = []
            while parent[q] is not None:
                q, letter = parent[q]
                word.append(letter)
            return tuple(reversed(word))
        for a in dfa.alphabet:
            target = dfa.step(q, a)
            if target not in parent:
                parent[target] = (q, a)
                queue.append(target)
    return None


def is_empty(dfa: Dfa) -> bool:
    return shortest_accepted(dfa) is None


def equivalent(first: Dfa, second: Dfa) -> bool:
    return is_empty(product(first, second, "xor"))


def words(alphabet: Sequence[str], max_length: int) -> Iterator[Word]:
    for n in range(max_length + 1):
        yield from itertools.product(alphabet, repeat=n)


# ---------------------- Commutativity ----------------------

def commutativity_witness(dfa: Dfa) -> Optional[Tuple[str, str, str]]:
    """(state, a, b) of the minimal DFA with δ(q,ab) ≠ δ(q,ba), first in BFS/alphabet order."""
    minimal = minimize(dfa)
    for q in minimal.states:
        for i, a in enumerate(minimal.alphabet):
            for b in minimal.alphabet[i + 1:]:
                if minimal.run((a, b), q) != minimal.run((b, a), q):
                    return q, a, b
    return None


def is_commutative(dfa: Dfa) -> bool:
    """True iff L(M) is closed under permuting letters."""
    return commutativity_witness(dfa) is None


def commutativity_counterexample(dfa: Dfa) -> Optional[Tuple[Word, Word]]:
    """Two words with the same letter counts, exactly one of them accepted."""
    found = commutativity_witness(dfa)
    if found is None:
        return None
    q, a, b = found
    minimal = minimize(dfa)
    prefix = _path_to(minimal, q)
    left, right = minimal.run((a, b), q), minimal.run((b, a), q)
    suffix = _distinguishing_suffix(minimal, left, right)
    return prefix + (a, b) + suffix, prefix + (b, a) + suffix


def _path_to(dfa: Dfa, target: str) -> Word:
    parent: Dict[str, Optional[Tuple[str, str]]] = {dfa.initial: None}
    queue = deque([dfa.initial])
    while queue:
        q = queue.popleft()
        if q == target:
            path: List[str] = []
            while parent[q] is not None:
                q, letter = parent[q]
                path.append(letter)
            return tuple(reversed(path))
        for a in dfa.alphabet:
            nxt = dfa.step(q, a)
            if nxt not in parent:
                parent[nxt] = (q, a)
                queue.append(nxt)
    raise InputError(f"state {target} unreachable", code="invalid-dfa")


def _distinguishing_suffix(dfa: Dfa, left: str, right: str) -> Word:
    parent: Dict[Tuple[str, str], Optional[Tuple[Tuple[str, str], str]]] = {(left, right): None}
    queue = deque([(left, right)])
    while queue:
        pair = queue.popleft()
        if (pair[0] in dfa.accepting) != (pair[1] in dfa.accepting):
            suffix: List[str] = []
            while parent[pair] is not None:
                pair, letter = parent[pair]
                suffix.append(letter)
            return tuple(reversed(suffix))
        for a in dfa.alphabet:
            nxt = (dfa.step(pair[0], a), dfa.step(pair[1], a))
            if nxt not in parent:
                parent[nxt] = (pair, a)
                queue.append(nxt)
    raise InputError("states are not distinguishable", code="invalid-dfa")


def witness_text(dfa: Dfa) -> str:
    found = commutativity_witness(dfa)
    if found is None:
        return ""
    _, a, b = found
    return f"{a}{b}/{b}{a}"


def require_commutative(dfa: Dfa) -> None:
    text = witness_text(dfa)
    if text:
        raise NotCommutativeError(text)


def permutation_closed_upto(dfa: Dfa, max_length: int = 6) -> bool:
    """Brute force: all words of one letter multiset agree, up to max_length."""
    verdict: Dict[Tuple[str, ...], bool] = {}
    for word in words(dfa.alphabet, max_length):
        key = tuple(sorted(word))
        value = dfa.accepts(word)
        if verdict.setdefault(key, value) != value:
            return False
    return True


# ---------------------- Parikh decomposition ----------------------

def parikh_vector(word: Sequence[str], alphabet: Sequence[str]) -> ParikhVector:
    index = {a: i for i, a in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for letter in word:
        if letter not in index:
            raise InputError(f"letter {letter} outside alphabet {list(alphabet)}", code="label-outside")
        counts[index[letter]] += 1
    return tuple(counts)


def _lasso(start: str, advance, accepted) -> Tuple[Progression, ...]:
    position: Dict[str, int] = {}
    path: List[str] = []
    state = start
    while state not in position:
        position[state] = len(path)
        path.append(state)
        state = advance(state)
    cycle_start = position[state]
    period = len(path) - cycle_start
    found = [Progression(m, 0) for m in range(cycle_start) if accepted(path[m])]
    found += [Progression(m, period) for m in range(cycle_start, len(path)) if accepted(path[m])]
    return tuple(sorted(found))


def unary_semilinear(dfa: Dfa) -> Tuple[Progression, ...]:
    """Lengths accepted by a one-letter DFA, read off the lasso from the initial state."""
    if len(dfa.alphabet) != 1:
        raise InputError(f"unary DFA expected, alphabet is {list(dfa.alphabet)}", code="invalid-parameter")
    letter = dfa.alphabet[0]
    return _lasso(dfa.initial, lambda q: dfa.step(q, letter), lambda q: q in dfa.accepting)


def unary_reachability(dfa: Dfa, letter: str, source: str, target: str) -> Tuple[Progression, ...]:
    """{n : source →^{letter^n} target}."""
    return _lasso(source, lambda q: dfa.step(q, letter), lambda q: q == target)


def parikh_decompose(dfa: Dfa, require_commutativity: bool = False,
                     config: Config = default_config) -> SemilinearSet:
    """
    Tuples (S_1, …, S_r) with w ∈ L ⟺ Π(w) in some tuple, valid whenever L is commutative.

    Runs over the partitioned words a_1* … a_r*: for each state sequence
    q_0 → q_1 → … → q_r with q_r accepting, the i-th component is the unary
    reachability language of a_i from q_{i-1} to q_i.
    """
    if require_commutativity:
        require_commutative(dfa)
    check_guard(len(dfa.alphabet), config.max_parikh_alphabet, "parikh-alphabet")
    minimal = minimize(dfa)
    check_guard(len(minimal.states), config.max_dfa_states, "dfa-states")
    found = set()

    def extend(i: int, state: str, prefix: Tuple[Tuple[Progression, ...], ...]) -> None:
        if i == len(minimal.alphabet):
            if state in minimal.accepting:
                found.update(itertools.product(*prefix))
            return
        letter = minimal.alphabet[i]
        for target in minimal.states:
            component = unary_reachability(minimal, letter, state, target)
            if component:
                extend(i + 1, target, prefix + (component,))

    extend(0, minimal.initial, ())
    result = SemilinearSet(len(dfa.alphabet), frozenset(found))
    logger.info(f"Decomposed {dfa.name} ({len(minimal.states)} minimal states) into {len(result)} tuples")
    return result


def semilinear_membership(semilinear: SemilinearSet, vector: Sequence[int]) -> bool:
    return tuple(vector) in semilinear


# ---------------------- Constructions ----------------------

def modular_count_dfa(alphabet: Sequence[str], constraints: Dict[str, Tuple[int, int]], name: str = "M") -> Dfa:
    """Accepts words whose count of each constrained letter is ≡ residue mod modulus."""
    letters = [a for a in alphabet if a in constraints]
    moduli = [constraints[a][1] for a in letters]
    vectors = list(itertools.product(*[range(m) for m in moduli]))

    def state(vector: Tuple[int, ...]) -> str:
        return ".".join(map(str, vector)) or "0"

    delta = {}
    for vector in vectors:
        for a in alphabet:
            nxt = list(vector)
            if a in constraints:
                i = letters.index(a)
                nxt[i] = (nxt[i] + 1) % moduli[i]
            delta[(state(vector), a)] = state(tuple(nxt))
    accepting = [state(v) for v in vectors
                 if all(v[i] == constraints[a][0] % moduli[i] for i, a in enumerate(letters))]
    return Dfa.build(alphabet, [state(v) for v in vectors], state(tuple(0 for _ in letters)),
                     accepting, delta, name)


def random_dfa(alphabet: Sequence[str], size: int, rng: random.Random, name: str = "R") -> Dfa:
    states = [str(i) for i in range(size)]
    delta = {(q, a): rng.choice(states) for q in states for a in alphabet}
    accepting = [q for q in states if rng.random() < 0.5]
    return Dfa.build(alphabet, states, "0", accepting, delta, name)


def random_commutative_dfa(alphabet: Sequence[str], rng: random.Random, max_modulus: int = 3,
                           name: str = "C") -> Dfa:
    """Accepts iff the count vector, each letter reduced by a threshold/modulus counter, hits a random set."""
    counters = []
    for _ in alphabet:
        threshold = rng.randint(0, 1)
        counters.append((threshold, rng.randint(1, max_modulus)))

    def bump(value: int, counter: Tuple[int, int]) -> int:
        threshold, modulus = counter
        if value < threshold:
            return value + 1
        return threshold + (value - threshold + 1) % modulus

    vectors = list(itertools.product(*[range(t + m) for t, m in counters]))
    accept = {v for v in vectors if rng.random() < 0.4}

    def state(vector: Tuple[int, ...]) -> str:
        return ".".join(map(str, vector))

    delta = {}
    for vector in vectors:
        for i, a in enumerate(alphabet):
            nxt = list(vector)
            nxt[i] = bump(nxt[i], counters[i])
            delta[(state(vector), a)] = state(tuple(nxt))
    return Dfa.build(alphabet, [state(v) for v in vectors], state(tuple(0 for _ in alphabet)),
                     [state(v) for v in accept], delta, name)


class DfaService:
    def __init__(self, config: Config = default_config):
        self.config = config

    def is_commutative(self, dfa: Dfa) -> bool:
        check_guard(len(dfa.states), self.config.max_commutativity_states, "dfa-states")
        return is_commutative(dfa)

    def decompose(self, dfa: Dfa, require_commutativity: bool = False) -> SemilinearSet:
        return parikh_decompose(dfa, require_commutativity, self.config)


dfa_service = DfaService()
