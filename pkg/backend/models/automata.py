"""
Automata value types: DFAs, arithmetic progressions, semilinear sets,
unranked tree automata with DFA or semilinear horizontal languages, runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Mapping, Optional, Sequence, Tuple

from models.structures import Address
from services.errors import InputError

Word = Tuple[str, ...]
ParikhVector = Tuple[int, ...]


@dataclass(frozen=True)
class Dfa:
    """Complete DFA; transitions are stored sorted so equal machines compare equal."""
    alphabet: Tuple[str, ...]
    states: Tuple[str, ...]
    initial: str
    accepting: FrozenSet[str]
    transitions: Tuple[Tuple[Tuple[str, str], str], ...]
    name: str = field(default="M", compare=False)
    _delta: Dict[Tuple[str, str], str] = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if len(set(self.alphabet)) != len(self.alphabet):
            raise InputError("alphabet lists a letter twice", code="invalid-dfa")
        if len(set(self.states)) != len(self.states):
            raise InputError("state listed twice", code="invalid-dfa")
        known = set(self.states)
        if self.initial not in known:
            raise InputError(f"initial state {self.initial} is not a state", code="invalid-dfa")
        if not self.accepting <= known:
            raise InputError(f"accepting states {sorted(self.accepting - known)} are not states", code="invalid-dfa")
        delta = dict(self.transitions)
        if len(delta) != len(self.transitions):
            raise InputError("transition defined twice", code="invalid-dfa")
        for (q, a), target in delta.items():
            if q not in known or target not in known or a not in self.alphabet:
                raise InputError(f"transition {q} {a} {target} outside the automaton", code="invalid-dfa")
        for q in self.states:
            for a in self.alphabet:
                if (q, a) not in delta:
                    raise InputError(f"transition function is not total at ({q}, {a})", code="invalid-dfa")
        object.__setattr__(self, "transitions", tuple(sorted(delta.items())))
        object.__setattr__(self, "_delta", delta)

    @classmethod
    def build(cls, alphabet: Sequence[str], states: Sequence[str], initial: str, accepting: Iterable[str],
              delta: Mapping[Tuple[str, str], str], name: str = "M") -> "Dfa":
        return cls(tuple(alphabet), tuple(states), initial, frozenset(accepting), tuple(delta.items()), name)

    def step(self, state: str, letter: str) -> str:
        try:
            return self._delta[(state, letter)]
        except KeyError:
            raise InputError(f"letter {letter} outside alphabet {list(self.alphabet)}", code="label-outside")

    def run(self, word: Iterable[str], start: Optional[str] = None) -> str:
        state = self.initial if start is None else start
        for letter in word:
            state = self.step(state, letter)
        return state

    def accepts(self, word: Iterable[str]) -> bool:
        return self.run(word) in self.accepting

    def with_name(self, name: str) -> "Dfa":
        return Dfa(self.alphabet, self.states, self.initial, self.accepting, self.transitions, name)


@dataclass(frozen=True, order=True)
class Progression:
    """S[k,p] = {k + n·p : n ≥ 0}; period 0 is the singleton {k}."""
    offset: int
    period: int

    def __post_init__(self):
        if self.offset < 0 or self.period < 0:
            raise InputError(f"progression S[{self.offset},{self.period}] has a negative parameter",
                             code="invalid-semilinear")

    def __contains__(self, m: int) -> bool:
        if m < self.offset:
            return False
        if self.period == 0:
            return m == self.offset
        return (m - self.offset) % self.period == 0

    def __str__(self) -> str:
        return f"S[{self.offset},{self.period}]"


@dataclass(frozen=True)
class SemilinearSet:
    """Finite union of r-tuples of progressions."""
    arity: int
    tuples: FrozenSet[Tuple[Progression, ...]] = frozenset()

    def __post_init__(self):
        for entry in self.tuples:
            if len(entry) != self.arity:
                raise InputError(f"tuple of arity {len(entry)} in a set of arity {self.arity}",
                                 code="arity-mismatch")

    @property
    def ordered(self) -> Tuple[Tuple[Progression, ...], ...]:
        return tuple(sorted(self.tuples))

    def __contains__(self, vector: Sequence[int]) -> bool:
        if len(vector) != self.arity:
            raise InputError(f"vector of arity {len(vector)} against a set of arity {self.arity}",
                             code="arity-mismatch")
        return any(all(m in s for m, s in zip(vector, entry)) for entry in self.tuples)

    def __len__(self) -> int:
        return len(self.tuples)

    def __str__(self) -> str:
        return "{" + " ".join("(" + ", ".join(map(str, entry)) + ")" for entry in self.ordered) + "}"


@dataclass(frozen=True)
class TreeAutomaton:
    """(Σ, Q, F, δ) with δ(q, a) a DFA over Q; absent pairs denote the empty language."""
    alphabet: Tuple[str, ...]
    states: Tuple[str, ...]
    final: FrozenSet[str]
    delta: Tuple[Tuple[Tuple[str, str], Dfa], ...]
    name: str = field(default="N", compare=False)

    def __post_init__(self):
        known = set(self.states)
        if not self.final <= known:
            raise InputError(f"final states {sorted(self.final - known)} are not states", code="invalid-ta")
        for (q, a), dfa in self.delta:
            if q not in known or a not in self.alphabet:
                raise InputError(f"horizontal language for unknown pair ({q}, {a})", code="invalid-ta")
            if set(dfa.alphabet) != known:
                raise InputError(f"horizontal DFA for ({q}, {a}) is not over the state set", code="invalid-ta")
        object.__setattr__(self, "delta", tuple(sorted(self.delta, key=lambda entry: entry[0])))

    def horizontal(self, state: str, label: str) -> Optional[Dfa]:
        for key, dfa in self.delta:
            if key == (state, label):
                return dfa
        return None


@dataclass(frozen=True)
class CountingTreeAutomaton:
    """δ(q, a) constrains the vector of child-state counts (indexed like `states`)."""
    alphabet: Tuple[str, ...]
    states: Tuple[str, ...]
    final: FrozenSet[str]
    delta: Tuple[Tuple[Tuple[str, str], SemilinearSet], ...]
    name: str = field(default="C", compare=False)

    def __post_init__(self):
        for (q, a), constraint in self.delta:
            if constraint.arity != len(self.states):
                raise InputError(f"constraint for ({q}, {a}) has arity {constraint.arity}, "
                                 f"expected {len(self.states)}", code="arity-mismatch")
        object.__setattr__(self, "delta", tuple(sorted(self.delta, key=lambda entry: entry[0])))

    def constraint(self, state: str, label: str) -> Optional[SemilinearSet]:
        for key, value in self.delta:
            if key == (state, label):
                return value
        return None


@dataclass(frozen=True)
class Run:
    """Outcome of running a tree automaton; `states` is empty for subset simulation."""
    accepted: bool
    states: Tuple[Tuple[Address, str], ...] = ()
    failure: Optional[Address] = None

    def state_at(self, address: Address) -> Optional[str]:
        return dict(self.states).get(address)
