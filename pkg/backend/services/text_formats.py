"""
Line-based text formats shared by the CLI, the HTTP surface and the corpus.

structure G / domain 3 / rel E/2: (0,1) (1,2) / const c = 0 / order: 2 0 1 / end
tree: a(b, c(a))
dfa M / alphabet a b / states 0 1 / initial 0 / accepting 1 / trans 0 a 1 / end
ta N / alphabet a / states q0 q1 / final q1 / delta q0 a + embedded dfa block / end
counting C / alphabet a / states q0 q1 / final q1 / constraint q0 a {(S[0,2], S[0,0])} / end
"""
from __future__ import annotations

import re
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from models.automata import CountingTreeAutomaton, Dfa, Progression, SemilinearSet, TreeAutomaton
from models.structures import LinearOrder, SiblingOrder, Structure, UnrankedTree, Vocabulary
from services.errors import InputError, ParseError

_TUPLE = re.compile(r"\(([^()]*)\)")
_PROGRESSION = re.compile(r"S\[\s*(\d+)\s*,\s*(\d+)\s*\]")


def _lines(text: str) -> Iterator[Tuple[int, str]]:
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield number, line


def _int(token: str, line: int, column: int = 1) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"expected an integer, found {token!r}", line, column)


# ---------------------- Structures ----------------------

def parse_structures(text: str) -> List[Tuple[Structure, Optional[LinearOrder]]]:
    """Every structure block in the text, each with its optional order annotation."""
    found: List[Tuple[Structure, Optional[LinearOrder]]] = []
    block: Optional[Dict] = None
    for number, line in _lines(text):
        head, _, rest = line.partition(" ")
        if block is None:
            if head != "structure":
                raise ParseError(f"expected 'structure', found {head!r}", number)
            block = {"name": rest.strip() or "A", "size": None, "relations": [], "tuples": {}, "consts": {},
                     "order": None, "line": number}
            continue
        if line == "end":
            found.append(_finish_structure(block, number))
            block = None
        elif head == "domain":
            block["size"] = _int(rest.strip(), number, len(head) + 2)
        elif head == "rel":
            signature, colon, body = rest.partition(":")
            name, slash, arity = signature.strip().rpartition("/")
            if not colon or not slash or not name:
                raise ParseError("expected 'rel NAME/ARITY: (..) (..)'", number)
            arity_value = _int(arity, number)
            block["relations"].append((name, arity_value))
            tuples = []
            for match in _TUPLE.finditer(body):
                items = [item.strip() for item in match.group(1).split(",") if item.strip()]
                if len(items) != arity_value:
                    raise ParseError(f"tuple ({match.group(1)}) does not have arity {arity_value}",
                                     number, len(head) + 2 + len(signature) + 1 + match.start() + 1)
                tuples.append(tuple(_int(item, number) for item in items))
            leftover = _TUPLE.sub("", body).strip()
            if leftover:
                raise ParseError(f"unexpected text {leftover!r} in relation listing", number)
            block["tuples"][name] = tuples
        elif head == "const":
            name, eq, value = rest.partition("=")
            if not eq:
                raise ParseError("expected 'const NAME = VALUE'", number)
            block["consts"][name.strip()] = _int(value.strip(), number)
        elif head == "order:":
            block["order"] = LinearOrder(tuple(_int(t, number) for t in rest.split()))
        else:
            raise ParseError(f"unknown directive {head!r}", number)
    if block is not None:
        raise ParseError("structure block is not closed by 'end'", block["line"])
    return found


def _finish_structure(block: Dict, number: int) -> Tuple[Structure, Optional[LinearOrder]]:
    if block["size"] is None:
        raise ParseError("structure has no 'domain' line", block["line"])
    vocab = Vocabulary(tuple(block["relations"]), tuple(block["consts"]))
    structure = Structure.build(vocab, block["size"], block["tuples"], block["consts"], name=block["name"])
    order = block["order"]
    if order is not None and len(order) != structure.size:
        raise ParseError(f"order lists {len(order)} elements for domain {structure.size}", number)
    return structure, order


def parse_structure(text: str) -> Tuple[Structure, Optional[LinearOrder]]:
    found = parse_structures(text)
    if len(found) != 1:
        raise InputError(f"expected one structure, found {len(found)}", code="input-error")
    return found[0]


def dump_structure(structure: Structure, order: Optional[LinearOrder] = None) -> str:
    lines = [f"structure {structure.name or 'A'}", f"domain {structure.size}"]
    for (name, tuples), (_, arity) in zip(structure.interp, structure.vocab.relations):
        listing = " ".join("(" + ",".join(map(str, t)) + ")" for t in sorted(tuples))
        lines.append(f"rel {name}/{arity}: {listing}".rstrip())
    for name, value in structure.consts:
        lines.append(f"const {name} = {value}")
    if order is not None:
        lines.append("order: " + " ".join(map(str, order.perm)))
    lines.append("end")
    return "\n".join(lines) + "\n"


# ---------------------- Trees ----------------------

class _TreeReader:
    def __init__(self, text: str, line: int):
        self.text = text
        self.line = line
        self.pos = 0

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.pos + 1)

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def label(self) -> str:
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            raise self.error("expected a node label")
        return self.text[start:self.pos]

    def tree(self) -> UnrankedTree:
        label = self.label()
        self.skip()
        children: List[UnrankedTree] = []
        if self.pos < len(self.text) and self.text[self.pos] == "(":
            self.pos += 1
            while True:
                children.append(self.tree())
                self.skip()
                if self.pos >= len(self.text):
                    raise self.error("unbalanced '('")
                if self.text[self.pos] == ",":
                    self.pos += 1
                    continue
                if self.text[self.pos] == ")":
                    self.pos += 1
                    break
                raise self.error(f"unexpected {self.text[self.pos]!r}")
        return UnrankedTree.node(label, *children)


def parse_tree(text: str, line: int = 1) -> UnrankedTree:
    reader = _TreeReader(text, line)
    tree = reader.tree()
    reader.skip()
    if reader.pos != len(text):
        raise reader.error("trailing input after tree")
    return tree


def parse_trees(text: str) -> List[UnrankedTree]:
    return [parse_tree(line, number) for number, line in _lines(text)]


def dump_tree(tree: UnrankedTree, order: Optional[SiblingOrder] = None) -> str:
    """Tree text with children listed in `order` (text order by default)."""
    order = order or SiblingOrder.text_order(tree)
    labels = tree.label_map()

    def render(address) -> str:
        kids = order.group(address)
        inner = ", ".join(render(kid) for kid in kids)
        return labels[address] + (f"({inner})" if kids else "")

    return render(())


# ---------------------- DFAs ----------------------

def _dfa_block(lines: List[Tuple[int, str]], start: int) -> Tuple[Dfa, int]:
    number, line = lines[start]
    head, _, rest = line.partition(" ")
    if head != "dfa":
        raise ParseError(f"expected 'dfa', found {head!r}", number)
    name = rest.strip() or "M"
    fields: Dict[str, List[str]] = {}
    delta: Dict[Tuple[str, str], str] = {}
    i = start + 1
    while i < len(lines):
        number, line = lines[i]
        if line == "end":
            break
        key, _, rest = line.partition(" ")
        if key in ("alphabet", "states", "initial", "accepting"):
            fields[key] = rest.split()
        elif key == "trans":
            parts = rest.split()
            if len(parts) != 3:
                raise ParseError("expected 'trans STATE LETTER STATE'", number)
            if (parts[0], parts[1]) in delta:
                raise ParseError(f"transition ({parts[0]}, {parts[1]}) defined twice", number)
            delta[(parts[0], parts[1])] = parts[2]
        else:
            raise ParseError(f"unknown DFA directive {key!r}", number)
        i += 1
    else:
        raise ParseError("dfa block is not closed by 'end'", lines[start][0])
    for required in ("alphabet", "states", "initial"):
        if required not in fields:
            raise ParseError(f"dfa block lacks '{required}'", lines[start][0])
    if len(fields["initial"]) != 1:
        raise ParseError("dfa needs exactly one initial state", lines[start][0])
    dfa = Dfa.build(fields["alphabet"], fields["states"], fields["initial"][0], fields.get("accepting", []),
                    delta, name)
    return dfa, i + 1


def parse_dfas(text: str) -> List[Dfa]:
    lines = list(_lines(text))
    found = []
    i = 0
    while i < len(lines):
        dfa, i = _dfa_block(lines, i)
        found.append(dfa)
    return found


def parse_dfa(text: str) -> Dfa:
    found = parse_dfas(text)
    if len(found) != 1:
        raise InputError(f"expected one DFA, found {len(found)}", code="input-error")
    return found[0]


def dump_dfa(dfa: Dfa, indent: str = "") -> str:
    lines = [f"dfa {dfa.name}", "alphabet " + " ".join(dfa.alphabet), "states " + " ".join(dfa.states),
             f"initial {dfa.initial}", ("accepting " + " ".join(q for q in dfa.states if q in dfa.accepting)).rstrip()]
    lines += [f"trans {q} {a} {target}" for (q, a), target in dfa.transitions]
    lines.append("end")
    return "".join(indent + line + "\n" for line in lines)


# ---------------------- Tree automata ----------------------

def _header(lines: List[Tuple[int, str]], i: int, fields: Dict[str, List[str]]) -> bool:
    key, _, rest = lines[i][1].partition(" ")
    if key in ("alphabet", "states", "final"):
        fields[key] = rest.split()
        return True
    return False


def parse_tree_automata(text: str) -> List[TreeAutomaton]:
    lines = list(_lines(text))
    found: List[TreeAutomaton] = []
    i = 0
    while i < len(lines):
        number, line = lines[i]
        head, _, rest = line.partition(" ")
        if head != "ta":
            raise ParseError(f"expected 'ta', found {head!r}", number)
        name = rest.strip() or "N"
        start = number
        fields: Dict[str, List[str]] = {}
        delta: Dict[Tuple[str, str], Dfa] = {}
        i += 1
        while True:
            if i >= len(lines):
                raise ParseError("ta block is not closed by 'end'", start)
            number, line = lines[i]
            if line == "end":
                i += 1
                break
            if _header(lines, i, fields):
                i += 1
                continue
            key, _, rest = line.partition(" ")
            if key != "delta":
                raise ParseError(f"unknown tree automaton directive {key!r}", number)
            parts = rest.split()
            if len(parts) != 2:
                raise ParseError("expected 'delta STATE LABEL' followed by a dfa block", number)
            if tuple(parts) in delta:
                raise ParseError(f"horizontal language ({parts[0]}, {parts[1]}) defined twice", number)
            if i + 1 >= len(lines):
                raise ParseError("delta line without a dfa block", number)
            dfa, i = _dfa_block(lines, i + 1)
            delta[(parts[0], parts[1])] = dfa
        for required in ("alphabet", "states"):
            if required not in fields:
                raise ParseError(f"ta block lacks '{required}'", start)
        found.append(TreeAutomaton(tuple(fields["alphabet"]), tuple(fields["states"]),
                                   frozenset(fields.get("final", [])), tuple(delta.items()), name))
    return found


def parse_tree_automaton(text: str) -> TreeAutomaton:
    found = parse_tree_automata(text)
    if len(found) != 1:
        raise InputError(f"expected one tree automaton, found {len(found)}", code="input-error")
    return found[0]


def dump_tree_automaton(automaton: TreeAutomaton) -> str:
    lines = [f"ta {automaton.name}", "alphabet " + " ".join(automaton.alphabet),
             "states " + " ".join(automaton.states),
             ("final " + " ".join(q for q in automaton.states if q in automaton.final)).rstrip()]
    text = "".join(line + "\n" for line in lines)
    for (q, a), dfa in automaton.delta:
        text += f"delta {q} {a}\n" + dump_dfa(dfa, "  ")
    return text + "end\n"


# ---------------------- Semilinear sets and counting automata ----------------------

def parse_semilinear(text: str, arity: Optional[int] = None, line: int = 1) -> SemilinearSet:
    body = text.strip()
    if not (body.startswith("{") and body.endswith("}")):
        raise ParseError("semilinear set must be wrapped in braces", line)
    tuples = []
    for match in _TUPLE.finditer(body[1:-1]):
        inner = match.group(1).strip()
        entries = [Progression(int(k), int(p)) for k, p in _PROGRESSION.findall(inner)]
        if _PROGRESSION.sub("", inner).replace(",", "").strip():
            raise ParseError(f"bad progression tuple ({inner})", line, match.start() + 2)
        tuples.append(tuple(entries))
    if _TUPLE.sub("", body[1:-1]).strip():
        raise ParseError("unexpected text inside semilinear set", line)
    if arity is None:
        arity = len(tuples[0]) if tuples else 0
    return SemilinearSet(arity, frozenset(tuples))


def dump_counting_automaton(automaton: CountingTreeAutomaton) -> str:
    lines = [f"counting {automaton.name}", "alphabet " + " ".join(automaton.alphabet),
             "states " + " ".join(automaton.states),
             ("final " + " ".join(q for q in automaton.states if q in automaton.final)).rstrip()]
    lines += [f"constraint {q} {a} {constraint}" for (q, a), constraint in automaton.delta]
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_counting_automaton(text: str) -> CountingTreeAutomaton:
    lines = list(_lines(text))
    if not lines or not lines[0][1].startswith("counting"):
        raise ParseError("expected 'counting NAME'", lines[0][0] if lines else 1)
    name = lines[0][1].partition(" ")[2].strip() or "C"
    fields: Dict[str, List[str]] = {}
    raw: List[Tuple[int, str, str, str]] = []
    closed = False
    for i in range(1, len(lines)):
        number, line = lines[i]
        if line == "end":
            closed = True
            break
        if _header(lines, i, fields):
            continue
        key, _, rest = line.partition(" ")
        parts = rest.split(None, 2)
        if key != "constraint" or len(parts) != 3:
            raise ParseError("expected 'constraint STATE LABEL {...}'", number)
        raw.append((number, parts[0], parts[1], parts[2]))
    if not closed:
        raise ParseError("counting block is not closed by 'end'", lines[0][0])
    states = tuple(fields.get("states", []))
    delta = tuple(((q, a), parse_semilinear(body, len(states), number)) for number, q, a, body in raw)
    return CountingTreeAutomaton(tuple(fields.get("alphabet", [])), states, frozenset(fields.get("final", [])),
                                 delta, name)


def format_word(word: Sequence[str]) -> str:
    return "".join(word) if all(len(a) == 1 for a in word) else " ".join(word)


# ---------------------- Vocabularies and alphabets ----------------------

def parse_vocabulary(text: str) -> Vocabulary:
    """`E/2,P/1;c,d`: relations before the semicolon, constants after. Empty text is the empty vocabulary."""
    relations_text, _, constants_text = (text or "").partition(";")
    relations = []
    for item in filter(None, (part.strip() for part in relations_text.split(","))):
        name, slash, arity = item.rpartition("/")
        if not slash or not name:
            raise ParseError(f"expected NAME/ARITY, found {item!r}", 1, text.index(item) + 1)
        relations.append((name, _int(arity, 1, text.index(item) + len(name) + 2)))
    constants = [c.strip() for c in constants_text.split(",") if c.strip()]
    return Vocabulary.create(relations, constants)


def parse_alphabet(text: str) -> Tuple[str, ...]:
    letters = tuple(sorted({a.strip() for a in (text or "").split(",") if a.strip()}))
    if not letters:
        raise InputError("empty alphabet", code="invalid-parameter")
    return letters
