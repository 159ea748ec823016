"""
Pydantic models for reports and API requests/responses
"""

from typing import List, Optional

from pydantic import BaseModel, Field


class Report(BaseModel):
    """One command's output: echo lines, RESULT/TYPE/COUNTEREXAMPLE lines, DIAG lines, exit status."""
    command: str
    config: str = ""
    report_format: str = "plain"
    results: List[str] = []
    types: List[str] = []
    counterexamples: List[str] = []
    diagnostics: List[str] = []
    exit_status: int = 0

    def render(self) -> str:
        lines = [f"COMMAND {self.command}"]
        if self.config:
            lines.append(f"CONFIG {self.config}")
        lines += [f"RESULT {line}" for line in self.results]
        lines += [f"TYPE {line}" for line in self.types]
        lines += [f"COUNTEREXAMPLE {line}" for line in self.counterexamples]
        lines += [line if line.startswith("DIAG ") else f"DIAG {line}" for line in self.diagnostics]
        if self.report_format == "tabular":
            lines = ["\t".join(line.split(" ", 1)) for line in lines]
        return "\n".join(lines) + "\n"


# ---------------------- logic ----------------------

class EvalRequest(BaseModel):
    structure: str = Field(..., example="structure A\ndomain 2\nrel E/2: (0,1)\nend\n")
    formula: str = Field(..., example="(exists x (exists y (E x y)))")


class EvalResponse(BaseModel):
    result: bool
    quantifier_rank: int
    order_used: bool


class TypeRequest(BaseModel):
    structure: str
    k: int = Field(1, ge=0)
    logic: str = "FO"


class TypeResponse(BaseModel):
    logic: str
    k: int
    id: str
    witness: str
    serialization: str


class EfRequest(BaseModel):
    first: str
    second: str
    k: int = Field(1, ge=0)
    logic: str = "FO"


class EfResponse(BaseModel):
    equivalent: bool
    k: int
    logic: str


# ---------------------- invariance ----------------------

class InvarianceRequest(BaseModel):
    formula: str
    vocabulary: str = Field("", example="E/2,P/1")
    max_size: int = Field(4, ge=0)


class InvarianceResponse(BaseModel):
    invariant: bool
    verdict: str


class InvariantTypeRequest(BaseModel):
    structure: str
    k: int = Field(1, ge=0)
    logic: str = "FO"
    bound: Optional[int] = Field(None, ge=0)


class InvariantTypeResponse(BaseModel):
    id: str
    bound: int
    components: int


# ---------------------- automata ----------------------

class DfaRequest(BaseModel):
    dfa: str
    require_commutative: bool = False


class CommutativeResponse(BaseModel):
    commutative: bool
    witness: Optional[str] = None


class ParikhResponse(BaseModel):
    alphabet: List[str]
    semilinear: str
    tuples: int


class TreeRunRequest(BaseModel):
    automaton: str
    tree: str


class TreeRunResponse(BaseModel):
    accepted: bool
    states: List[str] = []
    failure: Optional[str] = None


class TreeAutomatonRequest(BaseModel):
    automaton: str


class InvariantCheckResponse(BaseModel):
    invariant: bool
    deterministic: bool


class CountingResponse(BaseModel):
    counting_automaton: str


# ---------------------- composition ----------------------

class CompositionRequest(BaseModel):
    op: str = "union"
    vocabulary: str = "E/2"
    k: int = Field(1, ge=0)
    bound: int = Field(2, ge=0)
    logic: str = "FO"


class CompositionResponse(BaseModel):
    functional: bool
    entries: int
    violations: List[str] = []
    table: str
