"""
Toolkit configuration: guards, report format, sweep knobs.

Defaults match the desk-scale bounds documented per service. A key=value
file (python-dotenv syntax) may override any field; the process
environment is never read.
"""
import logging
from pathlib import Path
from typing import Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError, field_validator

from services.errors import InputError

logger = logging.getLogger(__name__)

CORPUS_DIR = Path(__file__).resolve().parent / "corpus"


class Config(BaseModel):
    # structures
    max_structure_size: int = 8
    enumeration_bit_cap: int = 30
    order_cap: int = 3628800  # 10!
    edge_semantics: Literal["child", "descendant"] = "child"

    # types / games
    max_fo_rank: int = 4
    max_mso_rank: int = 3
    max_mso_size: int = 8
    max_ef_size: int = 6
    max_ef_mso_rank: int = 3
    type_memo_structures: int = 4096

    # automata
    max_dfa_states: int = 12
    max_commutativity_states: int = 48
    max_determinize_states: int = 4
    max_determinized_dfa_states: int = 192
    max_parikh_alphabet: int = 4
    max_synth_alphabet: int = 2
    max_synth_rank: int = 1
    max_synth_nodes: int = 6

    # composition tables
    max_fv_rank: int = 2
    max_fv_union_size: int = 4
    max_fv_product_size: int = 3
    max_composite_size: int = 9

    # invariant types requested without an explicit universe bound
    invariant_type_bound: int = 3

    # reporting / sweeps
    report_format: Literal["plain", "tabular"] = "plain"
    seed: int = 0
    jobs: int = 1
    log_level: str = "WARNING"
    corpus_dir: str = str(CORPUS_DIR)

    model_config = {"frozen": True, "extra": "forbid"}

    @field_validator(
        "max_structure_size", "enumeration_bit_cap", "order_cap",
        "max_fo_rank", "max_mso_rank", "max_mso_size", "max_ef_size",
        "max_ef_mso_rank", "type_memo_structures", "max_dfa_states",
        "max_commutativity_states", "max_determinize_states", "max_determinized_dfa_states",
        "max_parikh_alphabet", "max_synth_alphabet", "max_synth_rank", "max_synth_nodes",
        "max_fv_rank", "max_fv_union_size", "max_fv_product_size", "max_composite_size",
        "invariant_type_bound", "jobs",
    )
    @classmethod
    def cap_positive(cls, value: int) -> int:
        if value <= 0:
            raise ValueError("caps must be positive")
        return value

    def echo(self) -> str:
        """Deterministic one-line rendering for report headers."""
        data = self.model_dump(exclude={"corpus_dir"})
        return " ".join(f"{key}={data[key]}" for key in sorted(data))


def load_config(path: Optional[str] = None, **overrides) -> Config:
    """Build a Config from an optional key=value file plus explicit overrides."""
    values: dict = {}
    if path:
        if not Path(path).is_file():
            raise InputError(f"config file not found: {path}", code="config-error")
        raw = dotenv_values(path)
        values.update({key.strip().lower(): value for key, value in raw.items() if value is not None})
        logger.info(f"Loaded {len(values)} config keys from {path}")
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return Config(**values)
    except ValidationError as e:
        first = e.errors()[0]
        where = ".".join(str(part) for part in first.get("loc", ()))
        raise InputError(f"{where}: {first.get('msg')}", code="config-error")


default_config = Config()
