"""
Automata API
Commutativity and Parikh decomposition of DFAs, runs and conversions of tree automata
"""

import logging

from fastapi import APIRouter, HTTPException

from api import http_error
from models.schemas import (CommutativeResponse, CountingResponse, DfaRequest, InvariantCheckResponse,
                            ParikhResponse, TreeAutomatonRequest, TreeRunRequest, TreeRunResponse)
from services.dfa_service import dfa_service, witness_text
from services.errors import ToolkitError
from services.text_formats import dump_counting_automaton, parse_dfa, parse_tree, parse_tree_automaton
from services.tree_automata_service import (address_text, is_deterministic, is_sibling_invariant, run,
                                            to_counting_automaton)

logger = logging.getLogger("automata_api")

router = APIRouter(prefix="/api/automata", tags=["automata"])


@router.post("/commutative", response_model=CommutativeResponse)
async def commutative(request: DfaRequest):
    try:
        dfa = parse_dfa(request.dfa)
        if dfa_service.is_commutative(dfa):
            return CommutativeResponse(commutative=True)
        return CommutativeResponse(commutative=False, witness=witness_text(dfa))
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error deciding commutativity")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/parikh", response_model=ParikhResponse)
async def parikh(request: DfaRequest):
    try:
        dfa = parse_dfa(request.dfa)
        semilinear = dfa_service.decompose(dfa, request.require_commutative)
        return ParikhResponse(alphabet=list(dfa.alphabet), semilinear=str(semilinear), tuples=len(semilinear))
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error decomposing DFA")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/run", response_model=TreeRunResponse)
async def run_tree(request: TreeRunRequest):
    """Bottom-up run in text sibling order"""
    try:
        automaton = parse_tree_automaton(request.automaton)
        outcome = run(automaton, parse_tree(request.tree.strip()))
        return TreeRunResponse(accepted=outcome.accepted,
                               states=[f"{address_text(a)}={q}" for a, q in outcome.states],
                               failure=address_text(outcome.failure) if outcome.failure is not None else None)
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error running tree automaton")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/check-invariant", response_model=InvariantCheckResponse)
async def check_invariant(request: TreeAutomatonRequest):
    try:
        automaton = parse_tree_automaton(request.automaton)
        return InvariantCheckResponse(invariant=is_sibling_invariant(automaton),
                                      deterministic=is_deterministic(automaton))
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error checking tree automaton")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/to-counting", response_model=CountingResponse)
async def to_counting(request: TreeAutomatonRequest):
    try:
        automaton = parse_tree_automaton(request.automaton)
        counting = to_counting_automaton(automaton, dfa_service.config)
        return CountingResponse(counting_automaton=dump_counting_automaton(counting))
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error converting tree automaton")
        raise HTTPException(status_code=500, detail=str(e))
