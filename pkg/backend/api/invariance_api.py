"""
Invariance API
Order-invariance checks and invariant types up to a universe bound
"""

import logging

from fastapi import APIRouter, HTTPException

from api import http_error
from models.schemas import InvarianceRequest, InvarianceResponse, InvariantTypeRequest, InvariantTypeResponse
from services.errors import ToolkitError
from services.invariance_service import invariance_service
from services.logic_service import logic_service
from services.text_formats import parse_structure, parse_vocabulary

logger = logging.getLogger("invariance_api")

router = APIRouter(prefix="/api/invariance", tags=["invariance"])


@router.post("/check", response_model=InvarianceResponse)
async def check_invariance(request: InvarianceRequest):
    """Exhaustive order-invariance check over all structures up to max_size"""
    try:
        vocab = parse_vocabulary(request.vocabulary)
        formula = logic_service.parse(request.formula, vocab)
        verdict = invariance_service.check(formula, vocab, request.max_size)
        return InvarianceResponse(invariant=verdict.invariant, verdict=verdict.describe())
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error checking invariance")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/type", response_model=InvariantTypeResponse)
async def invariant_type(request: InvariantTypeRequest):
    try:
        structure, _ = parse_structure(request.structure)
        bound = request.bound if request.bound is not None else invariance_service.config.invariant_type_bound
        logic = request.logic.upper()
        partition = invariance_service.partition(structure.vocab, request.k, logic, bound)
        found = invariance_service.invariant_type(structure, request.k, logic, bound)
        return InvariantTypeResponse(id=str(found), bound=bound, components=len(partition.component_ids()))
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error computing invariant type")
        raise HTTPException(status_code=500, detail=str(e))
