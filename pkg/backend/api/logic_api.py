"""
Logic API
Formula evaluation, rank-k types and the EF game over structures sent as text
"""

import logging

from fastapi import APIRouter, HTTPException

from api import http_error
from models.schemas import EfRequest, EfResponse, EvalRequest, EvalResponse, TypeRequest, TypeResponse
from models.structures import ORDER, LinearOrder
from services.errors import ToolkitError
from services.logic_service import logic_service, quantifier_rank, uses_order
from services.structure_service import with_order
from services.text_formats import parse_structure
from services.type_service import TypeService, type_hash, type_service

logger = logging.getLogger("logic_api")

router = APIRouter(prefix="/api/logic", tags=["logic"])


def _expanded(structure, order):
    if order is None or structure.vocab.has_relation(ORDER):
        return structure
    return with_order(structure, order)


@router.post("/eval", response_model=EvalResponse)
async def evaluate_formula(request: EvalRequest):
    """Evaluate a sentence; formulas using lt run on the listed order or the natural one"""
    try:
        structure, order = parse_structure(request.structure)
        formula = logic_service.parse(request.formula, structure.vocab)
        order_used = uses_order(formula)
        if order_used and not structure.vocab.has_relation(ORDER):
            structure = with_order(structure, order or LinearOrder.natural(structure.size))
        result = logic_service.evaluate(structure, formula)
        return EvalResponse(result=result, quantifier_rank=quantifier_rank(formula), order_used=order_used)
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error evaluating formula")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/type", response_model=TypeResponse)
async def compute_type(request: TypeRequest):
    """Canonical type hash; each request interns into its own registry"""
    try:
        structure, order = parse_structure(request.structure)
        logic = request.logic.upper()
        service = TypeService(type_service.config)
        tid = service.rank_type(_expanded(structure, order), request.k, logic)
        return TypeResponse(logic=logic, k=request.k, id=type_hash(service.registry, tid),
                            witness=structure.name, serialization=service.registry.serialize(tid.index))
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error computing type")
        raise HTTPException(status_code=500, detail=str(e))


@router.post("/ef", response_model=EfResponse)
async def play_game(request: EfRequest):
    try:
        a, order_a = parse_structure(request.first)
        b, order_b = parse_structure(request.second)
        logic = request.logic.upper()
        equivalent = type_service.ef_equivalent(_expanded(a, order_a), _expanded(b, order_b), request.k, logic)
        return EfResponse(equivalent=equivalent, k=request.k, logic=logic)
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error playing EF game")
        raise HTTPException(status_code=500, detail=str(e))
