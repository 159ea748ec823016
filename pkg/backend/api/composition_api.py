"""
Composition API
"""

import logging

from fastapi import APIRouter, HTTPException

from api import http_error
from models.schemas import CompositionRequest, CompositionResponse
from services.composition_service import composition_service
from services.errors import ToolkitError
from services.text_formats import parse_vocabulary

logger = logging.getLogger("composition_api")

router = APIRouter(prefix="/api/composition", tags=["composition"])


@router.post("/table", response_model=CompositionResponse)
async def composition_table(request: CompositionRequest):
    try:
        vocab = parse_vocabulary(request.vocabulary)
        table, diagnostics = composition_service.table(request.op, vocab, request.k, request.bound,
                                                       request.logic.upper())
        return CompositionResponse(functional=diagnostics.functional, entries=len(table),
                                   violations=diagnostics.violations, table=table.dump())
    except ToolkitError as e:
        raise http_error(e)
    except Exception as e:
        logger.exception("Error building composition table")
        raise HTTPException(status_code=500, detail=str(e))
