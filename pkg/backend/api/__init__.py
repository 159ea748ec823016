# API modules
from fastapi import HTTPException

from services.errors import GuardError, ToolkitError


def http_error(error: ToolkitError) -> HTTPException:
    """Guard violations map to 422, every other toolkit error to 400; the detail is the DIAG line."""
    status = 422 if isinstance(error, GuardError) else 400
    return HTTPException(status_code=status, detail=error.diag())
