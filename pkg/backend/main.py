from contextlib import asynccontextmanager
import logging

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
import uvicorn

from config import default_config

# Routers
from api.logic_api import router as logic_router
from api.invariance_api import router as invariance_router
from api.automata_api import router as automata_router
from api.composition_api import router as composition_router

logger = logging.getLogger("ordinv")


@asynccontextmanager
async def lifespan(app: FastAPI):
    logging.basicConfig(level=default_config.log_level.upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    logger.info(f"ordinv starting with {default_config.echo()}")
    yield


app = FastAPI(
    title="ordinv",
    description="Order-invariant types toolkit: rank-k types, flip partitions, invariant tree automata, "
                "composition tables",
    version="1.0.0",
    lifespan=lifespan
)

# ---------------------- CORS ----------------------
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_methods=["*"],
    allow_headers=["*"],
)

# ---------------------- API Routes ----------------------
app.include_router(logic_router)
app.include_router(invariance_router)
app.include_router(automata_router)
app.include_router(composition_router)


@app.get("/")
async def root():
    return {"message": "ordinv backend", "status": "running", "docs": "/docs"}


@app.get("/api/")
async def backend_root():
    return {"message": "ordinv backend", "status": "running", "config": default_config.model_dump()}


# ---------------------- Run ----------------------
if __name__ == "__main__":
    uvicorn.run(app, host="0.0.0.0", port=8000)
