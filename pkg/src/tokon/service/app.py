"""FastAPI application exposing the pipeline over HTTP.

Run with: uvicorn tokon.service.app:app
Domain errors surface as 400 responses carrying the error class and message.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import TokonError
from . import handlers, schemas

app = FastAPI(title="tokon", version=__version__)


@app.exception_handler(TokonError)
async def tokon_error_handler(request: Request, exc: TokonError):
    return JSONResponse(
        status_code=400,
        content={"error": type(exc).__name__, "detail": str(exc)},
    )


@app.exception_handler(FileNotFoundError)
async def missing_file_handler(request: Request, exc: FileNotFoundError):
    return JSONResponse(
        status_code=400,
        content={"error": "FileNotFound", "detail": str(exc)},
    )


@app.exception_handler(ValueError)
async def value_error_handler(request: Request, exc: ValueError):
    return JSONResponse(
        status_code=400,
        content={"error": "ValueError", "detail": str(exc)},
    )


@app.get("/healthz", response_model=schemas.HealthResponse)
def healthz():
    return handlers.health_handler()


@app.post("/ingest/ihepc", response_model=schemas.IngestResponse)
def ingest_ihepc(req: schemas.IngestIhepcRequest):
    return handlers.ingest_ihepc_handler(req)


@app.post("/ingest/m4", response_model=schemas.IngestResponse)
def ingest_m4(req: schemas.IngestM4Request):
    return handlers.ingest_m4_handler(req)


@app.post("/stats", response_model=schemas.StatsResponse)
def stats(req: schemas.StatsRequest):
    return handlers.stats_handler(req)


@app.post("/search", response_model=schemas.SearchResponse)
def search(req: schemas.SearchRequest):
    return handlers.search_handler(req)


@app.post("/forecast", response_model=schemas.ForecastRunResponse)
def forecast(req: schemas.ForecastRunRequest):
    return handlers.forecast_handler(req)


@app.post("/evaluate", response_model=schemas.EvaluateResponse)
def evaluate(req: schemas.EvaluateRequest):
    return handlers.evaluate_handler(req)


@app.post("/count-tokens", response_model=schemas.CountTokensResponse)
def count_tokens(req: schemas.CountTokensRequest):
    return handlers.count_tokens_handler(req)


@app.post("/dump-prompt", response_model=schemas.DumpPromptResponse)
def dump_prompt(req: schemas.DumpPromptRequest):
    return handlers.dump_prompt_handler(req)
