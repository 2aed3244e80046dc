"""HTTP facade over generation, validation and rendering.

The service is stateless apart from the append-only trace log; identical
requests differ only in trace_id. Model misbehavior surfaces as structured
4xx payloads, never a 500.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import httpx
from fastapi import FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import __version__
from .ir import (
    BrokenJsonError,
    DetailLevel,
    DiagramResponse,
    Graph,
    ParseError,
    graph_to_dict,
    parse_graph,
)
from .defects import lint
from .llm import (
    ChatClient,
    EndpointError,
    ExhaustedRepairsError,
    GenerationConfig,
    TraceStore,
    Transport,
    generate_diagram,
)
from .render import MarkupFormat, NonDrawableError, to_mermaid, to_plantuml

logger = logging.getLogger(__name__)

_HEALTH_CACHE_TTL = 60.0


@dataclass
class ServiceConfig:
    endpoint: str
    model: str
    trace_path: str | Path = "traces.jsonl"
    static_dir: str | Path | None = None
    max_code_chars: int = 200_000
    repair_attempts: int = 2
    timeout: float = 120.0
    transport: Transport | None = None  # injectable for offline tests


class GenerateRequest(BaseModel):
    code: str
    query: str
    level: str = "medium"
    mode: Literal["base", "finetuned"] = "finetuned"


def _error(status: int, error: str, detail: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": error, "detail": detail, **extra})


def _render_both(graph: Graph) -> tuple[str, str, list[str]]:
    warnings: list[str] = []
    try:
        plantuml = to_plantuml(graph)
        mermaid = to_mermaid(graph)
    except NonDrawableError as exc:
        return "", "", [f"not drawable: {exc}"]
    warnings.extend(plantuml.warnings)
    for w in mermaid.warnings:
        if w not in warnings:
            warnings.append(w)
    return plantuml.text, mermaid.text, warnings


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="codediagram", version=__version__)
    traces = TraceStore(config.trace_path)
    generation_config = GenerationConfig(
        endpoint=config.endpoint,
        model=config.model,
        repair_attempts=config.repair_attempts,
        timeout=config.timeout,
    )
    client = ChatClient(generation_config, transport=config.transport)
    health_cache: dict = {"at": 0.0, "reachable": None}

    @app.exception_handler(RequestValidationError)
    async def bad_request(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", str(exc.errors()))

    @app.post("/api/generate")
    def generate(body: GenerateRequest):
        if not body.code.strip():
            return _error(400, "bad_request", "code must be non-empty")
        if not body.query.strip():
            return _error(400, "bad_request", "query must be non-empty")
        if len(body.code) > config.max_code_chars:
            return _error(
                400,
                "bad_request",
                f"code exceeds the {config.max_code_chars} character cap",
            )
        try:
            level = DetailLevel.parse(body.level)
        except ValueError as exc:
            return _error(400, "bad_request", str(exc))
        try:
            result, trace = generate_diagram(
                generation_config,
                body.code,
                body.query,
                mode=body.mode,
                level=level,
                client=client,
            )
        except EndpointError as exc:
            return _error(502, "endpoint_unreachable", str(exc))
        except ExhaustedRepairsError as exc:
            traces.append(exc.trace)
            best: dict = {}
            if exc.best_result is not None:
                graph = (
                    exc.best_result.graph_for(level)
                    if isinstance(exc.best_result, DiagramResponse)
                    else exc.best_result
                )
                plantuml, mermaid, warnings = _render_both(graph)
                best = {
                    "graph": graph_to_dict(graph),
                    "plantuml": plantuml,
                    "mermaid": mermaid,
                    "warnings": warnings,
                }
                if isinstance(exc.best_result, DiagramResponse):
                    best["text_answer"] = exc.best_result.text_answer
            return _error(
                422,
                "exhausted_repairs",
                str(exc),
                trace_id=exc.trace.trace_id,
                attempts=exc.trace.attempt_count,
                defect_reports=exc.best_report,
                best=best,
            )
        traces.append(trace)
        if isinstance(result, DiagramResponse):
            graph = result.graph_for(level)
            text_answer = result.text_answer
        else:
            graph = result
            text_answer = ""
        report = lint(graph, source_code=body.code, graph_id=trace.trace_id)
        plantuml, mermaid, warnings = _render_both(graph)
        return {
            "graph": graph_to_dict(graph),
            "level": level.value,
            "mode": body.mode,
            "plantuml": plantuml,
            "mermaid": mermaid,
            "defects": report.to_dict(),
            "text_answer": text_answer,
            "trace_id": trace.trace_id,
            "warnings": warnings,
        }

    @app.post("/api/validate")
    async def validate(request: Request):
        raw = await request.body()
        try:
            graph = parse_graph(raw)
        except BrokenJsonError as exc:
            return _error(400, "broken_json", str(exc))
        except ParseError as exc:
            return _error(400, "schema_error", str(exc))
        return lint(graph).to_dict()

    @app.post("/api/render")
    async def render_graph(
        request: Request, format: str = Query(default=MarkupFormat.PLANTUML.value)
    ):
        try:
            markup_format = MarkupFormat(format)
        except ValueError:
            return _error(400, "bad_request", f"unknown format: {format!r}")
        raw = await request.body()
        try:
            graph = parse_graph(raw)
        except BrokenJsonError as exc:
            return _error(400, "broken_json", str(exc))
        except ParseError as exc:
            return _error(400, "schema_error", str(exc))
        try:
            if markup_format is MarkupFormat.PLANTUML:
                output = to_plantuml(graph)
            else:
                output = to_mermaid(graph)
        except NonDrawableError as exc:
            return _error(422, "non_drawable", str(exc), reason=exc.reason)
        return output.to_dict()

    @app.get("/api/traces/{trace_id}")
    def get_trace(trace_id: str):
        found = traces.get(trace_id)
        if found is None:
            return _error(404, "not_found", f"no trace {trace_id!r}")
        return found

    @app.get("/api/health")
    def health():
        now = time.monotonic()
        if health_cache["reachable"] is None or now - health_cache["at"] > _HEALTH_CACHE_TTL:
            health_cache["at"] = now
            health_cache["reachable"] = _probe_endpoint(config)
        return {
            "status": "ok",
            "version": __version__,
            "model": config.model,
            "endpoint": config.endpoint,
            "endpoint_reachable": health_cache["reachable"],
        }

    if config.static_dir is not None:
        app.mount("/", StaticFiles(directory=str(config.static_dir), html=True), name="ui")

    return app


def _probe_endpoint(config: ServiceConfig) -> bool:
    if config.transport is not None:
        return True  # in-process transport is reachable by construction
    try:
        httpx.get(config.endpoint, timeout=5.0)
    except httpx.HTTPError:
        return False
    return True
