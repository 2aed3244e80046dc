"""Chat-completion client and the validate-and-repair generation loop.

Diagram generation cannot rely on grammar-constrained decoding against an
arbitrary endpoint, so structure is enforced after the fact: parse the output,
lint it, and when parsing fails or an unacceptable defect appears, re-prompt
with the serialized defect report until the budget runs out.
"""

from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import httpx

from . import defects as defects_mod
from .ir import (
    DetailLevel,
    DiagramResponse,
    Graph,
    ParseError,
    diagram_response_to_dict,
    graph_to_dict,
    parse_diagram_response,
    parse_graph_loose,
)
from .prompts import build_diagram_prompt, build_finetuned_prompt, build_query_prompt

logger = logging.getLogger(__name__)

API_KEY_ENV = "CODEDIAGRAM_API_KEY"

# sampling presets: diagrams decode greedily, queries sample for diversity
QUERY_TEMPERATURE = 0.6
QUERY_TOP_P = 0.9


class LlmError(Exception):
    """Base class for generation failures."""


class EndpointError(LlmError):
    """The chat endpoint could not be reached or answered with garbage."""


class OutputParseError(LlmError):
    """Model output did not match the expected structure."""


class MissingTagError(OutputParseError):
    def __init__(self, tag: str):
        super().__init__(f"expected <{tag}>...</{tag}> in model output")
        self.tag = tag


class BadArrayError(OutputParseError):
    def __init__(self, detail: str):
        super().__init__(f"tag body is not a JSON array of strings: {detail}")


@dataclass(frozen=True)
class GenerationConfig:
    endpoint: str
    model: str
    temperature: float | None = None
    top_p: float | None = None
    max_tokens: int | None = None
    repair_attempts: int = 2
    timeout: float = 120.0
    api_key: str | None = None

    def __post_init__(self) -> None:
        if self.temperature is not None and self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.repair_attempts < 0:
            raise ValueError("repair_attempts must be >= 0")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


Transport = Callable[[dict], dict]


def http_transport(config: GenerationConfig) -> Transport:
    """POST to an OpenAI-style /chat/completions endpoint."""
    url = config.endpoint.rstrip("/")
    if not url.endswith("/chat/completions"):
        url = url + "/chat/completions"
    key = config.api_key or os.environ.get(API_KEY_ENV)
    headers = {"Authorization": f"Bearer {key}"} if key else {}

    def send(payload: dict) -> dict:
        try:
            response = httpx.post(
                url, json=payload, headers=headers, timeout=config.timeout
            )
            response.raise_for_status()
            return response.json()
        except httpx.HTTPError as exc:
            raise EndpointError(f"chat endpoint failed: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise EndpointError(f"chat endpoint returned non-JSON: {exc}") from exc

    return send


class ChatClient:
    """Thin chat-completion wrapper; the transport is injectable for offline tests."""

    def __init__(self, config: GenerationConfig, transport: Transport | None = None):
        self.config = config
        self._transport = transport or http_transport(config)

    def complete(
        self,
        messages: Sequence[dict],
        temperature: float | None = None,
        top_p: float | None = None,
    ) -> str:
        payload: dict[str, Any] = {"model": self.config.model, "messages": list(messages)}
        if temperature is not None:
            payload["temperature"] = temperature
        if top_p is not None:
            payload["top_p"] = top_p
        if self.config.max_tokens is not None:
            payload["max_tokens"] = self.config.max_tokens
        data = self._transport(payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise EndpointError(f"malformed chat completion response: {exc!r}") from exc
        if not isinstance(content, str):
            raise EndpointError("chat completion content is not a string")
        return content


@dataclass(frozen=True)
class QueryCandidateSet:
    candidates: list[str]
    final: list[str]
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "candidates": list(self.candidates),
            "final": list(self.final),
            "warnings": list(self.warnings),
        }


def _extract_tag(text: str, tag: str) -> str:
    match = re.search(rf"<{tag}>(.*?)</{tag}>", text, re.DOTALL)
    if match is None:
        raise MissingTagError(tag)
    return match.group(1).strip()


def _string_array(body: str) -> list[str]:
    try:
        value = json.loads(body)
    except json.JSONDecodeError as exc:
        raise BadArrayError(str(exc)) from None
    if not isinstance(value, list) or any(
        not isinstance(item, str) or not item for item in value
    ):
        raise BadArrayError("expected a list of non-empty strings")
    return value


def parse_query_output(text: str) -> QueryCandidateSet:
    """Parse candidate and final query lists out of tagged model output.

    A final list longer than three entries is truncated with a warning rather
    than rejected.
    """
    candidates = _string_array(_extract_tag(text, "candidates"))
    final = _string_array(_extract_tag(text, "final_output"))
    warnings = []
    if len(final) > 3:
        warnings.append(f"final selection has {len(final)} queries; keeping the first 3")
        final = final[:3]
    return QueryCandidateSet(candidates=candidates, final=final, warnings=warnings)


@dataclass
class AttemptRecord:
    request_messages: list[dict]
    response_text: str
    parse_error: str | None = None
    defect_reports: dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "request_messages": self.request_messages,
            "response_text": self.response_text,
            "parse_error": self.parse_error,
            "defect_reports": self.defect_reports,
        }


@dataclass
class GenerationTrace:
    """Audit record of one generation: every request, response and defect report."""

    kind: str
    model: str
    endpoint: str
    trace_id: str = field(default_factory=lambda: uuid.uuid4().hex)
    created_at: float = field(default_factory=time.time)
    attempts: list[AttemptRecord] = field(default_factory=list)
    status: str = "incomplete"

    @property
    def attempt_count(self) -> int:
        return len(self.attempts)

    def to_dict(self) -> dict:
        return {
            "trace_id": self.trace_id,
            "kind": self.kind,
            "model": self.model,
            "endpoint": self.endpoint,
            "created_at": self.created_at,
            "status": self.status,
            "attempts": [a.to_dict() for a in self.attempts],
        }


class ExhaustedRepairsError(LlmError):
    """Every attempt failed to parse or lint acceptably; carries the best attempt."""

    def __init__(
        self,
        message: str,
        trace: GenerationTrace,
        best_result: Graph | DiagramResponse | None,
        best_report: dict[str, dict],
    ):
        super().__init__(message)
        self.trace = trace
        self.best_result = best_result
        self.best_report = best_report


def generate_queries(
    config: GenerationConfig,
    code: str,
    client: ChatClient | None = None,
) -> tuple[QueryCandidateSet, GenerationTrace]:
    """One-shot query generation; output parse errors propagate to the caller."""
    client = client or ChatClient(config)
    trace = GenerationTrace(kind="queries", model=config.model, endpoint=config.endpoint)
    messages = [{"role": "user", "content": build_query_prompt(code)}]
    temperature = config.temperature if config.temperature is not None else QUERY_TEMPERATURE
    top_p = config.top_p if config.top_p is not None else QUERY_TOP_P
    text = client.complete(messages, temperature=temperature, top_p=top_p)
    record = AttemptRecord(request_messages=list(messages), response_text=text)
    trace.attempts.append(record)
    try:
        result = parse_query_output(text)
    except OutputParseError as exc:
        record.parse_error = str(exc)
        trace.status = "parse_error"
        raise
    trace.status = "ok"
    return result, trace


def _repair_message(reports: dict[str, dict], parse_error: str | None) -> str:
    if parse_error is not None:
        problem = f"The previous output could not be parsed: {parse_error}"
        detail = ""
    else:
        problem = "The previous output has defects that make it unusable."
        detail = "\n" + json.dumps(reports, indent=2, ensure_ascii=False)
    return (
        f"{problem}{detail}\n"
        "Regenerate the full answer in the same format, fixing every defect listed above."
    )


def _lint_result(
    result: Graph | DiagramResponse, source_code: str, graph_id: str
) -> dict[str, dict]:
    if isinstance(result, Graph):
        return {"graph": defects_mod.lint(result, source_code=source_code, graph_id=graph_id).to_dict()}
    reports = {}
    for level in DetailLevel:
        report = defects_mod.lint(
            result.graph_for(level),
            source_code=source_code,
            graph_id=f"{graph_id}:{level.value}",
        )
        reports[level.value] = report.to_dict()
    return reports


def _worst_label(reports: dict[str, dict]) -> int:
    worst = 0
    for report in reports.values():
        for defect in report["defects"]:
            worst = max(worst, int(defects_mod.Severity.parse(defect["severity"])))
    return worst


def _unacceptable(reports: dict[str, dict]) -> bool:
    return _worst_label(reports) >= int(defects_mod.Severity.UNACCEPTABLE)


def generate_diagram(
    config: GenerationConfig,
    code: str,
    query: str,
    mode: str = "base",
    level: DetailLevel | str | None = None,
    client: ChatClient | None = None,
) -> tuple[Graph | DiagramResponse, GenerationTrace]:
    """Generate a diagram with the validate-and-repair loop.

    mode "base" prompts for the three-level response; mode "finetuned" prompts
    for a single graph at the requested level. Raises ExhaustedRepairsError
    after 1 + repair_attempts failed attempts, carrying the best attempt seen.
    """
    if mode not in ("base", "finetuned"):
        raise ValueError(f"unknown mode: {mode!r}")
    if mode == "finetuned":
        if level is None:
            raise ValueError("finetuned mode needs a detail level")
        level = DetailLevel.parse(level) if isinstance(level, str) else level
        prompt = build_finetuned_prompt(code, query, level)
    else:
        prompt = build_diagram_prompt(code, query)

    client = client or ChatClient(config)
    trace = GenerationTrace(kind=f"diagram:{mode}", model=config.model, endpoint=config.endpoint)
    messages: list[dict] = [{"role": "user", "content": prompt}]
    temperature = config.temperature if config.temperature is not None else 0.0

    best: tuple[int, int, Graph | DiagramResponse | None, dict[str, dict]] | None = None
    budget = 1 + config.repair_attempts
    for attempt in range(budget):
        text = client.complete(messages, temperature=temperature, top_p=config.top_p)
        record = AttemptRecord(request_messages=[dict(m) for m in messages], response_text=text)
        trace.attempts.append(record)
        parse_error: str | None = None
        result: Graph | DiagramResponse | None = None
        reports: dict[str, dict] = {}
        try:
            if mode == "finetuned":
                result = parse_graph_loose(text)
            else:
                result = parse_diagram_response(text)
        except ParseError as exc:
            parse_error = str(exc)
            record.parse_error = parse_error
        if result is not None:
            reports = _lint_result(result, code, trace.trace_id)
            record.defect_reports = reports
            if not _unacceptable(reports):
                trace.status = "ok"
                return result, trace
        # rank: parsed beats unparsed, then lower worst severity, later attempt wins ties
        rank = (1 if result is None else 0, _worst_label(reports) if result is not None else 99)
        if best is None or rank <= best[:2]:
            best = (*rank, result, reports)
        messages.append({"role": "assistant", "content": text})
        messages.append({"role": "user", "content": _repair_message(reports, parse_error)})
        logger.info(
            "attempt %d/%d rejected (%s); re-prompting",
            attempt + 1,
            budget,
            parse_error or "unacceptable defects",
        )
    trace.status = "exhausted"
    assert best is not None
    raise ExhaustedRepairsError(
        f"no acceptable diagram after {budget} attempts",
        trace=trace,
        best_result=best[2],
        best_report=best[3],
    )


def result_to_dict(result: Graph | DiagramResponse) -> dict:
    if isinstance(result, Graph):
        return graph_to_dict(result)
    return diagram_response_to_dict(result)


class TraceStore:
    """Append-only JSONL store keyed by trace_id."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def append(self, trace: GenerationTrace) -> None:
        line = json.dumps(trace.to_dict(), ensure_ascii=False)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as handle:
                handle.write(line + "\n")

    def get(self, trace_id: str) -> dict | None:
        if not self.path.exists():
            return None
        with self._lock:
            with open(self.path, encoding="utf-8") as handle:
                for raw in handle:
                    raw = raw.strip()
                    if not raw:
                        continue
                    obj = json.loads(raw)
                    if obj.get("trace_id") == trace_id:
                        return obj
        return None


def write_trace(trace: GenerationTrace, path: str | Path) -> None:
    TraceStore(path).append(trace)
