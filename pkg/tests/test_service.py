import json

import pytest
from fastapi.testclient import TestClient

from codediagram.ir import graph_to_dict, serialize_graph
from codediagram.llm import EndpointError
from codediagram.service import ServiceConfig, create_app

from .helpers import base_graph, edge, graph, node, package
from .mock_server import FakeTransport


def make_client(tmp_path, script=(), **overrides):
    transport = FakeTransport(script)
    params = {
        "endpoint": "http://example.invalid",
        "model": "svc-model",
        "trace_path": tmp_path / "traces.jsonl",
        "transport": transport,
    }
    params.update(overrides)
    app = create_app(ServiceConfig(**params))
    return TestClient(app, raise_server_exceptions=True), transport


def clean_graph_text():
    return serialize_graph(base_graph())


def unacceptable_graph_text():
    bad = graph(
        nodes=[node("A"), node("B")],
        edges=[edge("A", "B")],
        packages=[package("P", ["P"])],
    )
    return serialize_graph(bad)


def response_text():
    payload = graph_to_dict(base_graph())
    return json.dumps(
        {
            "minimal_version": payload,
            "medium_version": payload,
            "full_version": payload,
            "text_answer": "two classes collaborate",
        }
    )


def generate_body(**overrides):
    body = {"code": "class A {} class B {}", "query": "how does A work?"}
    body.update(overrides)
    return body


class TestGenerate:
    def test_happy_path_finetuned(self, tmp_path):
        client, transport = make_client(tmp_path, [clean_graph_text()])
        response = client.post("/api/generate", json=generate_body())
        assert response.status_code == 200
        data = response.json()
        assert set(data) == {
            "graph", "level", "mode", "plantuml", "mermaid",
            "defects", "text_answer", "trace_id", "warnings",
        }
        assert data["level"] == "medium"
        assert data["mode"] == "finetuned"
        assert data["plantuml"].startswith("@startuml")
        assert data["mermaid"].startswith("classDiagram")
        assert data["defects"]["defects"] == []
        assert data["text_answer"] == ""
        assert "[medium version]" in transport.payloads[0]["messages"][0]["content"]

    def test_moderate_level_alias(self, tmp_path):
        client, _ = make_client(tmp_path, [clean_graph_text()])
        response = client.post("/api/generate", json=generate_body(level="moderate"))
        assert response.status_code == 200
        assert response.json()["level"] == "medium"

    def test_base_mode(self, tmp_path):
        client, _ = make_client(tmp_path, [response_text()])
        response = client.post("/api/generate", json=generate_body(mode="base", level="full"))
        assert response.status_code == 200
        data = response.json()
        assert data["mode"] == "base"
        assert data["level"] == "full"
        assert data["text_answer"] == "two classes collaborate"
        assert {n["node_id"] for n in data["graph"]["nodes"]} == {"A", "B"}

    def test_trace_is_retrievable(self, tmp_path):
        client, _ = make_client(tmp_path, [clean_graph_text()])
        trace_id = client.post("/api/generate", json=generate_body()).json()["trace_id"]
        found = client.get(f"/api/traces/{trace_id}")
        assert found.status_code == 200
        assert found.json()["status"] == "ok"
        assert found.json()["kind"] == "diagram:finetuned"

    @pytest.mark.parametrize(
        "body",
        [
            generate_body(code="   "),
            generate_body(query=""),
            generate_body(level="gigantic"),
        ],
    )
    def test_bad_request_fields(self, tmp_path, body):
        client, _ = make_client(tmp_path)
        response = client.post("/api/generate", json=body)
        assert response.status_code == 400
        assert response.json()["error"] == "bad_request"

    def test_oversized_code(self, tmp_path):
        client, _ = make_client(tmp_path, max_code_chars=10)
        response = client.post("/api/generate", json=generate_body(code="x" * 11))
        assert response.status_code == 400
        assert "character cap" in response.json()["detail"]

    def test_missing_body_field(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/generate", json={"code": "class A {}"})
        assert response.status_code == 400
        assert response.json()["error"] == "bad_request"

    def test_unknown_mode_is_bad_request(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/generate", json=generate_body(mode="zero-shot"))
        assert response.status_code == 400

    def test_endpoint_error_is_502(self, tmp_path):
        client, _ = make_client(tmp_path, [EndpointError("down")])
        response = client.post("/api/generate", json=generate_body())
        assert response.status_code == 502
        assert response.json()["error"] == "endpoint_unreachable"

    def test_exhausted_repairs_no_parse(self, tmp_path):
        client, _ = make_client(tmp_path, ["junk", "junk", "junk"])
        response = client.post("/api/generate", json=generate_body())
        assert response.status_code == 422
        data = response.json()
        assert data["error"] == "exhausted_repairs"
        assert data["attempts"] == 3
        assert data["defect_reports"] == {}
        assert data["best"] == {}
        trace = client.get(f"/api/traces/{data['trace_id']}")
        assert trace.status_code == 200
        assert trace.json()["status"] == "exhausted"

    def test_exhausted_repairs_keeps_best(self, tmp_path):
        bad = unacceptable_graph_text()
        client, _ = make_client(tmp_path, [bad, bad, bad])
        response = client.post("/api/generate", json=generate_body())
        assert response.status_code == 422
        data = response.json()
        best = data["best"]
        assert {n["node_id"] for n in best["graph"]["nodes"]} == {"A", "B"}
        assert best["plantuml"] == "" and best["mermaid"] == ""
        assert any("not drawable" in w for w in best["warnings"])
        assert data["defect_reports"]["graph"]["defects"]

    def test_repair_attempts_config(self, tmp_path):
        client, transport = make_client(tmp_path, ["junk", "junk"], repair_attempts=1)
        response = client.post("/api/generate", json=generate_body())
        assert response.status_code == 422
        assert response.json()["attempts"] == 2
        assert len(transport.payloads) == 2


class TestValidate:
    def test_clean_graph(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/validate", content=clean_graph_text())
        assert response.status_code == 200
        data = response.json()
        assert data["defects"] == []
        assert "counts_by_severity" in data

    def test_defective_graph(self, tmp_path):
        lonely = serialize_graph(graph(nodes=[node("A")]))
        client, _ = make_client(tmp_path)
        data = client.post("/api/validate", content=lonely).json()
        kinds = {d["kind"] for d in data["defects"]}
        assert "single_node" in kinds

    def test_broken_json(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/validate", content="{ nope")
        assert response.status_code == 400
        assert response.json()["error"] == "broken_json"

    def test_schema_error(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/validate", content='{"nodes": []}')
        assert response.status_code == 400
        assert response.json()["error"] == "schema_error"


class TestRender:
    def test_plantuml_default(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/render", content=clean_graph_text())
        assert response.status_code == 200
        data = response.json()
        assert data["format"] == "plantuml"
        assert data["text"].startswith("@startuml")
        assert data["warnings"] == []

    def test_mermaid_format(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/render?format=mermaid", content=clean_graph_text())
        assert response.status_code == 200
        assert response.json()["text"].startswith("classDiagram")

    def test_unknown_format(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/render?format=svg", content=clean_graph_text())
        assert response.status_code == 400
        assert "unknown format" in response.json()["detail"]

    def test_non_drawable(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.post("/api/render", content=unacceptable_graph_text())
        assert response.status_code == 422
        data = response.json()
        assert data["error"] == "non_drawable"
        assert data["reason"] == "package_recursion"

    def test_broken_json(self, tmp_path):
        client, _ = make_client(tmp_path)
        assert client.post("/api/render", content="[1,").status_code == 400


class TestTraces:
    def test_unknown_trace(self, tmp_path):
        client, _ = make_client(tmp_path)
        response = client.get("/api/traces/nope")
        assert response.status_code == 404
        assert response.json()["error"] == "not_found"


class TestHealth:
    def test_reports_config(self, tmp_path):
        client, _ = make_client(tmp_path)
        data = client.get("/api/health").json()
        assert data["status"] == "ok"
        assert data["model"] == "svc-model"
        assert data["endpoint"] == "http://example.invalid"
        assert data["endpoint_reachable"] is True  # injected transport

    def test_probe_result_is_cached(self, tmp_path, monkeypatch):
        import codediagram.service as service_mod

        calls = []

        def fake_probe(config):
            calls.append(1)
            return False

        monkeypatch.setattr(service_mod, "_probe_endpoint", fake_probe)
        client, _ = make_client(tmp_path)
        first = client.get("/api/health").json()
        second = client.get("/api/health").json()
        assert first["endpoint_reachable"] is False
        assert second["endpoint_reachable"] is False
        assert len(calls) == 1


class TestStaticMount:
    def test_serves_index(self, tmp_path):
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("<html><body>ui</body></html>")
        client, _ = make_client(tmp_path, static_dir=static)
        response = client.get("/")
        assert response.status_code == 200
        assert "ui" in response.text

    def test_api_still_routed_with_static(self, tmp_path):
        static = tmp_path / "static"
        static.mkdir()
        (static / "index.html").write_text("<html></html>")
        client, _ = make_client(tmp_path, static_dir=static)
        assert client.get("/api/health").status_code == 200
