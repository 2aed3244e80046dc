"""Command line interface.

Exit codes: 0 clean; 1/2/3 encode the worst defect severity found (minor,
severe, unacceptable); 64 usage errors; 70 operational failures (missing
files, unreachable endpoints). A --config JSON file can supply defaults for
any flag by its destination name; explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__, corpus, defects as defects_mod, ir, metrics, render
from .defects import DefectReport, Severity

logger = logging.getLogger(__name__)

EX_USAGE = 64
EX_SOFTWARE = 70


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse default exits 2; the contract says 64
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


class _Fail(Exception):
    """Operational failure carrying the exit code."""

    def __init__(self, message: str, code: int = EX_SOFTWARE):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Fail(f"cannot read {path}: {exc}") from exc


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _Fail(f"cannot read {path}: {exc}") from exc


def _emit_json(payload) -> None:
    print(json.dumps(payload, indent=2, ensure_ascii=False))


def _severity_exit(reports: list[DefectReport]) -> int:
    worst = 0
    for report in reports:
        severity = report.worst_severity()
        if severity is not None:
            worst = max(worst, int(severity))
    return worst


def _print_report(report: DefectReport) -> None:
    counts = report.counts_by_severity
    print(
        f"{report.graph_id or '<graph>'}: {report.node_count} nodes, "
        f"{len(report.defects)} defects "
        f"(minor {counts[Severity.MINOR]}, severe {counts[Severity.SEVERE]}, "
        f"unacceptable {counts[Severity.UNACCEPTABLE]})"
    )
    for defect in report.defects:
        subjects = " ".join(defect.subjects)
        print(f"  [{defect.severity.label}] {defect.kind.value}: {defect.message}"
              + (f" ({subjects})" if subjects else ""))


def cmd_validate(args) -> int:
    code = 0
    results = []
    for path in args.graph:
        try:
            ir.parse_graph(_read_bytes(path))
        except ir.BrokenJsonError as exc:
            results.append({"path": path, "valid": False, "error": "broken_json", "detail": str(exc)})
            code = max(code, 3)
        except ir.ParseError as exc:
            results.append({"path": path, "valid": False, "error": "schema_error", "detail": str(exc)})
            code = max(code, 3)
        else:
            results.append({"path": path, "valid": True})
    if args.json:
        _emit_json(results)
    else:
        for row in results:
            if row["valid"]:
                print(f"{row['path']}: OK")
            else:
                print(f"{row['path']}: {row['error']}: {row['detail']}", file=sys.stderr)
    return code


def cmd_lint(args) -> int:
    source = _read_text(args.source) if args.source else None
    reports = [
        defects_mod.lint_text(_read_bytes(path), source_code=source, graph_id=path)
        for path in args.graph
    ]
    if args.json:
        _emit_json([r.to_dict() for r in reports])
    else:
        for report in reports:
            _print_report(report)
    return _severity_exit(reports)


def cmd_render(args) -> int:
    try:
        graph = ir.parse_graph(_read_bytes(args.graph))
    except ir.ParseError as exc:
        raise _Fail(f"{args.graph}: {exc}", code=3) from exc
    try:
        output = render.render(graph, render.MarkupFormat(args.format))
    except render.NonDrawableError as exc:
        raise _Fail(f"{args.graph}: not drawable: {exc}", code=3) from exc
    for warning in output.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.json:
        _emit_json(output.to_dict())
    elif args.out:
        Path(args.out).write_text(output.text, encoding="utf-8")
    else:
        sys.stdout.write(output.text)
    return 0


def _lint_one(path: Path, sources_dir: str | None) -> DefectReport:
    source = None
    if sources_dir:
        candidate = Path(sources_dir) / (path.stem + ".txt")
        if candidate.exists():
            source = candidate.read_text(encoding="utf-8")
    return defects_mod.lint_text(path.read_bytes(), source_code=source, graph_id=path.name)


def cmd_eval_defects(args) -> int:
    files = sorted(Path(args.graphs).glob("*.json"))
    if not files:
        raise _Fail(f"no .json graphs under {args.graphs}")
    with ThreadPoolExecutor(max_workers=max(1, args.workers)) as pool:
        reports = list(pool.map(lambda p: _lint_one(p, args.sources), files))
    usable = [r for r in reports if r.node_count > 0]
    excluded = [r.graph_id for r in reports if r.node_count == 0]
    payload: dict = {"reports": [r.to_dict() for r in reports], "excluded_from_rates": excluded}
    if usable:
        payload["aggregate"] = defects_mod.DefectAggregate.from_reports(usable).to_dict()
    if args.json:
        _emit_json(payload)
    else:
        for report in reports:
            _print_report(report)
        if excluded:
            print(f"excluded from rates (zero nodes): {', '.join(excluded)}")
        if usable:
            grid = payload["aggregate"]
            print(f"{'defects/diagram':>18} {'low':>8} {'med':>8}")
            for row in ("micro", "macro", "mean"):
                print(f"{row:>18} {grid['low'][row]:>8.3f} {grid['med'][row]:>8.3f}")
    return _severity_exit(reports)


def _format_metric(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def cmd_eval_relevance(args) -> int:
    annotations = metrics.load_annotations(args.annotations)
    if not annotations:
        raise _Fail(f"no .json annotation files under {args.annotations}")
    report = metrics.relevance_report(annotations)
    if args.out:
        Path(args.out).write_text(
            json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    if args.json:
        _emit_json(report)
    else:
        for model, counts in report["class_counts"].items():
            print(f"{model}: " + " ".join(f"{k}={v}" for k, v in counts.items()))
        for model, grid in report["metrics"].items():
            micro, macro = grid["micro"], grid["macro"]
            print(f"{model} ({grid['queries']} queries)")
            for name in ("precision", "recall", "f1", "precision_hard", "recall_hard", "f1_hard"):
                print(
                    f"  {name:>15}: micro {_format_metric(micro[name]):>7} "
                    f"macro {_format_metric(macro[name]):>7}"
                )
        for pair, agreement in report["agreement"].items():
            print(f"kappa[{pair}] = {agreement['kappa']:.4f}")
    return 0


def cmd_curate(args) -> int:
    input_path = Path(args.input)
    if input_path.is_dir():
        records = corpus.scan_directory(input_path, repo=args.repo)
    else:
        with open(input_path, encoding="utf-8") as handle:
            rows = json.load(handle)
        if not isinstance(rows, list):
            raise _Fail(f"{args.input}: metadata file must hold a JSON list")
        rows = corpus.filter_metadata_rows(
            rows, min_stars=args.min_stars, require_license=args.require_license
        )
        records = []
        for i, row in enumerate(rows):
            if not isinstance(row, dict) or not {"repo", "path", "content"} <= set(row):
                raise _Fail(f"{args.input}: row {i} must carry repo, path and content")
            records.append(
                corpus.FileRecord.from_content(
                    row["repo"], row["path"], row["content"], row.get("language")
                )
            )
    sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else None
    ratios = [float(r) for r in args.ratios.split(",")] if args.ratios else None
    try:
        manifest, dropped = corpus.curate(
            records,
            min_chars=args.min_chars,
            max_chars=args.max_chars,
            ascii_only=args.ascii_only,
            threshold=args.jaccard,
            sizes=sizes,
            ratios=ratios,
            seed=args.seed,
        )
    except ValueError as exc:
        raise _Fail(str(exc)) from exc
    text = manifest.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    if args.json:
        sys.stdout.write(text)
    else:
        counts = manifest.split_counts()
        print(
            f"{len(records)} scanned, {len(manifest.entries)} selected "
            f"({counts['train']} train / {counts['val']} val / {counts['test']} test), "
            f"{len(dropped)} near-duplicates dropped"
        )
        for warning in manifest.warnings:
            print(f"warning: {warning}", file=sys.stderr)
    return 0


def _generation_config(args) -> "GenerationConfig":
    from .llm import GenerationConfig

    if not args.endpoint:
        raise _Fail("an --endpoint is required", code=EX_USAGE)
    return GenerationConfig(
        endpoint=args.endpoint,
        model=args.model,
        temperature=args.temperature,
        repair_attempts=args.repair_attempts,
        timeout=args.timeout,
    )


def cmd_gen_queries(args) -> int:
    from . import llm

    code = _read_text(args.code)
    config = _generation_config(args)
    try:
        result, trace = llm.generate_queries(config, code)
    except llm.EndpointError as exc:
        raise _Fail(str(exc)) from exc
    except llm.OutputParseError as exc:
        raise _Fail(f"model output unusable: {exc}", code=3) from exc
    if args.trace_out:
        llm.write_trace(trace, args.trace_out)
    if args.json:
        _emit_json({**result.to_dict(), "trace_id": trace.trace_id})
    else:
        for query in result.final:
            print(query)
        if not result.final:
            print("(no queries survived filtering)", file=sys.stderr)
    return 0


def cmd_gen_diagram(args) -> int:
    from . import llm

    code = _read_text(args.code)
    query = args.query if args.query else _read_text(args.query_file)
    config = _generation_config(args)
    try:
        level = ir.DetailLevel.parse(args.level)
    except ValueError as exc:
        raise _Fail(str(exc), code=EX_USAGE) from exc
    try:
        result, trace = llm.generate_diagram(
            config, code, query, mode=args.mode, level=level
        )
    except llm.EndpointError as exc:
        raise _Fail(str(exc)) from exc
    except llm.ExhaustedRepairsError as exc:
        if args.trace_out:
            llm.write_trace(exc.trace, args.trace_out)
        payload = {
            "error": "exhausted_repairs",
            "detail": str(exc),
            "trace_id": exc.trace.trace_id,
            "attempts": exc.trace.attempt_count,
            "defect_reports": exc.best_report,
        }
        if exc.best_result is not None:
            payload["best"] = llm.result_to_dict(exc.best_result)
        if args.json:
            _emit_json(payload)
        else:
            print(f"exhausted repairs after {exc.trace.attempt_count} attempts: {exc}", file=sys.stderr)
        return 3
    if args.trace_out:
        llm.write_trace(trace, args.trace_out)
    if isinstance(result, ir.DiagramResponse):
        graph = result.graph_for(level)
        result_payload = ir.diagram_response_to_dict(result)
    else:
        graph = result
        result_payload = ir.graph_to_dict(result)
    report = defects_mod.lint(graph, source_code=code, graph_id=trace.trace_id)
    markup = None
    if args.render_format:
        try:
            markup = render.render(graph, render.MarkupFormat(args.render_format)).to_dict()
        except render.NonDrawableError as exc:
            markup = {"error": "non_drawable", "detail": str(exc)}
    if args.out:
        Path(args.out).write_text(
            json.dumps(result_payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
    if args.json:
        payload = {
            "mode": args.mode,
            "level": level.value,
            "result": result_payload,
            "defects": report.to_dict(),
            "trace_id": trace.trace_id,
            "attempts": trace.attempt_count,
        }
        if markup is not None:
            payload["markup"] = markup
        _emit_json(payload)
    else:
        if markup is not None and "text" in markup:
            sys.stdout.write(markup["text"])
        elif not args.out:
            print(json.dumps(result_payload, indent=2, ensure_ascii=False))
        _print_report(report)
    return _severity_exit([report])


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    if not args.endpoint:
        raise _Fail("an --endpoint is required", code=EX_USAGE)
    app = create_app(
        ServiceConfig(
            endpoint=args.endpoint,
            model=args.model,
            trace_path=args.trace_out,
            static_dir=args.static,
            repair_attempts=args.repair_attempts,
            timeout=args.timeout,
        )
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _add_generation_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--endpoint", help="chat-completion endpoint base URL")
    parser.add_argument("--model", default="default", help="model name to request")
    parser.add_argument("--temperature", type=float, default=None)
    parser.add_argument("--repair-attempts", type=int, default=2)
    parser.add_argument("--timeout", type=float, default=120.0)
    parser.add_argument("--trace-out", help="append generation traces to this JSONL file")


def build_parser() -> tuple[_Parser, list[argparse.ArgumentParser]]:
    parser = _Parser(prog="codediagram", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of default flag values")
    subparsers = parser.add_subparsers(dest="command", required=True)
    all_parsers: list[argparse.ArgumentParser] = []

    def sub(name: str, func, parent=subparsers, **kwargs):
        p = parent.add_parser(name, **kwargs)
        p.add_argument("--json", action="store_true", help="machine-readable output")
        p.add_argument("--config", help="JSON file of default flag values")
        p.set_defaults(func=func)
        all_parsers.append(p)
        return p

    p = sub("validate", cmd_validate, help="parse graphs and report schema validity")
    p.add_argument("graph", nargs="+")

    p = sub("lint", cmd_lint, help="run the defect catalog over graphs")
    p.add_argument("graph", nargs="+")
    p.add_argument("--source", help="source file for name cross-checking")

    p = sub("render", cmd_render, help="emit diagram markup for a graph")
    p.add_argument("graph")
    p.add_argument("--format", choices=[f.value for f in render.MarkupFormat],
                   default=render.MarkupFormat.PLANTUML.value)
    p.add_argument("-o", "--out", help="write markup here instead of stdout")

    eval_parser = subparsers.add_parser("eval", help="evaluation suites")
    eval_sub = eval_parser.add_subparsers(dest="eval_command", required=True)

    p = sub("defects", cmd_eval_defects, parent=eval_sub,
            help="lint a directory of graphs and aggregate defect rates")
    p.add_argument("--graphs", required=True)
    p.add_argument("--sources", help="directory of <graph-stem>.txt source files")
    p.add_argument("--workers", type=int, default=1)

    p = sub("relevance", cmd_eval_relevance, parent=eval_sub,
            help="compute the relevance metric grid from annotations")
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", help="also write the report JSON here")

    p = sub("curate", cmd_curate, help="filter, dedup and split a corpus")
    p.add_argument("--input", required=True, help="directory or metadata JSON file")
    p.add_argument("--repo", help="repo name override for directory scans")
    p.add_argument("--min-chars", type=int, default=corpus.MIN_CHARS_DEFAULT)
    p.add_argument("--max-chars", type=int, default=corpus.MAX_CHARS_DEFAULT)
    ascii_group = p.add_mutually_exclusive_group()
    ascii_group.add_argument("--ascii-only", dest="ascii_only", action="store_true", default=True)
    ascii_group.add_argument("--no-ascii-only", dest="ascii_only", action="store_false")
    p.add_argument("--jaccard", type=float, default=corpus.JACCARD_THRESHOLD_DEFAULT)
    p.add_argument("--sizes", help="comma-separated train,val,test counts")
    p.add_argument("--ratios", help="comma-separated train,val,test fractions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-stars", type=int, default=0, help="metadata rows only")
    p.add_argument("--require-license", action="store_true", help="metadata rows only")
    p.add_argument("--out", help="write the manifest JSON here")

    gen_parser = subparsers.add_parser("gen", help="LLM generation")
    gen_sub = gen_parser.add_subparsers(dest="gen_command", required=True)

    p = sub("queries", cmd_gen_queries, parent=gen_sub,
            help="generate candidate user queries for a code file")
    p.add_argument("--code", required=True, help="code file to read")
    _add_generation_flags(p)

    p = sub("diagram", cmd_gen_diagram, parent=gen_sub,
            help="generate a diagram for a code file and query")
    p.add_argument("--code", required=True, help="code file to read")
    query_group = p.add_mutually_exclusive_group(required=True)
    query_group.add_argument("--query")
    query_group.add_argument("--query-file")
    p.add_argument("--level", default="medium",
                   help="minimal, medium (alias moderate) or full")
    p.add_argument("--mode", choices=["base", "finetuned"], default="base")
    p.add_argument("--render-format", choices=[f.value for f in render.MarkupFormat])
    p.add_argument("-o", "--out", help="write the result JSON here")
    _add_generation_flags(p)

    p = sub("serve", cmd_serve, help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", help="directory of UI assets to serve at /")
    _add_generation_flags(p)

    return parser, all_parsers


def _apply_config_defaults(argv: list[str], parsers: list[argparse.ArgumentParser]) -> None:
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
    if path is None:
        return
    try:
        with open(path, encoding="utf-8") as handle:
            defaults = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise _Fail(f"cannot load config {path}: {exc}", code=EX_USAGE) from exc
    if not isinstance(defaults, dict):
        raise _Fail(f"config {path} must hold a JSON object", code=EX_USAGE)
    for parser in parsers:
        parser.set_defaults(**defaults)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser, all_parsers = build_parser()
    try:
        _apply_config_defaults(argv, all_parsers)
        args = parser.parse_args(argv)
        return args.func(args)
    except _Fail as exc:
        print(f"codediagram: error: {exc}", file=sys.stderr)
        return exc.code
    except ir.ParseError as exc:
        print(f"codediagram: error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
