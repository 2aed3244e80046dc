"""Query-driven code diagram toolkit.

Pipeline pieces: a JSON graph IR, a defect linter with a fixed catalog,
PlantUML/Mermaid emitters, relevance metrics, corpus curation, an LLM
generation loop with validate-and-repair, and an HTTP facade.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .ir import (  # noqa: F401
    BrokenJsonError,
    DetailLevel,
    DiagramResponse,
    Edge,
    Graph,
    MissingVersionError,
    Node,
    NodeKind,
    Package,
    ParseError,
    SchemaError,
    Visibility,
    parse_diagram_response,
    parse_graph,
    serialize_graph,
)
from .defects import (  # noqa: F401
    CATALOG,
    Defect,
    DefectKind,
    DefectReport,
    Severity,
    aggregate,
    connected_components,
    lint,
    lint_text,
)
from .render import (  # noqa: F401
    MarkupFormat,
    NonDrawableError,
    RenderOutput,
    preflight,
    to_mermaid,
    to_plantuml,
)
