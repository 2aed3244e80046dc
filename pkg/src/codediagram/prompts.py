"""Prompt templates for query and diagram generation.

The templates are wire-format contracts: byte-for-byte stable, including
trailing spaces. They are kept as explicit per-line literals so significant
whitespace stays visible and safe from editor cleanup. Placeholders are
substituted in a single pass, never with str.format: the templates carry
literal JSON braces, and user code may itself contain placeholder-shaped
text.
"""

from __future__ import annotations

import re

from .ir import DetailLevel

QUERY_PROMPT_TEMPLATE = (
    "1. The final output must be a JSON array of strings representing questions, \n"
    "   enclosed within `<candidates>` and `<final_output>` XML tags. \n"
    "   You must strictly follow this template for the final answer: \n"
    "   `<candidates>[\"question1\", ..., \"questionN\"]</candidates>\n"
    "   <final_output>[\"question1\", ..., \"questionK\"]</final_output>`.\n"
    "   During processing, you may represent questions in any format.  \n"
    "2. Questions must focus on aspects of the provided code, such as project structure,\n"
    "   component interactions, imported modules, code behavior, design patterns, \n"
    "   code design principles, external API usage, deployment strategies, \n"
    "   or the potential integration of new components into the code.  \n"
    "3. Each question will be used as a user query for another LLM.\n"
    "   Therefore, each generated question should either ask the LLM for information \n"
    "   or instruct it to perform a task.\n"
    "4. The expected answer for each question must be some kind of diagram\n"
    "   (e.g., PlantUML or Mermaid.js). \n"
    "   Ensure each question can be effectively answered with a diagrammatic representation\n"
    "   rather than just text.  \n"
    "5. Do not mention diagrams explicitly; instead, use similar words such as structure,\n"
    "   relationships, interactions and so on. \n"
    "6. You must generate 10 candidate questions within the `<candidates>` tags.\n"
    "7. Filter or combine candidate questions to create a final selection \n"
    "   of 0 to 3 high-quality questions within the `<final_output>` tags. \n"
    "   Prioritize question quality over quantity.\n"
    "   Try to cover different topics in the final selection.  \n"
    "8. The LLM answering the questions will only have access to the content \n"
    "   of the provided code file. Therefore, ensure all generated questions \n"
    "   can be answered solely based on the information within that file, \n"
    "   without requiring external context or knowledge beyond the given code.  \n"
    "9. Each question must be straightforward and as short as possible. \n"
    "   Since each question is intended to be answered by a single diagram,\n"
    "   avoid combining multiple questions into one.  \n"
    "10. Each question must be unique. \n"
    "    Avoid creating duplicate or near-duplicate questions, even with slight\n"
    "    variations in wording.\n"
    "11. If you cannot identify any questions that meet all the specified criteria, \n"
    "    it is perfectly acceptable to return an empty list \n"
    "    within the `<final_output>` tags. \n"
    "    If a question does not fully meet all requirements (or if you're not 100% sure), \n"
    "    you should remove it.\n"
    "\n"
    "Generate a list of questions based on the following code file:\n"
    "```\n"
    "{code}\n"
    "```"
)

DIAGRAM_PROMPT_TEMPLATE = (
    "1. You should generate Python list of nodes, list of edges and list of packages. \n"
    "   Each element is presented by JSON.\n"
    "2. Make sure the final diagram is comprehensible: it should be readable,\n"
    "   understandable by user.\n"
    "3. For each node write a short description.\n"
    "4. The diagram should contain all important nodes and edges to code understanding.\n"
    "5. You can omit some of the standard, boilerplate-code steps.\n"
    "6. You can add conceptual entities to diagram \n"
    "   (high-level concepts that are not functions or classes).\n"
    "7. Try to group related nodes (including those you introduce) using package elements,\n"
    "   where possible, do not use classes for this purpose.\n"
    "8. Package elements can be nested.\n"
    "9. Do not add fake classes to aggregate code entities, use packages for this purpose. \n"
    "   All fields and methods should be presented as is in code.\n"
    "10. JSON template for node: {\n"
    "    \"type\": Literal[\"class\", \"variable\", \"function\", \"entity\", \"method\", \"field\"], # a \n"
    "    type of node from the predefined types; use the most appropriate\n"
    "    \"name\": str, # the actual name of the node to show on the diagram\n"
    "    \"node_id\": str, # id or unique name of the node; use the actual name of the node if \n"
    "    possible\n"
    "    \"description\": str, # a short description of node\n"
    "    \"visibility\": Literal[\"private\", \"protected\", \"package private\", \"public\"], # an \n"
    "    access modifier of the node from the predefined types; use the most appropriate\n"
    "    \"return_type\": Optional[str], # a return type for functions and methods or current \n"
    "    node type for fields and variables; can be skipped for other types of nodes\n"
    "    \"params\": Optional[str], # parameters of functions and methods (as in brackets); \n"
    "    can be skipped for other types of nodes\n"
    "    \"source_class_id\": Optional[str], # node id of the source class for fields and \n"
    "    methods; can be skipped for other types of nodes\n"
    "}\n"
    "11. JSON template for edge: {\n"
    "    \"node_id_from\": str, # id of the node where the edge starts\n"
    "    \"node_id_to\": str, # id of the node where the edge ends\n"
    "    \"description\": Optional[str], # a short description of the edge; can be None\n"
    "}\n"
    "12. JSON template for packages: {\n"
    "    \"package_id\": str, # id or unique name of the package; it will be shown on the \n"
    "    diagram\n"
    "    \"children\": List[str], # list of ids of nodes to include in the package or names of \n"
    "    nested packages\n"
    "    \"description\": Optional[str], # a short description of the package; can be None\n"
    "}\n"
    "13. JSON template for graph: {\n"
    "    \"nodes\": [{node1_JSON}, ..., {nodeN_JSON}],\n"
    "    \"edges\": [{edge1_JSON}, ..., {edgeN_JSON}],\n"
    "    \"packages\": [{package1_JSON}, ..., {packageN_JSON}]\n"
    "}\n"
    "14. Prefer to use camelCase, snake_case, PascalCase for names, \n"
    "    do not use spaces in names.\n"
    "15. Package names can not be in edges list, use them only in packages.\n"
    "16. Do not write any explanations, just write expected output.\n"
    "17. You should generate three versions of the `Graph template`. \n"
    "    The first one, called the \"minimal version,\" should include \n"
    "    only the essential nodes and logic, removing all unnecessary elements. \n"
    "    The second one, the \"medium version,\" should contain all important nodes \n"
    "    along with some additional details. \n"
    "    The third one, the \"full version,\" should incorporate every possible node \n"
    "    and all possible edges relevant to query.\n"
    "18. After generating all three graph templates, you should provide the shortest \n"
    "    possible \"text answer\" to the user's query using the generated diagrams.\n"
    "19. Expected output template: {\n"
    "    \"minimal_version\": {graph_JSON},\n"
    "    \"medium_version\": {graph_JSON},\n"
    "    \"full_version\": {graph_JSON},\n"
    "    text_answer: str,\n"
    "}\n"
    "\n"
    "Your task is write nodes, edges and packages to build \n"
    "a diagram in different formats (PlantUML, mermaid-js, ...)\n"
    "for the following file in project:\n"
    "```\n"
    "{code}\n"
    "```\n"
    "You need to generate a diagram for the following user query:\n"
    "\"{query}\""
)

FINETUNED_PROMPT_TEMPLATE = (
    "Your task is to generate json with \"nodes\", \"edges\" and \"packages\" \n"
    "for a diagram.\n"
    "The diagram must answer to the user query using the code.\n"
    "\n"
    "<code>\n"
    "{code} </code>\n"
    "<query>\n"
    "{query} [{version} version]"
)


_PLACEHOLDER = re.compile(r"\{(code|query|version)\}")


def _fill(template: str, values: dict[str, str]) -> str:
    return _PLACEHOLDER.sub(lambda m: values[m.group(1)], template)


def build_query_prompt(code: str) -> str:
    """Instantiate the query-generation prompt for one code file."""
    if not code:
        raise ValueError("code must be non-empty")
    return _fill(QUERY_PROMPT_TEMPLATE, {"code": code})


def build_diagram_prompt(code: str, query: str) -> str:
    """Instantiate the three-level diagram-generation prompt."""
    if not code:
        raise ValueError("code must be non-empty")
    if not query:
        raise ValueError("query must be non-empty")
    return _fill(DIAGRAM_PROMPT_TEMPLATE, {"code": code, "query": query})


def build_finetuned_prompt(code: str, query: str, level: DetailLevel | str) -> str:
    """Instantiate the compact single-graph prompt used by tuned models."""
    if not code:
        raise ValueError("code must be non-empty")
    if not query:
        raise ValueError("query must be non-empty")
    version = DetailLevel.parse(level) if isinstance(level, str) else level
    return _fill(
        FINETUNED_PROMPT_TEMPLATE,
        {"code": code, "query": query, "version": version.value},
    )
