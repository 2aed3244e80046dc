// JSON shapes exchanged with the service. Field names mirror the wire
// format exactly; nothing here is transformed or re-cased.

export type NodeKind =
  | "class"
  | "variable"
  | "function"
  | "entity"
  | "method"
  | "field";

export type DetailLevel = "minimal" | "medium" | "full";

export type GenerationMode = "base" | "finetuned";

export type SeverityLabel = "minor" | "severe" | "unacceptable";

export interface GraphNode {
  type: NodeKind;
  name: string;
  node_id: string;
  description: string;
  visibility: string;
  return_type?: string;
  params?: string;
  source_class_id?: string;
}

export interface GraphEdge {
  node_id_from: string;
  node_id_to: string;
  description?: string;
}

export interface GraphPackage {
  package_id: string;
  children: string[];
  description?: string;
}

export interface GraphPayload {
  nodes: GraphNode[];
  edges: GraphEdge[];
  packages: GraphPackage[];
}

export interface DefectPayload {
  kind: string;
  severity: SeverityLabel;
  subjects: string[];
  message: string;
}

export interface DefectReportPayload {
  graph_id: string;
  node_count: number;
  defects: DefectPayload[];
  counts_by_severity: Record<SeverityLabel, number>;
}

export interface GenerateRequestBody {
  code: string;
  query: string;
  level: DetailLevel;
  mode: GenerationMode;
}

export interface GenerateSuccess {
  graph: GraphPayload;
  level: DetailLevel;
  mode: GenerationMode;
  plantuml: string;
  mermaid: string;
  defects: DefectReportPayload;
  text_answer: string;
  trace_id: string;
  warnings: string[];
}

// 422 payload: the loop ran out of repair attempts. `best` is {} when no
// attempt even parsed; otherwise it carries the least-bad graph and markup.
export interface BestEffort {
  graph?: GraphPayload;
  plantuml?: string;
  mermaid?: string;
  warnings?: string[];
  text_answer?: string;
}

export interface UnrepairedPayload {
  error: "exhausted_repairs";
  detail: string;
  trace_id: string;
  attempts: number;
  defect_reports: unknown;
  best: BestEffort;
}

export interface ErrorPayload {
  error: string;
  detail: string;
}
