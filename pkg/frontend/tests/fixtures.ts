import type {
  DefectPayload,
  DefectReportPayload,
  GenerateSuccess,
  GraphPayload,
  SeverityLabel,
  UnrepairedPayload,
} from "../src/types";

export function deepFreeze<T>(value: T): T {
  if (value !== null && typeof value === "object") {
    for (const child of Object.values(value)) {
      deepFreeze(child);
    }
    Object.freeze(value);
  }
  return value;
}

export function sampleGraph(): GraphPayload {
  return {
    nodes: [
      {
        type: "class",
        name: "Account",
        node_id: "Account",
        description: "holds a customer balance",
        visibility: "+",
      },
      {
        type: "field",
        name: "balance",
        node_id: "Account.balance",
        description: "current balance",
        visibility: "-",
        return_type: "Decimal",
        source_class_id: "Account",
      },
      {
        type: "method",
        name: "deposit",
        node_id: "Account.deposit",
        description: "adds funds and records the movement",
        visibility: "+",
        return_type: "None",
        params: "amount: Decimal",
        source_class_id: "Account",
      },
      {
        type: "class",
        name: "Ledger",
        node_id: "Ledger",
        description: "append-only transaction log",
        visibility: "+",
      },
    ],
    edges: [{ node_id_from: "Account.deposit", node_id_to: "Ledger", description: "records" }],
    packages: [],
  };
}

export function zeroCounts(): Record<SeverityLabel, number> {
  return { minor: 0, severe: 0, unacceptable: 0 };
}

export function reportPayload(
  defects: DefectPayload[],
  nodeCount: number,
): DefectReportPayload {
  const counts = zeroCounts();
  for (const defect of defects) {
    counts[defect.severity] += 1;
  }
  return {
    graph_id: "t-1",
    node_count: nodeCount,
    defects,
    counts_by_severity: counts,
  };
}

export function successPayload(
  overrides: Partial<GenerateSuccess> = {},
): GenerateSuccess {
  const graph = sampleGraph();
  return {
    graph,
    level: "medium",
    mode: "finetuned",
    plantuml:
      "@startuml\nclass Account {\n  -balance : Decimal\n  +deposit(amount: Decimal) : None\n}\nclass Ledger\nAccount::deposit --> Ledger : records\n@enduml\n",
    mermaid:
      "classDiagram\n  class Account {\n    -balance : Decimal\n    +deposit(amount: Decimal) : None\n  }\n  class Ledger\n  Account --> Ledger : records\n",
    defects: reportPayload([], graph.nodes.length),
    text_answer: "Account.deposit posts each movement to the Ledger.",
    trace_id: "t-1",
    warnings: [],
    ...overrides,
  };
}

export function defectivePayload(): GenerateSuccess {
  const graph = sampleGraph();
  const defects: DefectPayload[] = [
    {
      kind: "repeated_edges",
      severity: "minor",
      subjects: ["Account.deposit", "Ledger"],
      message: "edge repeated",
    },
    {
      kind: "invalid_node_name",
      severity: "minor",
      subjects: ["Ledger"],
      message: "name contains stray characters",
    },
    {
      kind: "edge_to_invalid_id",
      severity: "severe",
      subjects: ["Ghost"],
      message: "edge points at a node that does not exist",
    },
  ];
  return successPayload({ defects: reportPayload(defects, graph.nodes.length) });
}

export function unrepairedPayload(): UnrepairedPayload {
  const graph = sampleGraph();
  return {
    error: "exhausted_repairs",
    detail: "no acceptable diagram after 3 attempts",
    trace_id: "t-422",
    attempts: 3,
    defect_reports: {
      medium: reportPayload(
        [
          {
            kind: "package_recursion",
            severity: "severe",
            subjects: ["P"],
            message: "package contains itself",
          },
          {
            kind: "non_drawable",
            severity: "unacceptable",
            subjects: [],
            message: "cannot be rendered",
          },
        ],
        graph.nodes.length,
      ),
    },
    best: {
      graph,
      plantuml: "@startuml\nclass Account\n@enduml\n",
      mermaid: "classDiagram\n  class Account\n",
      warnings: ["kept the least defective attempt"],
      text_answer: "",
    },
  };
}

export function jsonResponse(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export interface Deferred<T> {
  promise: Promise<T>;
  resolve: (value: T) => void;
  reject: (reason: unknown) => void;
}

export function deferred<T>(): Deferred<T> {
  let resolve!: (value: T) => void;
  let reject!: (reason: unknown) => void;
  const promise = new Promise<T>((res, rej) => {
    resolve = res;
    reject = rej;
  });
  return { promise, resolve, reject };
}

export function flush(): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, 0));
}

export async function settle(rounds = 3): Promise<void> {
  for (let i = 0; i < rounds; i += 1) {
    await flush();
  }
}
