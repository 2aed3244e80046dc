import type {
  DetailLevel,
  GenerateSuccess,
  GenerationMode,
  SeverityLabel,
} from "./types";

export interface ResponseSummary {
  nodeCount: number;
  defectCounts: Record<SeverityLabel, number>;
  traceId: string;
  unrepaired: boolean;
}

export interface SessionEntry {
  id: number;
  query: string;
  code: string;
  level: DetailLevel;
  mode: GenerationMode;
  timestamp: number;
  summary: ResponseSummary;
}

export const ZERO_COUNTS: Record<SeverityLabel, number> = {
  minor: 0,
  severe: 0,
  unacceptable: 0,
};

export function summarize(payload: GenerateSuccess): ResponseSummary {
  return {
    nodeCount: payload.graph.nodes.length,
    defectCounts: { ...ZERO_COUNTS, ...payload.defects.counts_by_severity },
    traceId: payload.trace_id,
    unrepaired: false,
  };
}

// Append-only within a browser session: entries can be added, never
// removed or reordered. `entries` hands out a copy so callers cannot
// splice the backing array.
export class SessionStore {
  private readonly items: SessionEntry[] = [];
  private nextId = 1;

  get entries(): SessionEntry[] {
    return [...this.items];
  }

  get size(): number {
    return this.items.length;
  }

  append(fields: Omit<SessionEntry, "id">): SessionEntry {
    const entry: SessionEntry = { ...fields, id: this.nextId };
    this.nextId += 1;
    this.items.push(entry);
    return entry;
  }

  find(id: number): SessionEntry | undefined {
    return this.items.find((entry) => entry.id === id);
  }
}
