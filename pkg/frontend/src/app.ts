import type { GenerateOutcome } from "./api";
import type { MermaidRenderer } from "./render";
import { RequestQueue, type QueueStatus } from "./queue";
import {
  SessionStore,
  summarize,
  ZERO_COUNTS,
  type ResponseSummary,
  type SessionEntry,
} from "./session";
import type {
  DetailLevel,
  GenerateRequestBody,
  GenerateSuccess,
  GenerationMode,
  GraphNode,
  GraphPayload,
  SeverityLabel,
  UnrepairedPayload,
} from "./types";

const LEVELS: DetailLevel[] = ["minimal", "medium", "full"];
const SEVERITIES: SeverityLabel[] = ["unacceptable", "severe", "minor"];

export interface AppDeps {
  client: { generate(body: GenerateRequestBody): Promise<GenerateOutcome> };
  renderMermaid: MermaidRenderer;
  now?: () => number;
  copyText?: (text: string) => Promise<void>;
}

export interface ResultRecord {
  entry: SessionEntry;
  payload: GenerateSuccess | UnrepairedPayload;
  unrepaired: boolean;
}

export interface AppHandle {
  store: SessionStore;
  results: ReadonlyArray<ResultRecord>;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function badge(severityClass: string, label: string): HTMLSpanElement {
  const span = el("span", `badge ${severityClass}`, label);
  return span;
}

function badgeRow(counts: Record<SeverityLabel, number>): HTMLDivElement {
  const row = el("div", "badges");
  const total = SEVERITIES.reduce((sum, severity) => sum + (counts[severity] ?? 0), 0);
  if (total === 0) {
    row.append(badge("badge-clean", "0 defects"));
    return row;
  }
  for (const severity of SEVERITIES) {
    const count = counts[severity] ?? 0;
    if (count > 0) {
      row.append(badge(`badge-${severity}`, `${severity}: ${count}`));
    }
  }
  return row;
}

// The 422 payload carries per-level defect reports keyed by detail level.
function countsFromDefectReports(
  value: unknown,
  level: DetailLevel,
): Record<SeverityLabel, number> | null {
  if (typeof value !== "object" || value === null) {
    return null;
  }
  const reports = value as Record<string, { counts_by_severity?: Record<SeverityLabel, number> }>;
  const chosen = reports[level] ?? Object.values(reports)[0];
  if (chosen === undefined || chosen.counts_by_severity === undefined) {
    return null;
  }
  return { ...ZERO_COUNTS, ...chosen.counts_by_severity };
}

function describeNode(node: GraphNode): string {
  const parts = [`${node.node_id} · ${node.type} ${node.visibility}`];
  if (node.params !== undefined) {
    parts.push(`params: ${node.params}`);
  }
  if (node.return_type !== undefined) {
    parts.push(`returns: ${node.return_type}`);
  }
  parts.push(node.description);
  return parts.join("\n");
}

function defectSummaryText(summary: ResponseSummary): string {
  const total = SEVERITIES.reduce(
    (sum, severity) => sum + summary.defectCounts[severity],
    0,
  );
  const defects = total === 1 ? "1 defect" : `${total} defects`;
  return summary.unrepaired ? `${defects} · unrepaired` : defects;
}

export function initApp(root: HTMLElement, deps: AppDeps): AppHandle {
  const now = deps.now ?? (() => Date.now());
  const copyText =
    deps.copyText ?? ((text: string) => navigator.clipboard.writeText(text));
  const store = new SessionStore();
  const results: ResultRecord[] = [];

  root.innerHTML = `
    <header class="masthead">
      <h1>codediagram</h1>
      <p class="tagline">ask a question about a code file, get a class diagram back</p>
    </header>
    <main class="layout">
      <section class="panel">
        <form id="query-form">
          <label for="code-input">source code</label>
          <textarea id="code-input" rows="12" spellcheck="false"
            placeholder="paste one code file"></textarea>
          <label for="query-input">query</label>
          <input id="query-input" type="text"
            placeholder="e.g. map out the event listeners" />
          <div class="controls">
            <label>detail
              <select id="level-select">
                <option value="minimal">minimal</option>
                <option value="medium" selected>medium</option>
                <option value="full">full</option>
              </select>
            </label>
            <label>mode
              <select id="mode-select">
                <option value="finetuned" selected>finetuned</option>
                <option value="base">base</option>
              </select>
            </label>
            <button id="submit-btn" type="submit">Generate</button>
            <span id="status" data-state="idle">idle</span>
          </div>
        </form>
        <div id="form-error" class="error-box" hidden></div>
        <aside id="history">
          <h2>History</h2>
          <div id="history-empty">
            <button class="rerun-btn" disabled>Rerun</button>
            <span class="hint">no entries yet</span>
          </div>
          <ul id="history-list"></ul>
        </aside>
      </section>
      <section id="results" class="results-strip"></section>
    </main>
  `;

  const form = root.querySelector<HTMLFormElement>("#query-form")!;
  const codeInput = root.querySelector<HTMLTextAreaElement>("#code-input")!;
  const queryInput = root.querySelector<HTMLInputElement>("#query-input")!;
  const levelSelect = root.querySelector<HTMLSelectElement>("#level-select")!;
  const modeSelect = root.querySelector<HTMLSelectElement>("#mode-select")!;
  const statusEl = root.querySelector<HTMLSpanElement>("#status")!;
  const formError = root.querySelector<HTMLDivElement>("#form-error")!;
  const resultsEl = root.querySelector<HTMLElement>("#results")!;
  const historyEmpty = root.querySelector<HTMLDivElement>("#history-empty")!;
  const historyList = root.querySelector<HTMLUListElement>("#history-list")!;

  const queue = new RequestQueue(showStatus);

  function showStatus(status: QueueStatus): void {
    if (status.inFlight) {
      statusEl.textContent =
        status.queued > 0 ? `generating… (${status.queued} queued)` : "generating…";
      statusEl.dataset.state = "busy";
    } else if (status.queued > 0) {
      statusEl.textContent = `waiting… (${status.queued} queued)`;
      statusEl.dataset.state = "busy";
    } else {
      statusEl.textContent = "idle";
      statusEl.dataset.state = "idle";
    }
  }

  function showFormError(message: string): void {
    formError.textContent = message;
    formError.hidden = false;
  }

  function submitForm(event: Event): void {
    event.preventDefault();
    formError.hidden = true;
    const query = queryInput.value;
    const code = codeInput.value;
    if (query.trim() === "") {
      showFormError("query must be non-empty");
      return;
    }
    if (code.trim() === "") {
      showFormError("source code must be non-empty");
      return;
    }
    enqueue({
      code,
      query,
      level: levelSelect.value as DetailLevel,
      mode: modeSelect.value as GenerationMode,
    });
  }

  function enqueue(body: GenerateRequestBody): void {
    queue.submit(async () => {
      const outcome = await deps.client.generate(body);
      applyOutcome(body, outcome);
    });
  }

  function applyOutcome(body: GenerateRequestBody, outcome: GenerateOutcome): void {
    switch (outcome.kind) {
      case "ok": {
        const payload = outcome.payload;
        const entry = store.append({
          query: body.query,
          code: body.code,
          level: payload.level,
          mode: payload.mode,
          timestamp: now(),
          summary: summarize(payload),
        });
        results.push({ entry, payload, unrepaired: false });
        appendResultCard(entry, {
          graph: payload.graph,
          mermaid: payload.mermaid,
          plantuml: payload.plantuml,
          warnings: payload.warnings,
          textAnswer: payload.text_answer,
          counts: entry.summary.defectCounts,
          traceId: payload.trace_id,
          unrepairedDetail: null,
        });
        refreshHistory();
        break;
      }
      case "unrepaired": {
        const payload = outcome.payload;
        const counts = countsFromDefectReports(payload.defect_reports, body.level);
        const entry = store.append({
          query: body.query,
          code: body.code,
          level: body.level,
          mode: body.mode,
          timestamp: now(),
          summary: {
            nodeCount: payload.best.graph?.nodes.length ?? 0,
            defectCounts: counts ?? { ...ZERO_COUNTS },
            traceId: payload.trace_id,
            unrepaired: true,
          },
        });
        results.push({ entry, payload, unrepaired: true });
        appendResultCard(entry, {
          graph: payload.best.graph ?? null,
          mermaid: payload.best.mermaid ?? "",
          plantuml: payload.best.plantuml ?? "",
          warnings: payload.best.warnings ?? [],
          textAnswer: payload.best.text_answer ?? "",
          counts,
          traceId: payload.trace_id,
          unrepairedDetail: `unrepaired after ${payload.attempts} attempts: ${payload.detail}`,
        });
        refreshHistory();
        break;
      }
      case "error":
        showFormError(
          `error ${outcome.status} ${outcome.payload.error}: ${outcome.payload.detail}`,
        );
        break;
      case "network":
        showFormError(`network failure: ${outcome.message}`);
        break;
    }
  }

  interface CardContent {
    graph: GraphPayload | null;
    mermaid: string;
    plantuml: string;
    warnings: string[];
    textAnswer: string;
    counts: Record<SeverityLabel, number> | null;
    traceId: string;
    unrepairedDetail: string | null;
  }

  function appendResultCard(entry: SessionEntry, content: CardContent): void {
    const card = el("article", "result-card");
    card.dataset.entryId = String(entry.id);
    card.dataset.traceId = content.traceId;

    const header = el("header", "card-header");
    header.append(
      el("span", "card-title", `#${entry.id} “${entry.query}”`),
      el("span", "card-meta", `${entry.level} · ${entry.mode}`),
    );
    card.append(header);

    if (content.unrepairedDetail !== null) {
      card.append(el("div", "banner-unrepaired", content.unrepairedDetail));
    }

    if (content.counts !== null) {
      card.append(badgeRow(content.counts));
    }

    const diagram = el("div", "diagram", "rendering…");
    card.append(diagram);

    if (content.graph !== null) {
      card.append(buildNodePanel(content.graph));
    }

    if (content.plantuml !== "") {
      card.append(buildPlantumlPanel(content.plantuml));
    }

    if (content.textAnswer !== "") {
      card.append(el("p", "text-answer", content.textAnswer));
    }

    if (content.warnings.length > 0) {
      const list = el("ul", "warnings");
      for (const warning of content.warnings) {
        list.append(el("li", undefined, warning));
      }
      card.append(list);
    }

    card.append(el("footer", "card-footer", `trace ${content.traceId}`));
    resultsEl.append(card);
    fillDiagram(diagram, entry.id, content.mermaid);
  }

  function fillDiagram(target: HTMLDivElement, entryId: number, markup: string): void {
    if (markup.trim() === "") {
      target.textContent = "no drawable markup";
      target.classList.add("diagram-empty");
      return;
    }
    deps
      .renderMermaid(markup, `diagram-${entryId}`)
      .then((svg) => {
        target.innerHTML = svg;
      })
      .catch((exc: unknown) => {
        target.textContent = "";
        target.classList.add("diagram-failed");
        target.append(
          el("p", "render-error", `mermaid render failed: ${String(exc)}`),
          el("pre", "mermaid-src", markup),
        );
      });
  }

  function buildNodePanel(graph: GraphPayload): HTMLElement {
    const panel = el("div", "node-panel");
    const list = el("ul", "node-list");
    const detail = el("div", "node-detail");
    detail.hidden = true;
    for (const node of graph.nodes) {
      const item = el("li", "node-item", `${node.name} (${node.type})`);
      item.title = node.description;
      item.dataset.nodeId = node.node_id;
      item.addEventListener("click", () => {
        for (const sibling of list.children) {
          sibling.classList.remove("selected");
        }
        item.classList.add("selected");
        detail.textContent = describeNode(node);
        detail.hidden = false;
      });
      list.append(item);
    }
    panel.append(list, detail);
    return panel;
  }

  function buildPlantumlPanel(plantuml: string): HTMLElement {
    const details = el("details", "plantuml");
    details.append(el("summary", undefined, "PlantUML export"));
    const pre = el("pre", "plantuml-src", plantuml);
    const copyBtn = el("button", "copy-btn", "Copy");
    copyBtn.type = "button";
    copyBtn.addEventListener("click", () => {
      copyText(plantuml)
        .then(() => {
          copyBtn.textContent = "Copied";
        })
        .catch(() => {
          copyBtn.textContent = "Copy failed";
        });
    });
    details.append(copyBtn, pre);
    return details;
  }

  function refreshHistory(): void {
    historyEmpty.hidden = store.size > 0;
    historyList.textContent = "";
    for (const entry of store.entries) {
      const item = el("li", "history-entry");
      item.dataset.entryId = String(entry.id);
      item.append(
        el(
          "span",
          "history-label",
          `“${entry.query}” — ${entry.level} · ${entry.summary.nodeCount} nodes · ` +
            defectSummaryText(entry.summary),
        ),
      );
      const levelPick = el("select", "rerun-level");
      for (const level of LEVELS) {
        const option = el("option", undefined, level);
        option.value = level;
        option.selected = level === entry.level;
        levelPick.append(option);
      }
      const rerunBtn = el("button", "rerun-btn", "Rerun");
      rerunBtn.type = "button";
      rerunBtn.addEventListener("click", () => {
        formError.hidden = true;
        enqueue({
          code: entry.code,
          query: entry.query,
          level: levelPick.value as DetailLevel,
          mode: entry.mode,
        });
      });
      item.append(levelPick, rerunBtn);
      historyList.append(item);
    }
  }

  form.addEventListener("submit", submitForm);
  refreshHistory();

  return { store, results };
}
