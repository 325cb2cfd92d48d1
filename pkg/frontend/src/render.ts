/**
 * DOM rendering. Numbers are stringified with String(...) so the exact
 * payload values round-trip into the page; nothing here derives new
 * quantities from old ones.
 */

import type { QueryPayload, ResponsePayload, SessionRecord } from "./types.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function responseButton(
  response: ResponsePayload,
  onChoose: (index: number) => void,
): HTMLButtonElement {
  const button = el("button", "response-button", response.label);
  button.dataset.index = String(response.index);
  button.dataset.constraint = JSON.stringify(response.constraint);
  button.addEventListener("click", () => onChoose(response.index));
  return button;
}

function supportTable(
  name: string,
  rows: { outcome: string; p: number }[],
): HTMLElement {
  const wrap = el("div", "action-support");
  wrap.appendChild(el("h4", undefined, name));
  const table = el("table");
  for (const row of rows) {
    const tr = el("tr");
    tr.appendChild(el("td", "outcome", row.outcome));
    tr.appendChild(el("td", "prob", String(row.p)));
    table.appendChild(tr);
  }
  wrap.appendChild(table);
  return wrap;
}

/** Render one query as an interactive prompt. Unknown kinds fall back to a
 * raw JSON dump with a visible warning so nothing is silently dropped. */
export function renderQuery(
  query: QueryPayload,
  onChoose: (index: number) => void,
): HTMLElement {
  const card = el("section", `query-card kind-${query.kind}`);
  card.dataset.queryId = String(query.query_id);
  const known = ["weight-bound-split", "sigma-ratio", "action-comparison"];
  if (!known.includes(query.kind)) {
    card.classList.add("unknown-kind");
    card.appendChild(el("p", "warning", `Unknown question type "${query.kind}"`));
    card.appendChild(el("pre", "raw-query", JSON.stringify(query, null, 2)));
    for (const response of query.responses) {
      card.appendChild(responseButton(response, onChoose));
    }
    return card;
  }
  card.appendChild(el("p", "query-text", query.text));
  if (query.kind === "action-comparison") {
    const supports = (query.meta.supports ?? {}) as Record<
      string,
      { outcome: string; p: number }[]
    >;
    const row = el("div", "comparison-row");
    for (const [name, rows] of Object.entries(supports)) {
      row.appendChild(supportTable(name, rows));
    }
    card.appendChild(row);
  }
  const buttons = el("div", "responses");
  for (const response of query.responses) {
    buttons.appendChild(responseButton(response, onChoose));
  }
  card.appendChild(buttons);
  return card;
}

export function renderRegretHistory(values: number[]): HTMLElement {
  const wrap = el("section", "regret-history");
  wrap.appendChild(el("h3", undefined, "Minimax regret"));
  const list = el("ol", "regret-series");
  for (const value of values) {
    list.appendChild(el("li", "regret-value", String(value)));
  }
  wrap.appendChild(list);
  return wrap;
}

export function renderStatus(record: SessionRecord): HTMLElement {
  const wrap = el("section", `status-card status-${record.status}`);
  if (record.status === "recommended") {
    wrap.appendChild(el("h2", undefined, `Recommended: ${record.report.recommended}`));
    wrap.appendChild(
      el("p", "mmr-badge", `minimax regret ${String(record.report.minimax_regret)}`),
    );
    wrap.appendChild(el("p", "tau", `threshold ${String(record.tau)}`));
  } else if (record.status === "stopped") {
    wrap.appendChild(el("h2", undefined, "No further question is worth asking"));
    wrap.appendChild(
      el("p", undefined, `Best so far: ${record.report.recommended}`),
    );
    wrap.appendChild(
      el("p", "mmr-badge", `minimax regret ${String(record.report.minimax_regret)}`),
    );
  } else {
    wrap.appendChild(el("h2", undefined, "Awaiting your answer"));
    wrap.appendChild(
      el("p", "mmr-badge", `current minimax regret ${String(record.report.minimax_regret)}`),
    );
  }
  return wrap;
}

export function renderTranscript(
  entries: { text: string; response_label: string; mmr_after: number }[],
): HTMLElement {
  const wrap = el("section", "transcript");
  wrap.appendChild(el("h3", undefined, "Answers so far"));
  const list = el("ul", "transcript-list");
  for (const entry of entries) {
    list.appendChild(
      el(
        "li",
        "transcript-entry",
        `${entry.text} -> ${entry.response_label} (regret ${String(entry.mmr_after)})`,
      ),
    );
  }
  wrap.appendChild(list);
  return wrap;
}

export function renderErrorBanner(message: string, onRetry: () => void): HTMLElement {
  const banner = el("div", "error-banner");
  banner.appendChild(el("span", undefined, message));
  const retry = el("button", "retry-button", "retry");
  retry.addEventListener("click", onRetry);
  banner.appendChild(retry);
  return banner;
}
