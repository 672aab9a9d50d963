/** Pure renderers: application state in, HTML string out.
 *
 * No DOM access and no number crunching happens here — every figure shown
 * is copied verbatim from an API response field, so a rendered table can
 * always be traced back to the payload that produced it. Interactivity is
 * declared through data-action attributes that the bootstrap wires up.
 */

import type { ApiFailure } from "./clientlike.js";
import {
  ABR_POLICIES,
  checkPanel,
  type DraftErrors,
  type DraftField,
  type ScenarioDraft,
} from "./draft.js";
import type { Sensitivities, TraceRow, UserRow, WhatifResult } from "./schema.js";
import type { AppState, HistoryEntry, Load, PanelState } from "./store.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

/** Render a response number losslessly; integers keep one decimal so that
 * 0 reads as 0.0 in delta tables. */
export function fmtNum(value: number): string {
  return Number.isInteger(value) ? value.toFixed(1) : String(value);
}

function describeCohort(cohort: string[] | string): string {
  if (typeof cohort === "string") return cohort;
  if (cohort.length === 0) return "none selected";
  return `${cohort.length} user${cohort.length === 1 ? "" : "s"} (${cohort.join(", ")})`;
}

export function renderVersionError(failure: ApiFailure & { kind: "version" }): string {
  const got = failure.got === null ? "no schema tag at all" : `<code>${escapeHtml(failure.got)}</code>`;
  return `<div class="version-error">
<h2>API version mismatch</h2>
<p>This dashboard speaks <code>${escapeHtml(failure.expected)}</code> but the service replied with ${got}.</p>
<p>${escapeHtml(failure.message)}</p>
</div>`;
}

function renderFailure(failure: ApiFailure, retryAction: string | null): string {
  if (failure.kind === "version") return renderVersionError(failure);
  const retry = retryAction === null ? "" : ` <button data-action="${retryAction}">retry</button>`;
  if (failure.kind === "network") {
    return `<div class="banner error">service unreachable: ${escapeHtml(failure.message)}${retry}</div>`;
  }
  return `<div class="banner error">API error ${failure.status}: ${escapeHtml(failure.message)}${retry}</div>`;
}

export function renderSensitivityChart(chart: Sensitivities): string {
  const badge = chart.degenerate
    ? ' <span class="badge degenerate" title="too little signal; uniform fallback weights">degenerate</span>'
    : "";
  const rows = Object.entries(chart.weights)
    .sort((a, b) => b[1] - a[1] || a[0].localeCompare(b[0]))
    .map(
      ([name, weight]) => `<div class="bar-row">
<span class="bar-label">${escapeHtml(name)}</span>
<div class="bar-track"><div class="bar" style="width:${(Math.max(0, Math.min(1, weight)) * 100).toFixed(1)}%"></div></div>
<span class="bar-value">${fmtNum(weight)}</span>
</div>`,
    )
    .join("\n");
  return `<figure class="chart" data-user="${escapeHtml(chart.user_id)}">
<figcaption>${escapeHtml(chart.user_id)}${badge}</figcaption>
<div class="bars">
${rows}
</div>
</figure>`;
}

function renderChartSlot(userId: string, slot: Load<Sensitivities> | undefined): string {
  if (slot === undefined || slot.kind === "idle" || slot.kind === "loading") {
    return `<figure class="chart loading" data-user="${escapeHtml(userId)}"><figcaption>${escapeHtml(userId)}</figcaption><p>loading sensitivities…</p></figure>`;
  }
  if (slot.kind === "failed") {
    return `<figure class="chart failed" data-user="${escapeHtml(userId)}"><figcaption>${escapeHtml(userId)}</figcaption>${renderFailure(slot.error, "retry-chart")}</figure>`;
  }
  return renderSensitivityChart(slot.value);
}

function renderUserRow(user: UserRow, selected: boolean): string {
  const id = escapeHtml(user.user_id);
  const badge = user.degenerate
    ? ' <span class="badge degenerate" title="too little signal; uniform fallback weights">degenerate</span>'
    : "";
  return `<li class="user-row${user.degenerate ? " degenerate" : ""}">
<label><input type="checkbox" data-action="toggle-user" data-user="${id}"${selected ? " checked" : ""}> ${id}</label>${badge}
</li>`;
}

export function renderCohortPanel(state: AppState): string {
  let body: string;
  if (state.users.kind === "idle" || state.users.kind === "loading") {
    body = "<p>loading users…</p>";
  } else if (state.users.kind === "failed") {
    body = renderFailure(state.users.error, "retry-users");
  } else {
    const needle = state.search.trim().toLowerCase();
    const visible = state.users.value.filter((u) => u.user_id.toLowerCase().includes(needle));
    const rows = visible.map((u) => renderUserRow(u, state.selected.includes(u.user_id))).join("\n");
    body = `<input class="search" data-action="search" placeholder="filter users" value="${escapeHtml(state.search)}">
<ul class="users">
${rows || "<li class='empty'>no users match</li>"}
</ul>`;
  }

  const charts = state.selected.map((id) => renderChartSlot(id, state.charts[id])).join("\n");

  return `<section class="cohort">
<h2>cohort</h2>
${body}
<div class="cohort-controls">
<input class="random-k" data-action="random-k" value="${escapeHtml(state.randomK)}" size="4">
<button data-action="use-random">use random cohort</button>
<button data-action="use-selected">use selected users</button>
</div>
<p class="cohort-spec">cohort: ${escapeHtml(describeCohort(state.cohortSpec))}</p>
<div class="charts">
${charts}
</div>
</section>`;
}

function mergedErrors(clientErrors: DraftErrors, serverErrors: DraftErrors | undefined): DraftErrors {
  const merged: DraftErrors = { ...clientErrors };
  if (serverErrors) {
    for (const [field, message] of Object.entries(serverErrors)) {
      if (message !== undefined) merged[field as DraftField] = message;
    }
  }
  return merged;
}

function fieldError(errors: DraftErrors, field: DraftField): string {
  const message = errors[field];
  return message === undefined
    ? ""
    : `<span class="field-error" data-field="${field}">${escapeHtml(message)}</span>`;
}

function textField(
  panelId: number,
  index: number,
  field: DraftField,
  label: string,
  value: string,
  errors: DraftErrors,
): string {
  return `<label class="field">${label}
<input data-action="draft-field" data-panel="${panelId}" data-draft="${index}" data-field="${field}" value="${escapeHtml(value)}">
${fieldError(errors, field)}
</label>`;
}

function selectField(
  panelId: number,
  index: number,
  field: DraftField,
  label: string,
  value: string,
  options: readonly string[],
  errors: DraftErrors,
): string {
  const known = options.includes(value);
  const opts = [
    `<option value=""${value === "" ? " selected" : ""} disabled>pick…</option>`,
    ...options.map(
      (o) => `<option value="${escapeHtml(o)}"${o === value ? " selected" : ""}>${escapeHtml(o)}</option>`,
    ),
    ...(value !== "" && !known
      ? [`<option value="${escapeHtml(value)}" selected>${escapeHtml(value)} (unknown)</option>`]
      : []),
  ].join("");
  return `<label class="field">${label}
<select data-action="draft-field" data-panel="${panelId}" data-draft="${index}" data-field="${field}">${opts}</select>
${fieldError(errors, field)}
</label>`;
}

function renderDraftForm(
  panelId: number,
  index: number,
  draft: ScenarioDraft,
  errors: DraftErrors,
  knownTraces: readonly string[] | null,
): string {
  const trace =
    knownTraces === null
      ? textField(panelId, index, "trace", "trace", draft.trace, errors)
      : selectField(panelId, index, "trace", "trace", draft.trace, knownTraces, errors);
  return `<fieldset class="draft" data-draft="${index}">
<legend>scenario ${index + 1}</legend>
${textField(panelId, index, "name", "name", draft.name, errors)}
${trace}
${selectField(panelId, index, "abr", "ABR policy", draft.abr, ABR_POLICIES, errors)}
${textField(panelId, index, "segment_size", "segment size (s)", draft.segment_size, errors)}
${textField(panelId, index, "video_duration", "video duration (s)", draft.video_duration, errors)}
${textField(panelId, index, "n_sessions", "sessions per user", draft.n_sessions, errors)}
${textField(panelId, index, "seed", "seed", draft.seed, errors)}
<div class="field cohort-field">cohort: <span class="cohort-value">${escapeHtml(describeCohort(draft.cohort))}</span>
<button data-action="sync-cohort" data-panel="${panelId}" data-draft="${index}">sync from picker</button>
${fieldError(errors, "cohort")}
</div>
<button data-action="remove-draft" data-panel="${panelId}" data-draft="${index}">remove</button>
</fieldset>`;
}

const PARAM_COLUMNS: ReadonlyArray<{ field: DraftField; header: string }> = [
  { field: "trace", header: "trace" },
  { field: "abr", header: "abr" },
  { field: "segment_size", header: "segment size" },
  { field: "video_duration", header: "video duration" },
  { field: "n_sessions", header: "sessions" },
  { field: "seed", header: "seed" },
  { field: "cohort", header: "cohort" },
];

const AGGREGATE_COLUMNS = ["mean", "std", "min", "median", "max"] as const;

/** Comparison results: parameter grid with the best-by-mean scenario's
 * varied cells highlighted, the aggregate table, and pairwise deltas. */
export function renderResultView(result: WhatifResult, varied: readonly DraftField[]): string {
  const best = result.scenarios.reduce(
    (top, s, i) => (s.aggregates.mean > result.scenarios[top].aggregates.mean ? i : top),
    0,
  );

  const paramHead = PARAM_COLUMNS.map((c) => `<th>${c.header}</th>`).join("");
  const paramRows = result.scenarios
    .map((s, i) => {
      const cells = PARAM_COLUMNS.map(({ field }) => {
        const value =
          field === "cohort"
            ? describeCohort(s.cohort)
            : field === "trace" || field === "abr"
              ? (s[field] as string)
              : fmtNum(s[field as "segment_size" | "video_duration" | "n_sessions" | "seed"]);
        const highlight = varied.includes(field) && i === best ? " best" : "";
        return `<td class="param-${field}${highlight}">${escapeHtml(value)}</td>`;
      }).join("");
      return `<tr><th>${escapeHtml(s.name)}</th>${cells}</tr>`;
    })
    .join("\n");

  const aggregateRows = result.scenarios
    .map((s) => {
      const cells = AGGREGATE_COLUMNS.map(
        (key) => `<td class="agg-${key}">${fmtNum(s.aggregates[key])}</td>`,
      ).join("");
      return `<tr><th>${escapeHtml(s.name)}</th>${cells}</tr>`;
    })
    .join("\n");

  const deltaRows = result.deltas
    .map(
      (d) =>
        `<tr><td>${escapeHtml(d.a)}</td><td>${escapeHtml(d.b)}</td><td class="delta">${fmtNum(d.mean_delta)}</td></tr>`,
    )
    .join("\n");

  return `<section class="result">
<table class="params">
<thead><tr><th>scenario</th>${paramHead}</tr></thead>
<tbody>
${paramRows}
</tbody>
</table>
<table class="aggregates">
<thead><tr><th>scenario</th><th>Mean</th><th>Std</th><th>Min</th><th>Median</th><th>Max</th></tr></thead>
<tbody>
${aggregateRows}
</tbody>
</table>
<table class="deltas">
<thead><tr><th>a</th><th>b</th><th>mean engagement delta (a − b)</th></tr></thead>
<tbody>
${deltaRows}
</tbody>
</table>
</section>`;
}

export function renderComparePanel(panel: PanelState, knownTraces: readonly string[] | null): string {
  const check = checkPanel(panel.drafts, knownTraces);
  const forms = panel.drafts
    .map((draft, i) =>
      renderDraftForm(panel.id, i, draft, mergedErrors(check.checks[i].errors, panel.fieldErrors[i]), knownTraces),
    )
    .join("\n");

  const disabled = !check.ready || panel.pending;
  const status = panel.pending
    ? '<span class="pending">running…</span>'
    : check.ready
      ? ""
      : `<span class="not-ready">${escapeHtml(check.reason ?? "")}</span>`;
  const errorBlock = panel.error === null ? "" : renderFailure(panel.error, null);
  const resultBlock = panel.result === null ? "" : renderResultView(panel.result, panel.resultVaried);

  return `<article class="panel" data-panel="${panel.id}">
<h2>comparison ${panel.id}</h2>
${forms}
<div class="panel-controls">
<button data-action="add-draft" data-panel="${panel.id}">add scenario</button>
<button data-action="submit-panel" data-panel="${panel.id}"${disabled ? " disabled" : ""}>compare</button>
${status}
</div>
${errorBlock}
${resultBlock}
</article>`;
}

export function renderHistory(history: readonly HistoryEntry[]): string {
  if (history.length === 0) return "";
  const items = history
    .map((entry) => {
      const label = entry.result.scenarios.map((s) => s.name).join(" vs ");
      return `<li>#${entry.id} — ${escapeHtml(label)}
<button data-action="start-from-history" data-history="${entry.id}">start new panel from this</button>
</li>`;
    })
    .join("\n");
  return `<section class="history">
<h2>history</h2>
<ol>
${items}
</ol>
</section>`;
}

export function renderApp(state: AppState): string {
  const knownTraces = state.traces.kind === "ready" ? state.traces.value.map((t: TraceRow) => t.name) : null;
  const panels = state.panels.map((p) => renderComparePanel(p, knownTraces)).join("\n");
  const tracesNote =
    state.traces.kind === "failed" ? renderFailure(state.traces.error, "retry-traces") : "";
  return `<header><h1>streamtwin dashboard</h1></header>
<main>
${renderCohortPanel(state)}
${tracesNote}
<section class="panels">
${panels}
<button data-action="add-panel">new comparison panel</button>
</section>
${renderHistory(state.history)}
</main>`;
}
