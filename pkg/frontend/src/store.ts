/** Dashboard state and actions.
 *
 * The store owns all mutable state; rendering is a pure function of it.
 * Comparison panels submit to POST /whatif with a per-panel request id:
 * a response only lands if its id is still the panel's latest, so an
 * analyst who edits and resubmits never sees a superseded result. Panels
 * are independent — concurrent submissions from different panels don't
 * interact.
 */

import type { ApiClientLike, ApiFailure } from "./clientlike.js";
import {
  DRAFT_FIELDS,
  checkPanel,
  cloneDraft,
  newDraft,
  type DraftErrors,
  type DraftField,
  type PanelCheck,
  type ScenarioDraft,
} from "./draft.js";
import type {
  ScenarioPayload,
  Sensitivities,
  TraceRow,
  UserRow,
  WhatifResult,
} from "./schema.js";

export type Load<T> =
  | { kind: "idle" }
  | { kind: "loading" }
  | { kind: "ready"; value: T }
  | { kind: "failed"; error: ApiFailure };

export interface PanelState {
  id: number;
  drafts: ScenarioDraft[];
  pending: boolean;
  requestId: number;
  result: WhatifResult | null;
  resultVaried: DraftField[];
  fieldErrors: DraftErrors[];
  error: ApiFailure | null;
}

export interface HistoryEntry {
  id: number;
  drafts: ScenarioDraft[];
  result: WhatifResult;
}

export interface AppState {
  users: Load<UserRow[]>;
  traces: Load<TraceRow[]>;
  search: string;
  selected: string[];
  randomK: string;
  cohortSpec: string[] | string;
  charts: Record<string, Load<Sensitivities>>;
  panels: PanelState[];
  history: HistoryEntry[];
}

/** Map a structured API failure onto draft fields.
 *
 * Body-validation errors arrive as scenarios.<i>.<field> paths; semantic
 * rejections arrive as prose, matched back to the field they talk about.
 * Anything unmatched stays panel-level.
 */
export function mapFailureToFields(
  failure: ApiFailure,
  payloads: readonly ScenarioPayload[],
): { byDraft: DraftErrors[]; residual: ApiFailure | null } {
  const byDraft: DraftErrors[] = payloads.map(() => ({}));
  if (failure.kind !== "api") return { byDraft, residual: failure };

  let matched = false;

  let unmappedFields = false;
  for (const fieldError of failure.fields) {
    const path = /^scenarios\.(\d+)\.([A-Za-z_]+)/.exec(fieldError.field);
    const field = path === null ? undefined : (path[2] as DraftField);
    const index = path === null ? -1 : Number(path[1]);
    if (field === undefined || !DRAFT_FIELDS.includes(field) || index < 0 || index >= byDraft.length) {
      unmappedFields = true;
      continue;
    }
    byDraft[index][field] = fieldError.message;
    matched = true;
  }

  const unknownTrace = /^unknown trace '([^']*)'/.exec(failure.message);
  if (unknownTrace) {
    payloads.forEach((p, i) => {
      if (p.trace === unknownTrace[1]) {
        byDraft[i].trace = failure.message;
        matched = true;
      }
    });
  }

  const unknownUsers = /^unknown user\(s\): (.*)$/.exec(failure.message);
  if (unknownUsers) {
    const ids = unknownUsers[1].split(", ");
    payloads.forEach((p, i) => {
      if (Array.isArray(p.cohort) && ids.some((id) => p.cohort.includes(id))) {
        byDraft[i].cohort = failure.message;
        matched = true;
      }
    });
  }

  const capHit = /^scenario '([^']*)' requests \d+ sessions/.exec(failure.message);
  if (capHit) {
    payloads.forEach((p, i) => {
      if (p.name === capHit[1]) {
        byDraft[i].n_sessions = failure.message;
        matched = true;
      }
    });
  }

  const duplicateName = /^duplicate scenario name '([^']*)'/.exec(failure.message);
  if (duplicateName) {
    payloads.forEach((p, i) => {
      if (p.name === duplicateName[1]) {
        byDraft[i].name = failure.message;
        matched = true;
      }
    });
  }

  const fieldRule = /^([a-z_]+) must /.exec(failure.message);
  if (!matched && fieldRule && DRAFT_FIELDS.includes(fieldRule[1] as DraftField) && byDraft.length > 0) {
    const field = fieldRule[1] as DraftField;
    for (const errors of byDraft) errors[field] = failure.message;
    matched = true;
  }

  return { byDraft, residual: matched && !unmappedFields ? null : failure };
}

export class DashboardStore {
  state: AppState = {
    users: { kind: "idle" },
    traces: { kind: "idle" },
    search: "",
    selected: [],
    randomK: "25",
    cohortSpec: [],
    charts: {},
    panels: [],
    history: [],
  };

  private listeners: Array<() => void> = [];
  private nextPanelId = 1;
  private nextHistoryId = 1;
  private nextRequestId = 1;
  private nextDraftName = 1;

  constructor(private readonly client: ApiClientLike) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  knownTraces(): string[] | null {
    return this.state.traces.kind === "ready" ? this.state.traces.value.map((t) => t.name) : null;
  }

  panel(panelId: number): PanelState | undefined {
    return this.state.panels.find((p) => p.id === panelId);
  }

  checkPanelState(panel: PanelState): PanelCheck {
    return checkPanel(panel.drafts, this.knownTraces());
  }

  async loadUsers(): Promise<void> {
    this.state.users = { kind: "loading" };
    this.emit();
    const result = await this.client.users();
    this.state.users = result.ok ? { kind: "ready", value: result.value.users } : { kind: "failed", error: result.error };
    this.emit();
  }

  async loadTraces(): Promise<void> {
    this.state.traces = { kind: "loading" };
    this.emit();
    const result = await this.client.traces();
    this.state.traces = result.ok ? { kind: "ready", value: result.value.traces } : { kind: "failed", error: result.error };
    this.emit();
  }

  setSearch(text: string): void {
    this.state.search = text;
    this.emit();
  }

  setRandomK(text: string): void {
    this.state.randomK = text;
    this.emit();
  }

  /** Toggle a user in the explicit cohort; selecting fetches their chart. */
  async toggleUser(userId: string): Promise<void> {
    const selected = this.state.selected;
    if (selected.includes(userId)) {
      this.state.selected = selected.filter((u) => u !== userId);
      if (Array.isArray(this.state.cohortSpec)) this.state.cohortSpec = [...this.state.selected];
      this.emit();
      return;
    }
    this.state.selected = [...selected, userId];
    if (Array.isArray(this.state.cohortSpec)) this.state.cohortSpec = [...this.state.selected];
    this.emit();
    await this.loadChart(userId);
  }

  async loadChart(userId: string): Promise<void> {
    this.state.charts[userId] = { kind: "loading" };
    this.emit();
    const result = await this.client.sensitivities(userId);
    this.state.charts[userId] = result.ok
      ? { kind: "ready", value: result.value }
      : { kind: "failed", error: result.error };
    this.emit();
  }

  /** Point the cohort spec at a server-drawn random sample. */
  useRandomCohort(): void {
    const k = Number(this.state.randomK.trim());
    if (!Number.isInteger(k) || k < 1) return;
    this.state.cohortSpec = `random:${k}`;
    this.emit();
  }

  /** Point the cohort spec back at the explicit selection. */
  useSelectedCohort(): void {
    this.state.cohortSpec = [...this.state.selected];
    this.emit();
  }

  addPanel(drafts?: ScenarioDraft[]): PanelState {
    const panel: PanelState = {
      id: this.nextPanelId++,
      drafts: drafts ?? [this.makeDraft(), this.makeDraft()],
      pending: false,
      requestId: 0,
      result: null,
      resultVaried: [],
      fieldErrors: [],
      error: null,
    };
    this.state.panels = [...this.state.panels, panel];
    this.emit();
    return panel;
  }

  private makeDraft(): ScenarioDraft {
    return newDraft(this.state.cohortSpec, `scenario-${this.nextDraftName++}`);
  }

  addDraft(panelId: number): void {
    const panel = this.panel(panelId);
    if (!panel) return;
    panel.drafts = [...panel.drafts, this.makeDraft()];
    this.emit();
  }

  removeDraft(panelId: number, index: number): void {
    const panel = this.panel(panelId);
    if (!panel) return;
    panel.drafts = panel.drafts.filter((_, i) => i !== index);
    panel.fieldErrors = [];
    this.emit();
  }

  setDraftField(panelId: number, index: number, field: DraftField, value: string): void {
    const panel = this.panel(panelId);
    if (!panel || index >= panel.drafts.length) return;
    const draft = cloneDraft(panel.drafts[index]);
    if (field === "cohort") {
      draft.cohort = value;
    } else {
      draft[field] = value;
    }
    panel.drafts = panel.drafts.map((d, i) => (i === index ? draft : d));
    if (panel.fieldErrors[index]) {
      panel.fieldErrors[index] = { ...panel.fieldErrors[index], [field]: undefined };
    }
    this.emit();
  }

  /** Copy the picker's current cohort spec into one draft. */
  syncDraftCohort(panelId: number, index: number): void {
    const panel = this.panel(panelId);
    if (!panel || index >= panel.drafts.length) return;
    const draft = cloneDraft(panel.drafts[index]);
    draft.cohort = Array.isArray(this.state.cohortSpec) ? [...this.state.cohortSpec] : this.state.cohortSpec;
    panel.drafts = panel.drafts.map((d, i) => (i === index ? draft : d));
    this.emit();
  }

  /** Open a new panel seeded from a past comparison's drafts. */
  startFromHistory(historyId: number): PanelState | undefined {
    const entry = this.state.history.find((h) => h.id === historyId);
    if (!entry) return undefined;
    return this.addPanel(entry.drafts.map(cloneDraft));
  }

  /** Submit a panel's drafts. A later submit supersedes this one: the
   * response is dropped unless its request id is still current. */
  async submit(panelId: number): Promise<void> {
    const panel = this.panel(panelId);
    if (!panel) return;
    const check = this.checkPanelState(panel);
    if (!check.ready) return;

    const requestId = this.nextRequestId++;
    panel.requestId = requestId;
    panel.pending = true;
    panel.error = null;
    panel.fieldErrors = [];
    this.emit();

    const submitted = panel.drafts.map(cloneDraft);
    const result = await this.client.whatif({ scenarios: check.payloads });

    if (panel.requestId !== requestId) return; // superseded — discard
    panel.pending = false;

    if (result.ok) {
      panel.result = result.value.result;
      panel.resultVaried = check.varied;
      panel.error = null;
      this.state.history = [
        ...this.state.history,
        { id: this.nextHistoryId++, drafts: submitted, result: result.value.result },
      ];
    } else {
      const mapped = mapFailureToFields(result.error, check.payloads);
      panel.fieldErrors = mapped.byDraft;
      panel.error = mapped.residual;
    }
    this.emit();
  }
}
