/** Editable scenario drafts and their per-field validation.
 *
 * A draft mirrors the what-if scenario JSON one-to-one but keeps raw input
 * text so the form can round-trip whatever the analyst typed. Validation
 * covers the request schema only (types, required fields, cohort spec shape);
 * the service stays the authority on simulation semantics, and its rejections
 * are mapped back onto fields after the fact.
 */

import type { ScenarioPayload } from "./schema.js";

export const ABR_POLICIES = ["throughput", "buffer", "hybrid-low-latency"] as const;

export interface ScenarioDraft {
  name: string;
  trace: string;
  abr: string;
  segment_size: string;
  video_duration: string;
  n_sessions: string;
  seed: string;
  cohort: string[] | string;
}

export type DraftField = keyof ScenarioDraft;

export const DRAFT_FIELDS: readonly DraftField[] = [
  "name",
  "trace",
  "abr",
  "segment_size",
  "video_duration",
  "n_sessions",
  "seed",
  "cohort",
];

/** Parameters that make two scenarios substantively different. */
export const COMPARE_FIELDS: readonly DraftField[] = [
  "trace",
  "abr",
  "segment_size",
  "video_duration",
  "n_sessions",
  "seed",
  "cohort",
];

export type DraftErrors = Partial<Record<DraftField, string>>;

export interface DraftCheck {
  errors: DraftErrors;
  payload: ScenarioPayload | null;
}

export function newDraft(cohort: string[] | string, name: string): ScenarioDraft {
  return {
    name,
    trace: "",
    abr: "hybrid-low-latency",
    segment_size: "2",
    video_duration: "600",
    n_sessions: "10",
    seed: "0",
    cohort: Array.isArray(cohort) ? [...cohort] : cohort,
  };
}

export function cloneDraft(draft: ScenarioDraft): ScenarioDraft {
  return { ...draft, cohort: Array.isArray(draft.cohort) ? [...draft.cohort] : draft.cohort };
}

function parseNumber(text: string): number | null {
  const trimmed = text.trim();
  if (trimmed === "") return null;
  const value = Number(trimmed);
  return Number.isFinite(value) ? value : null;
}

export function cohortError(cohort: string[] | string): string | null {
  if (Array.isArray(cohort)) {
    return cohort.length > 0 ? null : "select at least one user (or use random:k)";
  }
  const match = /^random:(\d+)$/.exec(cohort);
  if (!match) return "cohort must be a list of users or random:k";
  return Number(match[1]) >= 1 ? null : "random cohort needs k >= 1";
}

/** Validate one draft; knownTraces narrows trace errors early when loaded. */
export function validateDraft(draft: ScenarioDraft, knownTraces: readonly string[] | null = null): DraftCheck {
  const errors: DraftErrors = {};

  if (draft.name.trim() === "") errors.name = "name is required";

  if (draft.trace.trim() === "") {
    errors.trace = "pick a trace";
  } else if (knownTraces !== null && !knownTraces.includes(draft.trace)) {
    errors.trace = `unknown trace '${draft.trace}'`;
  }

  if (draft.abr.trim() === "") errors.abr = "pick an ABR policy";

  const segment = parseNumber(draft.segment_size);
  if (segment === null || segment <= 0) errors.segment_size = "segment size must be a positive number";

  const duration = parseNumber(draft.video_duration);
  if (duration === null || duration <= 0) errors.video_duration = "video duration must be a positive number";

  const sessions = parseNumber(draft.n_sessions);
  if (sessions === null || !Number.isInteger(sessions) || sessions < 1) {
    errors.n_sessions = "sessions per user must be an integer >= 1";
  }

  const seed = parseNumber(draft.seed);
  if (seed === null || !Number.isInteger(seed)) errors.seed = "seed must be an integer";

  const cohortProblem = cohortError(draft.cohort);
  if (cohortProblem !== null) errors.cohort = cohortProblem;

  if (Object.keys(errors).length > 0) return { errors, payload: null };
  return {
    errors,
    payload: {
      name: draft.name.trim(),
      trace: draft.trace,
      abr: draft.abr,
      segment_size: segment as number,
      video_duration: duration as number,
      n_sessions: sessions as number,
      seed: seed as number,
      cohort: Array.isArray(draft.cohort) ? [...draft.cohort] : draft.cohort,
    },
  };
}

export interface PanelCheck {
  ready: boolean;
  reason: string | null;
  checks: DraftCheck[];
  payloads: ScenarioPayload[];
  varied: DraftField[];
}

function fieldValue(payload: ScenarioPayload, field: DraftField): string {
  return JSON.stringify(payload[field as keyof ScenarioPayload]);
}

/** Compare-relevant fields on which the payloads disagree. */
export function variedFields(payloads: readonly ScenarioPayload[]): DraftField[] {
  if (payloads.length < 2) return [];
  return COMPARE_FIELDS.filter((field) => {
    const first = fieldValue(payloads[0], field);
    return payloads.some((p) => fieldValue(p, field) !== first);
  });
}

/** Gate for submitting a comparison: every draft valid, names unique, >=2 drafts. */
export function checkPanel(
  drafts: readonly ScenarioDraft[],
  knownTraces: readonly string[] | null = null,
): PanelCheck {
  const checks = drafts.map((d) => validateDraft(d, knownTraces));

  const seen = new Map<string, number[]>();
  drafts.forEach((d, i) => {
    const key = d.name.trim();
    if (key === "") return;
    const slots = seen.get(key) ?? [];
    slots.push(i);
    seen.set(key, slots);
  });
  for (const [name, slots] of seen) {
    if (slots.length > 1) {
      for (const i of slots) checks[i].errors.name = `duplicate name '${name}'`;
      for (const i of slots) checks[i].payload = null;
    }
  }

  const payloads = checks.flatMap((c) => (c.payload === null ? [] : [c.payload]));
  const allValid = payloads.length === drafts.length;
  let reason: string | null = null;
  if (drafts.length < 2) reason = "add at least two scenarios to compare";
  else if (!allValid) reason = "fix the highlighted fields";

  return {
    ready: reason === null,
    reason,
    checks,
    payloads: allValid ? payloads : [],
    varied: allValid ? variedFields(payloads) : [],
  };
}
