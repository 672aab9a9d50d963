/** Versioned wire schemas for the what-if HTTP API.
 *
 * Every payload is validated against these before anything renders; a schema
 * tag we don't recognise is surfaced as a version error, never rendered.
 */

import { z } from "zod";

export const API_SCHEMA = "whatif-api/v1";
export const RESULT_SCHEMA = "whatif-result/v1";
export const CATALOG_SCHEMA = "feature-catalog/v1";

const envelope = z.object({ schema: z.literal(API_SCHEMA) });

export const healthSchema = envelope.extend({ status: z.literal("ok") });

export const userRowSchema = z.object({
  user_id: z.string(),
  degenerate: z.boolean(),
});
export const usersSchema = envelope.extend({ users: z.array(userRowSchema) });

export const sensitivitiesSchema = envelope.extend({
  user_id: z.string(),
  degenerate: z.boolean(),
  weights: z.record(z.number()),
});

export const traceRowSchema = z.object({
  name: z.string(),
  cycle_s: z.number(),
  steps: z.array(z.tuple([z.number(), z.number()])),
});
export const tracesSchema = envelope.extend({ traces: z.array(traceRowSchema) });

export const featureScoreSchema = z.object({
  name: z.string(),
  raw_importance: z.number(),
  correlation_penalty: z.number(),
  penalized_importance: z.number(),
  selected: z.boolean(),
});
export const catalogSchema = z.object({
  schema: z.literal(CATALOG_SCHEMA),
  threshold: z.number(),
  features: z.array(featureScoreSchema),
});
export const featuresSchema = envelope.extend({ catalog: catalogSchema });

export const aggregatesSchema = z.object({
  mean: z.number(),
  std: z.number(),
  min: z.number(),
  median: z.number(),
  max: z.number(),
});
export const scenarioOutcomeSchema = z.object({
  name: z.string(),
  trace: z.string(),
  abr: z.string(),
  segment_size: z.number(),
  video_duration: z.number(),
  n_sessions: z.number(),
  seed: z.number(),
  cohort: z.array(z.string()),
  predictions: z.array(z.number()),
  aggregates: aggregatesSchema,
});
export const deltaRowSchema = z.object({
  a: z.string(),
  b: z.string(),
  mean_delta: z.number(),
});
export const whatifResponseSchema = envelope.extend({
  result: z.object({
    schema: z.literal(RESULT_SCHEMA),
    scenarios: z.array(scenarioOutcomeSchema),
    deltas: z.array(deltaRowSchema),
  }),
});

export const fieldErrorSchema = z.object({
  field: z.string(),
  message: z.string(),
});
export const errorEnvelopeSchema = envelope.extend({
  error: z.object({
    message: z.string(),
    fields: z.array(fieldErrorSchema).optional(),
  }),
});

export type Health = z.infer<typeof healthSchema>;
export type UserRow = z.infer<typeof userRowSchema>;
export type Users = z.infer<typeof usersSchema>;
export type Sensitivities = z.infer<typeof sensitivitiesSchema>;
export type TraceRow = z.infer<typeof traceRowSchema>;
export type Traces = z.infer<typeof tracesSchema>;
export type FeatureScore = z.infer<typeof featureScoreSchema>;
export type Features = z.infer<typeof featuresSchema>;
export type Aggregates = z.infer<typeof aggregatesSchema>;
export type ScenarioOutcome = z.infer<typeof scenarioOutcomeSchema>;
export type DeltaRow = z.infer<typeof deltaRowSchema>;
export type WhatifResponse = z.infer<typeof whatifResponseSchema>;
export type WhatifResult = WhatifResponse["result"];
export type FieldError = z.infer<typeof fieldErrorSchema>;
export type ErrorEnvelope = z.infer<typeof errorEnvelopeSchema>;

/** Request body for POST /whatif, mirroring the service's scenario model. */
export interface ScenarioPayload {
  trace: string;
  cohort: string[] | string;
  abr: string;
  segment_size: number;
  video_duration: number;
  n_sessions: number;
  seed: number;
  name: string;
}

export interface WhatifRequest {
  scenarios: ScenarioPayload[];
}
