/** Thin typed client for the what-if service.
 *
 * Every response is schema-validated before it is handed to the UI. Failures
 * collapse into three shapes: the service is unreachable, the payload does
 * not match the versioned schema, or the API returned a structured error.
 */

import type { ZodType } from "zod";
import type { ApiClientLike, ApiFailure, ApiResult } from "./clientlike.js";
import {
  API_SCHEMA,
  errorEnvelopeSchema,
  featuresSchema,
  healthSchema,
  sensitivitiesSchema,
  tracesSchema,
  usersSchema,
  whatifResponseSchema,
  type Features,
  type Health,
  type Sensitivities,
  type Traces,
  type Users,
  type WhatifRequest,
  type WhatifResponse,
} from "./schema.js";

export type { ApiFailure, ApiResult } from "./clientlike.js";

/** The one configuration knob: base URL of the what-if service.
 *
 * Read from the DASHBOARD_API_BASE environment variable when running under
 * node; the deployed page injects the same variable onto globalThis. Empty
 * means same-origin.
 */
export function apiBase(): string {
  const fromGlobal = (globalThis as { DASHBOARD_API_BASE?: unknown }).DASHBOARD_API_BASE;
  if (typeof fromGlobal === "string" && fromGlobal !== "") {
    return fromGlobal.replace(/\/+$/, "");
  }
  if (typeof process !== "undefined" && typeof process.env?.DASHBOARD_API_BASE === "string") {
    return process.env.DASHBOARD_API_BASE.replace(/\/+$/, "");
  }
  return "";
}

function versionFailure(body: unknown, message: string): ApiFailure {
  const got =
    typeof body === "object" && body !== null && "schema" in body
      ? String((body as { schema: unknown }).schema)
      : null;
  return { kind: "version", message, expected: API_SCHEMA, got };
}

export class ApiClient implements ApiClientLike {
  constructor(
    private readonly base: string = apiBase(),
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  private async request<T>(schema: ZodType<T>, path: string, init?: RequestInit): Promise<ApiResult<T>> {
    let response: Response;
    try {
      response = await this.fetchFn(this.base + path, init);
    } catch (err) {
      return { ok: false, error: { kind: "network", message: String(err) } };
    }
    let body: unknown;
    try {
      body = await response.json();
    } catch {
      return {
        ok: false,
        error: versionFailure(null, `response from ${path} is not JSON`),
      };
    }
    if (response.ok) {
      const parsed = schema.safeParse(body);
      if (!parsed.success) {
        return {
          ok: false,
          error: versionFailure(body, `response from ${path} does not match ${API_SCHEMA}`),
        };
      }
      return { ok: true, value: parsed.data };
    }
    const envelope = errorEnvelopeSchema.safeParse(body);
    if (!envelope.success) {
      return {
        ok: false,
        error: versionFailure(body, `error response from ${path} does not match ${API_SCHEMA}`),
      };
    }
    return {
      ok: false,
      error: {
        kind: "api",
        status: response.status,
        message: envelope.data.error.message,
        fields: envelope.data.error.fields ?? [],
      },
    };
  }

  health(): Promise<ApiResult<Health>> {
    return this.request(healthSchema, "/health");
  }

  users(): Promise<ApiResult<Users>> {
    return this.request(usersSchema, "/users");
  }

  sensitivities(userId: string): Promise<ApiResult<Sensitivities>> {
    return this.request(sensitivitiesSchema, `/users/${encodeURIComponent(userId)}/sensitivities`);
  }

  traces(): Promise<ApiResult<Traces>> {
    return this.request(tracesSchema, "/traces");
  }

  features(): Promise<ApiResult<Features>> {
    return this.request(featuresSchema, "/features");
  }

  whatif(body: WhatifRequest): Promise<ApiResult<WhatifResponse>> {
    return this.request(whatifResponseSchema, "/whatif", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }
}
