/** Client-facing result types and the interface the store consumes.
 *
 * The store only needs something that can answer the five API calls; tests
 * substitute fixture-backed fakes without touching fetch.
 */

import type {
  Features,
  FieldError,
  Health,
  Sensitivities,
  Traces,
  Users,
  WhatifRequest,
  WhatifResponse,
} from "./schema.js";

export type ApiFailure =
  | { kind: "network"; message: string }
  | { kind: "version"; message: string; expected: string; got: string | null }
  | { kind: "api"; status: number; message: string; fields: FieldError[] };

export type ApiResult<T> = { ok: true; value: T } | { ok: false; error: ApiFailure };

export interface ApiClientLike {
  health(): Promise<ApiResult<Health>>;
  users(): Promise<ApiResult<Users>>;
  sensitivities(userId: string): Promise<ApiResult<Sensitivities>>;
  traces(): Promise<ApiResult<Traces>>;
  features(): Promise<ApiResult<Features>>;
  whatif(body: WhatifRequest): Promise<ApiResult<WhatifResponse>>;
}
