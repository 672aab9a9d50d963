/** Shared test plumbing: fixture loading and fixture-backed API fakes.
 *
 * Fixtures under tests/fixtures are verbatim captures of the real service's
 * responses ({status, body} pairs), so everything the fakes serve is exactly
 * what the live API would send.
 */

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { ApiClient } from "../src/api.js";
import type { ApiClientLike, ApiResult } from "../src/clientlike.js";
import {
  sensitivitiesSchema,
  tracesSchema,
  usersSchema,
  whatifResponseSchema,
  type WhatifResponse,
} from "../src/schema.js";
import { DashboardStore } from "../src/store.js";

export interface Fixture {
  status: number;
  body: unknown;
}

// Resolved from the package root so both the node and jsdom environments agree.
const FIXTURE_DIR = join(process.cwd(), "tests", "fixtures");

export function fixture(name: string): Fixture {
  return JSON.parse(readFileSync(join(FIXTURE_DIR, `${name}.json`), "utf8")) as Fixture;
}

export function fixtureBody<T = unknown>(name: string): T {
  return fixture(name).body as T;
}

type Route = Fixture | ((init?: RequestInit) => Fixture);

export interface FetchCall {
  key: string;
  url: string;
  init?: RequestInit;
}

/** fetch stub keyed by "METHOD /path"; unknown routes reject like a dead host. */
export function fakeFetch(routes: Record<string, Route>): { fn: typeof fetch; calls: FetchCall[] } {
  const calls: FetchCall[] = [];
  const fn = (async (input: RequestInfo | URL, init?: RequestInit) => {
    const url = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const path = url.replace(/^https?:\/\/[^/]*/, "");
    const key = `${init?.method ?? "GET"} ${path}`;
    calls.push({ key, url, init });
    const route = routes[key];
    if (route === undefined) throw new TypeError(`fetch failed: no route for ${key}`);
    const resolved = typeof route === "function" ? route(init) : route;
    return new Response(JSON.stringify(resolved.body), {
      status: resolved.status,
      headers: { "content-type": "application/json" },
    });
  }) as typeof fetch;
  return { fn, calls };
}

/** The standard happy-path routes served from fixtures. */
export function standardRoutes(): Record<string, Route> {
  const chart = fixture("sensitivities_u00");
  const routes: Record<string, Route> = {
    "GET /health": fixture("health"),
    "GET /users": fixture("users"),
    "GET /traces": fixture("traces"),
    "GET /features": fixture("features"),
    "GET /users/nope/sensitivities": fixture("sensitivities_unknown"),
    "GET /users/u02/sensitivities": fixture("sensitivities_u02"),
  };
  for (const id of ["u00", "u01", "u03", "u04", "u05", "u06", "u07"]) {
    routes[`GET /users/${id}/sensitivities`] = {
      status: chart.status,
      body: { ...(chart.body as Record<string, unknown>), user_id: id },
    };
  }
  return routes;
}

export function clientFor(
  routes: Record<string, Route>,
  base = "",
): { client: ApiClient; calls: FetchCall[] } {
  const { fn, calls } = fakeFetch(routes);
  return { client: new ApiClient(base, fn), calls };
}

export function storeFor(routes: Record<string, Route>): { store: DashboardStore; calls: FetchCall[] } {
  const { client, calls } = clientFor(routes);
  return { store: new DashboardStore(client), calls };
}

const ok = <T>(value: T): ApiResult<T> => ({ ok: true, value });

/** Hand-rolled client over the same fixtures, for tests that need to control
 * /whatif response timing without touching fetch. */
export function fixtureClient(
  whatif?: ApiClientLike["whatif"],
): ApiClientLike {
  return {
    health: async () => ok(fixtureBody("health") as never),
    users: async () => ok(usersSchema.parse(fixtureBody("users"))),
    traces: async () => ok(tracesSchema.parse(fixtureBody("traces"))),
    features: async () => ok(fixtureBody("features") as never),
    sensitivities: async (userId: string) => {
      if (userId === "u02" || userId === "u05") {
        return ok(
          sensitivitiesSchema.parse({
            ...(fixtureBody("sensitivities_u02") as Record<string, unknown>),
            user_id: userId,
          }),
        );
      }
      return ok(
        sensitivitiesSchema.parse({
          ...(fixtureBody("sensitivities_u00") as Record<string, unknown>),
          user_id: userId,
        }),
      );
    },
    whatif: whatif ?? (async () => ok(whatifResponseSchema.parse(fixtureBody("whatif_ok")))),
  };
}

/** A /whatif that parks every call until the test releases it. */
export function deferredWhatif(): {
  whatif: ApiClientLike["whatif"];
  pending: Array<(result: ApiResult<WhatifResponse>) => void>;
} {
  const pending: Array<(result: ApiResult<WhatifResponse>) => void> = [];
  return {
    pending,
    whatif: () => new Promise((resolve) => pending.push(resolve)),
  };
}

export function parsedWhatif(name: string): ApiResult<WhatifResponse> {
  return ok(whatifResponseSchema.parse(fixtureBody(name)));
}

/** Let queued promise continuations run. */
export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}
