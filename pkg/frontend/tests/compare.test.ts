/** Scenario comparison against the mocked API: exact aggregate rendering,
 * pairwise deltas, best-value highlighting, field-level error mapping,
 * history, and the request-id staleness rules. */

import { describe, expect, it } from "vitest";
import type { DraftField } from "../src/draft.js";
import { fmtNum, renderComparePanel, renderResultView } from "../src/render.js";
import { DashboardStore, type PanelState } from "../src/store.js";
import {
  deferredWhatif,
  fixture,
  fixtureBody,
  fixtureClient,
  flush,
  parsedWhatif,
  standardRoutes,
  storeFor,
} from "./helpers.js";

type Route = ReturnType<typeof standardRoutes>[string];

interface WhatifFixtureBody {
  result: {
    scenarios: Array<{ name: string; aggregates: Record<string, number> }>;
    deltas: Array<{ a: string; b: string; mean_delta: number }>;
  };
}

/** Store with users+traces loaded, u00/u01/u03 selected, and one panel whose
 * two drafts mirror the requests the fixtures were captured from. */
async function comparisonSetup(
  whatifRoute: Route,
  options: { loadTraces?: boolean; names?: [string, string] } = {},
): Promise<{ store: DashboardStore; panel: PanelState }> {
  const routes = standardRoutes();
  routes["POST /whatif"] = whatifRoute;
  const { store } = storeFor(routes);
  await store.loadUsers();
  if (options.loadTraces ?? true) await store.loadTraces();
  for (const id of ["u00", "u01", "u03"]) await store.toggleUser(id);

  const [nameA, nameB] = options.names ?? ["fiber", "mobile"];
  const panel = store.addPanel();
  const set = (i: number, field: DraftField, value: string): void =>
    store.setDraftField(panel.id, i, field, value);
  set(0, "name", nameA);
  set(0, "trace", "fast");
  set(0, "video_duration", "120");
  set(0, "n_sessions", "6");
  set(0, "seed", "99");
  set(1, "name", nameB);
  set(1, "trace", "crawl");
  set(1, "video_duration", "120");
  set(1, "n_sessions", "6");
  set(1, "seed", "99");
  return { store, panel };
}

describe("result rendering", () => {
  it("renders the aggregate table exactly as the API returned it", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_ok"));
    await store.submit(panel.id);
    expect(panel.result).not.toBeNull();

    const html = renderResultView(panel.result!, panel.resultVaried);
    const raw = fixtureBody<WhatifFixtureBody>("whatif_ok");
    for (const scenario of raw.result.scenarios) {
      for (const key of ["mean", "std", "min", "median", "max"] as const) {
        expect(html).toContain(`<td class="agg-${key}">${fmtNum(scenario.aggregates[key])}</td>`);
      }
    }
    // Spot-check verbatim digits from the captured response.
    expect(html).toContain("0.1319697782510899");
    expect(html).toMatchSnapshot();
  });

  it("renders every pairwise mean delta", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_ok"));
    await store.submit(panel.id);
    const html = renderResultView(panel.result!, panel.resultVaried);
    const raw = fixtureBody<WhatifFixtureBody>("whatif_ok");
    expect(raw.result.deltas).toHaveLength(2);
    for (const delta of raw.result.deltas) {
      expect(html).toContain(
        `<tr><td>${delta.a}</td><td>${delta.b}</td><td class="delta">${fmtNum(delta.mean_delta)}</td></tr>`,
      );
    }
    expect(html).toContain("0.8664498640068998");
    expect(html).toContain("-0.8664498640068998");
  });

  it("identical drafts render their deltas as 0.0", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_identical"), {
      names: ["left", "right"],
    });
    // Make the two drafts parameter-identical; only the names differ.
    store.setDraftField(panel.id, 1, "trace", "fast");
    await store.submit(panel.id);
    expect(panel.result).not.toBeNull();

    const html = renderResultView(panel.result!, panel.resultVaried);
    expect(html.match(/<td class="delta">0\.0<\/td>/g)).toHaveLength(2);
    expect(html).toMatchSnapshot();
  });

  it("highlights the best scenario's cells for varied parameters only", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_ok"));
    await store.submit(panel.id);
    expect(panel.resultVaried).toEqual(["trace"]);

    const html = renderResultView(panel.result!, panel.resultVaried);
    // fiber has the higher mean, so its trace cell wins the highlight.
    expect(html).toContain('<td class="param-trace best">fast</td>');
    expect(html).toContain('<td class="param-trace">crawl</td>');
    // Unvaried parameters are never highlighted.
    expect(html).not.toContain("param-abr best");
    expect(html).not.toContain("param-seed best");
  });

  it("a three-way comparison keeps all rows and deltas", () => {
    const raw = fixtureBody<WhatifFixtureBody>("whatif_three");
    const parsed = parsedWhatif("whatif_three");
    if (!parsed.ok) throw new Error("whatif_three fixture failed to parse");
    const html = renderResultView(parsed.value.result, ["trace", "segment_size"]);
    expect(raw.result.scenarios).toHaveLength(3);
    expect(raw.result.deltas).toHaveLength(6);
    for (const scenario of raw.result.scenarios) {
      expect(html).toContain(`<th>${scenario.name}</th>`);
    }
    for (const delta of raw.result.deltas) {
      expect(html).toContain(fmtNum(delta.mean_delta));
    }
  });
});

describe("API error mapping", () => {
  it("400 body validation lands on the named fields", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_missing_fields"));
    await store.submit(panel.id);

    expect(panel.result).toBeNull();
    expect(panel.error).toBeNull();
    expect(panel.fieldErrors[0].trace).toBe("Field required");
    expect(panel.fieldErrors[0].segment_size).toMatch(/valid number/);

    const html = renderComparePanel(panel, store.knownTraces());
    expect(html).toContain('<span class="field-error" data-field="trace">Field required</span>');
    expect(html).toMatch(/<span class="field-error" data-field="segment_size">Input should be/);
  });

  it("404 unknown trace attaches to the trace field of the offending draft", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_unknown_trace"), {
      loadTraces: false, // client-side membership check off: the server answers
    });
    store.setDraftField(panel.id, 0, "trace", "bogus");
    await store.submit(panel.id);

    const message = "unknown trace 'bogus'; available: crawl, fast, steppy";
    expect(panel.fieldErrors[0].trace).toBe(message);
    expect(panel.fieldErrors[1]?.trace).toBeUndefined();
    expect(panel.error).toBeNull();

    const html = renderComparePanel(panel, store.knownTraces());
    expect(html).toContain(`<span class="field-error" data-field="trace">${message.replace("'bogus'", "&#39;bogus&#39;")}</span>`);
  });

  it("404 unknown user attaches to the cohort field", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_unknown_user"));
    store.setDraftField(panel.id, 0, "cohort", "random:3");
    // Rebuild draft 1's cohort to include the bad id the fixture names.
    const bad = [...(panel.drafts[1].cohort as string[]), "zed"];
    panel.drafts[1] = { ...panel.drafts[1], cohort: bad };
    await store.submit(panel.id);

    expect(panel.fieldErrors[0].cohort).toBeUndefined();
    expect(panel.fieldErrors[1].cohort).toBe("unknown user(s): zed");
    expect(panel.error).toBeNull();
  });

  it("422 session cap attaches to n_sessions of the named scenario", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_cap_exceeded"));
    await store.submit(panel.id);

    expect(panel.fieldErrors[0].n_sessions).toBe("scenario 'fiber' requests 60 sessions; the cap is 40");
    expect(panel.fieldErrors[1]?.n_sessions).toBeUndefined();
    expect(panel.error).toBeNull();
  });

  it("prose rules naming a field fan out to every draft", async () => {
    const body = {
      schema: "whatif-api/v1",
      error: { message: "segment_size must be 1 or 2 seconds, got 4.0" },
    };
    const { store, panel } = await comparisonSetup({ status: 400, body });
    await store.submit(panel.id);
    expect(panel.fieldErrors[0].segment_size).toMatch(/must be 1 or 2 seconds/);
    expect(panel.fieldErrors[1].segment_size).toMatch(/must be 1 or 2 seconds/);
    expect(panel.error).toBeNull();
  });

  it("unmappable API errors stay at panel level", async () => {
    const body = { schema: "whatif-api/v1", error: { message: "simulation backend on fire" } };
    const { store, panel } = await comparisonSetup({ status: 500, body });
    await store.submit(panel.id);
    expect(panel.fieldErrors.every((e) => Object.keys(e).length === 0)).toBe(true);
    expect(panel.error?.kind).toBe("api");
    const html = renderComparePanel(panel, store.knownTraces());
    expect(html).toContain("API error 500: simulation backend on fire");
  });

  it("version drift on /whatif shows the version-error view in the panel", async () => {
    const drifted = { ...(fixtureBody("whatif_ok") as Record<string, unknown>), schema: "whatif-api/v2" };
    const { store, panel } = await comparisonSetup({ status: 200, body: drifted });
    await store.submit(panel.id);
    expect(panel.error?.kind).toBe("version");
    const html = renderComparePanel(panel, store.knownTraces());
    expect(html).toContain("API version mismatch");
    expect(html).toContain("whatif-api/v2");
  });

  it("editing a field clears its mapped server error", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_cap_exceeded"));
    await store.submit(panel.id);
    expect(panel.fieldErrors[0].n_sessions).toBeDefined();
    store.setDraftField(panel.id, 0, "n_sessions", "5");
    const html = renderComparePanel(store.panel(panel.id)!, store.knownTraces());
    expect(html).not.toContain("the cap is 40");
  });
});

describe("history", () => {
  it("keeps submitted comparisons and can seed a new panel from one", async () => {
    const { store, panel } = await comparisonSetup(fixture("whatif_ok"));
    await store.submit(panel.id);
    expect(store.state.history).toHaveLength(1);
    const entry = store.state.history[0];
    expect(entry.result.scenarios.map((s) => s.name)).toEqual(["fiber", "mobile"]);

    const revived = store.startFromHistory(entry.id)!;
    expect(revived.id).not.toBe(panel.id);
    expect(revived.drafts).toEqual(entry.drafts);
    expect(revived.drafts).not.toBe(entry.drafts);

    // Edits to the revived panel never touch the stored history.
    store.setDraftField(revived.id, 0, "name", "changed");
    expect(store.state.history[0].drafts[0].name).toBe("fiber");
  });
});

describe("request discipline", () => {
  it("discards a superseded response by request id", async () => {
    const { whatif, pending } = deferredWhatif();
    const store = new DashboardStore(fixtureClient(whatif));
    await store.loadUsers();
    await store.loadTraces();
    for (const id of ["u00", "u01", "u03"]) await store.toggleUser(id);

    const panel = store.addPanel();
    store.setDraftField(panel.id, 0, "name", "fiber");
    store.setDraftField(panel.id, 0, "trace", "fast");
    store.setDraftField(panel.id, 1, "name", "mobile");
    store.setDraftField(panel.id, 1, "trace", "crawl");

    const first = store.submit(panel.id);
    expect(panel.pending).toBe(true);
    store.setDraftField(panel.id, 1, "trace", "steppy");
    const second = store.submit(panel.id);
    expect(pending).toHaveLength(2);

    pending[0](parsedWhatif("whatif_ok")); // stale: superseded by the second submit
    await first;
    expect(panel.result).toBeNull();
    expect(panel.pending).toBe(true);

    pending[1](parsedWhatif("whatif_identical"));
    await second;
    expect(panel.pending).toBe(false);
    expect(panel.result?.scenarios.map((s) => s.name)).toEqual(["left", "right"]);
    // Only the surviving response entered history.
    expect(store.state.history).toHaveLength(1);
    expect(store.state.history[0].result.scenarios[0].name).toBe("left");
  });

  it("panels submit concurrently without cross-talk", async () => {
    const { whatif, pending } = deferredWhatif();
    const store = new DashboardStore(fixtureClient(whatif));
    await store.loadUsers();
    await store.loadTraces();
    for (const id of ["u00", "u01"]) await store.toggleUser(id);

    const panelA = store.addPanel();
    store.setDraftField(panelA.id, 0, "trace", "fast");
    store.setDraftField(panelA.id, 1, "trace", "crawl");
    const panelB = store.addPanel();
    store.setDraftField(panelB.id, 0, "trace", "fast");
    store.setDraftField(panelB.id, 1, "trace", "steppy");

    const submitA = store.submit(panelA.id);
    const submitB = store.submit(panelB.id);
    expect(pending).toHaveLength(2);

    // Resolve B first: each panel keeps its own response.
    pending[1](parsedWhatif("whatif_identical"));
    await submitB;
    expect(panelB.result?.scenarios[0].name).toBe("left");
    expect(panelA.pending).toBe(true);

    pending[0](parsedWhatif("whatif_ok"));
    await submitA;
    expect(panelA.result?.scenarios[0].name).toBe("fiber");
    expect(panelB.result?.scenarios[0].name).toBe("left");
  });

  it("the submit button is disabled while a request is in flight", async () => {
    const { whatif, pending } = deferredWhatif();
    const store = new DashboardStore(fixtureClient(whatif));
    await store.loadUsers();
    await store.loadTraces();
    await store.toggleUser("u00");

    const panel = store.addPanel();
    store.setDraftField(panel.id, 0, "trace", "fast");
    store.setDraftField(panel.id, 1, "trace", "crawl");

    let html = renderComparePanel(panel, store.knownTraces());
    expect(html).not.toMatch(/data-action="submit-panel" data-panel="\d+" disabled/);

    const inFlight = store.submit(panel.id);
    html = renderComparePanel(panel, store.knownTraces());
    expect(html).toMatch(/data-action="submit-panel" data-panel="\d+" disabled/);
    expect(html).toContain("running…");

    pending[0](parsedWhatif("whatif_ok"));
    await inFlight;
    await flush();
    html = renderComparePanel(panel, store.knownTraces());
    expect(html).not.toMatch(/data-action="submit-panel" data-panel="\d+" disabled/);
  });

  it("invalid panels never reach the network", async () => {
    const routes = standardRoutes();
    let posted = false;
    routes["POST /whatif"] = () => {
      posted = true;
      return fixture("whatif_ok");
    };
    const { store } = storeFor(routes);
    await store.loadUsers();
    const panel = store.addPanel(); // empty cohort, no trace: invalid
    await store.submit(panel.id);
    expect(posted).toBe(false);
    expect(panel.result).toBeNull();
  });
});
