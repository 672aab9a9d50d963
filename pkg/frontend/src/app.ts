/** Browser bootstrap: wire the store to a root element.
 *
 * Rendering always replaces the root's HTML from state; events are
 * delegated through data-action attributes so the markup stays inert.
 */

import { ApiClient } from "./api.js";
import type { ApiClientLike } from "./clientlike.js";
import type { DraftField } from "./draft.js";
import { renderApp } from "./render.js";
import { DashboardStore } from "./store.js";

function intAttr(el: Element, name: string): number {
  return Number(el.getAttribute(name));
}

export function mount(root: HTMLElement, client: ApiClientLike = new ApiClient()): DashboardStore {
  const store = new DashboardStore(client);

  const redraw = (): void => {
    const active = document.activeElement;
    const focusKey =
      active instanceof HTMLElement && active.dataset.action
        ? `${active.dataset.action}:${active.dataset.panel ?? ""}:${active.dataset.draft ?? ""}:${active.dataset.field ?? ""}:${active.dataset.user ?? ""}`
        : null;
    root.innerHTML = renderApp(store.state);
    if (focusKey !== null) {
      for (const el of root.querySelectorAll<HTMLElement>("[data-action]")) {
        const key = `${el.dataset.action}:${el.dataset.panel ?? ""}:${el.dataset.draft ?? ""}:${el.dataset.field ?? ""}:${el.dataset.user ?? ""}`;
        if (key === focusKey) {
          el.focus();
          break;
        }
      }
    }
  };
  store.subscribe(redraw);

  root.addEventListener("click", (event) => {
    const el = (event.target as Element | null)?.closest("[data-action]");
    if (!(el instanceof HTMLElement)) return;
    switch (el.dataset.action) {
      case "retry-users":
        void store.loadUsers();
        break;
      case "retry-traces":
        void store.loadTraces();
        break;
      case "retry-chart":
        void store.loadChart(el.closest<HTMLElement>("[data-user]")?.dataset.user ?? "");
        break;
      case "use-random":
        store.useRandomCohort();
        break;
      case "use-selected":
        store.useSelectedCohort();
        break;
      case "add-panel":
        store.addPanel();
        break;
      case "add-draft":
        store.addDraft(intAttr(el, "data-panel"));
        break;
      case "remove-draft":
        store.removeDraft(intAttr(el, "data-panel"), intAttr(el, "data-draft"));
        break;
      case "sync-cohort":
        store.syncDraftCohort(intAttr(el, "data-panel"), intAttr(el, "data-draft"));
        break;
      case "submit-panel":
        void store.submit(intAttr(el, "data-panel"));
        break;
      case "start-from-history":
        store.startFromHistory(intAttr(el, "data-history"));
        break;
      default:
        break;
    }
  });

  root.addEventListener("change", (event) => {
    const el = event.target;
    if (!(el instanceof HTMLInputElement)) return;
    if (el.dataset.action === "toggle-user") {
      void store.toggleUser(el.dataset.user ?? "");
    }
  });

  root.addEventListener("input", (event) => {
    const el = event.target;
    if (!(el instanceof HTMLInputElement) && !(el instanceof HTMLSelectElement)) return;
    switch (el.dataset.action) {
      case "search":
        store.setSearch(el.value);
        break;
      case "random-k":
        store.setRandomK(el.value);
        break;
      case "draft-field":
        store.setDraftField(
          intAttr(el, "data-panel"),
          intAttr(el, "data-draft"),
          el.dataset.field as DraftField,
          el.value,
        );
        break;
      default:
        break;
    }
  });

  redraw();
  void store.loadUsers();
  void store.loadTraces();
  store.addPanel();
  return store;
}
