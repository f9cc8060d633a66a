// The three-step flow as a pure state machine: every transition takes a
// state and an event and returns a new state. All applicability and job
// progress comes from server documents; the machine never synthesizes it.

import type { UiAppSummary, UiExtensionRow, UiJobView } from "./types.js";

export type Step = "select-app" | "select-extensions" | "run";

export interface WizardState {
  step: Step;
  apps: UiAppSummary[];
  selectedAppId: string | null;
  extensions: UiExtensionRow[];
  selection: string[]; // ordered: application order is user-chosen order
  forceMode: boolean;
  job: UiJobView | null;
  banner: string | null; // last error text, verbatim from the server
}

export type WizardEvent =
  | { type: "apps-loaded"; apps: UiAppSummary[] }
  | { type: "app-selected"; appId: string }
  | { type: "extensions-loaded"; rows: UiExtensionRow[] }
  | { type: "toggle-extension"; id: string }
  | { type: "set-force"; enabled: boolean }
  | { type: "submit-requested" }
  | { type: "job-updated"; job: UiJobView }
  | { type: "back-to-extensions" }
  | { type: "back-to-apps" }
  | { type: "error"; message: string };

export function initialState(): WizardState {
  return {
    step: "select-app",
    apps: [],
    selectedAppId: null,
    extensions: [],
    selection: [],
    forceMode: false,
    job: null,
    banner: null,
  };
}

export function canToggle(state: WizardState, id: string): boolean {
  const row = state.extensions.find((r) => r.id === id);
  if (!row) return false;
  return row.applicable || state.forceMode;
}

export function canContinue(state: WizardState): boolean {
  return state.step === "select-extensions" && state.selection.length > 0;
}

export function jobIsSettled(job: UiJobView | null): boolean {
  return job !== null && (job.state === "done" || job.state === "failed");
}

export function reduce(state: WizardState, event: WizardEvent): WizardState {
  switch (event.type) {
    case "apps-loaded":
      return { ...state, apps: event.apps };

    case "app-selected": {
      if (!state.apps.some((a) => a.id === event.appId)) return state;
      return {
        ...state,
        selectedAppId: event.appId,
        step: "select-extensions",
        extensions: [],
        selection: [],
        job: null,
        banner: null,
      };
    }

    case "extensions-loaded": {
      // Selections survive a reload of the same app's rows (failure path);
      // anything that vanished from the repository is dropped.
      const ids = new Set(event.rows.map((r) => r.id));
      return {
        ...state,
        extensions: event.rows,
        selection: state.selection.filter((id) => ids.has(id)),
      };
    }

    case "toggle-extension": {
      if (state.step !== "select-extensions") return state;
      if (state.selection.includes(event.id)) {
        return { ...state, selection: state.selection.filter((x) => x !== event.id) };
      }
      if (!canToggle(state, event.id)) return state; // never enable a greyed row
      return { ...state, selection: [...state.selection, event.id] };
    }

    case "set-force": {
      if (event.enabled) return { ...state, forceMode: true };
      // Leaving force mode drops any selections that only force allowed.
      const applicable = new Set(
        state.extensions.filter((r) => r.applicable).map((r) => r.id),
      );
      return {
        ...state,
        forceMode: false,
        selection: state.selection.filter((id) => applicable.has(id)),
      };
    }

    case "submit-requested": {
      if (!canContinue(state)) return state;
      return { ...state, step: "run", job: null, banner: null };
    }

    case "job-updated":
      return { ...state, job: event.job };

    case "back-to-extensions":
      // Failure path: selections and rows are preserved for another attempt.
      return { ...state, step: "select-extensions", job: null };

    case "back-to-apps":
      return {
        ...initialState(),
        apps: state.apps,
        forceMode: state.forceMode,
      };

    case "error":
      return { ...state, banner: event.message };
  }
}

export function stageLabel(job: UiJobView | null): string {
  // Rendered verbatim; the server's state enum is the single vocabulary.
  return job === null ? "queued" : job.state;
}
