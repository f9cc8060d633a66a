// Bootstrap: wires the API client, the wizard machine, and the DOM together.
// Job status is polled once a second while a job is in flight; navigating
// away cancels the poll.

import { ApiClient, ApiError } from "./api.js";
import { render, toast, shortDigest } from "./dom.js";
import type { WizardEvent, WizardState } from "./wizard.js";
import { initialState, jobIsSettled, reduce } from "./wizard.js";

const POLL_INTERVAL_MS = 1000;

export function start(root: HTMLElement, api: ApiClient): void {
  let state: WizardState = initialState();
  let pollTimer: ReturnType<typeof setInterval> | null = null;

  function stopPolling(): void {
    if (pollTimer !== null) {
      clearInterval(pollTimer);
      pollTimer = null;
    }
  }

  function dispatch(event: WizardEvent): void {
    state = reduce(state, event);
    if (state.step !== "run") stopPolling();
    render(root, state, actions);
  }

  function fail(error: unknown): void {
    const message = error instanceof ApiError ? error.message : String(error);
    dispatch({ type: "error", message });
  }

  function pollJob(jobId: string): void {
    stopPolling();
    pollTimer = setInterval(async () => {
      try {
        const job = await api.getJob(jobId);
        dispatch({ type: "job-updated", job });
        if (jobIsSettled(job)) stopPolling();
      } catch (error) {
        stopPolling();
        fail(error);
      }
    }, POLL_INTERVAL_MS);
  }

  const actions = {
    selectApp(appId: string): void {
      dispatch({ type: "app-selected", appId });
      api
        .listExtensions(appId)
        .then((rows) => dispatch({ type: "extensions-loaded", rows }))
        .catch(fail);
    },

    uploadFile(file: File): void {
      api
        .uploadApp(file, file.name)
        .then(() => api.listApps())
        .then((apps) => dispatch({ type: "apps-loaded", apps }))
        .catch(fail);
    },

    toggleExtension(id: string): void {
      dispatch({ type: "toggle-extension", id });
    },

    setForce(enabled: boolean): void {
      dispatch({ type: "set-force", enabled });
    },

    submit(): void {
      const appId = state.selectedAppId;
      const selection = [...state.selection];
      const force = state.forceMode;
      if (!appId || selection.length === 0) return;
      dispatch({ type: "submit-requested" });
      api
        .createJob(appId, selection, force)
        .then(({ id }) => pollJob(id))
        .catch((error) => {
          dispatch({ type: "back-to-extensions" });
          fail(error);
        });
    },

    backToExtensions(): void {
      dispatch({ type: "back-to-extensions" });
    },

    backToApps(): void {
      dispatch({ type: "back-to-apps" });
      refreshApps();
    },

    revert(): void {
      const appId = state.selectedAppId;
      if (!appId) return;
      api
        .revert(appId)
        .then(({ sha256 }) =>
          toast(root, `Original restored (sha256 ${shortDigest(sha256)}…)`),
        )
        .catch(fail);
    },

    patchUrl: (jobId: string) => api.patchUrl(jobId),
    apkUrl: (jobId: string) => api.apkUrl(jobId),
  };

  function refreshApps(): void {
    api
      .listApps()
      .then((apps) => dispatch({ type: "apps-loaded", apps }))
      .catch(fail);
  }

  render(root, state, actions);
  refreshApps();
}

const rootElement = typeof document !== "undefined" ? document.getElementById("app") : null;
if (rootElement) {
  start(rootElement, new ApiClient(""));
}
