// DOM rendering: one render(state) pass per change, no virtual DOM.

import { formatBytes, hitSummary, scopeLabel, shortDigest } from "./format.js";
import type { WizardState } from "./wizard.js";
import { canContinue, canToggle, stageLabel } from "./wizard.js";
import { JOB_STATES } from "./types.js";

export interface Actions {
  selectApp(appId: string): void;
  uploadFile(file: File): void;
  toggleExtension(id: string): void;
  setForce(enabled: boolean): void;
  submit(): void;
  backToExtensions(): void;
  backToApps(): void;
  revert(): void;
  patchUrl(jobId: string): string;
  apkUrl(jobId: string): string;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    if (key === "class") node.className = value;
    else node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function stepHeader(state: WizardState): HTMLElement {
  const steps: [string, string][] = [
    ["select-app", "1. Choose an app"],
    ["select-extensions", "2. Choose extensions"],
    ["run", "3. Install the extended app"],
  ];
  return el(
    "nav",
    { class: "steps" },
    ...steps.map(([key, label]) =>
      el("span", { class: key === state.step ? "step active" : "step" }, label),
    ),
  );
}

function appList(state: WizardState, actions: Actions): HTMLElement {
  const input = el("input", { type: "file", accept: ".apk", class: "upload" });
  input.addEventListener("change", () => {
    const file = input.files?.[0];
    if (file) actions.uploadFile(file);
  });

  const rows = state.apps.map((app) => {
    const button = el(
      "button",
      { class: "card app-card" },
      el("strong", {}, app.package ?? "(unknown package)"),
      el("span", { class: "muted" }, ` v${app.version_name ?? "?"} · ${formatBytes(app.size)}`),
    );
    button.addEventListener("click", () => actions.selectApp(app.id));
    return button;
  });

  return el(
    "section",
    {},
    el("p", {}, "Pick an uploaded app, or upload an APK extracted from your device."),
    rows.length
      ? el("div", { class: "list" }, ...rows)
      : el("p", { class: "muted" }, "Nothing uploaded yet."),
    el("label", { class: "upload-label" }, "Upload an APK: ", input),
  );
}

function extensionList(state: WizardState, actions: Actions): HTMLElement {
  const rows = state.extensions.map((row) => {
    const selected = state.selection.includes(row.id);
    const enabled = canToggle(state, row.id);
    const toggle = el("input", { type: "checkbox" }) as HTMLInputElement;
    toggle.checked = selected;
    toggle.disabled = !enabled && !selected;
    toggle.addEventListener("change", () => actions.toggleExtension(row.id));

    const parts: (Node | string)[] = [
      el("strong", {}, row.name),
      el("span", { class: `tag tag-${row.category}` }, row.category),
      el("span", { class: "muted" }, ` ${scopeLabel(row)}`),
      el("p", { class: "description" }, row.description),
    ];
    const hits = hitSummary(row.hits);
    if (hits) parts.push(el("p", { class: "hits" }, hits));
    if (!row.applicable) {
      parts.push(el("p", { class: "muted" }, "Not applicable to this app."));
    }

    return el(
      "label",
      { class: row.applicable || state.forceMode ? "card ext-card" : "card ext-card greyed" },
      toggle,
      el("div", {}, ...parts),
    );
  });

  const force = el("input", { type: "checkbox" }) as HTMLInputElement;
  force.checked = state.forceMode;
  force.addEventListener("change", () => actions.setForce(force.checked));

  const submit = el("button", { class: "primary" }, "Continue") as HTMLButtonElement;
  submit.disabled = !canContinue(state);
  submit.addEventListener("click", () => actions.submit());

  const back = el("button", {}, "Back");
  back.addEventListener("click", () => actions.backToApps());

  return el(
    "section",
    {},
    el("div", { class: "list" }, ...rows),
    el(
      "div",
      { class: "controls" },
      back,
      el("label", { class: "force" }, force, " force mode (apply even when greyed out)"),
      submit,
    ),
  );
}

function jobView(state: WizardState, actions: Actions): HTMLElement {
  const job = state.job;
  const current = stageLabel(job);
  const stages = JOB_STATES.filter((s) => s !== "failed").map((s) => {
    const cls =
      s === current
        ? "stage current"
        : job && JOB_STATES.indexOf(s) < JOB_STATES.indexOf(job.state)
          ? "stage past"
          : "stage";
    return el("span", { class: cls }, s);
  });

  const body: (Node | string)[] = [el("div", { class: "stages" }, ...stages)];

  if (job?.state === "failed") {
    const backButton = el("button", { class: "primary" }, "Back to extensions");
    backButton.addEventListener("click", () => actions.backToExtensions());
    body.push(
      el("p", { class: "error" }, `Job failed: ${job.error ?? "unknown reason"}`),
      el("p", {}, "Your selections are preserved."),
      backButton,
    );
  } else if (job?.state === "done") {
    body.push(
      el(
        "table",
        { class: "results" },
        el("tr", {}, el("th", {}, "extension"), el("th", {}, "changes"), el("th", {}, "warnings")),
        ...job.extensions.map((e) =>
          el(
            "tr",
            {},
            el("td", {}, e.id),
            el("td", {}, String(e.changes ?? "")),
            el("td", {}, e.warnings.join("; ")),
          ),
        ),
      ),
      el(
        "p",
        {},
        el("a", { href: actions.patchUrl(job.id), download: "update.axpw" }, "Download patch"),
        " · ",
        el("a", { href: actions.apkUrl(job.id), download: "extended.apk" }, "Download full APK"),
      ),
    );
    const revert = el("button", {}, "Revert to original");
    revert.addEventListener("click", () => actions.revert());
    body.push(el("p", {}, revert));
  } else {
    body.push(el("p", { class: "muted" }, "Working…"));
  }

  return el("section", {}, ...body);
}

export function render(root: HTMLElement, state: WizardState, actions: Actions): void {
  root.replaceChildren();
  root.append(el("h1", {}, "appgrease"), stepHeader(state));
  if (state.banner) root.append(el("div", { class: "banner" }, state.banner));
  if (state.step === "select-app") root.append(appList(state, actions));
  else if (state.step === "select-extensions") root.append(extensionList(state, actions));
  else root.append(jobView(state, actions));
}

export function toast(root: HTMLElement, message: string): void {
  const node = el("div", { class: "toast" }, message);
  root.append(node);
  setTimeout(() => node.remove(), 4000);
}

export { shortDigest };
