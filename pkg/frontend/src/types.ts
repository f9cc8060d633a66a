// Mirrors of the server's JSON documents. The UI never invents state that
// these documents don't carry.

export interface UiAppSummary {
  id: string;
  package: string | null;
  version_code: number | null;
  version_name: string | null;
  sha256: string;
  size: number;
  uploaded_at: number;
}

export interface UiRuleResult {
  kind: string;
  argument: string;
  passed: boolean;
}

export interface UiDetectionHit {
  tracker: string;
  pattern: string;
  dex: string;
  string_index: number;
}

export interface UiExtensionRow {
  id: string;
  name: string;
  description: string;
  category: "distraction" | "privacy" | "child-safety" | "other";
  scope: "app-agnostic" | "app-specific";
  package: string | null;
  applicable: boolean;
  rules: UiRuleResult[];
  hits: UiDetectionHit[];
}

export interface UiJobExtension {
  id: string;
  changes: number | null;
  warnings: string[];
}

// Exactly the server's pipeline states; the UI renders these verbatim.
export type JobState =
  | "queued"
  | "decoding"
  | "detecting"
  | "applying"
  | "encoding"
  | "signing"
  | "diffing"
  | "done"
  | "failed";

export const JOB_STATES: readonly JobState[] = [
  "queued",
  "decoding",
  "detecting",
  "applying",
  "encoding",
  "signing",
  "diffing",
  "done",
  "failed",
];

export interface UiJobView {
  id: string;
  app_id: string;
  state: JobState;
  extensions: UiJobExtension[];
  error: string | null;
}
