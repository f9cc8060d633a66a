// Small display helpers.

import type { UiDetectionHit, UiExtensionRow } from "./types.js";

export function formatBytes(n: number): string {
  if (n < 1024) return `${n} B`;
  if (n < 1024 * 1024) return `${(n / 1024).toFixed(1)} KiB`;
  return `${(n / (1024 * 1024)).toFixed(1)} MiB`;
}

export function hitSummary(hits: UiDetectionHit[]): string {
  if (hits.length === 0) return "";
  const trackers = [...new Set(hits.map((h) => h.tracker))].sort();
  const label = trackers.length === 1 ? "tracker" : "trackers";
  return `${trackers.length} ${label} detected: ${trackers.join(", ")}`;
}

export function scopeLabel(row: UiExtensionRow): string {
  return row.scope === "app-specific" ? `only ${row.package}` : "any app";
}

export function shortDigest(sha256: string): string {
  return sha256.slice(0, 12);
}
