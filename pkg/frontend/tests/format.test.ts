import { describe, expect, it } from "vitest";

import { formatBytes, hitSummary, scopeLabel, shortDigest } from "../src/format.js";
import type { UiDetectionHit, UiExtensionRow } from "../src/types.js";

function hit(tracker: string): UiDetectionHit {
  return { tracker, pattern: "p", dex: "classes.dex", string_index: 0 };
}

describe("formatBytes", () => {
  it("picks sensible units", () => {
    expect(formatBytes(512)).toBe("512 B");
    expect(formatBytes(5990)).toBe("5.8 KiB");
    expect(formatBytes(20 * 1024 * 1024)).toBe("20.0 MiB");
  });
});

describe("hitSummary", () => {
  it("is empty without hits", () => {
    expect(hitSummary([])).toBe("");
  });

  it("dedupes trackers for the summary badge", () => {
    const text = hitSummary([hit("Mixpanel"), hit("Facebook Analytics"), hit("Mixpanel")]);
    expect(text).toBe("2 trackers detected: Facebook Analytics, Mixpanel");
  });

  it("uses the singular for one tracker", () => {
    expect(hitSummary([hit("Flurry")])).toBe("1 tracker detected: Flurry");
  });
});

describe("scopeLabel", () => {
  const base: Omit<UiExtensionRow, "scope" | "package"> = {
    id: "x", name: "x", description: "", category: "other",
    applicable: true, rules: [], hits: [],
  };

  it("names the target package for app-specific rows", () => {
    const row: UiExtensionRow = { ...base, scope: "app-specific", package: "com.x" };
    expect(scopeLabel(row)).toBe("only com.x");
  });

  it("marks agnostic rows", () => {
    const row: UiExtensionRow = { ...base, scope: "app-agnostic", package: null };
    expect(scopeLabel(row)).toBe("any app");
  });
});

describe("shortDigest", () => {
  it("truncates", () => {
    expect(shortDigest("abcdef0123456789deadbeef")).toBe("abcdef012345");
  });
});
