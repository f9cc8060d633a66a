// Typed client for the appgrease HTTP API. Errors carry the server's
// detail message verbatim so the UI can surface it unchanged.

import type { UiAppSummary, UiExtensionRow, UiJobView } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<never> {
  let detail = response.statusText;
  try {
    const body = await response.json();
    if (typeof body?.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  throw new ApiError(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(this.base + path, init);
    if (!response.ok) await parseError(response);
    return (await response.json()) as T;
  }

  listApps(): Promise<UiAppSummary[]> {
    return this.json("/api/apps");
  }

  async uploadApp(file: Blob, name: string): Promise<UiAppSummary> {
    const form = new FormData();
    form.append("file", file, name);
    return this.json("/api/apps", { method: "POST", body: form });
  }

  listExtensions(appId: string): Promise<UiExtensionRow[]> {
    return this.json(`/api/apps/${appId}/extensions`);
  }

  createJob(appId: string, extensions: string[], force: boolean): Promise<{ id: string }> {
    return this.json("/api/jobs", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ app_id: appId, extensions, force }),
    });
  }

  getJob(jobId: string): Promise<UiJobView> {
    return this.json(`/api/jobs/${jobId}`);
  }

  patchUrl(jobId: string): string {
    return `${this.base}/api/jobs/${jobId}/patch`;
  }

  apkUrl(jobId: string): string {
    return `${this.base}/api/jobs/${jobId}/apk`;
  }

  async revert(appId: string): Promise<{ sha256: string; bytes: ArrayBuffer }> {
    const response = await this.fetchImpl(`${this.base}/api/apps/${appId}/revert`, {
      method: "POST",
    });
    if (!response.ok) await parseError(response);
    return {
      sha256: response.headers.get("X-Original-Sha256") ?? "",
      bytes: await response.arrayBuffer(),
    };
  }
}
