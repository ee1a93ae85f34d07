// Thin fetch wrappers over the workspace HTTP API.

import type {
  ComparisonReport,
  DagView,
  MetricsSeries,
  RunError,
  RunResponse,
  VersionDetail,
  VersionSummary,
} from "./types.js";

async function getJson<T>(path: string): Promise<T> {
  const resp = await fetch(path);
  if (!resp.ok) {
    throw new Error(`${path}: HTTP ${resp.status}`);
  }
  return (await resp.json()) as T;
}

export const fetchVersions = () => getJson<VersionSummary[]>("/api/versions");
export const fetchVersion = (id: number) => getJson<VersionDetail>(`/api/versions/${id}`);
export const fetchDag = (id: number) => getJson<DagView>(`/api/versions/${id}/dag`);
export const fetchMetrics = () => getJson<MetricsSeries>("/api/metrics");
export const fetchComparison = (a: number, b: number) =>
  getJson<ComparisonReport>(`/api/compare?a=${a}&b=${b}`);

export type RunOutcome =
  | { ok: true; version: number }
  | { ok: false; status: number; error: RunError };

export async function postRun(source: string): Promise<RunOutcome> {
  const resp = await fetch("/api/run", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify({ source }),
  });
  if (resp.ok) {
    const payload = (await resp.json()) as RunResponse;
    return { ok: true, version: payload.version };
  }
  const error = (await resp.json()) as RunError;
  return { ok: false, status: resp.status, error };
}
