// Client-side mirrors of the workspace API payloads.

export interface DeclDiff {
  added: string[];
  removed: string[];
  modified: string[];
}

export interface VersionSummary {
  id: number;
  parent_id: number | null;
  created_at: number;
  metrics: Record<string, number>;
  diff: DeclDiff;
  objective_us: number;
  wall_clock_us: number;
}

export interface VersionDetail extends VersionSummary {
  source: string;
}

export type NodeState = "load" | "compute" | "prune" | "static_prune";

export interface DagNodeView {
  name: string;
  kind: string;
  state: NodeState;
  duration_us: number;
  bytes: number;
  materialized: boolean;
}

export interface DagView {
  version: number;
  nodes: DagNodeView[];
  edges: [string, string][];
}

export interface MetricPoint {
  version: number;
  value: number;
}

export type MetricsSeries = Record<string, MetricPoint[]>;

export interface MetricDelta {
  a: number | null;
  b: number | null;
  delta: number | null;
}

export interface ComparisonReport {
  a: number;
  b: number;
  source_diff: string[];
  decl_diff: DeclDiff;
  dag_delta: {
    added: string[];
    removed: string[];
    state_changed: { name: string; a: string; b: string }[];
  };
  metric_deltas: Record<string, MetricDelta>;
}

export interface RunResponse {
  version: number;
}

export interface RunError {
  error: string;
  line?: number | null;
}
