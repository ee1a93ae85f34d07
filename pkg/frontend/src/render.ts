// Pure HTML/SVG string builders: every view is a function of API payloads,
// so the whole surface can be snapshot-tested without a browser.

import { layoutDag } from "./layout.js";
import type { Selection } from "./selection.js";
import type {
  ComparisonReport,
  DagView,
  MetricPoint,
  MetricsSeries,
  VersionSummary,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmtMetric(value: number): string {
  return Number.isInteger(value) ? value.toFixed(1) : String(value);
}

function fmtDuration(us: number): string {
  if (us >= 1_000_000) return `${(us / 1_000_000).toFixed(2)} s`;
  if (us >= 1_000) return `${(us / 1_000).toFixed(1)} ms`;
  return `${us} us`;
}

function fmtBytes(bytes: number): string {
  if (bytes >= 1 << 20) return `${(bytes / (1 << 20)).toFixed(1)} MiB`;
  if (bytes >= 1 << 10) return `${(bytes / (1 << 10)).toFixed(1)} KiB`;
  return `${bytes} B`;
}

// -- versions ---------------------------------------------------------------

export function bestVersionId(
  versions: VersionSummary[],
  metric: string,
): number | null {
  let best: VersionSummary | null = null;
  for (const v of versions) {
    const value = v.metrics[metric];
    if (value === undefined) continue;
    if (best === null || value > best.metrics[metric]) best = v;
  }
  return best ? best.id : null;
}

export function renderVersions(
  versions: VersionSummary[],
  primaryMetric: string | null,
): string {
  const latest = versions.length ? Math.max(...versions.map((v) => v.id)) : null;
  const best = primaryMetric ? bestVersionId(versions, primaryMetric) : null;
  const shortcuts = [
    latest !== null
      ? `<button class="shortcut" data-action="goto" data-version="${latest}">latest: v${latest}</button>`
      : "",
    best !== null && primaryMetric
      ? `<button class="shortcut" data-action="goto" data-version="${best}">best ${escapeHtml(primaryMetric)}: v${best}</button>`
      : "",
  ]
    .filter(Boolean)
    .join("\n");

  const rows = [...versions]
    .sort((a, b) => b.id - a.id)
    .map((v) => {
      const metrics = Object.entries(v.metrics)
        .sort(([a], [b]) => (a < b ? -1 : 1))
        .map(([k, val]) => `${escapeHtml(k)}=${fmtMetric(val)}`)
        .join(" ");
      const changes: string[] = [];
      if (v.diff.added.length) changes.push(`+${v.diff.added.length}`);
      if (v.diff.removed.length) changes.push(`-${v.diff.removed.length}`);
      if (v.diff.modified.length) changes.push(`~${v.diff.modified.join(" ~")}`);
      return `<li class="version-row" data-version="${v.id}">
  <span class="vid">v${v.id}</span>
  <span class="parent">${v.parent_id === null ? "root" : `from v${v.parent_id}`}</span>
  <span class="metrics">${metrics}</span>
  <span class="changes">${escapeHtml(changes.join(" ") || "no decl changes")}</span>
  <span class="runtime">${fmtDuration(v.wall_clock_us)}</span>
  <button data-action="checkout" data-version="${v.id}">checkout</button>
</li>`;
    })
    .join("\n");
  return `<div class="shortcuts">\n${shortcuts}\n</div>\n<ul class="versions">\n${rows}\n</ul>`;
}

// -- DAG --------------------------------------------------------------------

const NODE_W = 132;
const NODE_H = 40;
const GAP_X = 48;
const GAP_Y = 28;

export function renderDagSvg(dag: DagView): string {
  const names = dag.nodes.map((n) => n.name);
  const positions = layoutDag(names, dag.edges);
  const coord = (name: string) => {
    const p = positions.get(name)!;
    return {
      x: p.layer * (NODE_W + GAP_X) + 8,
      y: p.slot * (NODE_H + GAP_Y) + 8,
    };
  };

  const maxLayer = Math.max(...[...positions.values()].map((p) => p.layer), 0);
  const maxSlot = Math.max(...[...positions.values()].map((p) => p.slot), 0);
  const width = (maxLayer + 1) * (NODE_W + GAP_X) + 16;
  const height = (maxSlot + 1) * (NODE_H + GAP_Y) + 16;

  const edges = dag.edges
    .map(([from, to]) => {
      const a = coord(from);
      const b = coord(to);
      return `<line class="edge" x1="${a.x + NODE_W}" y1="${a.y + NODE_H / 2}" x2="${b.x}" y2="${b.y + NODE_H / 2}" />`;
    })
    .join("\n");

  const nodes = dag.nodes
    .map((n) => {
      const { x, y } = coord(n.name);
      const grayed = n.state === "prune" || n.state === "static_prune";
      const classes = ["node", `state-${n.state}`, `kind-${n.kind}`];
      if (grayed) classes.push("grayed");
      if (n.materialized) classes.push("materialized");
      const badges: string[] = [];
      if (n.state === "load") {
        badges.push(`<tspan class="badge badge-load">[from disk]</tspan>`);
      }
      if (n.materialized) {
        badges.push(`<tspan class="badge badge-materialized">[saved]</tspan>`);
      }
      const tooltip = `${n.name}: ${n.state}, ${fmtDuration(n.duration_us)}, ${fmtBytes(n.bytes)}`;
      return `<g class="${classes.join(" ")}" data-node="${escapeHtml(n.name)}">
  <title>${escapeHtml(tooltip)}</title>
  <rect x="${x}" y="${y}" width="${NODE_W}" height="${NODE_H}" rx="6" />
  <text x="${x + 8}" y="${y + 17}" class="label">${escapeHtml(n.name)}</text>
  <text x="${x + 8}" y="${y + 32}" class="meta">${badges.join(" ") || escapeHtml(n.state)}</text>
</g>`;
    })
    .join("\n");

  return `<svg class="dag" viewBox="0 0 ${width} ${height}" width="${width}" height="${height}">\n${edges}\n${nodes}\n</svg>`;
}

// -- metrics ----------------------------------------------------------------

const CHART_W = 420;
const CHART_H = 160;
const PAD = 28;

export function renderMetricChart(
  name: string,
  points: MetricPoint[],
  selection: Selection,
): string {
  if (!points.length) {
    return `<svg class="chart" data-metric="${escapeHtml(name)}"></svg>`;
  }
  const xs = points.map((p) => p.version);
  const ys = points.map((p) => p.value);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const sx = (v: number) =>
    xMax === xMin
      ? CHART_W / 2
      : PAD + ((v - xMin) / (xMax - xMin)) * (CHART_W - 2 * PAD);
  const sy = (v: number) =>
    yMax === yMin
      ? CHART_H / 2
      : CHART_H - PAD - ((v - yMin) / (yMax - yMin)) * (CHART_H - 2 * PAD);

  const path = points
    .map((p, i) => `${i ? "L" : "M"}${sx(p.version).toFixed(1)},${sy(p.value).toFixed(1)}`)
    .join(" ");
  const circles = points
    .map((p) => {
      const selected = selection.points.includes(p.version);
      return `<circle class="point${selected ? " selected" : ""}" data-version="${p.version}" cx="${sx(p.version).toFixed(1)}" cy="${sy(p.value).toFixed(1)}" r="5"><title>v${p.version}: ${fmtMetric(p.value)}</title></circle>`;
    })
    .join("\n");
  return `<svg class="chart" data-metric="${escapeHtml(name)}" viewBox="0 0 ${CHART_W} ${CHART_H}" width="${CHART_W}" height="${CHART_H}">
<text class="chart-title" x="${PAD}" y="16">${escapeHtml(name)}</text>
<path class="line" d="${path}" />
${circles}
</svg>`;
}

export function renderMetricsPanel(series: MetricsSeries, selection: Selection): string {
  const charts = Object.keys(series)
    .sort()
    .map((name) => renderMetricChart(name, series[name], selection))
    .join("\n");
  return `<div class="metrics-panel">\n${charts}\n</div>`;
}

// -- comparison ---------------------------------------------------------------

export function renderComparison(report: ComparisonReport): string {
  const diffLines = report.source_diff
    .map((line) => {
      let cls = "ctx";
      if (line.startsWith("+++") || line.startsWith("---")) cls = "file";
      else if (line.startsWith("@@")) cls = "hunk";
      else if (line.startsWith("+")) cls = "add";
      else if (line.startsWith("-")) cls = "del";
      return `<div class="diff-line ${cls}">${escapeHtml(line)}</div>`;
    })
    .join("\n");

  const decl = report.decl_diff;
  const declBits = [
    ...decl.added.map((n) => `<span class="decl add">+${escapeHtml(n)}</span>`),
    ...decl.removed.map((n) => `<span class="decl del">-${escapeHtml(n)}</span>`),
    ...decl.modified.map((n) => `<span class="decl mod">~${escapeHtml(n)}</span>`),
  ].join(" ");

  const dagBits = [
    ...report.dag_delta.added.map((n) => `<li class="add">node ${escapeHtml(n)} added</li>`),
    ...report.dag_delta.removed.map(
      (n) => `<li class="del">node ${escapeHtml(n)} removed</li>`,
    ),
    ...report.dag_delta.state_changed.map(
      (c) =>
        `<li class="mod">node ${escapeHtml(c.name)}: ${escapeHtml(c.a)} &rarr; ${escapeHtml(c.b)}</li>`,
    ),
  ].join("\n");

  const metricRows = Object.entries(report.metric_deltas)
    .sort(([a], [b]) => (a < b ? -1 : 1))
    .map(([name, d]) => {
      const left = d.a === null ? "-" : fmtMetric(d.a);
      const right = d.b === null ? "-" : fmtMetric(d.b);
      const delta =
        d.delta === null
          ? ""
          : ` <span class="${d.delta >= 0 ? "add" : "del"}">(${d.delta >= 0 ? "+" : ""}${fmtMetric(d.delta)})</span>`;
      return `<li>${escapeHtml(name)}: ${left} &rarr; ${right}${delta}</li>`;
    })
    .join("\n");

  return `<div class="comparison" data-a="${report.a}" data-b="${report.b}">
<h3>version ${report.a} vs version ${report.b}</h3>
<div class="decl-changes">${declBits || "no declaration changes"}</div>
<ul class="dag-delta">\n${dagBits || "<li>no node changes</li>"}\n</ul>
<ul class="metric-deltas">\n${metricRows || "<li>no metrics</li>"}\n</ul>
<div class="source-diff">\n${diffLines}\n</div>
</div>`;
}

// -- editor feedback -----------------------------------------------------------

export function renderParseError(error: string, line: number | null | undefined): string {
  const where = line == null ? "" : ` on line ${line}`;
  return `<div class="parse-error" data-line="${line ?? ""}">parse error${where}: ${escapeHtml(error)}</div>`;
}
