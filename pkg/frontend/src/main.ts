// DOM wiring: holds the only client-side state (editor text, chart point
// selection, current version) and re-renders panels from API responses.

import {
  fetchComparison,
  fetchDag,
  fetchMetrics,
  fetchVersion,
  fetchVersions,
  postRun,
} from "./api.js";
import {
  renderComparison,
  renderDagSvg,
  renderMetricsPanel,
  renderParseError,
  renderVersions,
} from "./render.js";
import { emptySelection, selectionAction, togglePoint, type Selection } from "./selection.js";

const $ = (id: string) => document.getElementById(id)!;

let selection: Selection = emptySelection;
let runInFlight = false;

async function refreshVersions(): Promise<void> {
  const versions = await fetchVersions();
  const metricNames = new Set<string>();
  versions.forEach((v) => Object.keys(v.metrics).forEach((m) => metricNames.add(m)));
  const primary = [...metricNames].sort()[0] ?? null;
  $("versions").innerHTML = renderVersions(versions, primary);
}

async function refreshMetrics(): Promise<void> {
  const series = await fetchMetrics();
  $("metrics").innerHTML = renderMetricsPanel(series, selection);
}

async function showVersion(id: number): Promise<void> {
  const dag = await fetchDag(id);
  $("dag").innerHTML = `<h3>execution plan, version ${id}</h3>` + renderDagSvg(dag);
}

async function loadIntoEditor(id: number): Promise<void> {
  const detail = await fetchVersion(id);
  ($("source") as HTMLTextAreaElement).value = detail.source;
  $("editor-status").textContent = `loaded version ${id}`;
  await showVersion(id);
}

async function openComparison(a: number, b: number): Promise<void> {
  const report = await fetchComparison(a, b);
  $("comparison").innerHTML = renderComparison(report);
  $("comparison").scrollIntoView({ behavior: "smooth" });
}

async function runCurrent(): Promise<void> {
  if (runInFlight) return;
  runInFlight = true;
  const button = $("run") as HTMLButtonElement;
  button.disabled = true;
  $("editor-status").textContent = "running...";
  try {
    const outcome = await postRun(($("source") as HTMLTextAreaElement).value);
    if (outcome.ok) {
      $("editor-status").textContent = `recorded version ${outcome.version}`;
      await Promise.all([refreshVersions(), refreshMetrics()]);
      await showVersion(outcome.version);
    } else if (outcome.status === 422) {
      $("editor-status").innerHTML = renderParseError(
        outcome.error.error,
        outcome.error.line,
      );
    } else {
      $("editor-status").textContent = `run failed: ${outcome.error.error}`;
    }
  } finally {
    runInFlight = false;
    button.disabled = false;
  }
}

function wire(): void {
  $("run").addEventListener("click", () => void runCurrent());

  $("versions").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const versionAttr = target.dataset.version ?? target.closest<HTMLElement>("[data-version]")?.dataset.version;
    if (!versionAttr) return;
    const id = Number(versionAttr);
    if (target.dataset.action === "checkout") {
      void loadIntoEditor(id);
    } else {
      void showVersion(id);
    }
  });

  $("metrics").addEventListener("click", (ev) => {
    const target = (ev.target as HTMLElement).closest<SVGElement>("circle.point");
    if (!target?.dataset.version) return;
    selection = togglePoint(selection, Number(target.dataset.version));
    void refreshMetrics();
    const action = selectionAction(selection);
    if (action.kind === "load") {
      void loadIntoEditor(action.version);
    } else if (action.kind === "compare") {
      void openComparison(action.a, action.b);
    }
  });

  void refreshVersions();
  void refreshMetrics();
  void fetchVersions().then((versions) => {
    if (versions.length) {
      const latest = Math.max(...versions.map((v) => v.id));
      void loadIntoEditor(latest);
    }
  });
}

document.addEventListener("DOMContentLoaded", wire);
