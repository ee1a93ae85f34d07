// Metric-chart point selection: one point loads a version, two points open
// the comparison view. Selecting a third point restarts from that point.

export interface Selection {
  points: number[];
}

export const emptySelection: Selection = { points: [] };

export function togglePoint(sel: Selection, version: number): Selection {
  if (sel.points.includes(version)) {
    return { points: sel.points.filter((v) => v !== version) };
  }
  if (sel.points.length >= 2) {
    return { points: [version] };
  }
  return { points: [...sel.points, version] };
}

export type SelectionAction =
  | { kind: "none" }
  | { kind: "load"; version: number }
  | { kind: "compare"; a: number; b: number };

export function selectionAction(sel: Selection): SelectionAction {
  if (sel.points.length === 1) {
    return { kind: "load", version: sel.points[0] };
  }
  if (sel.points.length === 2) {
    const [a, b] = [...sel.points].sort((x, y) => x - y);
    return { kind: "compare", a, b };
  }
  return { kind: "none" };
}
