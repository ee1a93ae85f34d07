// Deterministic layered DAG layout: longest-path layering, then a fixed
// number of barycenter ordering sweeps within layers.

export interface NodePosition {
  layer: number;
  slot: number;
}

export function layoutDag(
  names: string[],
  edges: [string, string][],
): Map<string, NodePosition> {
  const parents = new Map<string, string[]>(names.map((n) => [n, []]));
  const children = new Map<string, string[]>(names.map((n) => [n, []]));
  for (const [from, to] of edges) {
    parents.get(to)?.push(from);
    children.get(from)?.push(to);
  }

  const layer = new Map<string, number>();
  for (const name of names) {
    // names arrive topologically sorted, so parents are already layered
    const ps = parents.get(name) ?? [];
    layer.set(name, ps.length ? Math.max(...ps.map((p) => layer.get(p)!)) + 1 : 0);
  }

  const byLayer = new Map<number, string[]>();
  for (const name of names) {
    const l = layer.get(name)!;
    if (!byLayer.has(l)) byLayer.set(l, []);
    byLayer.get(l)!.push(name);
  }

  const slot = new Map<string, number>();
  for (const members of byLayer.values()) {
    members.forEach((n, i) => slot.set(n, i));
  }

  const layerCount = byLayer.size;
  for (let sweep = 0; sweep < 4; sweep++) {
    const downward = sweep % 2 === 0;
    for (let l = 0; l < layerCount; l++) {
      const current = byLayer.get(downward ? l : layerCount - 1 - l);
      if (!current || current.length < 2) continue;
      const neighborOf = (n: string) =>
        downward ? parents.get(n) ?? [] : children.get(n) ?? [];
      const keyed = current.map((n, i) => {
        const ns = neighborOf(n);
        const bary = ns.length
          ? ns.reduce((acc, m) => acc + (slot.get(m) ?? 0), 0) / ns.length
          : slot.get(n)!;
        return { n, bary, tie: i };
      });
      keyed.sort((a, b) => a.bary - b.bary || a.tie - b.tie);
      keyed.forEach((k, i) => slot.set(k.n, i));
      byLayer.set(
        downward ? l : layerCount - 1 - l,
        keyed.map((k) => k.n),
      );
    }
  }

  const out = new Map<string, NodePosition>();
  for (const name of names) {
    out.set(name, { layer: layer.get(name)!, slot: slot.get(name)! });
  }
  return out;
}
