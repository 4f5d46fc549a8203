import { readFileSync } from 'node:fs';

/**
 * Compressed adjacency over an exported `src dst weight` edge list.
 * Node indices follow the lexicographic order of node ids, and each node's
 * out-neighbors are sorted by neighbor index, so every derived structure is
 * reproducible byte for byte.
 */
export interface Graph {
  ids: string[];
  index: Map<string, number>;
  offsets: Int32Array;
  neighbors: Int32Array;
  weights: Float64Array;
  nodeCount: number;
  edgeCount: number;
}

interface RawEdge {
  src: string;
  dst: string;
  weight: number;
}

export function parseEdgeList(text: string, source = '<edge list>'): Graph {
  const edges: RawEdge[] = [];
  const nodeSet = new Set<string>();
  const lines = text.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const parts = line.split(/\s+/);
    if (parts.length !== 3) {
      throw new Error(`${source}: line ${i + 1}: expected 'src dst weight', got ${JSON.stringify(lines[i])}`);
    }
    const weight = Number(parts[2]);
    if (!Number.isFinite(weight)) {
      throw new Error(`${source}: line ${i + 1}: non-numeric weight ${JSON.stringify(parts[2])}`);
    }
    if (weight <= 0) {
      throw new Error(`${source}: line ${i + 1}: weight must be positive, got ${parts[2]}`);
    }
    edges.push({ src: parts[0], dst: parts[1], weight });
    nodeSet.add(parts[0]);
    nodeSet.add(parts[1]);
  }

  const ids = [...nodeSet].sort();
  const index = new Map(ids.map((id, i) => [id, i]));
  const degree = new Int32Array(ids.length);
  for (const e of edges) degree[index.get(e.src)!]++;

  const offsets = new Int32Array(ids.length + 1);
  for (let i = 0; i < ids.length; i++) offsets[i + 1] = offsets[i] + degree[i];

  const neighbors = new Int32Array(edges.length);
  const weights = new Float64Array(edges.length);
  const cursor = Int32Array.from(offsets.subarray(0, ids.length));
  for (const e of edges) {
    const s = index.get(e.src)!;
    neighbors[cursor[s]] = index.get(e.dst)!;
    weights[cursor[s]] = e.weight;
    cursor[s]++;
  }
  // sort each adjacency slice by neighbor index
  for (let u = 0; u < ids.length; u++) {
    const lo = offsets[u];
    const hi = offsets[u + 1];
    const order = Array.from({ length: hi - lo }, (_, k) => k).sort(
      (a, b) => neighbors[lo + a] - neighbors[lo + b],
    );
    const nbr = Array.from(neighbors.subarray(lo, hi));
    const wts = Array.from(weights.subarray(lo, hi));
    for (let k = 0; k < order.length; k++) {
      neighbors[lo + k] = nbr[order[k]];
      weights[lo + k] = wts[order[k]];
    }
  }

  return {
    ids,
    index,
    offsets,
    neighbors,
    weights,
    nodeCount: ids.length,
    edgeCount: edges.length,
  };
}

export function loadEdgeList(path: string): Graph {
  return parseEdgeList(readFileSync(path, 'utf8'), path);
}

/** Binary search for edge u -> v. */
export function hasEdge(g: Graph, u: number, v: number): boolean {
  let lo = g.offsets[u];
  let hi = g.offsets[u + 1] - 1;
  while (lo <= hi) {
    const mid = (lo + hi) >> 1;
    if (g.neighbors[mid] === v) return true;
    if (g.neighbors[mid] < v) lo = mid + 1;
    else hi = mid - 1;
  }
  return false;
}
