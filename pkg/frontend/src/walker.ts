import { createWriteStream } from 'node:fs';
import { once } from 'node:events';

import { AliasTable, buildAlias, sampleAlias } from './alias.js';
import { Graph, hasEdge } from './graph.js';
import { Sfc32, streamSeed } from './rng.js';

export type Strategy = 'deepwalk' | 'node2vec';

export interface WalkJob {
  walks: number;
  length: number;
  strategy: Strategy;
  p: number;
  q: number;
  seed: number;
}

export interface WalkStats {
  nodes: number;
  edges: number;
  walks: number;
  steps: number;
  elapsedMs: number;
  stepsPerSec: number;
}

export function validateJob(job: WalkJob): void {
  if (job.walks < 1) throw new Error('--walks must be >= 1');
  if (job.length < 2) throw new Error('--length must be >= 2');
  if (!(job.p > 0) || !(job.q > 0)) throw new Error('--p and --q must be positive');
  if (job.strategy !== 'deepwalk' && job.strategy !== 'node2vec') {
    throw new Error(`unknown strategy ${JSON.stringify(job.strategy)}`);
  }
}

function firstOrderTables(g: Graph): (AliasTable | null)[] {
  const tables: (AliasTable | null)[] = new Array(g.nodeCount).fill(null);
  for (let u = 0; u < g.nodeCount; u++) {
    const lo = g.offsets[u];
    const hi = g.offsets[u + 1];
    if (hi > lo) {
      tables[u] = buildAlias(g.weights.subarray(lo, hi));
    }
  }
  return tables;
}

/**
 * Unnormalized node2vec transition weights out of `cur` given the previous
 * node: weight / p back to prev, plain weight to prev's in-neighbors, and
 * weight / q elsewhere. Exposed for distribution tests.
 */
export function node2vecWeights(
  g: Graph,
  prev: number,
  cur: number,
  p: number,
  q: number,
): Float64Array {
  const lo = g.offsets[cur];
  const hi = g.offsets[cur + 1];
  const out = new Float64Array(hi - lo);
  for (let k = lo; k < hi; k++) {
    const x = g.neighbors[k];
    const w = g.weights[k];
    if (x === prev) out[k - lo] = w / p;
    else if (hasEdge(g, x, prev)) out[k - lo] = w;
    else out[k - lo] = w / q;
  }
  return out;
}

function sampleCumulative(weights: Float64Array, u: number): number {
  let total = 0;
  for (let i = 0; i < weights.length; i++) total += weights[i];
  let acc = 0;
  const target = u * total;
  for (let i = 0; i < weights.length; i++) {
    acc += weights[i];
    if (target < acc) return i;
  }
  return weights.length - 1;
}

/** Generate walks for one start node; returns walk strings without newlines. */
export function walksForNode(
  g: Graph,
  tables: (AliasTable | null)[],
  start: number,
  job: WalkJob,
): { lines: string[]; steps: number } {
  const rng = new Sfc32(streamSeed(job.seed, g.ids[start]));
  const lines: string[] = [];
  let steps = 0;
  const secondOrder = job.strategy === 'node2vec';
  for (let r = 0; r < job.walks; r++) {
    const walk: number[] = [start];
    let prev = -1;
    while (walk.length < job.length) {
      const cur = walk[walk.length - 1];
      const lo = g.offsets[cur];
      const hi = g.offsets[cur + 1];
      if (hi === lo) break;
      let next: number;
      if (secondOrder && prev !== -1) {
        const weights = node2vecWeights(g, prev, cur, job.p, job.q);
        next = g.neighbors[lo + sampleCumulative(weights, rng.nextFloat())];
      } else {
        next = g.neighbors[lo + sampleAlias(tables[cur]!, rng.nextFloat(), rng.nextFloat())];
      }
      prev = cur;
      walk.push(next);
      steps++;
    }
    lines.push(walk.map((i) => g.ids[i]).join(' '));
  }
  return { lines, steps };
}

/**
 * Sample walks for every node (sorted-id order, so output is append-ordered
 * by start node and deterministic for a fixed seed) and write one walk per
 * line to `outPath`.
 */
export async function sampleWalks(g: Graph, job: WalkJob, outPath: string): Promise<WalkStats> {
  validateJob(job);
  const started = process.hrtime.bigint();
  const tables = firstOrderTables(g);
  const stream = createWriteStream(outPath, { encoding: 'utf8' });
  let steps = 0;
  let walkCount = 0;
  for (let u = 0; u < g.nodeCount; u++) {
    const { lines, steps: nodeSteps } = walksForNode(g, tables, u, job);
    steps += nodeSteps;
    walkCount += lines.length;
    if (!stream.write(lines.join('\n') + '\n')) {
      await once(stream, 'drain');
    }
  }
  stream.end();
  await once(stream, 'finish');
  const elapsedMs = Number(process.hrtime.bigint() - started) / 1e6;
  return {
    nodes: g.nodeCount,
    edges: g.edgeCount,
    walks: walkCount,
    steps,
    elapsedMs,
    stepsPerSec: elapsedMs > 0 ? (steps * 1000) / elapsedMs : 0,
  };
}
