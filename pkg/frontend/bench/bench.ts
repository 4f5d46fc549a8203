/**
 * Throughput benchmark on a synthetic graph (default 100k nodes / ~1M edges).
 * Reports steps/second; compare against the reference walker's own timing.
 */
import { mkdtempSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { parseEdgeList } from '../src/graph.js';
import { sampleWalks } from '../src/walker.js';
import { SplitMix64 } from '../src/rng.js';

const nodes = Number(process.env.BENCH_NODES ?? 100_000);
const edges = Number(process.env.BENCH_EDGES ?? 1_000_000);
const walks = Number(process.env.BENCH_WALKS ?? 10);
const length = Number(process.env.BENCH_LENGTH ?? 80);

const rng = new SplitMix64(12345n);
const lines: string[] = [];
// ring first so every node id appears and the node count is exact
for (let u = 0; u < Math.min(nodes, edges); u++) {
  lines.push(`u${u} u${(u + 1) % nodes} 1`);
}
for (let e = lines.length; e < edges; e++) {
  const u = Math.floor(rng.nextFloat() * nodes);
  let v = Math.floor(rng.nextFloat() * nodes);
  if (v === u) v = (u + 1) % nodes;
  const w = 1 + Math.floor(rng.nextFloat() * 4);
  lines.push(`u${u} u${v} ${w}`);
}
const graph = parseEdgeList(lines.join('\n'));
const out = join(mkdtempSync(join(tmpdir(), 'walkgen-bench-')), 'walks.txt');

const stats = await sampleWalks(
  graph,
  { walks, length, strategy: 'deepwalk', p: 1, q: 1, seed: 0 },
  out,
);
console.log(JSON.stringify(stats, null, 2));
