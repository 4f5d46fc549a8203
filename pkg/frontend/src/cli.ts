#!/usr/bin/env node
import { Command } from 'commander';

import { loadEdgeList } from './graph.js';
import { sampleWalks, Strategy } from './walker.js';

const program = new Command();

program
  .name('walkgen')
  .description('Sample random walks from an exported `src dst weight` edge list')
  .requiredOption('--graph <path>', 'edge list file')
  .requiredOption('--out <path>', 'output walk file (one walk per line)')
  .option('--walks <r>', 'walks per start node', '10')
  .option('--length <l>', 'maximum walk length', '80')
  .option('--strategy <name>', 'deepwalk | node2vec', 'deepwalk')
  .option('--p <value>', 'node2vec return parameter', '1')
  .option('--q <value>', 'node2vec in-out parameter', '1')
  .option('--seed <value>', 'stream seed', '0');

export async function main(argv: string[]): Promise<number> {
  program.parse(argv, { from: 'user' });
  const opts = program.opts();
  try {
    const graph = loadEdgeList(opts.graph);
    const stats = await sampleWalks(
      graph,
      {
        walks: parseInt(opts.walks, 10),
        length: parseInt(opts.length, 10),
        strategy: opts.strategy as Strategy,
        p: parseFloat(opts.p),
        q: parseFloat(opts.q),
        seed: parseInt(opts.seed, 10),
      },
      opts.out,
    );
    process.stderr.write(JSON.stringify(stats) + '\n');
    return 0;
  } catch (err) {
    process.stderr.write(`walkgen: ${err instanceof Error ? err.message : err}\n`);
    return 1;
  }
}

import { pathToFileURL } from 'node:url';

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
