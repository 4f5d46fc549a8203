import assert from 'node:assert/strict';
import { test } from 'node:test';

import { aliasMass, buildAlias, sampleAlias } from '../src/alias.js';
import { SplitMix64 } from '../src/rng.js';

test('two-outcome table reproduces {0.75, 0.25} exactly', () => {
  const mass = aliasMass(buildAlias([3, 1]));
  assert.equal(mass[0], 0.75);
  assert.equal(mass[1], 0.25);
});

test('equal weights give the uniform distribution', () => {
  const mass = aliasMass(buildAlias([1, 1, 1, 1]));
  for (const m of mass) assert.equal(m, 0.25);
});

test('random ten-weight table mass matches normalized weights within 1e-12', () => {
  const rng = new SplitMix64(42n);
  for (let round = 0; round < 50; round++) {
    const weights = Array.from({ length: 10 }, () => 0.05 + rng.nextFloat() * 5);
    const total = weights.reduce((a, b) => a + b, 0);
    const mass = aliasMass(buildAlias(weights));
    for (let i = 0; i < weights.length; i++) {
      assert.ok(Math.abs(mass[i] - weights[i] / total) <= 1e-12,
        `outcome ${i}: |${mass[i]} - ${weights[i] / total}| > 1e-12`);
    }
  }
});

test('empty and non-positive weights are rejected', () => {
  assert.throws(() => buildAlias([]), /at least one/);
  assert.throws(() => buildAlias([1, 0]), /positive/);
  assert.throws(() => buildAlias([2, -1]), /positive/);
});

test('empirical sampling agrees with the analytic mass', () => {
  const table = buildAlias([3, 1, 5, 2, 1]);
  const mass = aliasMass(table);
  const rng = new SplitMix64(7n);
  const counts = new Array(5).fill(0);
  const draws = 200_000;
  for (let i = 0; i < draws; i++) {
    counts[sampleAlias(table, rng.nextFloat(), rng.nextFloat())]++;
  }
  for (let i = 0; i < 5; i++) {
    assert.ok(Math.abs(counts[i] / draws - mass[i]) < 0.01);
  }
});
