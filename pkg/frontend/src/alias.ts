/**
 * Vose alias tables for constant-time weighted sampling. Construction is
 * linear in the number of outcomes and the table reproduces the normalized
 * weight vector exactly (up to float64 arithmetic on the scaled weights).
 */
export interface AliasTable {
  prob: Float64Array;
  alias: Int32Array;
}

export function buildAlias(weights: ArrayLike<number>): AliasTable {
  const n = weights.length;
  if (n === 0) {
    throw new Error('alias table requires at least one weight');
  }
  let total = 0;
  for (let i = 0; i < n; i++) {
    if (!(weights[i] > 0)) {
      throw new Error(`weights must be positive, got ${weights[i]} at index ${i}`);
    }
    total += weights[i];
  }

  const scaled = new Float64Array(n);
  for (let i = 0; i < n; i++) scaled[i] = (weights[i] * n) / total;

  const prob = new Float64Array(n);
  const alias = new Int32Array(n);
  const small: number[] = [];
  const large: number[] = [];
  for (let i = 0; i < n; i++) {
    alias[i] = i;
    (scaled[i] < 1 ? small : large).push(i);
  }

  while (small.length && large.length) {
    const s = small.pop()!;
    const l = large.pop()!;
    prob[s] = scaled[s];
    alias[s] = l;
    scaled[l] = scaled[l] + scaled[s] - 1;
    (scaled[l] < 1 ? small : large).push(l);
  }
  for (const i of [...small, ...large]) prob[i] = 1;

  return { prob, alias };
}

/** Sample one outcome index from two independent uniforms in [0, 1). */
export function sampleAlias(table: AliasTable, uColumn: number, uCoin: number): number {
  const i = Math.min(Math.floor(uColumn * table.prob.length), table.prob.length - 1);
  return uCoin < table.prob[i] ? i : table.alias[i];
}

/**
 * Exact sampling distribution implied by the table: outcome i is drawn with
 * probability (prob[i] + sum of (1 - prob[j]) over j aliased to i) / n.
 */
export function aliasMass(table: AliasTable): Float64Array {
  const n = table.prob.length;
  const mass = new Float64Array(n);
  for (let i = 0; i < n; i++) {
    mass[i] += table.prob[i] / n;
    if (table.prob[i] < 1) {
      mass[table.alias[i]] += (1 - table.prob[i]) / n;
    }
  }
  return mass;
}
