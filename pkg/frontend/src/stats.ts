/** Per-algorithm aggregation of sweep rows into mean/std series. */

import type { ResultRow } from './csv.js';

export interface SeriesPoint {
  x: number;
  mean: number;
  std: number;
  trials: number;
}

export interface Series {
  algorithm: string;
  points: SeriesPoint[];
}

export type Metric = 'ratio' | 'preempt_per_job';

function sampleStd(values: number[], mean: number): number {
  if (values.length < 2) return 0;
  const ss = values.reduce((acc, v) => acc + (v - mean) ** 2, 0);
  return Math.sqrt(ss / (values.length - 1));
}

/**
 * Group rows by algorithm and x column, dropping rows whose metric is NaN
 * (error rows).  Algorithms come back in alphabetical order; x values
 * ascending.
 */
export function aggregate(
  rows: ResultRow[],
  xField: keyof ResultRow,
  metric: Metric,
): Series[] {
  const byAlgorithm = new Map<string, Map<number, number[]>>();
  for (const row of rows) {
    const value = row[metric];
    const x = Number(row[xField]);
    if (!Number.isFinite(value) || !Number.isFinite(x)) continue;
    let perX = byAlgorithm.get(row.algorithm);
    if (!perX) {
      perX = new Map();
      byAlgorithm.set(row.algorithm, perX);
    }
    const bucket = perX.get(x);
    if (bucket) bucket.push(value);
    else perX.set(x, [value]);
  }
  const algorithms = [...byAlgorithm.keys()].sort();
  return algorithms.map((algorithm) => {
    const perX = byAlgorithm.get(algorithm)!;
    const xs = [...perX.keys()].sort((a, b) => a - b);
    const points = xs.map((x) => {
      const values = perX.get(x)!;
      const mean = values.reduce((a, b) => a + b, 0) / values.length;
      return { x, mean, std: sampleStd(values, mean), trials: values.length };
    });
    return { algorithm, points };
  });
}
