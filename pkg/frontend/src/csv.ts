/**
 * Reader for the sweep result CSV emitted by the presched bench harness.
 *
 * The schema is fixed; see docs/formats.md in the main package. Values
 * never contain commas or quotes, so a plain split is exact.
 */

export const EXPECTED_HEADER = [
  'algorithm',
  'axis',
  'axis_value',
  'seed',
  'total',
  'opt',
  'ratio',
  'preempt_per_job',
  'migrate_per_job',
  'queue_moves_per_job',
  'd_bench',
  'runtime_ms',
];

export interface ResultRow {
  algorithm: string;
  axis: string;
  axis_value: number;
  seed: number;
  total: number;
  opt: number;
  ratio: number;
  preempt_per_job: number;
  migrate_per_job: number;
  queue_moves_per_job: number;
  d_bench: number;
  runtime_ms: number;
}

export class SchemaMismatch extends Error {}
export class EmptyInput extends Error {}

export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((line) => line.trim() !== '');
  if (lines.length === 0) {
    throw new EmptyInput('CSV file has no content');
  }
  const header = lines[0].split(',');
  if (
    header.length !== EXPECTED_HEADER.length ||
    header.some((col, i) => col !== EXPECTED_HEADER[i])
  ) {
    throw new SchemaMismatch(
      `unexpected header: ${lines[0]} (want ${EXPECTED_HEADER.join(',')})`,
    );
  }
  if (lines.length === 1) {
    throw new EmptyInput('CSV file has a header but no rows');
  }
  const rows: ResultRow[] = [];
  for (const line of lines.slice(1)) {
    const cols = line.split(',');
    if (cols.length !== EXPECTED_HEADER.length) {
      throw new SchemaMismatch(`row has ${cols.length} columns: ${line}`);
    }
    rows.push({
      algorithm: cols[0],
      axis: cols[1],
      axis_value: Number(cols[2]),
      seed: Number(cols[3]),
      total: Number(cols[4]),
      opt: Number(cols[5]),
      ratio: Number(cols[6]),
      preempt_per_job: Number(cols[7]),
      migrate_per_job: Number(cols[8]),
      queue_moves_per_job: Number(cols[9]),
      d_bench: Number(cols[10]),
      runtime_ms: Number(cols[11]),
    });
  }
  return rows;
}
