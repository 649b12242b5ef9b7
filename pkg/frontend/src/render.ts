/**
 * Render a presched sweep CSV as an SVG line chart.
 *
 * Usage:
 *   node dist/render.js --csv results.csv --x axis_value --y ratio --logx --out fig.svg
 *
 * --y is `ratio` or `preempt_per_job`; one line (plus mean +/- std band)
 * per algorithm, legend in alphabetical order. Identical inputs produce
 * identical output files.
 */

import { readFileSync, writeFileSync } from 'fs';

import { EmptyInput, SchemaMismatch, parseResultsCsv, ResultRow } from './csv.js';
import { aggregate, Metric } from './stats.js';
import { renderChart } from './svg.js';

export interface RenderSpec {
  csvPath: string;
  xField: keyof ResultRow;
  metric: Metric;
  logX: boolean;
  outPath: string;
  title?: string;
}

export function render(spec: RenderSpec): string {
  const rows = parseResultsCsv(readFileSync(spec.csvPath, 'utf-8'));
  const series = aggregate(rows, spec.xField, spec.metric);
  if (series.length === 0) {
    throw new EmptyInput('no finite data points to plot');
  }
  const axisName = rows[0].axis;
  const svg = renderChart(series, {
    logX: spec.logX,
    xLabel: spec.xField === 'axis_value' ? axisName : String(spec.xField),
    yLabel: spec.metric,
    title: spec.title,
  });
  writeFileSync(spec.outPath, svg);
  return svg;
}

const METRICS: Metric[] = ['ratio', 'preempt_per_job'];

export function parseArgs(argv: string[]): RenderSpec {
  let csvPath: string | undefined;
  let xField: keyof ResultRow = 'axis_value';
  let metric: Metric = 'ratio';
  let logX = false;
  let outPath: string | undefined;
  let title: string | undefined;
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === '--csv') csvPath = argv[++i];
    else if (arg === '--x') xField = argv[++i] as keyof ResultRow;
    else if (arg === '--y') {
      const y = argv[++i] as Metric;
      if (!METRICS.includes(y)) {
        throw new Error(`--y must be one of ${METRICS.join(', ')}`);
      }
      metric = y;
    } else if (arg === '--logx') logX = true;
    else if (arg === '--out') outPath = argv[++i];
    else if (arg === '--title') title = argv[++i];
    else if (arg === '--help') {
      console.log(
        'usage: render --csv FILE --x axis_value --y ratio|preempt_per_job [--logx] --out FILE.svg [--title T]',
      );
      process.exit(0);
    } else {
      throw new Error(`unknown argument: ${arg}`);
    }
  }
  if (!csvPath || !outPath) {
    throw new Error('--csv and --out are required');
  }
  return { csvPath, xField, metric, logX, outPath, title };
}

const isMain = process.argv[1]?.endsWith('render.js');
if (isMain) {
  try {
    const spec = parseArgs(process.argv.slice(2));
    render(spec);
    console.log(JSON.stringify({ written: spec.outPath }));
  } catch (err) {
    if (err instanceof SchemaMismatch || err instanceof EmptyInput) {
      console.error(`input error: ${(err as Error).message}`);
      process.exit(2);
    }
    console.error(`error: ${(err as Error).message}`);
    process.exit(1);
  }
}
