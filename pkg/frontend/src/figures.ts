/** The four renderers: three SVG figures and one text table.
 *
 * Each builder is a pure function of the run artifacts: it extracts a data
 * object (used directly by the tests) and the render step turns that into
 * an SVG or markdown/CSV string. No statistic is recomputed here beyond
 * histogram binning; the numbers come straight from the persisted files.
 */

import * as fs from 'fs';
import * as path from 'path';

import {
  ErrorCurve, MissingRun, RhatBlock, SchemaMismatch,
  kernelOrder, loadErrorCurve, loadSummary,
} from './schema.js';
import {
  DEFAULT_MARGIN, PALETTE, Scale, band, linearScale, logScale,
  polyline, rect, svgDocument, text, tickLabel, ticks,
} from './svg.js';

export const FIGURE_IDS = ['fig1_bias', 'fig2_rolling_error', 'fig3_transitions', 'table1'] as const;
export type FigureId = (typeof FIGURE_IDS)[number];

export interface FigureSpec {
  figureId: FigureId;
  runDirs: string[];
  outPath: string;
}

interface Series {
  label: string;
  curve: ErrorCurve;
}

/** One labelled error curve per kernel, across all given runs.
 *  Labels get the experiment id as a prefix when two runs collide. */
function collectSeries(runDirs: string[]): Series[] {
  if (runDirs.length === 0) throw new MissingRun('no run directories given');
  const out: Series[] = [];
  const seen = new Set<string>();
  for (const dir of runDirs) {
    const summary = loadSummary(dir);
    for (const name of kernelOrder(dir)) {
      const label = seen.has(name) || runDirs.length > 1 && out.some((s) => s.label === name)
        ? `${summary.experiment_id}/${name}` : name;
      seen.add(name);
      out.push({ label, curve: loadErrorCurve(dir, name) });
    }
  }
  return out;
}

const WIDTH = 640;
const HEIGHT = 420;

interface Frame {
  x: Scale;
  y: Scale;
  body: string[];
}

/** Axes, ticks, labels, and the two scales for a log-y line chart. */
function logYFrame(title: string, xMax: number, yLo: number, yHi: number,
                   xLabel: string): Frame {
  const m = DEFAULT_MARGIN;
  const x = linearScale(0, xMax, m.left, WIDTH - m.right);
  const y = logScale(yLo, yHi, HEIGHT - m.bottom, m.top + 10);
  const body: string[] = [];
  body.push(polyline([m.left, m.left], [m.top + 10, HEIGHT - m.bottom], '#333', 1));
  body.push(polyline([m.left, WIDTH - m.right], [HEIGHT - m.bottom, HEIGHT - m.bottom], '#333', 1));
  for (const t of ticks(0, xMax, false)) {
    body.push(polyline([x(t), x(t)], [HEIGHT - m.bottom, HEIGHT - m.bottom + 4], '#333', 1));
    body.push(text(x(t), HEIGHT - m.bottom + 16, tickLabel(t), 'text-anchor="middle"'));
  }
  for (const t of ticks(yLo, yHi, true)) {
    body.push(polyline([m.left - 4, m.left], [y(t), y(t)], '#333', 1));
    body.push(polyline([m.left, WIDTH - m.right], [y(t), y(t)], '#ddd', 0.5));
    body.push(text(m.left - 7, y(t) + 3, tickLabel(t), 'text-anchor="end"'));
  }
  body.push(text((m.left + WIDTH - m.right) / 2, HEIGHT - 8, xLabel, 'text-anchor="middle"'));
  return { x, y, body };
}

/** Smallest positive value in the arrays; log axes cannot show zeros, so
 *  zero entries are clamped to half of this floor when plotted. */
function positiveFloor(arrays: number[][]): number {
  let lo = Infinity;
  for (const arr of arrays) for (const v of arr) if (v > 0 && v < lo) lo = v;
  if (!Number.isFinite(lo)) throw new SchemaMismatch('error curves are identically zero');
  return lo;
}

const clampPos = (v: number, floor: number): number => (v > 0 ? v : floor / 2);

export interface Fig1Data {
  series: Array<{ label: string; iter: number[]; mean: number[] }>;
}

export function buildFig1(runDirs: string[]): Fig1Data {
  const series = collectSeries(runDirs).map((s) => ({
    label: s.label, iter: s.curve.iter, mean: s.curve.mean,
  }));
  return { series };
}

export function renderFig1(data: Fig1Data): string {
  const floor = positiveFloor(data.series.map((s) => s.mean));
  const hi = Math.max(...data.series.map((s) => Math.max(...s.mean)));
  const xMax = Math.max(...data.series.map((s) => s.iter[s.iter.length - 1] ?? 0));
  const f = logYFrame('Running-mean error vs samples', xMax, floor / 2, hi, 'sample index');
  data.series.forEach((s, i) => {
    const ys = s.mean.map((v) => f.y(clampPos(v, floor)));
    f.body.push(polyline(s.iter.map(f.x), ys, PALETTE[i % PALETTE.length]));
    f.body.push(text(WIDTH - 150, 40 + 14 * i, s.label,
      `fill="${PALETTE[i % PALETTE.length]}"`));
  });
  return svgDocument(WIDTH, HEIGHT, 'absolute error of the running mean (log scale)', f.body);
}

export interface Fig2Data {
  series: Array<{
    label: string; iter: number[]; median: number[]; p10: number[]; p90: number[];
  }>;
}

export function buildFig2(runDirs: string[]): Fig2Data {
  const series = collectSeries(runDirs).map((s) => ({
    label: s.label, iter: s.curve.iter, median: s.curve.median,
    p10: s.curve.p10, p90: s.curve.p90,
  }));
  for (const s of series) {
    for (let i = 0; i < s.iter.length; i++) {
      if (!(s.p10[i] <= s.median[i] && s.median[i] <= s.p90[i])) {
        throw new SchemaMismatch(
          `${s.label}: percentile ordering violated at iter ${s.iter[i]} ` +
          `(p10 ${s.p10[i]}, median ${s.median[i]}, p90 ${s.p90[i]})`);
      }
    }
  }
  return { series };
}

export function renderFig2(data: Fig2Data): string {
  const floor = positiveFloor(data.series.flatMap((s) => [s.p10, s.median, s.p90]));
  const hi = Math.max(...data.series.map((s) => Math.max(...s.p90)));
  const xMax = Math.max(...data.series.map((s) => s.iter[s.iter.length - 1] ?? 0));
  const f = logYFrame('Rolling-mean error', xMax, floor / 2, hi, 'iteration');
  data.series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const xs = s.iter.map(f.x);
    f.body.push(band(xs, s.p90.map((v) => f.y(clampPos(v, floor))),
      s.p10.map((v) => f.y(clampPos(v, floor))), color));
    f.body.push(polyline(xs, s.median.map((v) => f.y(clampPos(v, floor))), color));
    f.body.push(text(WIDTH - 150, 40 + 14 * i, s.label, `fill="${color}"`));
  });
  return svgDocument(WIDTH, HEIGHT,
    'rolling-mean error: median and 10-90% band (log scale)', f.body);
}

export interface Fig3Data {
  /** Shared integer bins 0..maxCount and, per sampler, chains per bin. */
  bins: number[];
  samplers: Array<{ label: string; perChain: number[]; histogram: number[] }>;
}

export function buildFig3(runDirs: string[]): Fig3Data {
  if (runDirs.length === 0) throw new MissingRun('no run directories given');
  const samplers: Array<{ label: string; perChain: number[] }> = [];
  for (const dir of runDirs) {
    const summary = loadSummary(dir);
    for (const name of kernelOrder(dir)) {
      const block = summary.samplers[name];
      if (!block || block.transitions === null) continue;
      samplers.push({ label: name, perChain: block.transitions.per_chain });
    }
  }
  if (samplers.length === 0) {
    throw new SchemaMismatch('no sampler in the given runs carries transition counts');
  }
  const maxCount = Math.max(...samplers.map((s) => Math.max(...s.perChain, 0)));
  const bins = Array.from({ length: maxCount + 1 }, (_, i) => i);
  return {
    bins,
    samplers: samplers.map((s) => {
      const histogram = new Array(maxCount + 1).fill(0);
      for (const c of s.perChain) histogram[c] += 1;
      return { ...s, histogram };
    }),
  };
}

export function renderFig3(data: Fig3Data): string {
  const m = DEFAULT_MARGIN;
  const n = data.samplers.length;
  const yHi = Math.max(...data.samplers.map((s) => Math.max(...s.histogram)));
  const y = linearScale(0, yHi, HEIGHT - m.bottom, m.top + 10);
  const body: string[] = [];
  const groupW = (WIDTH - m.left - m.right) / data.bins.length;
  const barW = (groupW * 0.85) / n;
  body.push(polyline([m.left, m.left], [m.top + 10, HEIGHT - m.bottom], '#333', 1));
  body.push(polyline([m.left, WIDTH - m.right], [HEIGHT - m.bottom, HEIGHT - m.bottom], '#333', 1));
  for (const t of ticks(0, yHi, false)) {
    body.push(text(m.left - 7, y(t) + 3, tickLabel(t), 'text-anchor="end"'));
    body.push(polyline([m.left - 4, m.left], [y(t), y(t)], '#333', 1));
  }
  data.bins.forEach((b, bi) => {
    const x0 = m.left + bi * groupW + groupW * 0.075;
    data.samplers.forEach((s, si) => {
      const h = (HEIGHT - m.bottom) - y(s.histogram[bi]);
      body.push(rect(x0 + si * barW, y(s.histogram[bi]), barW, h,
        PALETTE[si % PALETTE.length]));
    });
    body.push(text(m.left + (bi + 0.5) * groupW, HEIGHT - m.bottom + 16, String(b),
      'text-anchor="middle"'));
  });
  data.samplers.forEach((s, si) => {
    body.push(text(WIDTH - 140, 40 + 14 * si, s.label,
      `fill="${PALETTE[si % PALETTE.length]}"`));
  });
  body.push(text((m.left + WIDTH - m.right) / 2, HEIGHT - 8,
    'cross-well transitions per chain', 'text-anchor="middle"'));
  return svgDocument(WIDTH, HEIGHT, 'chains per transition count', body);
}

export interface Table1Data {
  rows: Array<{ sampler: string } & RhatBlock>;
}

const TABLE_COLUMNS = ['sampler', 'median', 'p90', 'max', 'share>1.01'] as const;

export function buildTable1(runDirs: string[]): Table1Data {
  if (runDirs.length === 0) throw new MissingRun('no run directories given');
  const rows: Table1Data['rows'] = [];
  for (const dir of runDirs) {
    const summary = loadSummary(dir);
    for (const name of kernelOrder(dir)) {
      const block = summary.samplers[name];
      if (!block || block.rhat === null) continue;
      rows.push({ sampler: name, ...block.rhat });
    }
  }
  if (rows.length === 0) {
    throw new SchemaMismatch('no sampler in the given runs carries an R-hat block');
  }
  return { rows };
}

/** Cells carry the JSON numbers verbatim: Number -> string round-trips
 *  doubles exactly in JS, and the table is a record, not a display widget. */
function tableCells(data: Table1Data): string[][] {
  return data.rows.map((r) => [
    r.sampler, String(r.median), String(r.p90), String(r.max), String(r.frac_above_1_01),
  ]);
}

export function renderTable1Markdown(data: Table1Data): string {
  const header = `| ${TABLE_COLUMNS.join(' | ')} |`;
  const rule = `|${TABLE_COLUMNS.map(() => ' --- ').join('|')}|`;
  const rows = tableCells(data).map((cells) => `| ${cells.join(' | ')} |`);
  return [header, rule, ...rows, ''].join('\n');
}

export function renderTable1Csv(data: Table1Data): string {
  return [TABLE_COLUMNS.join(','), ...tableCells(data).map((c) => c.join(','))].join('\n') + '\n';
}

/** Build + write the requested figure; returns the output path written. */
export function render(spec: FigureSpec): string {
  let content: string;
  switch (spec.figureId) {
    case 'fig1_bias':
      content = renderFig1(buildFig1(spec.runDirs));
      break;
    case 'fig2_rolling_error':
      content = renderFig2(buildFig2(spec.runDirs));
      break;
    case 'fig3_transitions':
      content = renderFig3(buildFig3(spec.runDirs));
      break;
    case 'table1':
      content = spec.outPath.endsWith('.csv')
        ? renderTable1Csv(buildTable1(spec.runDirs))
        : renderTable1Markdown(buildTable1(spec.runDirs));
      break;
    default:
      throw new SchemaMismatch(`unknown figure id: ${(spec as FigureSpec).figureId}`);
  }
  fs.mkdirSync(path.dirname(path.resolve(spec.outPath)), { recursive: true });
  fs.writeFileSync(spec.outPath, content);
  return spec.outPath;
}
