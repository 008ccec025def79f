import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';
import { fileURLToPath } from 'url';
import { afterAll, describe, expect, it } from 'vitest';

import {
  buildFig1, buildFig2, buildFig3, buildTable1,
  render, renderFig2, renderFig3, renderTable1Csv, renderTable1Markdown,
} from '../src/figures.js';
import { parseArgs } from '../src/cli.js';
import { MissingRun, SchemaMismatch, kernelOrder, loadErrorCurve, loadSummary } from '../src/schema.js';

const FIXTURES = path.join(path.dirname(fileURLToPath(import.meta.url)), 'fixtures');
const GAUSS = path.join(FIXTURES, 'run_gauss');
const BIMODAL = path.join(FIXTURES, 'run_bimodal');

const tmpRoot = fs.mkdtempSync(path.join(os.tmpdir(), 'plots-'));
afterAll(() => fs.rmSync(tmpRoot, { recursive: true, force: true }));

describe('schema loading', () => {
  it('reads a run summary and keeps kernel order from the manifest', () => {
    const summary = loadSummary(GAUSS);
    expect(summary.schema_version).toBe(1);
    expect(kernelOrder(GAUSS)).toEqual(['mdl', 'drw', 'mala', 'euler']);
    expect(Object.keys(summary.samplers).sort()).toEqual(['drw', 'euler', 'mala', 'mdl']);
  });

  it('parses error curve columns', () => {
    const curve = loadErrorCurve(GAUSS, 'mdl');
    expect(curve.iter.length).toBeGreaterThan(0);
    expect(curve.iter.length).toBe(curve.median.length);
    expect(curve.iter[0]).toBe(2); // thin = 2 in the fixture config
  });

  it('raises MissingRun for absent directories and SchemaMismatch for bad versions', () => {
    expect(() => loadSummary(path.join(FIXTURES, 'nope'))).toThrow(MissingRun);
    const dir = fs.mkdtempSync(path.join(tmpRoot, 'v2-'));
    fs.writeFileSync(path.join(dir, 'summary.json'),
      JSON.stringify({ schema_version: 2, samplers: {} }));
    expect(() => loadSummary(dir)).toThrow(SchemaMismatch);
  });
});

describe('table1', () => {
  it('reproduces the summary R-hat values exactly, in configured order', () => {
    const summary = loadSummary(GAUSS);
    const data = buildTable1([GAUSS]);
    // euler has no R-hat block (single trajectory per chain counts, but the
    // fixture records it with chains >= 2, so it may appear); compare
    // against exactly the samplers that carry a block, manifest-ordered.
    const expected = kernelOrder(GAUSS).filter((k) => summary.samplers[k].rhat !== null);
    expect(data.rows.map((r) => r.sampler)).toEqual(expected);
    for (const row of data.rows) {
      const block = summary.samplers[row.sampler].rhat!;
      expect(row.median).toBe(block.median);
      expect(row.p90).toBe(block.p90);
      expect(row.max).toBe(block.max);
      expect(row.frac_above_1_01).toBe(block.frac_above_1_01);
    }
  });

  it('emits every cell verbatim in both text formats', () => {
    const data = buildTable1([GAUSS]);
    const md = renderTable1Markdown(data);
    const csv = renderTable1Csv(data);
    for (const row of data.rows) {
      for (const v of [row.median, row.p90, row.max, row.frac_above_1_01]) {
        // String(v) round-trips IEEE doubles, so the cell equals the JSON value
        expect(md).toContain(` ${String(v)} `);
        expect(csv).toContain(`,${String(v)}`);
        expect(Number(String(v))).toBe(v);
      }
    }
    expect(csv.split('\n')[0]).toBe('sampler,median,p90,max,share>1.01');
  });
});

describe('fig3 transitions', () => {
  it('histogram bars are exactly the per-chain counts from the summary', () => {
    const summary = loadSummary(BIMODAL);
    const data = buildFig3([BIMODAL]);
    expect(data.samplers.map((s) => s.label)).toEqual(['mdl', 'drw']);
    for (const s of data.samplers) {
      const perChain = summary.samplers[s.label].transitions!.per_chain;
      expect(s.perChain).toEqual(perChain);
      // bar heights == count of chains at each transition count
      expect(s.histogram.reduce((a, b) => a + b, 0)).toBe(perChain.length);
      data.bins.forEach((b, i) => {
        expect(s.histogram[i]).toBe(perChain.filter((c) => c === b).length);
      });
    }
    // shared bins cover 0..max jointly so the zero bar exists even when no
    // chain is stuck
    expect(data.bins[0]).toBe(0);
    const allCounts = data.samplers.flatMap((s) => s.perChain);
    expect(data.bins[data.bins.length - 1]).toBe(Math.max(...allCounts));
  });

  it('rejects runs without transition blocks', () => {
    expect(() => buildFig3([GAUSS])).toThrow(SchemaMismatch);
  });

  it('renders one rect per sampler per bin', () => {
    const data = buildFig3([BIMODAL]);
    const svg = renderFig3(data);
    const rects = svg.match(/<rect /g) ?? [];
    // background + samplers * bins
    expect(rects.length).toBe(1 + data.samplers.length * data.bins.length);
  });
});

describe('fig2 rolling error', () => {
  it('band respects percentile ordering at every recorded iteration', () => {
    const data = buildFig2([GAUSS]);
    expect(data.series.length).toBe(4);
    for (const s of data.series) {
      for (let i = 0; i < s.iter.length; i++) {
        expect(s.p10[i]).toBeLessThanOrEqual(s.median[i]);
        expect(s.median[i]).toBeLessThanOrEqual(s.p90[i]);
      }
    }
  });

  it('flags fabricated curves that violate the ordering', () => {
    const dir = fs.mkdtempSync(path.join(tmpRoot, 'badband-'));
    for (const f of ['summary.json', 'manifest.json']) {
      fs.copyFileSync(path.join(GAUSS, f), path.join(dir, f));
    }
    for (const k of kernelOrder(GAUSS)) fs.mkdirSync(path.join(dir, k));
    const rows = 'iter,mean,median,p10,p90\n2,0.5,0.5,0.6,0.7\n';
    for (const k of kernelOrder(GAUSS)) {
      fs.writeFileSync(path.join(dir, k, 'error_curve.csv'), rows);
    }
    expect(() => buildFig2([dir])).toThrow(SchemaMismatch);
  });

  it('draws the median inside the shaded band in pixel space', () => {
    // SVG y grows downward: band top uses p90, bottom uses p10, median between
    const data = buildFig2([GAUSS]);
    const svg = renderFig2(data);
    expect(svg).toContain('<polygon');
    expect(svg.match(/<polyline fill="none" stroke="#1f6fb2"/)).toBeTruthy();
  });
});

describe('fig1 bias curves', () => {
  it('extracts one mean-error series per kernel', () => {
    const data = buildFig1([GAUSS]);
    expect(data.series.map((s) => s.label)).toEqual(['mdl', 'drw', 'mala', 'euler']);
    const curve = loadErrorCurve(GAUSS, 'euler');
    const euler = data.series.find((s) => s.label === 'euler')!;
    expect(euler.mean).toEqual(curve.mean);
    expect(euler.iter).toEqual(curve.iter);
  });
});

describe('render dispatch', () => {
  it('is a pure function of its inputs: re-render gives identical bytes', () => {
    const out1 = path.join(tmpRoot, 'fig3a.svg');
    const out2 = path.join(tmpRoot, 'fig3b.svg');
    render({ figureId: 'fig3_transitions', runDirs: [BIMODAL], outPath: out1 });
    render({ figureId: 'fig3_transitions', runDirs: [BIMODAL], outPath: out2 });
    expect(fs.readFileSync(out1)).toEqual(fs.readFileSync(out2));
  });

  it('writes every figure kind', () => {
    const outputs = [
      render({ figureId: 'fig1_bias', runDirs: [GAUSS], outPath: path.join(tmpRoot, 'f1.svg') }),
      render({ figureId: 'fig2_rolling_error', runDirs: [GAUSS], outPath: path.join(tmpRoot, 'f2.svg') }),
      render({ figureId: 'table1', runDirs: [GAUSS], outPath: path.join(tmpRoot, 't1.md') }),
      render({ figureId: 'table1', runDirs: [GAUSS], outPath: path.join(tmpRoot, 't1.csv') }),
    ];
    for (const out of outputs) {
      expect(fs.statSync(out).size).toBeGreaterThan(0);
    }
    expect(fs.readFileSync(path.join(tmpRoot, 'f1.svg'), 'utf-8')).toContain('</svg>');
    expect(fs.readFileSync(path.join(tmpRoot, 't1.md'), 'utf-8')).toContain('| sampler |');
  });
});

describe('cli argument parsing', () => {
  it('accepts the documented form with and without the leading verb', () => {
    const spec = parseArgs(['render', '--figure', 'fig2_rolling_error',
      '--runs', 'a,b', '--out', 'x.svg']);
    expect(spec).toEqual({
      figureId: 'fig2_rolling_error', runDirs: ['a', 'b'], outPath: 'x.svg',
    });
    expect(parseArgs(['--figure', 'table1', '--runs', 'r', '--out', 't.md']).figureId)
      .toBe('table1');
  });

  it('rejects unknown figures and missing flags', () => {
    expect(() => parseArgs(['--figure', 'fig9', '--runs', 'r', '--out', 'o'])).toThrow();
    expect(() => parseArgs(['--figure', 'table1'])).toThrow();
  });
});
