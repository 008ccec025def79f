/** Loaders for the run-directory artifacts the sampler harness persists.
 *
 * Everything here reads files and validates shape; no statistics are
 * recomputed. schema_version 1 is the only version understood.
 */

import * as fs from 'fs';
import * as path from 'path';

export const SUPPORTED_SCHEMA_VERSION = 1;

export class SchemaMismatch extends Error {}
export class MissingRun extends Error {}

export interface RhatBlock {
  per_dimension: number[];
  median: number;
  p90: number;
  max: number;
  frac_above_1_01: number;
}

export interface TransitionsBlock {
  per_chain: number[];
  mean: number;
  zero_fraction: number;
}

export interface SamplerBlock {
  kernel: string;
  h_max: number;
  tuned: boolean;
  acceptance_rate: number | null;
  total_steps: number;
  recorded_draws: number;
  infeasible_recorded: number;
  boundary_clips: number | null;
  boundary_clip_rate: number | null;
  rhat: RhatBlock | null;
  error_functional: string | null;
  terminal_error: number | null;
  terminal_error_median: number | null;
  transitions: TransitionsBlock | null;
}

export interface RunSummary {
  schema_version: number;
  experiment_id: string;
  chains: number;
  iterations: number;
  warmup: number;
  thin: number;
  master_seed: number;
  ground_truth: string;
  samplers: Record<string, SamplerBlock>;
}

export interface RunManifest {
  schema_version: number;
  config: {
    experiment_id: string;
    kernels: Array<{ name: string; kind: string }>;
    [key: string]: unknown;
  };
  counters: Record<string, unknown>;
}

function readJson(file: string): unknown {
  if (!fs.existsSync(file)) {
    throw new MissingRun(`missing artifact: ${file}`);
  }
  try {
    return JSON.parse(fs.readFileSync(file, 'utf-8'));
  } catch (e) {
    throw new SchemaMismatch(`unparseable JSON in ${file}: ${e}`);
  }
}

function checkVersion(obj: { schema_version?: unknown }, file: string): void {
  if (obj.schema_version !== SUPPORTED_SCHEMA_VERSION) {
    throw new SchemaMismatch(
      `${file}: schema_version ${obj.schema_version}, expected ${SUPPORTED_SCHEMA_VERSION}`);
  }
}

export function loadSummary(runDir: string): RunSummary {
  if (!fs.existsSync(runDir)) {
    throw new MissingRun(`run directory not found: ${runDir}`);
  }
  const file = path.join(runDir, 'summary.json');
  const summary = readJson(file) as RunSummary;
  checkVersion(summary, file);
  if (typeof summary.samplers !== 'object' || summary.samplers === null) {
    throw new SchemaMismatch(`${file}: no samplers block`);
  }
  return summary;
}

export function loadManifest(runDir: string): RunManifest {
  const file = path.join(runDir, 'manifest.json');
  const manifest = readJson(file) as RunManifest;
  checkVersion(manifest, file);
  if (!Array.isArray(manifest.config?.kernels)) {
    throw new SchemaMismatch(`${file}: config.kernels missing`);
  }
  return manifest;
}

/** Kernel names in the order the run configured them (summary.json keys are sorted). */
export function kernelOrder(runDir: string): string[] {
  return loadManifest(runDir).config.kernels.map((k) => k.name);
}

export interface ErrorCurve {
  iter: number[];
  mean: number[];
  median: number[];
  p10: number[];
  p90: number[];
}

const CURVE_HEADER = 'iter,mean,median,p10,p90';

export function loadErrorCurve(runDir: string, kernel: string): ErrorCurve {
  const file = path.join(runDir, kernel, 'error_curve.csv');
  if (!fs.existsSync(file)) {
    throw new MissingRun(`missing artifact: ${file}`);
  }
  const lines = fs.readFileSync(file, 'utf-8').trim().split('\n');
  if (lines[0] !== CURVE_HEADER) {
    throw new SchemaMismatch(`${file}: header "${lines[0]}", expected "${CURVE_HEADER}"`);
  }
  const curve: ErrorCurve = { iter: [], mean: [], median: [], p10: [], p90: [] };
  for (const line of lines.slice(1)) {
    const cells = line.split(',').map(Number);
    if (cells.length !== 5 || cells.some(Number.isNaN)) {
      throw new SchemaMismatch(`${file}: bad row "${line}"`);
    }
    curve.iter.push(cells[0]);
    curve.mean.push(cells[1]);
    curve.median.push(cells[2]);
    curve.p10.push(cells[3]);
    curve.p90.push(cells[4]);
  }
  return curve;
}
