#!/usr/bin/env node
/** render --figure fig2_rolling_error --runs <dir>[,<dir>...] --out <path> */

import { fileURLToPath } from 'url';

import { FIGURE_IDS, FigureId, FigureSpec, render } from './figures.js';
import { MissingRun, SchemaMismatch } from './schema.js';

const USAGE =
  `usage: render --figure <${FIGURE_IDS.join('|')}> --runs <dir>[,<dir>...] --out <path>`;

export function parseArgs(argv: string[]): FigureSpec {
  const args = argv[0] === 'render' ? argv.slice(1) : argv.slice();
  let figure: string | undefined;
  const runs: string[] = [];
  let out: string | undefined;
  for (let i = 0; i < args.length; i += 2) {
    const [flag, value] = [args[i], args[i + 1]];
    if (value === undefined) throw new Error(`missing value for ${flag}\n${USAGE}`);
    if (flag === '--figure') figure = value;
    else if (flag === '--runs') runs.push(...value.split(',').filter((s) => s.length > 0));
    else if (flag === '--out') out = value;
    else throw new Error(`unknown flag ${flag}\n${USAGE}`);
  }
  if (!figure || !out || runs.length === 0) throw new Error(USAGE);
  if (!(FIGURE_IDS as readonly string[]).includes(figure)) {
    throw new Error(`unknown figure id ${figure}\n${USAGE}`);
  }
  return { figureId: figure as FigureId, runDirs: runs, outPath: out };
}

export function main(argv: string[]): number {
  let spec: FigureSpec;
  try {
    spec = parseArgs(argv);
  } catch (e) {
    console.error((e as Error).message);
    return 2;
  }
  try {
    console.log(render(spec));
    return 0;
  } catch (e) {
    if (e instanceof MissingRun || e instanceof SchemaMismatch) {
      console.error(`${e.constructor.name}: ${e.message}`);
      return 1;
    }
    throw e;
  }
}

if (process.argv[1] && fileURLToPath(import.meta.url) === process.argv[1]) {
  process.exit(main(process.argv.slice(2)));
}
