/** Minimal deterministic SVG builder: no DOM, no renderer state, just strings.
 *
 * Figures are batch artifacts, so identical inputs must give identical
 * bytes; nothing here touches clocks or randomness.
 */

export interface Margin { top: number; right: number; bottom: number; left: number; }

export const DEFAULT_MARGIN: Margin = { top: 30, right: 20, bottom: 45, left: 65 };

export type Scale = (v: number) => number;

export function linearScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  const span = hi - lo || 1;
  return (v) => pxLo + ((v - lo) / span) * (pxHi - pxLo);
}

export function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (lo <= 0 || hi <= 0) throw new Error(`log scale needs positive bounds, got [${lo}, ${hi}]`);
  const la = Math.log10(lo);
  const span = Math.log10(hi) - la || 1;
  return (v) => pxLo + ((Math.log10(v) - la) / span) * (pxHi - pxLo);
}

const fmt = (v: number): string => {
  const r = Math.round(v * 100) / 100;
  return Object.is(r, -0) ? '0' : String(r);
};

export function polyline(xs: number[], ys: number[], stroke: string, width = 1.5): string {
  const pts = xs.map((x, i) => `${fmt(x)},${fmt(ys[i])}`).join(' ');
  return `<polyline fill="none" stroke="${stroke}" stroke-width="${width}" points="${pts}"/>`;
}

/** Closed band between an upper and a lower trace sharing x coordinates. */
export function band(xs: number[], yHi: number[], yLo: number[], fill: string): string {
  const up = xs.map((x, i) => `${fmt(x)},${fmt(yHi[i])}`);
  const down = xs.map((x, i) => `${fmt(x)},${fmt(yLo[i])}`).reverse();
  return `<polygon fill="${fill}" fill-opacity="0.25" stroke="none" points="${up.concat(down).join(' ')}"/>`;
}

export function rect(x: number, y: number, w: number, h: number, fill: string): string {
  return `<rect x="${fmt(x)}" y="${fmt(y)}" width="${fmt(w)}" height="${fmt(h)}" fill="${fill}"/>`;
}

export function text(x: number, y: number, s: string, opts = ''): string {
  const size = opts.includes('font-size') ? '' : ' font-size="11"';
  return `<text x="${fmt(x)}" y="${fmt(y)}" font-family="sans-serif"${size} ${opts}>${s}</text>`;
}

/** Tick positions: powers of ten inside [lo, hi] for log axes, else ~5 round steps. */
export function ticks(lo: number, hi: number, log: boolean): number[] {
  if (log) {
    const out: number[] = [];
    for (let e = Math.ceil(Math.log10(lo)); Math.pow(10, e) <= hi * 1.0001; e++) {
      out.push(Math.pow(10, e));
    }
    return out.length >= 2 ? out : [lo, hi];
  }
  const span = hi - lo || 1;
  const step = Math.pow(10, Math.floor(Math.log10(span / 5)));
  const mult = span / step > 10 ? (span / step > 25 ? 5 : 2) : 1;
  const out: number[] = [];
  for (let v = Math.ceil(lo / (step * mult)) * step * mult; v <= hi * 1.0001; v += step * mult) {
    out.push(Math.round(v * 1e9) / 1e9);
  }
  return out;
}

export const tickLabel = (v: number): string =>
  (v !== 0 && (Math.abs(v) >= 1e4 || Math.abs(v) < 1e-3)) ? v.toExponential(0) : String(v);

export const PALETTE = ['#1f6fb2', '#d95f02', '#2a9d54', '#7b52ab', '#c23b80'];

export function svgDocument(width: number, height: number, title: string,
                            body: string[]): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect width="${width}" height="${height}" fill="white"/>`,
    text(width / 2, 18, title, 'text-anchor="middle" font-size="13"'),
    ...body,
    '</svg>',
    '',
  ].join('\n');
}
