/**
 * Minimal deterministic SVG assembly: fixed canvas, fixed fonts, numbers
 * printed with a fixed precision so re-rendering identical inputs yields
 * identical bytes.
 */

export const WIDTH = 720;
export const HEIGHT = 480;
export const MARGIN = { left: 64, right: 24, top: 28, bottom: 44 };

export function fmt(x: number): string {
  if (!Number.isFinite(x)) return "0";
  const s = x.toFixed(3);
  return s === "-0.000" ? "0.000" : s;
}

export interface Scale {
  (v: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): Scale {
  const [d0, d1] = domain;
  const span = d1 - d0 || 1;
  const f = ((v: number) => range[0] + ((v - d0) / span) * (range[1] - range[0])) as Scale;
  f.domain = domain;
  return f;
}

export function logScale(domain: [number, number], range: [number, number]): Scale {
  const lo = Math.log10(domain[0]);
  const hi = Math.log10(domain[1]);
  const span = hi - lo || 1;
  const f = ((v: number) =>
    range[0] + ((Math.log10(v) - lo) / span) * (range[1] - range[0])) as Scale;
  f.domain = domain;
  return f;
}

/** Color for weight channels: fixed 12-entry cycle. */
const WEIGHT_COLORS = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
  "#17becf", "#e377c2", "#7f7f7f", "#bcbd22", "#004488", "#aa3377",
];

export function weightColor(w: number): string {
  return WEIGHT_COLORS[((w % WEIGHT_COLORS.length) + WEIGHT_COLORS.length) % WEIGHT_COLORS.length];
}

/** Diverging blue-white-red map on [-1, 1]; white at exactly 0. */
export function divergingColor(v: number): string {
  const t = Math.max(-1, Math.min(1, v));
  const ramp = (a: number, b: number, u: number) => Math.round(a + (b - a) * u);
  let r: number, g: number, b: number;
  if (t < 0) {
    const u = 1 + t; // 0 at -1, 1 at 0
    r = ramp(33, 255, u);
    g = ramp(102, 255, u);
    b = ramp(172, 255, u);
  } else {
    const u = t;
    r = ramp(255, 178, u);
    g = ramp(255, 24, u);
    b = ramp(255, 43, u);
  }
  return `rgb(${r},${g},${b})`;
}

export function polyline(points: [number, number][], attrs: string): string {
  const pts = points.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
  return `<polyline fill="none" points="${pts}" ${attrs}/>`;
}

export function svgDocument(body: string[], title: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="18" text-anchor="middle" font-family="monospace" font-size="13">${title}</text>`,
    ...body,
    `</svg>`,
    ``,
  ].join("\n");
}

export function axes(
  x: Scale,
  y: Scale,
  xLabel: string,
  yLabel: string,
  opts: { logY?: boolean } = {},
): string[] {
  const { left, right, top, bottom } = MARGIN;
  const x0 = left;
  const x1 = WIDTH - right;
  const y0 = HEIGHT - bottom;
  const y1 = top;
  const parts = [
    `<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`,
    `<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`,
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 8}" text-anchor="middle" font-family="monospace" font-size="12">${xLabel}</text>`,
    `<text x="14" y="${(y0 + y1) / 2}" text-anchor="middle" font-family="monospace" font-size="12" transform="rotate(-90 14 ${(y0 + y1) / 2})">${yLabel}</text>`,
  ];
  const nTicks = 5;
  for (let i = 0; i <= nTicks; i++) {
    const vx = x.domain[0] + ((x.domain[1] - x.domain[0]) * i) / nTicks;
    const px = x(vx);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y0 + 4}" stroke="black"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 16}" text-anchor="middle" font-family="monospace" font-size="10">${fmt(vx)}</text>`,
    );
  }
  for (let i = 0; i <= nTicks; i++) {
    let vy: number;
    let label: string;
    if (opts.logY) {
      const lo = Math.log10(y.domain[0]);
      const hi = Math.log10(y.domain[1]);
      const e = lo + ((hi - lo) * i) / nTicks;
      vy = 10 ** e;
      label = `1e${fmt(e)}`;
    } else {
      vy = y.domain[0] + ((y.domain[1] - y.domain[0]) * i) / nTicks;
      label = fmt(vy);
    }
    const py = y(vy);
    parts.push(`<line x1="${x0 - 4}" y1="${fmt(py)}" x2="${x0}" y2="${fmt(py)}" stroke="black"/>`);
    parts.push(
      `<text x="${x0 - 6}" y="${fmt(py + 3)}" text-anchor="end" font-family="monospace" font-size="10">${label}</text>`,
    );
  }
  return parts;
}
