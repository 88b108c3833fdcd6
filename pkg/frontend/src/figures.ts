/**
 * One renderer per figure kind, each a pure function CSV text -> SVG text.
 *
 * tempmap        heat grid over (theta, phi), diverging colors, white at beta=0
 * densities      log-y time series; solid contributing, dash-dot non-contributing
 * contributions  log-y |O_w(t)| per weight
 * backflow       log-y |overlap(t)| per omega_perp, OSEE traces dashed
 * owe            stacked cumulative probability bands + OWE inset
 * sweep          max OWE vs beta, opacity encodes omega_star, color the phi branch
 */

import {
  numberColumn,
  parseCsv,
  requireColumns,
  SchemaError,
  textColumn,
} from "./csv.js";
import {
  axes,
  divergingColor,
  fmt,
  HEIGHT,
  linearScale,
  logScale,
  MARGIN,
  polyline,
  svgDocument,
  weightColor,
  WIDTH,
} from "./svg.js";

const PLOT = {
  x0: MARGIN.left,
  x1: WIDTH - MARGIN.right,
  y0: HEIGHT - MARGIN.bottom,
  y1: MARGIN.top,
};

const LOG_FLOOR = 1e-8;

function finite(vs: (number | null)[]): number[] {
  return vs.filter((v): v is number => v !== null && Number.isFinite(v));
}

function extent(vs: number[], fallback: [number, number]): [number, number] {
  if (vs.length === 0) return fallback;
  let lo = Math.min(...vs);
  let hi = Math.max(...vs);
  if (lo === hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  return [lo, hi];
}

function groupBy<K>(keys: K[]): Map<K, number[]> {
  const out = new Map<K, number[]>();
  keys.forEach((k, i) => {
    const got = out.get(k);
    if (got) got.push(i);
    else out.set(k, [i]);
  });
  return out;
}

export function renderTempmap(text: string): string {
  const t = parseCsv(text);
  requireColumns(t, ["theta_deg", "phi_deg", "beta_J", "T_J", "energy_per_site"], "tempmap");
  const theta = finite(numberColumn(t, "theta_deg", "tempmap"));
  const phi = finite(numberColumn(t, "phi_deg", "tempmap"));
  const beta = numberColumn(t, "beta_J", "tempmap").map((v) => v ?? 0);
  const thetas = [...new Set(theta)].sort((a, b) => a - b);
  const phis = [...new Set(phi)].sort((a, b) => a - b);
  const x = linearScale([0, 360], [PLOT.x0, PLOT.x1]);
  const y = linearScale([180, 0], [PLOT.y0, PLOT.y1]);
  const scale = Math.max(1e-12, ...beta.map((b) => Math.abs(b)));
  const dx = (PLOT.x1 - PLOT.x0) / Math.max(1, phis.length);
  const dy = (PLOT.y0 - PLOT.y1) / Math.max(1, thetas.length);
  const body: string[] = [];
  for (let i = 0; i < t.rows.length; i++) {
    const px = x(phi[i]);
    const py = y(theta[i]);
    body.push(
      `<rect x="${fmt(px)}" y="${fmt(py - dy)}" width="${fmt(dx + 0.5)}" height="${fmt(dy + 0.5)}" fill="${divergingColor(beta[i] / scale)}"/>`,
    );
  }
  body.push(...axes(linearScale([0, 360], [PLOT.x0, PLOT.x1]),
                    linearScale([180, 0], [PLOT.y0, PLOT.y1]),
                    "phi (deg)", "theta (deg)"));
  return svgDocument(body, "equilibration inverse temperature beta(theta, phi)");
}

function logSeriesFigure(
  title: string,
  xLabel: string,
  series: { points: [number, number][]; attrs: string }[],
  labels: { text: string; color: string }[],
): string {
  const ys = series.flatMap((s) => s.points.map(([, v]) => v)).filter((v) => v > 0);
  const hi = ys.length ? Math.max(...ys) : 1;
  const lo = Math.max(LOG_FLOOR * hi, ys.length ? Math.min(...ys) : LOG_FLOOR);
  const x = linearScale(
    extent(series.flatMap((s) => s.points.map(([tv]) => tv)), [0, 1]),
    [PLOT.x0, PLOT.x1],
  );
  const y = logScale([lo, hi], [PLOT.y0, PLOT.y1]);
  const body: string[] = [];
  for (const s of series) {
    const pts = s.points
      .filter(([, v]) => v >= lo)
      .map(([tv, v]) => [x(tv), y(v)] as [number, number]);
    if (pts.length > 1) body.push(polyline(pts, s.attrs));
  }
  labels.forEach((l, i) => {
    body.push(
      `<text x="${PLOT.x1 - 4}" y="${PLOT.y1 + 12 + 12 * i}" text-anchor="end" font-family="monospace" font-size="10" fill="${l.color}">${l.text}</text>`,
    );
  });
  body.push(...axes(x, y, xLabel, "value (log)", { logY: true }));
  return svgDocument(body, title);
}

export function renderDensities(text: string): string {
  const t = parseCsv(text, [1]);
  requireColumns(t, ["t", "kind", "omega", "value"], "densities");
  const times = numberColumn(t, "t", "densities");
  const omegas = numberColumn(t, "omega", "densities");
  const values = numberColumn(t, "value", "densities");
  const kinds = textColumn(t, "kind", "densities");
  for (const k of kinds) {
    if (k !== "c" && k !== "nc") throw new SchemaError(`densities: bad kind column value ${JSON.stringify(k)}`);
  }
  const series: { points: [number, number][]; attrs: string }[] = [];
  const labels: { text: string; color: string }[] = [];
  const byChannel = groupBy(kinds.map((k, i) => `${k}:${omegas[i]}`));
  const channelOrder = (a: string, b: string) => {
    const [ka, wa] = a.split(":");
    const [kb, wb] = b.split(":");
    return ka === kb ? Number(wa) - Number(wb) : ka < kb ? -1 : 1;
  };
  for (const [key, idxs] of [...byChannel.entries()].sort((x, y) => channelOrder(x[0], y[0]))) {
    const [kind, w] = key.split(":");
    const color = weightColor(Number(w));
    const dash = kind === "nc" ? ' stroke-dasharray="8,3,2,3"' : "";
    series.push({
      points: idxs.map((i) => [times[i] as number, values[i] as number]),
      attrs: `stroke="${color}" stroke-width="1.5"${dash}`,
    });
    if (kind === "c" && labels.length < 10) labels.push({ text: `w=${w}`, color });
  }
  return logSeriesFigure("weight-resolved densities (solid c, dash-dot nc)", "t J", series, labels);
}

export function renderContributions(text: string): string {
  const t = parseCsv(text);
  requireColumns(t, ["t", "omega", "value"], "contributions");
  const times = numberColumn(t, "t", "contributions");
  const omegas = numberColumn(t, "omega", "contributions");
  const values = numberColumn(t, "value", "contributions");
  const series: { points: [number, number][]; attrs: string }[] = [];
  const labels: { text: string; color: string }[] = [];
  for (const [w, idxs] of [...groupBy(omegas as number[]).entries()].sort((a, b) => a[0] - b[0])) {
    const color = weightColor(w);
    series.push({
      points: idxs.map((i) => [times[i] as number, Math.abs(values[i] as number)]),
      attrs: `stroke="${color}" stroke-width="1.5"`,
    });
    if (labels.length < 10) labels.push({ text: `w=${w}`, color });
  }
  return logSeriesFigure("|O_w(t)|: direct contributions by Pauli weight", "t J", series, labels);
}

export function renderBackflow(text: string): string {
  const t = parseCsv(text);
  requireColumns(t, ["omega_perp", "t0", "t", "overlap_abs", "osee"], "backflow");
  const wperp = numberColumn(t, "omega_perp", "backflow");
  const times = numberColumn(t, "t", "backflow");
  const overlap = numberColumn(t, "overlap_abs", "backflow");
  const osee = numberColumn(t, "osee", "backflow");
  const series: { points: [number, number][]; attrs: string }[] = [];
  const labels: { text: string; color: string }[] = [];
  for (const [w, idxs] of [...groupBy(wperp as number[]).entries()].sort((a, b) => a[0] - b[0])) {
    const rows = idxs.filter((i) => times[i] !== null); // skip no-peak warning rows
    if (rows.length === 0) continue;
    const color = weightColor(w);
    series.push({
      points: rows.map((i) => [times[i] as number, Math.abs(overlap[i] ?? 0)]),
      attrs: `stroke="${color}" stroke-width="1.5"`,
    });
    series.push({
      points: rows.map((i) => [times[i] as number, Math.max(LOG_FLOOR, osee[i] ?? 0)]),
      attrs: `stroke="${color}" stroke-width="1" stroke-dasharray="3,3"`,
    });
    labels.push({ text: `w_perp=${w}`, color });
  }
  return logSeriesFigure("backflow |O^back(t)| (solid) and OSEE (dashed)", "t J", series, labels);
}

export function renderOwe(text: string): string {
  const t = parseCsv(text);
  requireColumns(t, ["t", "omega_star", "owe"], "owe");
  const pCols = t.columns.slice(3);
  if (pCols.length === 0 || pCols[0] !== "p1") {
    throw new SchemaError(`owe: expected probability columns p1..., found ${JSON.stringify(pCols[0] ?? "<none>")}`);
  }
  // bands for the largest omega_star present
  const wsCol = numberColumn(t, "omega_star", "owe");
  const wsMax = Math.max(...finite(wsCol));
  const rows = t.rows.filter((r) => r[1] === wsMax);
  const times = rows.map((r) => r[0] as number);
  const owes = rows.map((r) => r[2] as number);
  const x = linearScale(extent(times, [0, 1]), [PLOT.x0, PLOT.x1]);
  const y = linearScale([0, 1], [PLOT.y0, PLOT.y1]);
  const body: string[] = [];
  let base = times.map(() => 0);
  for (let w = 1; w <= wsMax; w++) {
    const p = rows.map((r) => (r[2 + w] as number | null) ?? 0);
    const top = base.map((b, i) => b + p[i]);
    const up = times.map((tv, i) => `${fmt(x(tv))},${fmt(y(top[i]))}`);
    const down = [...times.keys()].reverse().map((i) => `${fmt(x(times[i]))},${fmt(y(base[i]))}`);
    body.push(
      `<polygon points="${up.join(" ")} ${down.join(" ")}" fill="${weightColor(w)}" fill-opacity="0.85" stroke="none"/>`,
    );
    base = top;
  }
  // OWE inset: normalized to its bound log2(omega_star)
  const bound = Math.log2(wsMax);
  body.push(
    polyline(
      times.map((tv, i) => [x(tv), y(owes[i] / bound)] as [number, number]),
      'stroke="black" stroke-width="2"',
    ),
  );
  body.push(
    `<text x="${PLOT.x1 - 4}" y="${PLOT.y1 + 12}" text-anchor="end" font-family="monospace" font-size="10">black: OWE / log2(${wsMax})</text>`,
  );
  body.push(...axes(x, y, "t J", "stacked p_w"));
  return svgDocument(body, `deviation distribution p_(w, w*=${wsMax})(t), stacked`);
}

export function renderSweep(text: string): string {
  const t = parseCsv(text, [2]);
  requireColumns(
    t,
    ["theta_deg", "phi_deg", "operator", "omega_star", "beta_J", "max_owe", "t_of_max"],
    "sweep",
  );
  const beta = numberColumn(t, "beta_J", "sweep");
  const maxOwe = numberColumn(t, "max_owe", "sweep");
  const phi = numberColumn(t, "phi_deg", "sweep");
  const ws = numberColumn(t, "omega_star", "sweep") as number[];
  const wsLevels = [...new Set(ws)].sort((a, b) => a - b);
  const x = linearScale(extent(finite(beta), [-1, 2]), [PLOT.x0, PLOT.x1]);
  const yHi = Math.max(1, ...finite(maxOwe));
  const y = linearScale([0, yHi * 1.05], [PLOT.y0, PLOT.y1]);
  const phiColors = new Map<number, string>();
  const palette = ["#1f77b4", "#9467bd", "#2ca02c", "#d62728", "#b8860b"];
  for (const f of [...new Set(finite(phi))].sort((a, b) => a - b)) {
    phiColors.set(f, palette[phiColors.size % palette.length]);
  }
  const body: string[] = [];
  for (let i = 0; i < t.rows.length; i++) {
    if (beta[i] === null || maxOwe[i] === null) continue;
    const rank = wsLevels.indexOf(ws[i]);
    const opacity = wsLevels.length === 1 ? 1 : 0.3 + (0.7 * rank) / (wsLevels.length - 1);
    const color = phiColors.get(phi[i] as number) ?? "#000000";
    body.push(
      `<circle cx="${fmt(x(beta[i] as number))}" cy="${fmt(y(maxOwe[i] as number))}" r="4" fill="${color}" fill-opacity="${fmt(opacity)}"/>`,
    );
  }
  let li = 0;
  for (const [f, color] of phiColors) {
    body.push(
      `<text x="${PLOT.x1 - 4}" y="${PLOT.y1 + 12 + 12 * li}" text-anchor="end" font-family="monospace" font-size="10" fill="${color}">phi=${fmt(f)}</text>`,
    );
    li += 1;
  }
  body.push(...axes(x, y, "beta J", "max OWE"));
  return svgDocument(body, "maximum OWE vs equilibration inverse temperature");
}

export const RENDERERS: Record<string, (text: string) => string> = {
  tempmap: renderTempmap,
  densities: renderDensities,
  contributions: renderContributions,
  backflow: renderBackflow,
  owe: renderOwe,
  sweep: renderSweep,
};
