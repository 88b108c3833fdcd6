/**
 * Entry point: render one figure kind from CSV input(s) to an SVG file.
 *
 *   node dist/render.js --kind tempmap --in out/tempmap.csv --out map.svg
 *
 * Multiple --in files of the same schema are concatenated (rows appended),
 * which covers multi-run comparisons on a shared figure.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { SchemaError } from "./csv.js";
import { RENDERERS } from "./figures.js";

function parseArgs(argv: string[]): { kind: string; inputs: string[]; out: string } {
  let kind = "";
  let out = "";
  const inputs: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const a = argv[i];
    if (a === "--kind") kind = argv[++i];
    else if (a === "--out") out = argv[++i];
    else if (a === "--in") {
      while (i + 1 < argv.length && !argv[i + 1].startsWith("--")) inputs.push(argv[++i]);
    } else throw new Error(`unknown argument ${a}`);
  }
  if (!kind || !out || inputs.length === 0) {
    throw new Error("usage: render --kind KIND --in FILE... --out FILE.svg");
  }
  return { kind, inputs, out };
}

export function concatCsv(texts: string[]): string {
  if (texts.length === 1) return texts[0];
  const headerOf = (t: string) =>
    t.split(/\r?\n/).find((l) => l.length > 0 && !l.startsWith("#")) ?? "";
  const head = headerOf(texts[0]);
  const parts = [texts[0].trimEnd()];
  for (const t of texts.slice(1)) {
    if (headerOf(t) !== head) throw new SchemaError("cannot concatenate CSVs with different headers");
    const body = t
      .split(/\r?\n/)
      .filter((l) => l.length > 0 && !l.startsWith("#"))
      .slice(1);
    parts.push(body.join("\n"));
  }
  return parts.join("\n") + "\n";
}

export function main(argv: string[]): number {
  let args;
  try {
    args = parseArgs(argv);
  } catch (e) {
    console.error((e as Error).message);
    return 2;
  }
  const renderer = RENDERERS[args.kind];
  if (!renderer) {
    console.error(`unknown kind ${args.kind}; have: ${Object.keys(RENDERERS).join(", ")}`);
    return 2;
  }
  try {
    const text = concatCsv(args.inputs.map((p) => readFileSync(p, "utf-8")));
    writeFileSync(args.out, renderer(text));
  } catch (e) {
    if (e instanceof SchemaError) {
      console.error(`schema error: ${e.message}`);
      return 3;
    }
    console.error((e as Error).message);
    return 1;
  }
  console.log(`${args.kind} -> ${args.out}`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("render.js")) {
  process.exit(main(process.argv.slice(2)));
}
