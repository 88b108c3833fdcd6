import { readFileSync } from "node:fs";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { parseCsv, SchemaError } from "../src/csv.js";
import { RENDERERS } from "../src/figures.js";
import { concatCsv } from "../src/render.js";

const FIXTURES = join(__dirname, "..", "fixtures");

const KINDS: [string, string][] = [
  ["tempmap", "tempmap.csv"],
  ["densities", "densities.csv"],
  ["contributions", "contributions.csv"],
  ["backflow", "backflow.csv"],
  ["owe", "owe.csv"],
  ["sweep", "sweep.csv"],
];

function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

describe("figure renderers", () => {
  for (const [kind, file] of KINDS) {
    it(`${kind} renders without error`, () => {
      const svg = RENDERERS[kind](fixture(file));
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg).toContain("</svg>");
    });

    it(`${kind} is deterministic (identical bytes on rerun)`, () => {
      const text = fixture(file);
      const a = Buffer.from(RENDERERS[kind](text), "utf-8");
      const b = Buffer.from(RENDERERS[kind](text), "utf-8");
      expect(a.equals(b)).toBe(true);
    });
  }

  it("owe stacked bands sum to full height at every time", () => {
    const table = parseCsv(fixture("owe.csv"));
    const wsMax = Math.max(...table.rows.map((r) => r[1] as number));
    for (const row of table.rows.filter((r) => r[1] === wsMax)) {
      const ps = row.slice(3, 3 + wsMax).map((v) => (v as number | null) ?? 0);
      const total = ps.reduce((a, b) => a + b, 0);
      // either a full distribution or the flagged degenerate time (all zero)
      expect(Math.abs(total - 1) < 1e-9 || total === 0).toBe(true);
    }
    // and the rendered polygons reach the top of the axis for a healthy time
    const svg = RENDERERS.owe(fixture("owe.csv"));
    const polys = svg.match(/<polygon[^>]*>/g) ?? [];
    expect(polys.length).toBe(wsMax);
  });

  it("tempmap uses a diverging scheme with white at beta = 0", () => {
    const header = "theta_deg,phi_deg,beta_J,T_J,energy_per_site";
    const rows = [
      "0.0,0.0,1.0,1.0,-1.5",
      "90.0,0.0,0.0,inf,0.0",
      "180.0,0.0,-1.0,-1.0,1.5",
    ];
    const svg = RENDERERS.tempmap([header, ...rows, ""].join("\n"));
    expect(svg).toContain('fill="rgb(255,255,255)"'); // beta = 0 cell
    expect(svg).toContain('fill="rgb(178,24,43)"'); // strongest positive beta
    expect(svg).toContain('fill="rgb(33,102,172)"'); // strongest negative beta
  });

  it("sweep encodes omega_star as three opacity levels", () => {
    const svg = RENDERERS.sweep(fixture("sweep.csv"));
    for (const op of ["0.300", "0.650", "1.000"]) {
      expect(svg).toContain(`fill-opacity="${op}"`);
    }
  });

  it("backflow skips no-peak warning rows", () => {
    const header = "omega_perp,t0,t,overlap_abs,osee";
    const text = [header, "1,,,,", "2,0.5,0.5,0.0,0.1", "2,0.5,0.6,0.01,0.2", ""].join("\n");
    const svg = RENDERERS.backflow(text);
    expect(svg).toContain("w_perp=2");
    expect(svg).not.toContain("w_perp=1");
  });

  it("schema mismatches fail naming the offending column", () => {
    expect(() => RENDERERS.densities("t,kind,value\n0,c,1\n")).toThrowError(
      /expected column 2 to be "omega"/,
    );
    expect(() => RENDERERS.owe("t,omega_star,owe,q1\n0,1,0,0\n")).toThrowError(/p1/);
    expect(() =>
      RENDERERS.tempmap("theta_deg,phi_deg,beta\n0,0,1\n"),
    ).toThrowError(SchemaError);
  });

  it("concatCsv appends rows of matching schemas only", () => {
    const a = "# c\nt,omega,value\n0.0,1,0.5\n";
    const b = "t,omega,value\n1.0,1,0.25\n";
    const joined = concatCsv([a, b]);
    expect(parseCsv(joined).rows.length).toBe(2);
    expect(() => concatCsv([a, "t,w\n0,1\n"])).toThrowError(SchemaError);
  });

  it("non-numeric payload cells are rejected", () => {
    expect(() => parseCsv("t,omega,value\n0.0,1,abc\n")).toThrowError(SchemaError);
  });
});
