/**
 * CSV ingestion for the opspread output schemas.
 *
 * Files begin with `# opspread=... config=...` comment lines, then a header
 * row, then data rows. Cells are numeric except in declared string columns
 * ("kind", "operator"); numeric cells may be empty (ragged owe rows, no-peak
 * backflow rows) or the literal `inf` / `-inf`.
 */

export type Cell = number | string | null;

export interface Table {
  columns: string[];
  rows: Cell[][];
}

export class SchemaError extends Error {}

function parseCell(cell: string): number | null {
  if (cell === "") return null;
  if (cell === "inf") return Infinity;
  if (cell === "-inf") return -Infinity;
  const v = Number(cell);
  if (Number.isNaN(v)) throw new SchemaError(`non-numeric cell ${JSON.stringify(cell)}`);
  return v;
}

export function parseCsv(text: string, stringCols: number[] = []): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0 && !l.startsWith("#"));
  if (lines.length === 0) throw new SchemaError("empty CSV");
  const columns = lines[0].split(",");
  const strings = new Set(stringCols);
  const rows: Cell[][] = [];
  for (const line of lines.slice(1)) {
    rows.push(line.split(",").map((c, i) => (strings.has(i) ? c : parseCell(c))));
  }
  return { columns, rows };
}

/** Assert the header starts with the expected column names (prefix match so
 * the ragged p1..pN tail of owe.csv can vary in width). */
export function requireColumns(table: Table, expected: string[], kind: string): void {
  for (let i = 0; i < expected.length; i++) {
    if (table.columns[i] !== expected[i]) {
      throw new SchemaError(
        `${kind}: expected column ${i} to be ${JSON.stringify(expected[i])}, ` +
          `found ${JSON.stringify(table.columns[i] ?? "<missing>")}`,
      );
    }
  }
}

export function numberColumn(table: Table, name: string, kind: string): (number | null)[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new SchemaError(`${kind}: missing column ${JSON.stringify(name)}`);
  return table.rows.map((r) => {
    const v = r[idx];
    if (typeof v === "string") throw new SchemaError(`${kind}: column ${name} is not numeric`);
    return v;
  });
}

export function textColumn(table: Table, name: string, kind: string): string[] {
  const idx = table.columns.indexOf(name);
  if (idx < 0) throw new SchemaError(`${kind}: missing column ${JSON.stringify(name)}`);
  return table.rows.map((r) => String(r[idx]));
}
