/** Documents exchanged with the repairlens service, as plain JSON shapes. */

export type CellValue = string | number | null;

export interface TableDoc {
  schema: string[];
  rows: CellValue[][];
}

export interface CellRefDoc {
  row: number;
  attr: string;
}

export interface ChangeDoc {
  row: number;
  attr: string;
  before: CellValue;
  after: CellValue;
}

export interface SessionDoc {
  id: string;
  revision: number;
  algorithm: string;
  table: TableDoc;
  constraints: string[];
  clean: TableDoc | null;
  changes: ChangeDoc[] | null;
}

/** Exact rational with a pre-rendered decimal for display. */
export interface FractionDoc {
  num: number;
  den: number;
  decimal: string;
}

export type Player = string | CellRefDoc;

export interface ReportEntry {
  player: Player;
  value: number | FractionDoc;
  stderr?: number;
}

export interface ReportDoc {
  task: { target: CellRefDoc; expected: CellValue; constraints: string[] };
  method: string;
  imputation?: string;
  samples?: number;
  seed?: number;
  values: ReportEntry[];
  ranking: Player[];
}

export type JobStatus = 'pending' | 'running' | 'done' | 'failed';

export interface JobDoc {
  id: string;
  session: string;
  revision: number;
  target: CellRefDoc;
  mode: 'constraints' | 'cells';
  params: { m: number; seed: number; imputation: string } | null;
  status: JobStatus;
  result: { report: ReportDoc } | null;
  error: string | null;
  stale: boolean;
}

export interface ErrorDoc {
  error: { type: string; message: string; line?: number; column?: number };
}

/** "C3" for a constraint player, "5:Country" for a cell player. */
export function playerKey(player: Player): string {
  return typeof player === 'string' ? player : `${player.row}:${player.attr}`;
}

export function sameCell(a: CellRefDoc, b: CellRefDoc): boolean {
  return a.row === b.row && a.attr === b.attr;
}
