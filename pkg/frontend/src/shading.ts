import type { FractionDoc, ReportEntry } from './types.js';
import { playerKey } from './types.js';

/**
 * Shapley values map onto a discrete 5-step green scale: the largest value
 * gets the darkest step, zero gets no shading at all, and the mapping is
 * monotone, so a cell never looks darker than one with a larger value.
 * Negative values (possible, though unusual) get their own red scale keyed
 * by magnitude so they cannot be confused with influence.
 */

export const STEPS = 5;

export function numericValue(value: number | FractionDoc): number {
  if (typeof value === 'number') {
    return value;
  }
  return value.num / value.den;
}

// bucket 1..STEPS for a positive share of the maximum; full scale at 1.0
function bucket(share: number): number {
  const step = Math.ceil(share * STEPS);
  return Math.min(STEPS, Math.max(1, step));
}

/**
 * CSS class for one value given the report's extremes: "shade-g1".."shade-g5"
 * for positive values, "shade-r1".."shade-r5" for negative ones, "" for zero.
 */
export function shadeClass(value: number, maxPositive: number, maxNegative: number): string {
  if (value > 0 && maxPositive > 0) {
    return `shade-g${bucket(value / maxPositive)}`;
  }
  if (value < 0 && maxNegative > 0) {
    return `shade-r${bucket(-value / maxNegative)}`;
  }
  return '';
}

/**
 * Shade every player of a report. Returns a map from player key ("C3",
 * "5:Country") to a CSS class, empty string meaning unshaded.
 */
export function shadingFor(entries: ReportEntry[]): Map<string, string> {
  let maxPositive = 0;
  let maxNegative = 0;
  for (const entry of entries) {
    const v = numericValue(entry.value);
    if (v > maxPositive) {
      maxPositive = v;
    }
    if (-v > maxNegative) {
      maxNegative = -v;
    }
  }
  const out = new Map<string, string>();
  for (const entry of entries) {
    const v = numericValue(entry.value);
    out.set(playerKey(entry.player), shadeClass(v, maxPositive, maxNegative));
  }
  return out;
}

/** Darkness rank of a shade class for comparisons: g5 -> 5, "" -> 0, r* < 0. */
export function darkness(cls: string): number {
  const match = /^shade-([gr])(\d)$/.exec(cls);
  if (!match) {
    return 0;
  }
  const step = Number(match[2]);
  return match[1] === 'g' ? step : -step;
}

/** Human text for a value, used by tooltips: "2/3 (0.666666666667)". */
export function valueLabel(value: number | FractionDoc, stderr?: number): string {
  let text: string;
  if (typeof value === 'number') {
    text = value.toPrecision(6).replace(/\.?0+$/, '');
  } else {
    text = `${value.num}/${value.den} (${value.decimal})`;
  }
  if (stderr !== undefined) {
    text += ` ± ${stderr.toPrecision(3)}`;
  }
  return text;
}
