import type { CellRefDoc, CellValue, ChangeDoc, TableDoc } from './types.js';
import { sameCell } from './types.js';

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

export function cellText(value: CellValue): string {
  if (value === null) {
    return '';
  }
  return String(value);
}

export interface GridOptions {
  /** Cells the repair changed, with their pre-repair values for the tooltip. */
  changes?: ChangeDoc[];
  selected?: CellRefDoc | null;
  /** player key ("5:Country") -> shade class */
  shading?: Map<string, string>;
  /** player key -> tooltip text (numeric Shapley values) */
  tooltips?: Map<string, string>;
}

/**
 * Render a table as HTML. Changed cells are marked and carry their
 * pre-repair value as the hover title; rows are 1-based like everywhere
 * else in the system.
 */
export function renderGrid(table: TableDoc, options: GridOptions = {}): string {
  const changes = options.changes ?? [];
  const changedAt = new Map(changes.map((c) => [`${c.row}:${c.attr}`, c]));
  const head = table.schema.map((a) => `<th>${escapeHtml(a)}</th>`).join('');
  const body = table.rows
    .map((row, i) => {
      const cells = row
        .map((value, j) => {
          const attr = table.schema[j];
          const key = `${i + 1}:${attr}`;
          const change = changedAt.get(key);
          const classes: string[] = [];
          let title = '';
          if (value === null) {
            classes.push('null');
          }
          if (change) {
            classes.push('changed');
            title = `before: ${cellText(change.before)}`;
          }
          if (options.selected && sameCell(options.selected, { row: i + 1, attr })) {
            classes.push('selected');
          }
          const shade = options.shading?.get(key);
          if (shade) {
            classes.push(shade);
          }
          const tip = options.tooltips?.get(key);
          if (tip) {
            title = title ? `${title}; ${tip}` : tip;
          }
          const cls = classes.length ? ` class="${classes.join(' ')}"` : '';
          const titleAttr = title ? ` title="${escapeHtml(title)}"` : '';
          const select = change ? ' data-selectable="1"' : '';
          return (
            `<td${cls}${titleAttr} data-row="${i + 1}" ` +
            `data-attr="${escapeHtml(attr)}"${select}>${escapeHtml(cellText(value))}</td>`
          );
        })
        .join('');
      return `<tr><th>${i + 1}</th>${cells}</tr>`;
    })
    .join('');
  return `<table class="grid"><thead><tr><th></th>${head}</tr></thead><tbody>${body}</tbody></table>`;
}

/** "C2: !(t1.City = t2.City ...)" -> "C2" */
export function constraintId(text: string): string {
  const idx = text.indexOf(':');
  return idx < 0 ? text.trim() : text.slice(0, idx).trim();
}

/**
 * Render the constraint list; when shading is given each line is colored by
 * its constraint's Shapley value and titled with the numeric value.
 */
export function renderConstraints(
  texts: string[],
  shading?: Map<string, string>,
  tooltips?: Map<string, string>,
): string {
  const items = texts
    .map((text) => {
      const id = constraintId(text);
      const shade = shading?.get(id);
      const cls = shade ? ` class="${shade}"` : '';
      const tip = tooltips?.get(id);
      const title = tip ? ` title="${escapeHtml(tip)}"` : '';
      return `<li${cls}${title} data-dc="${escapeHtml(id)}"><code>${escapeHtml(text)}</code></li>`;
    })
    .join('');
  return `<ul class="constraints">${items}</ul>`;
}
