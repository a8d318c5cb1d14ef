import { ServiceClient, ServiceError } from './api.js';
import { pollJob, type PollHandle } from './polling.js';
import { cellText, escapeHtml, renderConstraints, renderGrid } from './render.js';
import { playerKey, type CellRefDoc } from './types.js';
import { shadingFor, valueLabel } from './shading.js';
import {
  backToRepair,
  initialState,
  jobFinished,
  jobSubmitted,
  reportIsStale,
  selectCell,
  sessionEdited,
  withError,
  withSession,
  type ViewState,
} from './state.js';

const client = new ServiceClient('');
let state: ViewState = initialState();
let polling: PollHandle | null = null;

const app = document.getElementById('app') as HTMLElement;

function set(next: ViewState): void {
  state = next;
  render();
}

function describe(err: unknown): string {
  if (err instanceof ServiceError) {
    const where = err.line !== undefined ? ` (line ${err.line})` : '';
    return `${err.type}: ${err.message}${where}`;
  }
  return String(err);
}

async function runRepair(): Promise<void> {
  const session = state.session;
  if (!session) {
    return;
  }
  try {
    await client.repair(session.id);
    set(withSession(state, await client.getSession(session.id)));
  } catch (err) {
    set(withError(state, describe(err)));
  }
}

async function createAndRepair(csv: string, dcText: string, algorithm: string): Promise<void> {
  try {
    const session = await client.createSession(csv, dcText, algorithm || 'reference');
    set(withSession(state, session));
    await runRepair();
  } catch (err) {
    set(withError(state, describe(err)));
  }
}

function explain(mode: 'constraints' | 'cells'): void {
  const session = state.session;
  const target = state.selected;
  if (!session || !target) {
    return;
  }
  polling?.cancel();
  client
    .explain(session.id, target, mode)
    .then((job) => {
      set(jobSubmitted(state, job));
      polling = pollJob((id) => client.getJob(id), job.id);
      return polling.job;
    })
    .then((job) => set(jobFinished(state, job)))
    .catch((err) => set(withError({ ...state, jobId: null }, describe(err))));
}

async function editCell(ref: CellRefDoc): Promise<void> {
  const session = state.session;
  if (!session) {
    return;
  }
  const current = session.table.rows[ref.row - 1][session.table.schema.indexOf(ref.attr)];
  const entry = prompt(`${ref.row}:${ref.attr}`, current === null ? '' : String(current));
  if (entry === null) {
    return;
  }
  // numeric-looking input becomes a number, "null" clears, the rest is text
  let value: string | number | null = entry;
  if (entry === 'null' || entry === '') {
    value = null;
  } else if (/^-?\d+(\.\d+)?([eE][+-]?\d+)?$/.test(entry)) {
    value = Number(entry);
  }
  try {
    set(sessionEdited(state, await client.editCell(session.id, ref, value)));
  } catch (err) {
    set(withError(state, describe(err)));
  }
}

async function saveConstraints(text: string): Promise<void> {
  const session = state.session;
  if (!session) {
    return;
  }
  try {
    set(sessionEdited(state, await client.editConstraints(session.id, text)));
  } catch (err) {
    set(withError(state, describe(err)));
  }
}

function errorBar(): string {
  return state.error ? `<div class="error">${escapeHtml(state.error)}</div>` : '';
}

function renderInput(): string {
  return `
    <h1>repairlens</h1>
    <p>Paste a CSV table and its denial constraints, then repair.</p>
    ${errorBar()}
    <label>Table (CSV)</label>
    <textarea id="csv" rows="10" spellcheck="false"></textarea>
    <label>Denial constraints</label>
    <textarea id="dcs" rows="6" spellcheck="false"></textarea>
    <label>Algorithm</label>
    <input id="algorithm" value="reference">
    <button id="go">Repair</button>`;
}

function renderRepair(): string {
  const session = state.session;
  if (!session) {
    return renderInput();
  }
  const shown = session.clean ?? session.table;
  const grid = renderGrid(shown, {
    changes: session.changes ?? [],
    selected: state.selected,
  });
  const busy = state.jobId ? '<div class="busy">explaining&hellip;</div>' : '';
  const can = state.selected !== null && !state.jobId;
  return `
    <h1>repair</h1>
    ${errorBar()}${busy}
    <p>${(session.changes ?? []).length} cell(s) repaired.
       Click a highlighted cell, then explain it.</p>
    ${grid}
    ${renderConstraints(session.constraints)}
    <button id="explain-constraints" ${can ? '' : 'disabled'}>Explain (constraints)</button>
    <button id="explain-cells" ${can ? '' : 'disabled'}>Explain (cells)</button>
    <button id="restart">New session</button>`;
}

function renderExplanation(): string {
  const session = state.session;
  const report = state.report;
  if (!session || !report) {
    return renderRepair();
  }
  const target = report.task.target;
  const shading = shadingFor(report.values);
  const tooltips = new Map(
    report.values.map((e) => [playerKey(e.player), valueLabel(e.value, e.stderr)]),
  );
  const banner = reportIsStale(state)
    ? '<div class="banner">The table changed after this explanation was computed.</div>'
    : '';
  const constraintMode = report.values.every((e) => typeof e.player === 'string');
  const grid = renderGrid(session.clean ?? session.table, {
    changes: session.changes ?? [],
    selected: target,
    shading: constraintMode ? undefined : shading,
    tooltips: constraintMode ? undefined : tooltips,
  });
  const constraints = renderConstraints(
    session.constraints,
    constraintMode ? shading : undefined,
    constraintMode ? tooltips : undefined,
  );
  return `
    <h1>why ${target.row}:${escapeHtml(target.attr)} &rarr; ${escapeHtml(cellText(report.task.expected))}</h1>
    ${errorBar()}${banner}
    <p>${report.method}${report.samples ? ` (m=${report.samples}, ${report.imputation})` : ''};
       darker green means more influence. Hover for values.
       Double-click a cell to edit it.</p>
    ${grid}
    ${constraints}
    <label>Edit constraints</label>
    <textarea id="dc-edit" rows="6" spellcheck="false">${escapeHtml(session.constraints.join('\n'))}</textarea>
    <button id="save-dcs">Save constraints</button>
    <button id="re-repair">Re-repair</button>
    <button id="back">Back to table</button>`;
}

function render(): void {
  if (state.screen === 'input') {
    app.innerHTML = renderInput();
  } else if (state.screen === 'repair') {
    app.innerHTML = renderRepair();
  } else {
    app.innerHTML = renderExplanation();
  }
}

app.addEventListener('click', (event) => {
  const el = event.target as HTMLElement;
  if (el.id === 'go') {
    const csv = (document.getElementById('csv') as HTMLTextAreaElement).value;
    const dcs = (document.getElementById('dcs') as HTMLTextAreaElement).value;
    const algorithm = (document.getElementById('algorithm') as HTMLInputElement).value;
    void createAndRepair(csv, dcs, algorithm);
    return;
  }
  if (el.id === 'explain-constraints') {
    explain('constraints');
    return;
  }
  if (el.id === 'explain-cells') {
    explain('cells');
    return;
  }
  if (el.id === 'restart') {
    polling?.cancel();
    set(initialState());
    return;
  }
  if (el.id === 'save-dcs') {
    void saveConstraints((document.getElementById('dc-edit') as HTMLTextAreaElement).value);
    return;
  }
  if (el.id === 're-repair') {
    set(backToRepair(state));
    void runRepair();
    return;
  }
  if (el.id === 'back') {
    set(backToRepair(state));
    return;
  }
  const cell = el.closest('td[data-selectable]');
  if (cell && state.screen === 'repair') {
    const ref = {
      row: Number(cell.getAttribute('data-row')),
      attr: cell.getAttribute('data-attr') ?? '',
    };
    set(selectCell(state, ref));
  }
});

app.addEventListener('dblclick', (event) => {
  if (state.screen !== 'explanation') {
    return;
  }
  const cell = (event.target as HTMLElement).closest('td[data-row]');
  if (cell) {
    void editCell({
      row: Number(cell.getAttribute('data-row')),
      attr: cell.getAttribute('data-attr') ?? '',
    });
  }
});

render();
