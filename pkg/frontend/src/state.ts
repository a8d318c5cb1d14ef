import type { CellRefDoc, ChangeDoc, JobDoc, ReportDoc, SessionDoc } from './types.js';
import { sameCell } from './types.js';

export type Screen = 'input' | 'repair' | 'explanation';

/**
 * Everything the screens render from. Transitions are pure functions so the
 * invariants are enforceable in one place: the explanation screen only exists
 * with a finished job's report, a cell can only be selected if the repair
 * changed it, and a report whose revision is behind the table's is flagged.
 */
export interface ViewState {
  screen: Screen;
  session: SessionDoc | null;
  selected: CellRefDoc | null;
  jobId: string | null;
  report: ReportDoc | null;
  /** Session revision the report was computed at. */
  reportRevision: number | null;
  error: string | null;
}

export function initialState(): ViewState {
  return {
    screen: 'input',
    session: null,
    selected: null,
    jobId: null,
    report: null,
    reportRevision: null,
    error: null,
  };
}

export function changesOf(session: SessionDoc | null): ChangeDoc[] {
  return session?.changes ?? [];
}

/** Only cells the repair changed are selectable. */
export function canSelect(session: SessionDoc | null, ref: CellRefDoc): boolean {
  return changesOf(session).some((c) => c.row === ref.row && c.attr === ref.attr);
}

/** The value a changed cell had before the repair, for the hover tooltip. */
export function preRepairValue(session: SessionDoc | null, ref: CellRefDoc) {
  const change = changesOf(session).find((c) => c.row === ref.row && c.attr === ref.attr);
  return change ? change.before : undefined;
}

export function withSession(state: ViewState, session: SessionDoc): ViewState {
  return { ...state, session, screen: 'repair', selected: null, error: null };
}

export function selectCell(state: ViewState, ref: CellRefDoc): ViewState {
  if (!canSelect(state.session, ref)) {
    return state;
  }
  const already = state.selected && sameCell(state.selected, ref);
  return { ...state, selected: already ? null : ref };
}

export function jobSubmitted(state: ViewState, job: JobDoc): ViewState {
  return { ...state, jobId: job.id, error: null };
}

/** A finished job opens the explanation screen; a failed one surfaces its error. */
export function jobFinished(state: ViewState, job: JobDoc): ViewState {
  if (job.status !== 'done' || !job.result) {
    return {
      ...state,
      jobId: null,
      error: job.error ?? 'the explanation job failed',
    };
  }
  return {
    ...state,
    screen: 'explanation',
    jobId: null,
    report: job.result.report,
    reportRevision: job.revision,
    error: null,
  };
}

/**
 * Any accepted edit comes back as a fresh session document with a higher
 * revision and no cached repair, which invalidates the repair view; the
 * report (if one is on screen) stays visible but becomes stale.
 */
export function sessionEdited(state: ViewState, session: SessionDoc): ViewState {
  return { ...state, session, selected: null, error: null };
}

/** True whenever the rendered report lags the table, so a banner is due. */
export function reportIsStale(state: ViewState): boolean {
  return (
    state.report !== null &&
    state.session !== null &&
    state.reportRevision !== state.session.revision
  );
}

export function backToRepair(state: ViewState): ViewState {
  return { ...state, screen: 'repair' };
}

export function withError(state: ViewState, message: string): ViewState {
  return { ...state, error: message };
}
