import { describe, expect, it } from 'vitest';

import {
  backToRepair,
  canSelect,
  initialState,
  jobFinished,
  jobSubmitted,
  preRepairValue,
  reportIsStale,
  selectCell,
  sessionEdited,
  withSession,
} from '../src/state.js';
import type { JobDoc, ReportDoc, SessionDoc } from '../src/types.js';

const SCHEMA = ['Team', 'City', 'Country'];

function repairedSession(): SessionDoc {
  return {
    id: 's1',
    revision: 0,
    algorithm: 'reference',
    table: { schema: SCHEMA, rows: [['Real Madrid', 'Capital', 'España']] },
    constraints: ['C1: !(t1.Team = t2.Team & t1.City != t2.City)'],
    clean: { schema: SCHEMA, rows: [['Real Madrid', 'Madrid', 'Spain']] },
    changes: [
      { row: 1, attr: 'City', before: 'Capital', after: 'Madrid' },
      { row: 1, attr: 'Country', before: 'España', after: 'Spain' },
    ],
  };
}

function report(): ReportDoc {
  return {
    task: {
      target: { row: 1, attr: 'Country' },
      expected: 'Spain',
      constraints: ['C1'],
    },
    method: 'exact-enumeration',
    values: [{ player: 'C1', value: 1 }],
    ranking: ['C1'],
  };
}

function doneJob(): JobDoc {
  return {
    id: 'j1',
    session: 's1',
    revision: 0,
    target: { row: 1, attr: 'Country' },
    mode: 'constraints',
    params: null,
    status: 'done',
    result: { report: report() },
    error: null,
    stale: false,
  };
}

describe('selection', () => {
  it('is restricted to cells the repair changed', () => {
    const session = repairedSession();
    expect(canSelect(session, { row: 1, attr: 'City' })).toBe(true);
    expect(canSelect(session, { row: 1, attr: 'Team' })).toBe(false);

    const state = withSession(initialState(), session);
    const picked = selectCell(state, { row: 1, attr: 'Country' });
    expect(picked.selected).toEqual({ row: 1, attr: 'Country' });
    // an unchanged cell offers no selection at all
    expect(selectCell(state, { row: 1, attr: 'Team' })).toBe(state);
  });

  it('toggles off when the same cell is clicked again', () => {
    const state = withSession(initialState(), repairedSession());
    const once = selectCell(state, { row: 1, attr: 'City' });
    expect(selectCell(once, { row: 1, attr: 'City' }).selected).toBeNull();
  });

  it('exposes the pre-repair value for the hover tooltip', () => {
    const session = repairedSession();
    expect(preRepairValue(session, { row: 1, attr: 'Country' })).toBe('España');
    expect(preRepairValue(session, { row: 1, attr: 'Team' })).toBeUndefined();
  });
});

describe('explanation jobs', () => {
  it('opens the explanation screen only for a done job with a report', () => {
    const state = withSession(initialState(), repairedSession());
    const submitted = jobSubmitted(state, { ...doneJob(), status: 'pending', result: null });
    expect(submitted.jobId).toBe('j1');

    const finished = jobFinished(submitted, doneJob());
    expect(finished.screen).toBe('explanation');
    expect(finished.report?.method).toBe('exact-enumeration');
    expect(finished.reportRevision).toBe(0);
    expect(finished.jobId).toBeNull();
  });

  it('surfaces a failed job as an error and stays on the repair screen', () => {
    const state = withSession(initialState(), repairedSession());
    const failed: JobDoc = {
      ...doneJob(),
      status: 'failed',
      result: null,
      error: 'BlackBoxError: adapter died',
    };
    const after = jobFinished(jobSubmitted(state, failed), failed);
    expect(after.screen).toBe('repair');
    expect(after.error).toContain('BlackBoxError');
    expect(after.report).toBeNull();
  });
});

describe('staleness', () => {
  it('flags a report computed at an older revision', () => {
    const state = jobFinished(withSession(initialState(), repairedSession()), doneJob());
    expect(reportIsStale(state)).toBe(false);

    // a constraint edit bumps the revision and drops the cached repair
    const edited: SessionDoc = {
      ...repairedSession(),
      revision: 1,
      constraints: [],
      clean: null,
      changes: null,
    };
    const after = sessionEdited(state, edited);
    expect(reportIsStale(after)).toBe(true);
    expect(after.report).not.toBeNull();
  });

  it('clears the selection on any edit, since the change list is gone', () => {
    const state = selectCell(withSession(initialState(), repairedSession()), {
      row: 1,
      attr: 'City',
    });
    const after = sessionEdited(state, { ...repairedSession(), revision: 1, clean: null, changes: null });
    expect(after.selected).toBeNull();
  });

  it('a fresh repair at the new revision clears the flag', () => {
    const stale = sessionEdited(
      jobFinished(withSession(initialState(), repairedSession()), doneJob()),
      { ...repairedSession(), revision: 1, clean: null, changes: null },
    );
    const rerepaired = { ...repairedSession(), revision: 1 };
    const again = jobFinished(
      { ...stale, session: rerepaired },
      { ...doneJob(), revision: 1 },
    );
    expect(reportIsStale(again)).toBe(false);
  });
});

describe('navigation', () => {
  it('returns to the repair screen without losing the session', () => {
    const state = jobFinished(withSession(initialState(), repairedSession()), doneJob());
    const back = backToRepair(state);
    expect(back.screen).toBe('repair');
    expect(back.session?.id).toBe('s1');
  });
});
