import type { JobDoc } from './types.js';

export interface PollOptions {
  /** First wait in milliseconds. */
  baseMs?: number;
  /** Multiplier applied after every poll. */
  factor?: number;
  /** Ceiling for the wait. */
  maxMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Next wait in the backoff schedule. */
export function nextDelay(current: number, factor = 1.5, maxMs = 5000): number {
  return Math.min(maxMs, Math.round(current * factor));
}

export class PollCancelled extends Error {
  constructor() {
    super('polling cancelled');
  }
}

export interface PollHandle {
  /** Resolves with the terminal job document; rejects on cancel(). */
  job: Promise<JobDoc>;
  cancel(): void;
}

/**
 * Poll a job until done or failed, starting at one second and backing off.
 * The caller inspects the terminal document's status; a failed job is a
 * result here, not an exception.
 */
export function pollJob(
  fetchJob: (id: string) => Promise<JobDoc>,
  jobId: string,
  options: PollOptions = {},
): PollHandle {
  const { baseMs = 1000, factor = 1.5, maxMs = 5000, sleep = defaultSleep } = options;
  let cancelled = false;
  const job = (async () => {
    let delay = baseMs;
    for (;;) {
      const doc = await fetchJob(jobId);
      if (cancelled) {
        throw new PollCancelled();
      }
      if (doc.status === 'done' || doc.status === 'failed') {
        return doc;
      }
      await sleep(delay);
      if (cancelled) {
        throw new PollCancelled();
      }
      delay = nextDelay(delay, factor, maxMs);
    }
  })();
  return { job, cancel: () => (cancelled = true) };
}
