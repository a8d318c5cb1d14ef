import type {
  CellRefDoc,
  CellValue,
  ErrorDoc,
  JobDoc,
  SessionDoc,
} from './types.js';

export interface RepairResult {
  revision: number;
  clean: SessionDoc['table'];
  changes: NonNullable<SessionDoc['changes']>;
}

/** A non-2xx service response, carrying the typed error document. */
export class ServiceError extends Error {
  readonly status: number;
  readonly type: string;
  readonly line?: number;
  readonly column?: number;

  constructor(status: number, doc: ErrorDoc['error']) {
    super(doc.message);
    this.status = status;
    this.type = doc.type;
    this.line = doc.line;
    this.column = doc.column;
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/**
 * Thin typed client over the service endpoints. The fetch implementation is
 * injectable so tests can run without a server.
 */
export class ServiceClient {
  private readonly base: string;
  private readonly fetchImpl: FetchLike;

  constructor(base = '', fetchImpl: FetchLike = (url, init) => fetch(url, init)) {
    this.base = base.replace(/\/$/, '');
    this.fetchImpl = fetchImpl;
  }

  private async call<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.body = JSON.stringify(body);
      init.headers = { 'content-type': 'application/json' };
    }
    const resp = await this.fetchImpl(this.base + path, init);
    if (resp.status === 204) {
      return undefined as T;
    }
    const text = await resp.text();
    let doc: unknown;
    try {
      doc = JSON.parse(text);
    } catch {
      throw new ServiceError(resp.status, {
        type: 'BadResponse',
        message: `the service returned non-JSON (status ${resp.status})`,
      });
    }
    if (!resp.ok) {
      const err = (doc as ErrorDoc).error ?? {
        type: 'Unknown',
        message: `status ${resp.status}`,
      };
      throw new ServiceError(resp.status, err);
    }
    return doc as T;
  }

  createSession(tableCsv: string, dcText: string, algorithm = 'reference'): Promise<SessionDoc> {
    return this.call('POST', '/sessions', {
      table_csv: tableCsv,
      dc_text: dcText,
      algorithm,
    });
  }

  getSession(id: string): Promise<SessionDoc> {
    return this.call('GET', `/sessions/${id}`);
  }

  repair(id: string): Promise<RepairResult> {
    return this.call('POST', `/sessions/${id}/repair`);
  }

  explain(
    id: string,
    target: CellRefDoc,
    mode: 'constraints' | 'cells',
    params?: { m?: number; seed?: number; imputation?: string },
  ): Promise<JobDoc> {
    const body: Record<string, unknown> = { target, mode };
    if (params) {
      body.params = params;
    }
    return this.call('POST', `/sessions/${id}/explain`, body);
  }

  getJob(id: string): Promise<JobDoc> {
    return this.call('GET', `/jobs/${id}`);
  }

  editCell(id: string, ref: CellRefDoc, value: CellValue): Promise<SessionDoc> {
    return this.call('PATCH', `/sessions/${id}/cells`, {
      row: ref.row,
      attr: ref.attr,
      value,
    });
  }

  editConstraints(id: string, dcText: string): Promise<SessionDoc> {
    return this.call('PUT', `/sessions/${id}/constraints`, { dc_text: dcText });
  }

  deleteSession(id: string): Promise<void> {
    return this.call('DELETE', `/sessions/${id}`);
  }
}
