/** Thin fetch client for the retrieval API. No retrieval logic lives here:
 * the engine is the single source of truth and this module only moves JSON.
 */

import type { DualResponse, HealthResponse, QueryResponse } from './types';

export class ApiRequestError extends Error {
  /** HTTP status; 0 means the server was unreachable. */
  readonly status: number;
  /** Pipeline stage reported by the server, when it knows one. */
  readonly stage?: string;

  constructor(status: number, message: string, stage?: string) {
    super(message);
    this.name = 'ApiRequestError';
    this.status = status;
    this.stage = stage;
  }
}

async function postJson<T>(url: string, body: unknown): Promise<T> {
  let response: Response;
  try {
    response = await fetch(url, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  } catch (err) {
    throw new ApiRequestError(0, `server unreachable: ${(err as Error).message}`);
  }
  let payload: unknown = null;
  try {
    payload = await response.json();
  } catch {
    // Non-JSON body; fall through with the status alone.
  }
  if (!response.ok) {
    const data = (payload ?? {}) as { error?: string; stage?: string };
    throw new ApiRequestError(
      response.status,
      data.error ?? `request failed with status ${response.status}`,
      data.stage,
    );
  }
  return payload as T;
}

export class ApiClient {
  constructor(readonly baseUrl: string = '') {}

  private url(path: string): string {
    return `${this.baseUrl.replace(/\/$/, '')}${path}`;
  }

  query(text: string, k: number): Promise<QueryResponse> {
    return postJson<QueryResponse>(this.url('/api/query'), { text, k });
  }

  dual(text: string, subtract: string, add: string, k: number): Promise<DualResponse> {
    return postJson<DualResponse>(this.url('/api/dual'), { text, subtract, add, k });
  }

  async health(): Promise<HealthResponse> {
    const response = await fetch(this.url('/health'));
    return (await response.json()) as HealthResponse;
  }
}
