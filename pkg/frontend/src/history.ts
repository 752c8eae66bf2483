/** Append-only session history, persisted in the browser's localStorage so
 * it survives reloads. Clicking an item restores the form (never
 * auto-submits), which lets each answer inform the next query.
 */

import type {
  DualResponse,
  QueryFormState,
  QueryResponse,
  ResponseSummary,
  SessionHistoryItem,
} from './types';

const STORAGE_KEY = 'mirage.history.v1';

export function summarizeSingle(response: QueryResponse): ResponseSummary {
  const summary: ResponseSummary = {
    entryIds: [response.final.entry_id],
    similarities: [response.final.similarity],
    imageUrls: [response.final.image_url],
  };
  if (response.synthetic_image_url) {
    summary.imageUrls.push(response.synthetic_image_url);
  }
  return summary;
}

export function summarizeDual(response: DualResponse): ResponseSummary {
  const branches = [response.original, response.modified];
  return {
    entryIds: branches.map((b) => b.hit.entry_id),
    similarities: branches.map((b) => b.hit.similarity),
    imageUrls: branches.flatMap((b) =>
      b.synthetic_image_url ? [b.hit.image_url, b.synthetic_image_url] : [b.hit.image_url],
    ),
  };
}

export class SessionHistory {
  constructor(
    private readonly storage: Storage,
    private readonly key: string = STORAGE_KEY,
  ) {}

  load(): SessionHistoryItem[] {
    const raw = this.storage.getItem(this.key);
    if (!raw) {
      return [];
    }
    try {
      const parsed = JSON.parse(raw) as SessionHistoryItem[];
      return Array.isArray(parsed) ? parsed : [];
    } catch {
      return [];
    }
  }

  append(form: QueryFormState, summary: ResponseSummary, timestamp?: string): SessionHistoryItem {
    const item: SessionHistoryItem = {
      timestamp: timestamp ?? new Date().toISOString(),
      form: { ...form },
      summary,
    };
    const items = this.load();
    items.push(item);
    this.storage.setItem(this.key, JSON.stringify(items));
    return item;
  }
}
