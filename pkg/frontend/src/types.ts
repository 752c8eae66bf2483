/** Payload shapes returned by the retrieval API (mirrors the server). */

export interface HitPayload {
  entry_id: string;
  rank: number;
  similarity: number;
  caption: string;
  modality: string;
  image_url: string;
}

export interface QueryResponse {
  query: string;
  stage1_hits: HitPayload[];
  context_captions: string[];
  enriched_caption: string;
  final: HitPayload;
  synthetic_image_url: string | null;
  warnings: string[];
  timings_ms: Record<string, number>;
}

export interface DualBranchPayload {
  prompt_used: string;
  hit: HitPayload;
  synthetic_image_url: string | null;
}

export interface DualResponse {
  original: DualBranchPayload;
  modified: DualBranchPayload;
  modified_similarity_to_original: number;
  revised_description: string | null;
  warnings: string[];
  timings_ms: Record<string, number>;
}

export interface HealthResponse {
  status: string;
  entries: number;
  backend_mode: string;
}

export type QueryMode = 'single' | 'dual';

export interface QueryFormState {
  text: string;
  subtract: string;
  add: string;
  k: number;
  mode: QueryMode;
}

/** Compact record of one answered query, enough to redraw the history list. */
export interface ResponseSummary {
  entryIds: string[];
  similarities: number[];
  imageUrls: string[];
}

export interface SessionHistoryItem {
  timestamp: string;
  form: QueryFormState;
  summary: ResponseSummary;
}
