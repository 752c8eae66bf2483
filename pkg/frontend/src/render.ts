/** DOM builders for result panels and error banners.
 *
 * Similarity values are displayed verbatim from the API payload
 * (String(value)); no client-side rounding.
 */

import { ApiRequestError } from './api';
import type { DualBranchPayload, DualResponse, HitPayload, QueryResponse } from './types';

export function formatSimilarity(value: number): string {
  return String(value);
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function imagePanel(
  doc: Document,
  label: string,
  url: string | null,
  testId: string,
): HTMLElement {
  const panel = el(doc, 'figure', 'image-panel');
  panel.dataset.testid = testId;
  if (url) {
    const img = el(doc, 'img');
    img.src = url;
    img.alt = label;
    panel.appendChild(img);
  } else {
    panel.appendChild(el(doc, 'div', 'image-missing', 'image unavailable'));
  }
  panel.appendChild(el(doc, 'figcaption', undefined, label));
  return panel;
}

function hitDetails(doc: Document, hit: HitPayload): HTMLElement {
  const details = el(doc, 'div', 'hit-details');
  const sim = el(doc, 'span', 'similarity', formatSimilarity(hit.similarity));
  sim.dataset.testid = 'similarity';
  details.appendChild(el(doc, 'span', 'entry-id', hit.entry_id));
  details.appendChild(sim);
  details.appendChild(el(doc, 'p', 'caption', hit.caption));
  return details;
}

export function renderSingleResult(doc: Document, payload: QueryResponse): HTMLElement {
  const root = el(doc, 'section', 'result single-result');

  const best = el(doc, 'div', 'best-match');
  best.appendChild(imagePanel(doc, `retrieved: ${payload.final.caption}`, payload.final.image_url, 'retrieved-image'));
  best.appendChild(hitDetails(doc, payload.final));
  root.appendChild(best);

  const enriched = el(doc, 'blockquote', 'enriched-caption', payload.enriched_caption);
  enriched.dataset.testid = 'enriched-caption';
  root.appendChild(enriched);

  root.appendChild(
    imagePanel(doc, `synthetic image for: ${payload.query}`, payload.synthetic_image_url, 'synthetic-image'),
  );

  const hits = el(doc, 'ol', 'stage1-hits');
  for (const hit of payload.stage1_hits) {
    const item = el(doc, 'li');
    item.appendChild(hitDetails(doc, hit));
    hits.appendChild(item);
  }
  root.appendChild(hits);

  for (const warning of payload.warnings) {
    root.appendChild(el(doc, 'p', 'warning', warning));
  }
  return root;
}

function branchColumn(
  doc: Document,
  name: 'original' | 'modified',
  heading: string,
  branch: DualBranchPayload,
): HTMLElement {
  const column = el(doc, 'div', `branch branch-${name}`);
  column.dataset.testid = `branch-${name}`;
  column.appendChild(el(doc, 'h3', undefined, heading));
  const prompt = el(doc, 'p', 'prompt-used', branch.prompt_used);
  prompt.dataset.testid = `prompt-${name}`;
  column.appendChild(prompt);
  column.appendChild(
    imagePanel(doc, `retrieved: ${branch.hit.caption}`, branch.hit.image_url, `${name}-retrieved`),
  );
  column.appendChild(hitDetails(doc, branch.hit));
  column.appendChild(
    imagePanel(doc, `synthetic for: ${branch.prompt_used}`, branch.synthetic_image_url, `${name}-synthetic`),
  );
  return column;
}

/** Side-by-side grid: retrieved/synthetic images for the original and the
 * concept-shifted query, with the subtracted and added terms labeled.
 */
export function renderDualResult(
  doc: Document,
  payload: DualResponse,
  terms: { subtract: string; add: string },
): HTMLElement {
  const root = el(doc, 'section', 'result dual-result');
  const grid = el(doc, 'div', 'dual-grid');
  grid.dataset.testid = 'dual-grid';
  grid.appendChild(branchColumn(doc, 'original', 'Original query', payload.original));
  grid.appendChild(
    branchColumn(
      doc,
      'modified',
      `Modified query (− "${terms.subtract}" + "${terms.add}")`,
      payload.modified,
    ),
  );
  root.appendChild(grid);

  const similarity = el(
    doc,
    'p',
    'dual-similarity',
    `similarity between original and modified query: ${formatSimilarity(
      payload.modified_similarity_to_original,
    )}`,
  );
  similarity.dataset.testid = 'dual-similarity';
  root.appendChild(similarity);

  if (payload.revised_description) {
    const revised = el(doc, 'blockquote', 'revised-description', payload.revised_description);
    revised.dataset.testid = 'revised-description';
    root.appendChild(revised);
  }
  for (const warning of payload.warnings) {
    root.appendChild(el(doc, 'p', 'warning', warning));
  }
  return root;
}

/** Inline error banner. Degenerate-query rejections (HTTP 422) get a plain
 * language explanation; other errors surface the server's message and stage.
 */
export function renderErrorBanner(doc: Document, error: unknown): HTMLElement {
  const banner = el(doc, 'div', 'error-banner');
  banner.dataset.testid = 'error-banner';
  if (error instanceof ApiRequestError) {
    if (error.status === 422) {
      banner.appendChild(
        el(
          doc,
          'p',
          undefined,
          'The subtracted and added concepts cancel the query out, so there is ' +
            'no direction left to search in. Try less opposed terms.',
        ),
      );
    } else if (error.status === 0) {
      banner.appendChild(
        el(doc, 'p', undefined, `Cannot reach the server: ${error.message}`),
      );
    } else {
      banner.appendChild(el(doc, 'p', undefined, `Error ${error.status}: ${error.message}`));
    }
    if (error.stage) {
      const stage = el(doc, 'p', 'error-stage', `failed stage: ${error.stage}`);
      stage.dataset.testid = 'error-stage';
      banner.appendChild(stage);
    }
  } else {
    banner.appendChild(el(doc, 'p', undefined, String(error)));
  }
  return banner;
}
