/** Form state and validation. Dual mode needs the full triple: the query
 * text plus both the concept to subtract and the concept to add.
 */

import type { QueryFormState } from './types';

export const DEFAULT_K = 5;

export function emptyForm(): QueryFormState {
  return { text: '', subtract: '', add: '', k: DEFAULT_K, mode: 'single' };
}

/** Human-readable reason the form cannot be submitted, or null when valid. */
export function validateForm(form: QueryFormState): string | null {
  if (!form.text.trim()) {
    return 'Enter a query first.';
  }
  if (!Number.isInteger(form.k) || form.k < 1) {
    return 'k must be a positive whole number.';
  }
  if (form.mode === 'dual') {
    if (!form.subtract.trim() || !form.add.trim()) {
      return 'Dual search needs both a term to subtract and a term to add.';
    }
  }
  return null;
}

export function canSubmit(form: QueryFormState): boolean {
  return validateForm(form) === null;
}
