/** Application wiring: form, submit flow, result panel, and history.
 *
 * One API call per submit, one in-flight query per tab (the submit button is
 * disabled while a request is pending), and the form keeps its state when a
 * request fails.
 */

import { ApiClient } from './api';
import { SessionHistory, summarizeDual, summarizeSingle } from './history';
import { canSubmit, validateForm } from './state';
import { renderDualResult, renderErrorBanner, renderSingleResult } from './render';
import type { QueryFormState, SessionHistoryItem } from './types';

export interface AppHandles {
  readForm(): QueryFormState;
  writeForm(form: QueryFormState): void;
  /** Resolves when the in-flight request (if any) has settled. */
  submit(): Promise<void>;
  refreshHistory(): void;
}

export function initApp(doc: Document, api: ApiClient, history: SessionHistory): AppHandles {
  const textInput = doc.getElementById('query-text') as HTMLInputElement;
  const subtractInput = doc.getElementById('query-subtract') as HTMLInputElement;
  const addInput = doc.getElementById('query-add') as HTMLInputElement;
  const kInput = doc.getElementById('query-k') as HTMLInputElement;
  const modeSingle = doc.getElementById('mode-single') as HTMLInputElement;
  const modeDual = doc.getElementById('mode-dual') as HTMLInputElement;
  const submitButton = doc.getElementById('submit') as HTMLButtonElement;
  const dualFields = doc.getElementById('dual-fields') as HTMLElement;
  const resultRoot = doc.getElementById('result') as HTMLElement;
  const historyRoot = doc.getElementById('history') as HTMLElement;
  const historyList = doc.getElementById('history-list') as HTMLElement;

  let pending = false;

  function readForm(): QueryFormState {
    return {
      text: textInput.value,
      subtract: subtractInput.value,
      add: addInput.value,
      k: Number.parseInt(kInput.value, 10) || 0,
      mode: modeDual.checked ? 'dual' : 'single',
    };
  }

  function writeForm(form: QueryFormState): void {
    textInput.value = form.text;
    subtractInput.value = form.subtract;
    addInput.value = form.add;
    kInput.value = String(form.k);
    modeSingle.checked = form.mode === 'single';
    modeDual.checked = form.mode === 'dual';
    syncControls();
  }

  function syncControls(): void {
    const form = readForm();
    dualFields.hidden = form.mode !== 'dual';
    submitButton.disabled = pending || !canSubmit(form);
    submitButton.title = validateForm(form) ?? '';
  }

  function renderHistory(): void {
    const items = history.load();
    historyRoot.hidden = items.length === 0;
    historyList.replaceChildren();
    for (const item of items.slice().reverse()) {
      historyList.appendChild(historyEntry(item));
    }
  }

  function historyEntry(item: SessionHistoryItem): HTMLElement {
    const button = doc.createElement('button');
    button.type = 'button';
    button.className = 'history-item';
    const terms =
      item.form.mode === 'dual' ? ` [− ${item.form.subtract} + ${item.form.add}]` : '';
    button.textContent = `${item.timestamp} · ${item.form.text}${terms} → ${item.summary.entryIds.join(', ')}`;
    // Restore only; submitting again is the user's decision.
    button.addEventListener('click', () => writeForm(item.form));
    return button;
  }

  async function submit(): Promise<void> {
    const form = readForm();
    if (pending || !canSubmit(form)) {
      return;
    }
    pending = true;
    syncControls();
    try {
      if (form.mode === 'dual') {
        const payload = await api.dual(form.text, form.subtract, form.add, form.k);
        resultRoot.replaceChildren(
          renderDualResult(doc, payload, { subtract: form.subtract, add: form.add }),
        );
        history.append(form, summarizeDual(payload));
      } else {
        const payload = await api.query(form.text, form.k);
        resultRoot.replaceChildren(renderSingleResult(doc, payload));
        history.append(form, summarizeSingle(payload));
      }
      renderHistory();
    } catch (err) {
      // Form state is untouched; the banner explains what failed.
      resultRoot.replaceChildren(renderErrorBanner(doc, err));
    } finally {
      pending = false;
      syncControls();
    }
  }

  for (const input of [textInput, subtractInput, addInput, kInput]) {
    input.addEventListener('input', syncControls);
  }
  modeSingle.addEventListener('change', syncControls);
  modeDual.addEventListener('change', syncControls);
  submitButton.addEventListener('click', () => {
    void submit();
  });

  syncControls();
  renderHistory();
  return { readForm, writeForm, submit, refreshHistory: renderHistory };
}
