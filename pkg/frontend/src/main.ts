/** Browser entry point. The API base URL is configurable via
 * `localStorage["mirage.apiBase"]` or a `<meta name="api-base">` tag;
 * the default is same-origin.
 */

import { ApiClient } from './api';
import { SessionHistory } from './history';
import { initApp } from './app';

function apiBase(): string {
  const stored = window.localStorage.getItem('mirage.apiBase');
  if (stored) {
    return stored;
  }
  const meta = document.querySelector('meta[name="api-base"]');
  return meta?.getAttribute('content') ?? '';
}

const api = new ApiClient(apiBase());
const history = new SessionHistory(window.localStorage);
initApp(document, api, history);

void api
  .health()
  .then((health) => {
    const status = document.getElementById('backend-status');
    if (status) {
      status.textContent = `${health.entries} entries · ${health.backend_mode} backend`;
    }
  })
  .catch(() => {
    const status = document.getElementById('backend-status');
    if (status) {
      status.textContent = 'server unreachable';
    }
  });
