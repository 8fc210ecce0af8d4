/** Page controller: upload form, k selector, results grid, error banner.
 *
 * A new submission aborts any in-flight query, so the grid always shows
 * the answer to the most recent request.
 */

import { ApiClient, ApiError, MAX_K, MIN_K } from './api.js';
import {
  clearErrorBanner,
  renderErrorBanner,
  renderGarmentPreview,
  renderHealthBadge,
  renderResults,
} from './render.js';

export interface AppElements {
  form: HTMLFormElement;
  fileInput: HTMLInputElement;
  kInput: HTMLInputElement;
  submitButton: HTMLButtonElement;
  garment: HTMLElement;
  results: HTMLElement;
  errors: HTMLElement;
  health: HTMLElement;
}

export class App {
  private inFlight: AbortController | null = null;

  constructor(
    private readonly doc: Document,
    private readonly el: AppElements,
    private readonly client: ApiClient,
  ) {}

  start(): void {
    this.el.kInput.min = String(MIN_K);
    this.el.kInput.max = String(MAX_K);
    this.el.form.addEventListener('submit', (event) => {
      event.preventDefault();
      void this.submit();
    });
    void this.refreshHealth();
  }

  async refreshHealth(): Promise<void> {
    try {
      const health = await this.client.getHealth();
      renderHealthBadge(this.doc, this.el.health, health.status, health.index_size);
    } catch {
      renderHealthBadge(this.doc, this.el.health, 'unreachable', 0);
    }
  }

  async submit(): Promise<void> {
    const file = this.el.fileInput.files?.[0];
    if (!file) {
      renderErrorBanner(this.doc, this.el.errors, 'no_file', 'Choose a street photo first.');
      return;
    }
    const k = Number(this.el.kInput.value);

    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;

    clearErrorBanner(this.el.errors);
    this.el.submitButton.disabled = true;
    try {
      const response = await this.client.postQuery(file, k, controller.signal);
      if (controller.signal.aborted) return;
      renderGarmentPreview(this.doc, this.el.garment, response.garment_url, (p) =>
        this.client.resolveUrl(p),
      );
      renderResults(this.doc, this.el.results, response, (p) => this.client.resolveUrl(p));
    } catch (error) {
      if (controller.signal.aborted) return;
      if (error instanceof ApiError) {
        renderErrorBanner(this.doc, this.el.errors, error.code, error.message);
      } else {
        renderErrorBanner(this.doc, this.el.errors, 'network_error', String(error));
      }
    } finally {
      if (this.inFlight === controller) {
        this.inFlight = null;
        this.el.submitButton.disabled = false;
      }
    }
  }
}

export function mount(doc: Document, client = new ApiClient()): App {
  const byId = <T extends HTMLElement>(id: string): T => {
    const node = doc.getElementById(id);
    if (!node) throw new Error(`missing #${id} in page`);
    return node as T;
  };
  const app = new App(
    doc,
    {
      form: byId<HTMLFormElement>('query-form'),
      fileInput: byId<HTMLInputElement>('photo-input'),
      kInput: byId<HTMLInputElement>('k-input'),
      submitButton: byId<HTMLButtonElement>('submit-button'),
      garment: byId('garment-panel'),
      results: byId('results-grid'),
      errors: byId('error-area'),
      health: byId('health-area'),
    },
    client,
  );
  app.start();
  return app;
}
