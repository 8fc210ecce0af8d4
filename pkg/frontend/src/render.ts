/** Pure DOM builders; every element the app shows comes from here. */

import type { Match, QueryResponse } from './api.js';

/** Matches sorted by ascending rank, whatever order the payload used. */
export function sortByRank(matches: Match[]): Match[] {
  return [...matches].sort((a, b) => a.rank - b.rank);
}

export function renderMatchCard(doc: Document, match: Match, resolveUrl: (p: string) => string): HTMLElement {
  const card = doc.createElement('article');
  card.className = 'match-card';
  card.dataset.productId = match.product_id;
  card.dataset.rank = String(match.rank);

  const image = doc.createElement('img');
  image.src = resolveUrl(match.image_url);
  image.alt = `${match.category} ${match.product_id}`;
  image.loading = 'lazy';

  const title = doc.createElement('h3');
  title.textContent = `#${match.rank} ${match.product_id}`;

  const meta = doc.createElement('p');
  meta.className = 'match-meta';
  meta.textContent = `${match.category} · distance ${match.score.toFixed(4)}`;

  card.append(image, title, meta);
  return card;
}

export function renderResults(
  doc: Document,
  container: HTMLElement,
  response: QueryResponse,
  resolveUrl: (p: string) => string,
): void {
  container.replaceChildren(
    ...sortByRank(response.matches).map((m) => renderMatchCard(doc, m, resolveUrl)),
  );
}

export function renderGarmentPreview(
  doc: Document,
  container: HTMLElement,
  garmentUrl: string,
  resolveUrl: (p: string) => string,
): void {
  const image = doc.createElement('img');
  image.className = 'garment-preview';
  image.src = resolveUrl(garmentUrl);
  image.alt = 'extracted garment';
  container.replaceChildren(image);
}

/** Human text per service error code; falls back to the raw message. */
export function errorText(code: string, message: string): string {
  switch (code) {
    case 'invalid_k':
      return 'Result count must be between 1 and 50.';
    case 'invalid_image':
      return 'That file could not be decoded as an image. Try a PNG or JPEG.';
    case 'payload_too_large':
      return 'That photo is too large to upload.';
    case 'unknown_query':
      return 'This query has expired; run the search again.';
    case 'unknown_product':
      return 'That product is no longer in the catalog.';
    default:
      return message || 'Something went wrong talking to the search service.';
  }
}

export function renderErrorBanner(doc: Document, container: HTMLElement, code: string, message: string): void {
  const banner = doc.createElement('div');
  banner.className = 'error-banner';
  banner.dataset.code = code;
  banner.setAttribute('role', 'alert');
  banner.textContent = errorText(code, message);
  container.replaceChildren(banner);
}

export function clearErrorBanner(container: HTMLElement): void {
  container.replaceChildren();
}

export function renderHealthBadge(doc: Document, container: HTMLElement, status: string, indexSize: number): void {
  const badge = doc.createElement('span');
  badge.className = `health-badge health-${status}`;
  badge.textContent = status === 'ok' ? `catalog: ${indexSize} images` : `service degraded`;
  container.replaceChildren(badge);
}
