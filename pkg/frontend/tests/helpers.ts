/** Shared mocks: a deterministic fake service behind the fetch interface. */

import type { Match } from '../src/api.js';

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

export function makeCatalog(size: number): Match[] {
  const categories = ['dress', 'sweater', 'shirt', 'coat'];
  return Array.from({ length: size }, (_, i) => ({
    product_id: `prod-${String(i).padStart(3, '0')}`,
    category: categories[i % categories.length] as string,
    score: 0.1 + i * 0.05,
    rank: i + 1,
    image_url: `/api/products/prod-${String(i).padStart(3, '0')}/image.png`,
  }));
}

export interface FakeServiceOptions {
  catalog?: Match[];
  shuffleResponses?: boolean;
  queryError?: { status: number; code: string; message: string };
}

/** fetch stand-in serving /api/query from a fixed ranking, like the real service. */
export function fakeService(options: FakeServiceOptions = {}) {
  const catalog = options.catalog ?? makeCatalog(20);
  const calls: { url: string; k: number | null }[] = [];

  const fetchFn = (async (input: RequestInfo | URL, init?: RequestInit): Promise<Response> => {
    const url = String(input);
    const parsed = new URL(url, 'http://localhost');
    if (parsed.pathname === '/api/query') {
      const k = Number(parsed.searchParams.get('k'));
      calls.push({ url, k: Number.isNaN(k) ? null : k });
      if (init?.signal?.aborted) {
        throw new DOMException('aborted', 'AbortError');
      }
      if (options.queryError) {
        const { status, code, message } = options.queryError;
        return jsonResponse({ code, message }, status);
      }
      let matches = catalog.slice(0, k);
      if (options.shuffleResponses) {
        matches = [...matches].reverse();
      }
      return jsonResponse({
        query_id: `q${calls.length}`,
        k,
        garment_url: `/api/query/q${calls.length}/garment.png`,
        matches,
      });
    }
    if (parsed.pathname === '/api/health') {
      calls.push({ url, k: null });
      return jsonResponse({
        status: 'ok',
        index_size: catalog.length,
        sessions: 0,
        uptime_seconds: 1,
        fingerprint_match: true,
      });
    }
    return jsonResponse({ code: 'unknown_product', message: 'no such product' }, 404);
  }) as typeof fetch;

  return { fetchFn, calls, catalog };
}

/** A fetch that stays pending until its signal aborts or resolve() is called. */
export function hangingFetch() {
  let release: ((r: Response) => void) | null = null;
  const seenSignals: AbortSignal[] = [];
  const fetchFn = ((_: RequestInfo | URL, init?: RequestInit) =>
    new Promise<Response>((resolve, reject) => {
      const signal = init?.signal;
      if (signal) {
        seenSignals.push(signal);
        signal.addEventListener('abort', () =>
          reject(new DOMException('aborted', 'AbortError')),
        );
      }
      release = resolve;
    })) as typeof fetch;
  return {
    fetchFn,
    seenSignals,
    release: (response: Response) => release?.(response),
  };
}

export function fakeImageFile(name = 'street.png'): File {
  return new File([new Uint8Array([137, 80, 78, 71, 13, 10, 26, 10])], name, {
    type: 'image/png',
  });
}

export function setInputFiles(input: HTMLInputElement, files: File[]): void {
  Object.defineProperty(input, 'files', { value: files, configurable: true });
}
