/** Typed client for the garment search HTTP API. */

export interface Match {
  product_id: string;
  category: string;
  score: number;
  rank: number;
  image_url: string;
}

export interface QueryResponse {
  query_id: string;
  k: number;
  garment_url: string;
  matches: Match[];
}

export interface ProductDetail {
  product_id: string;
  category: string;
  image_url: string;
}

export interface HealthResponse {
  status: 'ok' | 'degraded';
  index_size: number;
  sessions: number;
  uptime_seconds: number;
  fingerprint_match: boolean;
}

export interface ServiceError {
  code: string;
  message: string;
}

export const MIN_K = 1;
export const MAX_K = 50;

/** Error carrying the service's JSON error body plus the HTTP status. */
export class ApiError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(code: string, message: string, status: number) {
    super(message);
    this.name = 'ApiError';
    this.code = code;
    this.status = status;
  }
}

async function throwApiError(response: Response): Promise<never> {
  let code = 'unknown_error';
  let message = `request failed with status ${response.status}`;
  try {
    const body = (await response.json()) as Partial<ServiceError>;
    if (typeof body.code === 'string') code = body.code;
    if (typeof body.message === 'string') message = body.message;
  } catch {
    // non-JSON body: keep the fallback message
  }
  throw new ApiError(code, message, response.status);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = '',
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  /** Upload a street photo; returns the garment preview URL and ranked matches. */
  async postQuery(photo: Blob, k: number, signal?: AbortSignal): Promise<QueryResponse> {
    if (!Number.isInteger(k) || k < MIN_K || k > MAX_K) {
      throw new ApiError('invalid_k', `k must be an integer in [${MIN_K}, ${MAX_K}]`, 0);
    }
    const form = new FormData();
    form.append('photo', photo, 'photo.png');
    const response = await this.fetchFn(`${this.baseUrl}/api/query?k=${k}`, {
      method: 'POST',
      body: form,
      signal,
    });
    if (!response.ok) await throwApiError(response);
    return (await response.json()) as QueryResponse;
  }

  async getProduct(productId: string, signal?: AbortSignal): Promise<ProductDetail> {
    const response = await this.fetchFn(
      `${this.baseUrl}/api/products/${encodeURIComponent(productId)}`,
      { signal },
    );
    if (!response.ok) await throwApiError(response);
    return (await response.json()) as ProductDetail;
  }

  async getHealth(signal?: AbortSignal): Promise<HealthResponse> {
    const response = await this.fetchFn(`${this.baseUrl}/api/health`, { signal });
    if (!response.ok) await throwApiError(response);
    return (await response.json()) as HealthResponse;
  }

  /** Absolute URL for a relative image path returned by the service. */
  resolveUrl(path: string): string {
    return path.startsWith('http') ? path : `${this.baseUrl}${path}`;
  }
}
