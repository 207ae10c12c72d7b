import { UiQueryState, encodeQueryState } from './queryState';

export type FetchLike = (url: string, init?: { method?: string }) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}>;

export interface LoggedRequest {
  method: string;
  url: string;
}

export interface ApiError {
  code: string;
  message: string;
  detail: unknown;
}

export interface EventsPage {
  rows: Array<Record<string, unknown>>;
  total: number;
  page: number;
  page_size: number;
  page_count: number;
  ignored_params: string[];
  snapshot: string;
}

export class ApiRequestFailed extends Error {
  constructor(public status: number, public body: ApiError) {
    super(`${body.code}: ${body.message}`);
  }
}

// Read-only client. Every call funnels through get(), so the request log is a
// complete record of traffic and can be audited for method and prefix.
export class ApiClient {
  readonly requestLog: LoggedRequest[] = [];

  constructor(
    private baseUrl: string = '',
    private fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async get<T>(path: string): Promise<T> {
    const url = this.baseUrl + path;
    this.requestLog.push({ method: 'GET', url });
    const resp = await this.fetchImpl(url, { method: 'GET' });
    const body = await resp.json();
    if (!resp.ok) {
      throw new ApiRequestFailed(resp.status, body as ApiError);
    }
    return body as T;
  }

  events(state: UiQueryState): Promise<EventsPage> {
    const qs = encodeQueryState(state);
    return this.get(qs ? `/v1/events?${qs}` : '/v1/events');
  }

  eventDetail(id: number): Promise<Record<string, unknown>> {
    return this.get(`/v1/events/${id}`);
  }

  eventKers(id: number): Promise<Record<string, unknown>> {
    return this.get(`/v1/events/${id}/kers`);
  }

  aopRollup(id: number): Promise<Record<string, unknown>> {
    return this.get(`/v1/aops/${id}/rollup`);
  }

  groups(kind?: string): Promise<Record<string, unknown>> {
    return this.get(kind ? `/v1/groups?kind=${encodeURIComponent(kind)}` : '/v1/groups');
  }

  harmonizedAops(): Promise<Record<string, unknown>> {
    return this.get('/v1/harmonized/aops');
  }

  observations(page = 1, size = 50): Promise<Record<string, unknown>> {
    return this.get(`/v1/observations?page=${page}&size=${size}`);
  }

  targetFamilies(): Promise<Record<string, unknown>> {
    return this.get('/v1/target-families');
  }

  completionStats(): Promise<Record<string, unknown>> {
    return this.get('/v1/stats/completion');
  }

  rankings(): Promise<Record<string, unknown>> {
    return this.get('/v1/rankings/eis');
  }

  snapshotMeta(): Promise<Record<string, unknown>> {
    return this.get('/v1/meta/snapshot');
  }
}
