// Shareable search state. The whole state lives in the URL query string so a
// copied link reproduces the view exactly; the encoding matches what the
// server's own query-string codec accepts (sorted keys, defaults omitted).

export const NUMERIC_FIELDS = [
  'complete', 'eis', 'aops', 'ofa', 'prog', 'endorsed', 'kecs',
] as const;

export const COLUMN_KEYS = [
  'action', 'cell', 'organ', 'lobo',
  'method', 'complete', 'kecs', 'eis',
  'aops', 'ofa', 'prog', 'endorsed',
] as const;

export const DEFAULT_COLUMNS = [
  'lobo', 'method', 'complete', 'eis', 'aops', 'endorsed',
] as const;

export const DEFAULT_SORT: SortSpec = { column: 'id', direction: 'asc' };
export const DEFAULT_PAGE_SIZE = 25;

export type NumericField = (typeof NUMERIC_FIELDS)[number];
export type ColumnKey = (typeof COLUMN_KEYS)[number];

export interface NumericFilter {
  op: '>=' | '<=' | '>' | '<' | '=';
  value: number;
}

export interface SortSpec {
  column: string;
  direction: 'asc' | 'desc';
}

export interface UiQueryState {
  idFilter: number[] | null;
  titleSubstring: string;
  lobo: string | null;
  hasMethodText: boolean | null;
  numericFilters: Array<[NumericField, NumericFilter]>;
  columns: string[];
  sort: SortSpec;
  page: number;
  pageSize: number;
  // rows whose AOP detail panel is open; client-only, the server ignores it
  expandedIds: number[];
}

export interface DecodeResult {
  state: UiQueryState;
  warnings: string[];
}

export function defaultState(): UiQueryState {
  return {
    idFilter: null,
    titleSubstring: '',
    lobo: null,
    hasMethodText: null,
    numericFilters: [],
    columns: [...DEFAULT_COLUMNS],
    sort: { ...DEFAULT_SORT },
    page: 1,
    pageSize: DEFAULT_PAGE_SIZE,
    expandedIds: [],
  };
}

const FILTER_RE = /^\s*(>=|<=|>|<|=)?\s*(-?\d+(?:\.\d+)?)\s*$/;

export function parseNumericFilter(text: string): NumericFilter | null {
  const m = FILTER_RE.exec(text);
  if (!m) return null;
  return { op: (m[1] ?? '=') as NumericFilter['op'], value: Number(m[2]) };
}

export function formatNumericFilter(f: NumericFilter): string {
  const v = Number.isInteger(f.value) ? f.value.toFixed(0) : String(f.value);
  return `${f.op}${v}`;
}

// percent-encode everything outside the unreserved set, like the server does
function quote(s: string): string {
  let out = '';
  for (const byte of new TextEncoder().encode(s)) {
    const ch = String.fromCharCode(byte);
    if (/[A-Za-z0-9_.~-]/.test(ch)) {
      out += ch;
    } else {
      out += '%' + byte.toString(16).toUpperCase().padStart(2, '0');
    }
  }
  return out;
}

export function encodeQueryState(state: UiQueryState): string {
  const params: Array<[string, string]> = [];
  if (state.idFilter !== null) {
    params.push(['id', state.idFilter.join(',')]);
  }
  if (state.titleSubstring) {
    params.push(['title', state.titleSubstring]);
  }
  if (state.lobo !== null) {
    params.push(['lobo', state.lobo]);
  }
  if (state.hasMethodText !== null) {
    params.push(['method', state.hasMethodText ? 'true' : 'false']);
  }
  const filters = [...state.numericFilters].sort((a, b) =>
    a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0,
  );
  for (const [key, f] of filters) {
    params.push([key, formatNumericFilter(f)]);
  }
  if (state.columns.join(',') !== DEFAULT_COLUMNS.join(',')) {
    params.push(['cols', state.columns.join(',')]);
  }
  if (state.sort.column !== DEFAULT_SORT.column || state.sort.direction !== DEFAULT_SORT.direction) {
    params.push(['sort', `${state.sort.column}.${state.sort.direction}`]);
  }
  if (state.page !== 1) {
    params.push(['page', String(state.page)]);
  }
  if (state.pageSize !== DEFAULT_PAGE_SIZE) {
    params.push(['size', String(state.pageSize)]);
  }
  if (state.expandedIds.length > 0) {
    params.push(['open', state.expandedIds.join(',')]);
  }
  params.sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0));
  return params.map(([k, v]) => `${quote(k)}=${quote(v)}`).join('&');
}

function parseIdList(text: string): number[] | null {
  const ids: number[] = [];
  for (const part of text.split(',')) {
    if (!part.trim()) continue;
    const n = Number(part.trim());
    if (!Number.isInteger(n)) return null;
    ids.push(n);
  }
  return ids;
}

export function decodeQueryState(queryString: string): DecodeResult {
  const state = defaultState();
  const warnings: string[] = [];
  const numeric: Array<[NumericField, NumericFilter]> = [];
  const raw = queryString.startsWith('?') ? queryString.slice(1) : queryString;
  for (const [key, value] of new URLSearchParams(raw)) {
    if (key === 'id') {
      const ids = parseIdList(value);
      if (ids === null) warnings.push(`bad id list: ${value}`);
      else state.idFilter = ids;
    } else if (key === 'title') {
      state.titleSubstring = value;
    } else if (key === 'lobo') {
      state.lobo = value;
    } else if (key === 'method') {
      state.hasMethodText = value === 'true';
    } else if ((NUMERIC_FIELDS as readonly string[]).includes(key)) {
      const f = parseNumericFilter(value);
      if (f === null) warnings.push(`cannot parse filter ${key}=${value}; using default`);
      else numeric.push([key as NumericField, f]);
    } else if (key === 'cols') {
      state.columns = value.split(',').filter((c) => c);
    } else if (key === 'sort') {
      const dot = value.indexOf('.');
      const column = dot >= 0 ? value.slice(0, dot) : value;
      const direction = dot >= 0 ? value.slice(dot + 1) : 'asc';
      state.sort = { column, direction: direction === 'desc' ? 'desc' : 'asc' };
    } else if (key === 'page') {
      const n = Number(value);
      if (Number.isInteger(n) && n >= 1) state.page = n;
      else warnings.push(`bad page: ${value}`);
    } else if (key === 'size') {
      const n = Number(value);
      if (Number.isInteger(n) && n >= 1) state.pageSize = n;
      else warnings.push(`bad size: ${value}`);
    } else if (key === 'open') {
      const ids = parseIdList(value);
      if (ids === null) warnings.push(`bad open list: ${value}`);
      else state.expandedIds = ids;
    } else {
      warnings.push(`ignoring unknown parameter: ${key}`);
    }
  }
  numeric.sort((a, b) => (a[0] < b[0] ? -1 : a[0] > b[0] ? 1 : 0));
  state.numericFilters = numeric;
  return { state, warnings };
}
