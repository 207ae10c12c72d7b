import { ColumnKey, DEFAULT_SORT, UiQueryState } from './queryState';

export type ColumnGroup =
  | 'Biological Properties'
  | 'Other Metrics'
  | 'Associated AOP Properties';

export interface ColumnSpec {
  key: ColumnKey;
  label: string;
  group: ColumnGroup;
}

export const COLUMN_CATALOG: ColumnSpec[] = [
  { key: 'action', label: 'KEC Action', group: 'Biological Properties' },
  { key: 'cell', label: 'Cell Term', group: 'Biological Properties' },
  { key: 'organ', label: 'Organ Term', group: 'Biological Properties' },
  { key: 'lobo', label: 'Level of Biological Organization', group: 'Biological Properties' },
  { key: 'method', label: 'Has Measurement Methods', group: 'Other Metrics' },
  { key: 'complete', label: 'Percent Complete', group: 'Other Metrics' },
  { key: 'kecs', label: '# Key Event Components', group: 'Other Metrics' },
  { key: 'eis', label: 'Integration Score', group: 'Other Metrics' },
  { key: 'aops', label: '# AOPs', group: 'Associated AOP Properties' },
  { key: 'ofa', label: '# AOPs Open for Adoption', group: 'Associated AOP Properties' },
  { key: 'prog', label: '# AOPs on OECD Work Plan', group: 'Associated AOP Properties' },
  { key: 'endorsed', label: '# AOPs OECD Endorsed', group: 'Associated AOP Properties' },
];

export function columnLabel(key: string): string {
  const spec = COLUMN_CATALOG.find((c) => c.key === key);
  return spec ? spec.label : key;
}

export function catalogByGroup(): Map<ColumnGroup, ColumnSpec[]> {
  const groups = new Map<ColumnGroup, ColumnSpec[]>();
  for (const spec of COLUMN_CATALOG) {
    const bucket = groups.get(spec.group) ?? [];
    bucket.push(spec);
    groups.set(spec.group, bucket);
  }
  return groups;
}

// Flip one column's visibility. If the current sort column disappears, the
// sort falls back to event id ascending; id and title are always visible and
// never part of the toggle set.
export function toggleColumn(state: UiQueryState, key: ColumnKey): UiQueryState {
  if (!COLUMN_CATALOG.some((c) => c.key === key)) {
    throw new Error(`unknown column key: ${key}`);
  }
  const visible = state.columns.includes(key)
    ? state.columns.filter((c) => c !== key)
    : [...state.columns, key];
  const sortStillVisible =
    state.sort.column === 'id' ||
    state.sort.column === 'title' ||
    visible.includes(state.sort.column);
  return {
    ...state,
    columns: visible,
    sort: sortStillVisible ? state.sort : { ...DEFAULT_SORT },
  };
}
