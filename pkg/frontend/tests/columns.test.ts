import { describe, expect, it } from 'vitest';

import { COLUMN_CATALOG, catalogByGroup, columnLabel, toggleColumn } from '../src/columns';
import { defaultState } from '../src/queryState';

describe('catalog', () => {
  it('covers every column key exactly once', () => {
    const keys = COLUMN_CATALOG.map((c) => c.key);
    expect(new Set(keys).size).toBe(keys.length);
    expect(keys).toHaveLength(12);
  });

  it('groups into the three selector sections', () => {
    expect([...catalogByGroup().keys()]).toEqual([
      'Biological Properties',
      'Other Metrics',
      'Associated AOP Properties',
    ]);
  });

  it('labels the integration score column', () => {
    expect(columnLabel('eis')).toBe('Integration Score');
    expect(columnLabel('ofa')).toBe('# AOPs Open for Adoption');
  });
});

describe('toggleColumn', () => {
  it('adds a hidden column', () => {
    const next = toggleColumn(defaultState(), 'ofa');
    expect(next.columns).toContain('ofa');
  });

  it('is an involution', () => {
    const start = defaultState();
    const twice = toggleColumn(toggleColumn(start, 'ofa'), 'ofa');
    expect(twice.columns).toEqual(start.columns);
    expect(twice.sort).toEqual(start.sort);
  });

  it('keeps the sort when its column stays visible', () => {
    const state = { ...defaultState(), sort: { column: 'eis', direction: 'desc' as const } };
    expect(toggleColumn(state, 'ofa').sort).toEqual({ column: 'eis', direction: 'desc' });
  });

  it('falls back to id ascending when the sort column is removed', () => {
    const state = { ...defaultState(), sort: { column: 'eis', direction: 'desc' as const } };
    expect(toggleColumn(state, 'eis').sort).toEqual({ column: 'id', direction: 'asc' });
  });

  it('never resets an id or title sort', () => {
    const state = { ...defaultState(), sort: { column: 'title', direction: 'desc' as const } };
    expect(toggleColumn(state, 'lobo').sort).toEqual({ column: 'title', direction: 'desc' });
  });

  it('rejects keys outside the catalog', () => {
    expect(() => toggleColumn(defaultState(), 'nope' as never)).toThrow('unknown column');
  });

  it('does not mutate its input', () => {
    const state = defaultState();
    toggleColumn(state, 'ofa');
    expect(state.columns).toEqual(defaultState().columns);
  });
});
