// String renderers for each view. Pure functions from API JSON to HTML; no
// local state is mutated, so re-rendering with the same body is idempotent.

import { columnLabel } from './columns';
import { EventsPage } from './api';
import { UiQueryState } from './queryState';

export function escapeHtml(s: string): string {
  return s
    .replace(/&/g, '&amp;')
    .replace(/</g, '&lt;')
    .replace(/>/g, '&gt;')
    .replace(/"/g, '&quot;');
}

function cell(value: unknown): string {
  if (value === null || value === undefined) return '';
  if (typeof value === 'boolean') return value ? 'Yes' : 'No';
  if (typeof value === 'number' && !Number.isInteger(value)) return value.toFixed(2);
  return escapeHtml(String(value));
}

// -- landing ----------------------------------------------------------------

export interface LandingData {
  counts: Record<string, number>;
  stats: {
    without_harmonized: Record<string, string | null>;
    with_harmonized: Record<string, string | null>;
  };
}

const LANDING_SECTIONS: Array<[string, string[]]> = [
  ['Core Entities', ['key_events', 'kers', 'aops']],
  ['Use Cases', ['observations', 'target_families', 'event_groups', 'harmonized_aops']],
  ['Advanced Search', ['evidence_records', 'assays', 'harmonized_events']],
];

export function renderLanding(data: LandingData): string {
  const sections = LANDING_SECTIONS.map(([name, keys]) => {
    const items = keys
      .map((k) => `<li data-entity="${k}">${k.replace(/_/g, ' ')}: ${data.counts[k] ?? 0}</li>`)
      .join('');
    return `<section><h2>${name}</h2><ul>${items}</ul></section>`;
  }).join('');
  const panelRow = (label: string, row: Record<string, string | null>) =>
    `<tr><th>${label}</th>` +
    ['events', 'kers', 'aops'].map((k) => `<td>${row[k] ?? 'n/a'}</td>`).join('') +
    '</tr>';
  const panel =
    '<table class="averages"><thead><tr><th></th><th>Events</th><th>KERs</th><th>AOPs</th></tr></thead><tbody>' +
    panelRow('Average % complete', data.stats.without_harmonized) +
    panelRow('Including harmonized', data.stats.with_harmonized) +
    '</tbody></table>';
  return `<main>${sections}${panel}</main>`;
}

// -- events search ----------------------------------------------------------

export function aopTitleWithBadges(aop: {
  title: string;
  open_for_adoption: boolean;
  oecd_endorsed: boolean;
}): string {
  let title = aop.title;
  if (aop.open_for_adoption) title += ' [Open for Adoption]';
  if (aop.oecd_endorsed) title += ' [OECD Endorsed]';
  return title;
}

export function renderEventsTable(page: EventsPage, state: UiQueryState): string {
  const keys = ['id', 'title', ...state.columns];
  const head = keys
    .map((k) => `<th data-col="${k}">${escapeHtml(k === 'id' ? 'Event' : k === 'title' ? 'Title' : columnLabel(k))}</th>`)
    .join('');
  const rows = page.rows
    .map((row) => {
      const id = row['id'] as number;
      const open = state.expandedIds.includes(id);
      const tds = keys.map((k) => `<td>${cell(row[k])}</td>`).join('');
      return `<tr data-event="${id}" data-expanded="${open}">${tds}</tr>`;
    })
    .join('');
  const footer = `<p class="pager">page ${page.page} of ${page.page_count} &middot; ${page.total} events</p>`;
  return `<table class="events"><thead><tr>${head}</tr></thead><tbody>${rows}</tbody></table>${footer}`;
}

// -- group pages ------------------------------------------------------------

export interface GroupBody {
  group_id: string;
  kind: string;
  member_event_ids: number[];
  preferred_event_id: number | null;
  rationale: string;
  provenance: { source_description: string; collected_by: string; date: string } | null;
}

export interface MemberInfo {
  title: string;
  eis: number;
}

export function renderGroupPage(
  group: GroupBody,
  members: Map<number, MemberInfo>,
): string {
  const items = group.member_event_ids
    .map((id) => {
      const info = members.get(id);
      const title = info ? `${info.title} (EIS: ${info.eis})` : `Event ${id}`;
      const badge = id === group.preferred_event_id ? ' <span class="badge">Preferred</span>' : '';
      return `<li data-event="${id}">${escapeHtml(title)}${badge}</li>`;
    })
    .join('');
  const rationale = group.rationale
    ? `<p class="rationale">${escapeHtml(group.rationale)}</p>`
    : '';
  return (
    `<article class="group" data-kind="${escapeHtml(group.kind)}">` +
    `<h2>${escapeHtml(group.group_id)}</h2>${rationale}<ul>${items}</ul></article>`
  );
}

// -- observations -----------------------------------------------------------

export interface ObservationBody {
  id: number;
  event_id: number;
  experimental_effect: string;
  stressor: { name: string; casrn: string | null; dtxsid: string | null };
  phenotype: { curie: string; label: string } | null;
  provenance: { source_description: string; collected_by: string; date: string } | null;
}

export function renderObservations(
  observations: ObservationBody[],
  meta: { page: number; page_count: number; total: number },
): string {
  const rows = observations
    .map((o) => {
      const provenance = o.provenance
        ? `<details class="provenance"><summary>provenance</summary>` +
          `${escapeHtml(o.provenance.source_description)} &middot; ` +
          `${escapeHtml(o.provenance.collected_by)} &middot; ${o.provenance.date}</details>`
        : '';
      return (
        `<tr data-observation="${o.id}"><td>${escapeHtml(o.stressor.name)}</td>` +
        `<td>${cell(o.stressor.casrn)}</td><td>${escapeHtml(o.experimental_effect)}</td>` +
        `<td>${o.phenotype ? escapeHtml(o.phenotype.label) : ''}</td>` +
        `<td>${o.event_id}</td><td>${provenance}</td></tr>`
      );
    })
    .join('');
  const footer = `<p class="pager">page ${meta.page} of ${meta.page_count} &middot; ${meta.total} observations</p>`;
  return (
    '<table class="observations"><thead><tr><th>Stressor</th><th>CASRN</th>' +
    '<th>Effect</th><th>Phenotype</th><th>Event</th><th></th></tr></thead>' +
    `<tbody>${rows}</tbody></table>${footer}`
  );
}

// -- target families --------------------------------------------------------

export interface FamilyBody {
  id: number;
  name: string;
  assay_ids: number[];
  event_ids: number[];
}

export function renderTargetFamilies(families: FamilyBody[]): string {
  const panels = families
    .map(
      (f) =>
        `<details class="family" data-family="${f.id}"><summary>` +
        `${escapeHtml(f.name)} (${f.assay_ids.length} assays, ${f.event_ids.length} events)` +
        `</summary><table><tr><th>Assays</th><td>${f.assay_ids.join(', ')}</td></tr>` +
        `<tr><th>Events</th><td>${f.event_ids.join(', ')}</td></tr></table></details>`,
    )
    .join('');
  return `<section class="families">${panels}</section>`;
}
