// Two-run comparison rendered as diff rows; empty diffs collapse to a
// "no differences" verdict and cross-workflow compares carry a banner.

import type { RunComparison } from './types.js';

export interface DiffRow {
  kind: 'parameter' | 'metric';
  name: string;
  a: string;
  b: string;
  delta: string | null;
}

export interface CompareView {
  rows: DiffRow[];
  sameWorkflow: boolean;
  banner: string | null;
  empty: boolean;
}

function show(value: unknown): string {
  return typeof value === 'string' ? value : JSON.stringify(value);
}

export function comparisonRows(comparison: RunComparison): CompareView {
  const rows: DiffRow[] = [];
  for (const [name, pair] of Object.entries(comparison.parameter_diff)) {
    rows.push({ kind: 'parameter', name, a: show(pair.a), b: show(pair.b), delta: null });
  }
  for (const [stepId, metrics] of Object.entries(comparison.metric_diff)) {
    for (const [metric, entry] of Object.entries(metrics)) {
      rows.push({
        kind: 'metric',
        name: `${stepId}.${metric}`,
        a: String(entry.a),
        b: String(entry.b),
        delta: entry.delta >= 0 ? `+${entry.delta}` : String(entry.delta),
      });
    }
  }
  const empty = rows.length === 0 && comparison.same_workflow;
  return {
    rows,
    sameWorkflow: comparison.same_workflow,
    banner: comparison.same_workflow ? null : 'runs use different workflow snapshots',
    empty,
  };
}
