// Drives the alloy-design interaction trace against a live service and
// asserts the gate-visibility contract: Approve enables only once the server
// reports state=validated, and the two-run compare renders one diff row.

import { spawn, type ChildProcess } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join, resolve } from 'node:path';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { comparisonRows } from '../src/compare.js';
import {
  applyInvocation,
  applyRunCreated,
  applyRunEvent,
  applySchema,
  applySession,
  approveEnabled,
  dispatchEnabled,
  fieldVerdicts,
  gateTrailComplete,
  initialState,
  type ViewState,
} from '../src/state.js';

const FIXTURES = resolve(__dirname, '..', '..', 'fixtures');
const PORT = 18000 + Math.floor(Math.random() * 10000);
const BASE = `http://127.0.0.1:${PORT}`;
const DATASET_ID = '123e4567-e89b-12d3-a456-426614174000';

let server: ChildProcess | null = null;
let workdir: string;

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 30_000;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${BASE}/healthz`);
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error('service never became healthy');
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), 'schemagate-ui-'));
  server = spawn(
    'python3',
    [resolve(__dirname, 'serve_fixture.py'), join(workdir, 'registry'), join(workdir, 'runs'), String(PORT), FIXTURES],
    { stdio: ['ignore', 'inherit', 'inherit'] },
  );
  await waitForHealth();
}, 40_000);

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe('gate visibility against a live service', () => {
  it(
    'approve stays disabled until the server reports validated; compare shows one diff row',
    async () => {
      const api = new ApiClient(BASE);
      let state: ViewState = initialState();

      const session = await api.createSession();
      state = applySession(state, session.session_id);

      // discovery: ranked search then schema fetch, like the workflow cards do
      const hits = await api.searchWorkflows('alloy design');
      expect(hits[0]!.workflow_id).toBe('alloy_inverse_design');
      const schema = await api.getParameters('alloy_inverse_design');
      state = applySchema(state, 'alloy_inverse_design', schema);
      expect(Object.keys(schema)).toContain('validation_strategy');

      // incomplete proposal: server holds it in draft, approve must be disabled
      const draft = await api.propose(session.session_id, 'alloy_inverse_design', {
        dataset_id: DATASET_ID,
      });
      state = applyInvocation(state, draft.invocation, draft.prompts);
      expect(draft.invocation.state).toBe('draft');
      expect(approveEnabled(state)).toBe(false);
      expect(fieldVerdicts(state)['target_properties']).toBe('invalid');
      expect(fieldVerdicts(state)['dataset_id']).toBe('valid');

      // clarification loop fills the missing field; server re-validates
      const clarified = await api.clarify(
        session.session_id,
        draft.invocation.invocation_id,
        'target_properties',
        ['yield_strength', 'creep_life'],
      );
      state = applyInvocation(state, clarified.invocation, clarified.prompts);
      expect(clarified.invocation.state).toBe('validated');
      expect(approveEnabled(state)).toBe(true);
      expect(dispatchEnabled(state)).toBe(false);

      // approve then dispatch run 1, following the event stream
      const approved = await api.approve(session.session_id, clarified.invocation.invocation_id);
      state = applyInvocation(state, approved, []);
      expect(approveEnabled(state)).toBe(false);
      expect(dispatchEnabled(state)).toBe(true);

      const first = await api.dispatch(session.session_id, clarified.invocation.invocation_id);
      state = applyInvocation(state, first.invocation, []);
      state = applyRunCreated(state, first.run_id, first.invocation.invocation_id);
      for await (const event of api.runEvents(first.run_id)) {
        state = applyRunEvent(state, event);
      }
      expect(state.runs[0]!.status).toBe('finished');
      expect(gateTrailComplete(state, first.invocation.invocation_id)).toBe(true);

      // iterate: one overridden parameter, re-validated by the server
      const amended = await api.amend(session.session_id, first.invocation.invocation_id, {
        validation_strategy: 'leave-one-out',
      });
      state = applyInvocation(state, amended.invocation, amended.prompts);
      expect(amended.invocation.state).toBe('validated');
      expect(amended.invocation.parent_invocation).toBe(first.invocation.invocation_id);
      expect(approveEnabled(state)).toBe(true);

      const approved2 = await api.approve(session.session_id, amended.invocation.invocation_id);
      state = applyInvocation(state, approved2, []);
      const second = await api.dispatch(session.session_id, amended.invocation.invocation_id);
      state = applyInvocation(state, second.invocation, []);
      state = applyRunCreated(state, second.run_id, amended.invocation.invocation_id);
      for await (const event of api.runEvents(second.run_id)) {
        state = applyRunEvent(state, event);
      }
      expect(gateTrailComplete(state, amended.invocation.invocation_id)).toBe(true);

      // the two-run compare view renders the single-row parameter diff
      const comparison = await api.compare(first.run_id, second.run_id);
      const view = comparisonRows(comparison);
      const parameterRows = view.rows.filter((row) => row.kind === 'parameter');
      expect(parameterRows).toEqual([
        { kind: 'parameter', name: 'validation_strategy', a: '5-fold', b: 'leave-one-out', delta: null },
      ]);
      expect(view.sameWorkflow).toBe(true);
    },
    60_000,
  );

  it('a premature dispatch is refused by the server with a 409', async () => {
    const api = new ApiClient(BASE);
    const session = await api.createSession();
    const draft = await api.propose(session.session_id, 'alloy_inverse_design', {});
    expect(draft.invocation.state).toBe('draft');
    await expect(api.dispatch(session.session_id, draft.invocation.invocation_id)).rejects.toMatchObject({
      body: { status: 409, error: 'NotValidated' },
    });
  });
});
