// View state: a pure reducer layer the DOM renders from. Every validation
// verdict shown to the user is the server's; the reducers only record what
// the last response said.

import type {
  ApiErrorBody,
  ClarificationPrompt,
  InvocationDocument,
  RunComparison,
  RunEvent,
  ParameterSchema,
  TurnDocument,
  WorkflowHit,
} from './types.js';

export interface TranscriptEntry {
  role: 'user' | 'assistant' | 'system';
  text: string;
}

export interface PendingInvocation {
  invocation: InvocationDocument;
  prompts: ClarificationPrompt[];
}

export interface RunPanel {
  runId: string;
  status: string;
  steps: Record<string, string>;
  invocationId: string | null;
}

export interface GateEvent {
  invocationId: string;
  event: 'validated' | 'approved' | 'dispatched';
}

export interface ViewState {
  sessionId: string | null;
  transcript: TranscriptEntry[];
  workflowHits: WorkflowHit[];
  parameterSchema: ParameterSchema | null;
  selectedWorkflow: string | null;
  pending: PendingInvocation | null;
  runs: RunPanel[];
  compareSelection: string[];
  comparison: RunComparison | null;
  gateEvents: GateEvent[];
  lastError: ApiErrorBody | null;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    transcript: [],
    workflowHits: [],
    parameterSchema: null,
    selectedWorkflow: null,
    pending: null,
    runs: [],
    compareSelection: [],
    comparison: null,
    gateEvents: [],
    lastError: null,
  };
}

function withGateEvent(state: ViewState, invocation: InvocationDocument): GateEvent[] {
  const events = [...state.gateEvents];
  if (invocation.state === 'validated' || invocation.state === 'approved' || invocation.state === 'dispatched') {
    const last = events[events.length - 1];
    if (!last || last.invocationId !== invocation.invocation_id || last.event !== invocation.state) {
      events.push({ invocationId: invocation.invocation_id, event: invocation.state });
    }
  }
  return events;
}

export function applySession(state: ViewState, sessionId: string): ViewState {
  return { ...initialState(), sessionId };
}

export function applyUserMessage(state: ViewState, text: string): ViewState {
  return { ...state, transcript: [...state.transcript, { role: 'user', text }], lastError: null };
}

export function applyTurn(state: ViewState, turn: TurnDocument): ViewState {
  let next: ViewState = {
    ...state,
    transcript: [...state.transcript, { role: 'assistant', text: turn.assistant_message }],
  };
  if (turn.action === 'search_workflows' && Array.isArray(turn.action_result)) {
    next = { ...next, workflowHits: turn.action_result as WorkflowHit[] };
  }
  if (turn.invocation) {
    next = {
      ...next,
      pending: { invocation: turn.invocation, prompts: turn.prompts },
      gateEvents: withGateEvent(next, turn.invocation),
    };
  }
  return next;
}

export function applySchema(state: ViewState, workflowId: string, schema: ParameterSchema): ViewState {
  return { ...state, selectedWorkflow: workflowId, parameterSchema: schema };
}

export function applyInvocation(
  state: ViewState,
  invocation: InvocationDocument,
  prompts: ClarificationPrompt[],
): ViewState {
  return {
    ...state,
    pending: { invocation, prompts },
    gateEvents: withGateEvent(state, invocation),
    lastError: null,
  };
}

export function applyRunCreated(state: ViewState, runId: string, invocationId: string): ViewState {
  return {
    ...state,
    runs: [...state.runs, { runId, status: 'running', steps: {}, invocationId }],
    transcript: [...state.transcript, { role: 'system', text: `run ${runId} dispatched` }],
  };
}

export function applyRunEvent(state: ViewState, event: RunEvent): ViewState {
  const runs = state.runs.map((panel) => {
    if (panel.runId !== event.run_id) return panel;
    const steps = { ...panel.steps };
    let status = panel.status;
    if (event.step_id) {
      if (event.event === 'started') steps[event.step_id] = 'running';
      else if (event.event === 'finished') steps[event.step_id] = 'finished';
      else if (event.event === 'skipped') steps[event.step_id] = 'skipped';
    } else if (event.event === 'run_finished') {
      status = 'finished';
    }
    return { ...panel, steps, status };
  });
  return { ...state, runs };
}

export function applyRunStatus(state: ViewState, runId: string, status: string, steps: Record<string, string>): ViewState {
  const runs = state.runs.map((panel) =>
    panel.runId === runId ? { ...panel, status, steps: { ...panel.steps, ...steps } } : panel,
  );
  return { ...state, runs };
}

export function toggleCompareSelection(state: ViewState, runId: string): ViewState {
  let selection = state.compareSelection.includes(runId)
    ? state.compareSelection.filter((id) => id !== runId)
    : [...state.compareSelection, runId];
  if (selection.length > 2) selection = selection.slice(-2);
  return { ...state, compareSelection: selection };
}

export function applyComparison(state: ViewState, comparison: RunComparison): ViewState {
  return { ...state, comparison };
}

export function applyError(state: ViewState, error: ApiErrorBody): ViewState {
  return {
    ...state,
    lastError: error,
    transcript: [...state.transcript, { role: 'system', text: `${error.error}: ${error.message}` }],
  };
}

// -- derived verdicts ---------------------------------------------------------

/** The Approve control is enabled iff the server reported state=validated. */
export function approveEnabled(state: ViewState): boolean {
  return state.pending?.invocation.state === 'validated';
}

export function dispatchEnabled(state: ViewState): boolean {
  return state.pending?.invocation.state === 'approved';
}

export type FieldVerdict = 'valid' | 'invalid' | 'unset';

/**
 * Server authority: a field only counts as valid when it was supplied and the
 * last server response carried no prompt for it.
 */
export function fieldVerdicts(state: ViewState): Record<string, FieldVerdict> {
  const verdicts: Record<string, FieldVerdict> = {};
  if (!state.parameterSchema) return verdicts;
  const pending = state.pending;
  const prompted = new Set(pending?.prompts.map((p) => p.parameter) ?? []);
  for (const name of Object.keys(state.parameterSchema)) {
    if (prompted.has(name)) verdicts[name] = 'invalid';
    else if (pending && name in pending.invocation.parameters) verdicts[name] = 'valid';
    else verdicts[name] = 'unset';
  }
  return verdicts;
}

/**
 * Gate visibility: every dispatched run must be preceded, in order, by a
 * validated and an approved event for its invocation.
 */
export function gateTrailComplete(state: ViewState, invocationId: string): boolean {
  const trail = state.gateEvents.filter((e) => e.invocationId === invocationId).map((e) => e.event);
  const validated = trail.indexOf('validated');
  const approved = trail.indexOf('approved');
  const dispatched = trail.indexOf('dispatched');
  return validated !== -1 && approved !== -1 && dispatched !== -1 && validated < approved && approved < dispatched;
}
