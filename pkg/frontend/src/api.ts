// Typed client over the orchestration service. Errors carry the server's
// body verbatim so the transcript can surface it unchanged.

import { sseData } from './sse.js';
import type {
  ApiErrorBody,
  ClarificationPrompt,
  InvocationDocument,
  ParameterSchema,
  RunComparison,
  RunDocument,
  RunEvent,
  RunSummary,
  SessionDocument,
  TurnDocument,
  WorkflowHit,
} from './types.js';

export class ApiError extends Error {
  body: ApiErrorBody;

  constructor(body: ApiErrorBody) {
    super(body.message);
    this.body = body;
  }
}

export interface InvocationResponse {
  invocation: InvocationDocument;
  prompts: ClarificationPrompt[];
}

export class ApiClient {
  constructor(private baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { 'content-type': 'application/json' },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      let parsed: ApiErrorBody;
      try {
        parsed = (await response.json()) as ApiErrorBody;
      } catch {
        parsed = { status: response.status, error: 'HttpError', diagnostics: [], message: response.statusText };
      }
      throw new ApiError(parsed);
    }
    return (await response.json()) as T;
  }

  createSession(): Promise<SessionDocument> {
    return this.request('POST', '/sessions');
  }

  sendMessage(sessionId: string, text: string): Promise<TurnDocument> {
    return this.request('POST', `/sessions/${sessionId}/messages`, { text });
  }

  searchWorkflows(query: string): Promise<WorkflowHit[]> {
    return this.request('GET', `/workflows?q=${encodeURIComponent(query)}`);
  }

  getParameters(workflowId: string): Promise<ParameterSchema> {
    return this.request('GET', `/workflows/${workflowId}/parameters`);
  }

  listDatasets(): Promise<unknown[]> {
    return this.request('GET', '/datasets');
  }

  propose(sessionId: string, workflowId: string, parameters: Record<string, unknown>): Promise<InvocationResponse> {
    return this.request('POST', `/sessions/${sessionId}/invocations`, {
      workflow_id: workflowId,
      parameters,
    });
  }

  clarify(sessionId: string, invocationId: string, parameter: string, value: unknown): Promise<InvocationResponse> {
    return this.request('PATCH', `/sessions/${sessionId}/invocations/${invocationId}`, { parameter, value });
  }

  amend(sessionId: string, invocationId: string, overrides: Record<string, unknown>): Promise<InvocationResponse> {
    return this.request('PATCH', `/sessions/${sessionId}/invocations/${invocationId}`, { overrides });
  }

  approve(sessionId: string, invocationId: string): Promise<InvocationDocument> {
    return this.request('POST', `/sessions/${sessionId}/invocations/${invocationId}/approve`);
  }

  dispatch(sessionId: string, invocationId: string): Promise<{ run_id: string; invocation: InvocationDocument }> {
    return this.request('POST', `/sessions/${sessionId}/invocations/${invocationId}/dispatch`);
  }

  getRun(runId: string): Promise<RunDocument> {
    return this.request('GET', `/runs/${runId}`);
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request('GET', '/runs');
  }

  compare(a: string, b: string): Promise<RunComparison> {
    return this.request('GET', `/runs/compare?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`);
  }

  async *runEvents(runId: string): AsyncGenerator<RunEvent> {
    const response = await fetch(`${this.baseUrl}/runs/${runId}/events`);
    if (!response.ok || !response.body) {
      throw new ApiError({
        status: response.status,
        error: 'HttpError',
        diagnostics: [],
        message: `event stream unavailable (${response.status})`,
      });
    }
    for await (const frame of sseData(response.body)) {
      yield JSON.parse(frame) as RunEvent;
    }
  }
}
