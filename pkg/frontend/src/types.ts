// Wire types: these mirror the canonical documents the service emits.

export interface ValidationRules {
  not_empty?: boolean;
  allowed_values?: unknown[];
  min?: number;
  max?: number;
  required?: boolean;
}

export interface ParameterSchemaEntry {
  type: string | { type: string; keys?: string[]; columns?: unknown };
  required: boolean;
  description: string;
  default?: unknown;
  validation_rules?: ValidationRules;
  examples?: unknown[];
  expected?: string;
}

export type ParameterSchema = Record<string, ParameterSchemaEntry>;

export type PromptReason = 'missing' | 'type_mismatch' | 'constraint_violation';

export interface ClarificationPrompt {
  parameter: string;
  reason: PromptReason;
  expected: string;
  message: string;
}

export type InvocationState = 'draft' | 'validated' | 'approved' | 'dispatched';

export interface InvocationDocument {
  invocation_id: string;
  workflow_id: string;
  version: string;
  parameters: Record<string, unknown>;
  state: InvocationState;
  created_at: string;
  parent_invocation: string | null;
}

export interface WorkflowHit {
  workflow_id: string;
  version: string;
  name: string;
  score: number;
}

export interface TurnDocument {
  assistant_message: string;
  action: string | null;
  action_result: unknown;
  prompts: ClarificationPrompt[];
  invocation: InvocationDocument | null;
  refusal: unknown[];
}

export interface SessionDocument {
  session_id: string;
  messages: { role: string; text: string }[];
  action_log: unknown[];
  pending_invocation: InvocationDocument | null;
  last_run_ids: string[];
  selected_workflow: string | null;
}

export interface RunEvent {
  run_id: string;
  step_id: string | null;
  event: string;
  timestamp: string;
}

export interface StepResultDocument {
  step_id: string;
  status: string;
  outputs: Record<string, unknown>;
  started_at: string | null;
  finished_at: string | null;
  metrics: Record<string, number> | null;
}

export interface RunDocument {
  run_id: string;
  invocation: InvocationDocument;
  workflow_snapshot: { document: unknown; content_hash: string };
  resolved_parameters: Record<string, unknown>;
  started_at: string;
  finished_at: string | null;
  status: string;
  steps: StepResultDocument[];
  failure: { step_id: string; message: string } | null;
}

export interface RunSummary {
  run_id: string;
  workflow_id: string;
  status: string;
  started_at: string;
  finished_at: string | null;
}

export interface RunComparison {
  a: string;
  b: string;
  parameter_diff: Record<string, { a: unknown; b: unknown }>;
  metric_diff: Record<string, Record<string, { a: number; b: number; delta: number }>>;
  same_workflow: boolean;
}

export interface ApiErrorBody {
  status: number;
  error: string;
  diagnostics: unknown[];
  message: string;
}
