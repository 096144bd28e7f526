// Parameter forms are generated from the workflow's parameter schema; the
// widget follows the declared type and the server's prompts drive the
// highlighting. The client never invents its own validation verdicts.

import type { ClarificationPrompt, ParameterSchema, ParameterSchemaEntry } from './types.js';

export type Widget = 'text' | 'number' | 'select' | 'toggle' | 'list' | 'json';

export interface FormField {
  name: string;
  label: string;
  widget: Widget;
  required: boolean;
  description: string;
  options: string[] | null;
  defaultValue: unknown;
  value: unknown;
  expected: string | null;
  prompt: ClarificationPrompt | null;
}

export interface FormModel {
  fields: FormField[];
  submittable: boolean;
}

function typeText(entry: ParameterSchemaEntry): string {
  return typeof entry.type === 'string' ? entry.type : entry.type.type;
}

export function widgetFor(entry: ParameterSchemaEntry): Widget {
  if (entry.validation_rules?.allowed_values?.length) return 'select';
  const text = typeText(entry);
  if (text === 'boolean') return 'toggle';
  if (text === 'number' || text === 'integer') return 'number';
  if (text.startsWith('list[')) return 'list';
  if (text === 'dict' || text.startsWith('dataframe')) return 'json';
  return 'text';
}

function labelFor(name: string): string {
  return name.replace(/_/g, ' ').replace(/\b\w/g, (c) => c.toUpperCase());
}

/**
 * One field per schema parameter, in schema declaration order; prompted
 * fields carry the server's message. `values` are the parameters supplied so
 * far (from the pending invocation).
 */
export function buildClarificationForm(
  schema: ParameterSchema,
  prompts: ClarificationPrompt[],
  values: Record<string, unknown> = {},
): FormModel {
  const promptByField = new Map(prompts.map((p) => [p.parameter, p]));
  const fields: FormField[] = Object.entries(schema).map(([name, entry]) => ({
    name,
    label: labelFor(name),
    widget: widgetFor(entry),
    required: entry.required,
    description: entry.description,
    options: entry.validation_rules?.allowed_values?.map((v) => String(v)) ?? null,
    defaultValue: entry.default,
    value: name in values ? values[name] : undefined,
    expected: entry.expected ?? null,
    prompt: promptByField.get(name) ?? null,
  }));
  return { fields, submittable: fields.length > 0 };
}

/** Parse a widget's raw input string into the literal the API expects. */
export function parseFieldInput(field: FormField, raw: string): unknown {
  switch (field.widget) {
    case 'number': {
      const value = Number(raw);
      if (Number.isNaN(value)) return raw; // let the server report it
      return Number.isInteger(value) ? value : value;
    }
    case 'toggle':
      return raw === 'true' || raw === 'on';
    case 'list':
      return raw
        .split(',')
        .map((item) => item.trim())
        .filter((item) => item.length > 0);
    case 'json':
      try {
        return JSON.parse(raw);
      } catch {
        return raw; // server reports the type mismatch
      }
    default:
      return raw;
  }
}
