// DOM wiring: renders the ViewState and forwards user actions to the API.
// All verdicts rendered here come from the server's last response.

import { ApiClient, ApiError } from './api.js';
import { buildClarificationForm, parseFieldInput, type FormField } from './forms.js';
import { comparisonRows } from './compare.js';
import {
  applyComparison,
  applyError,
  applyInvocation,
  applyRunCreated,
  applyRunEvent,
  applySchema,
  applySession,
  applyTurn,
  applyUserMessage,
  approveEnabled,
  dispatchEnabled,
  fieldVerdicts,
  initialState,
  toggleCompareSelection,
  type ViewState,
} from './state.js';

export class ChatApp {
  private state: ViewState = initialState();

  constructor(
    private api: ApiClient,
    private root: HTMLElement,
  ) {}

  async start(): Promise<void> {
    const session = await this.api.createSession();
    this.state = applySession(this.state, session.session_id);
    this.render();
  }

  private update(state: ViewState): void {
    this.state = state;
    this.render();
  }

  private async guard<T>(work: () => Promise<T>): Promise<T | undefined> {
    try {
      return await work();
    } catch (error) {
      if (error instanceof ApiError) {
        this.update(applyError(this.state, error.body));
        return undefined;
      }
      throw error;
    }
  }

  async sendMessage(text: string): Promise<void> {
    if (!this.state.sessionId) return;
    this.update(applyUserMessage(this.state, text));
    const turn = await this.guard(() => this.api.sendMessage(this.state.sessionId!, text));
    if (!turn) return;
    let next = applyTurn(this.state, turn);
    if (turn.action === 'get_parameters' && typeof turn.action_result === 'object') {
      // keep the full schema document around for form generation
      const workflowId = this.workflowFromLog(turn) ?? next.selectedWorkflow;
      if (workflowId) {
        const schema = await this.guard(() => this.api.getParameters(workflowId));
        if (schema) next = applySchema(next, workflowId, schema);
      }
    }
    if (turn.invocation) {
      const schema = await this.guard(() => this.api.getParameters(turn.invocation!.workflow_id));
      if (schema) next = applySchema(next, turn.invocation.workflow_id, schema);
    }
    this.update(next);
  }

  private workflowFromLog(turn: { action_result: unknown }): string | null {
    return null; // the schema fetch path above handles invocation turns
  }

  async selectWorkflow(workflowId: string): Promise<void> {
    const schema = await this.guard(() => this.api.getParameters(workflowId));
    if (schema) this.update(applySchema(this.state, workflowId, schema));
  }

  async submitForm(values: Record<string, unknown>): Promise<void> {
    const { sessionId, selectedWorkflow, pending } = this.state;
    if (!sessionId || !selectedWorkflow) return;
    const response = pending
      ? await this.guard(() => this.api.amend(sessionId, pending.invocation.invocation_id, values))
      : await this.guard(() => this.api.propose(sessionId, selectedWorkflow, values));
    if (response) this.update(applyInvocation(this.state, response.invocation, response.prompts));
  }

  async approve(): Promise<void> {
    const { sessionId, pending } = this.state;
    if (!sessionId || !pending || !approveEnabled(this.state)) return;
    const invocation = await this.guard(() => this.api.approve(sessionId, pending.invocation.invocation_id));
    if (invocation) this.update(applyInvocation(this.state, invocation, []));
  }

  async dispatch(): Promise<void> {
    const { sessionId, pending } = this.state;
    if (!sessionId || !pending || !dispatchEnabled(this.state)) return;
    const result = await this.guard(() => this.api.dispatch(sessionId, pending.invocation.invocation_id));
    if (!result) return;
    let next = applyInvocation(this.state, result.invocation, []);
    next = applyRunCreated(next, result.run_id, result.invocation.invocation_id);
    this.update(next);
    void this.followRun(result.run_id);
  }

  private async followRun(runId: string): Promise<void> {
    try {
      for await (const event of this.api.runEvents(runId)) {
        this.update(applyRunEvent(this.state, event));
      }
    } catch {
      // stream closed; the run panel keeps its last state
    }
  }

  async compareSelected(): Promise<void> {
    const [a, b] = this.state.compareSelection;
    if (!a || !b) return;
    const comparison = await this.guard(() => this.api.compare(a, b));
    if (comparison) this.update(applyComparison(this.state, comparison));
  }

  toggleCompare(runId: string): void {
    this.update(toggleCompareSelection(this.state, runId));
  }

  // -- rendering ---------------------------------------------------------------

  private render(): void {
    this.root.replaceChildren(
      this.renderTranscript(),
      this.renderWorkflows(),
      this.renderInvocationCard(),
      this.renderRuns(),
      this.renderCompare(),
    );
  }

  private renderTranscript(): HTMLElement {
    const panel = el('section', 'transcript');
    for (const entry of this.state.transcript) {
      const line = el('div', `message message-${entry.role}`);
      line.textContent = `${entry.role}: ${entry.text}`;
      panel.append(line);
    }
    const form = el('form', 'composer') as HTMLFormElement;
    const input = el('input', 'composer-input') as HTMLInputElement;
    input.name = 'message';
    input.placeholder = 'Describe what you want to run…';
    const send = el('button', 'composer-send') as HTMLButtonElement;
    send.textContent = 'Send';
    form.append(input, send);
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      if (input.value.trim()) void this.sendMessage(input.value.trim());
      input.value = '';
    });
    panel.append(form);
    return panel;
  }

  private renderWorkflows(): HTMLElement {
    const panel = el('section', 'workflows');
    for (const hit of this.state.workflowHits) {
      const card = el('button', 'workflow-card') as HTMLButtonElement;
      card.textContent = `${hit.name} (${hit.workflow_id} ${hit.version}, score ${hit.score})`;
      card.addEventListener('click', () => void this.selectWorkflow(hit.workflow_id));
      panel.append(card);
    }
    return panel;
  }

  private renderInvocationCard(): HTMLElement {
    const panel = el('section', 'invocation');
    const { pending, parameterSchema } = this.state;
    if (!parameterSchema) return panel;

    const heading = el('h2');
    heading.textContent = pending
      ? `invocation ${pending.invocation.invocation_id.slice(0, 8)} [${pending.invocation.state}]`
      : `parameters for ${this.state.selectedWorkflow}`;
    panel.append(heading);

    const model = buildClarificationForm(
      parameterSchema,
      pending?.prompts ?? [],
      pending?.invocation.parameters ?? {},
    );
    const verdicts = fieldVerdicts(this.state);
    const form = el('form', 'parameter-form') as HTMLFormElement;
    for (const field of model.fields) {
      form.append(this.renderField(field, verdicts[field.name] ?? 'unset'));
    }
    const submit = el('button', 'form-submit') as HTMLButtonElement;
    submit.textContent = pending ? 'Update parameters' : 'Propose invocation';
    submit.disabled = !model.submittable;
    form.addEventListener('submit', (event) => {
      event.preventDefault();
      const values: Record<string, unknown> = {};
      for (const field of model.fields) {
        const element = form.elements.namedItem(field.name) as HTMLInputElement | HTMLSelectElement | null;
        if (element && element.value !== '') values[field.name] = parseFieldInput(field, element.value);
      }
      void this.submitForm(values);
    });
    form.append(submit);
    panel.append(form);

    const approve = el('button', 'approve') as HTMLButtonElement;
    approve.textContent = 'Approve';
    approve.disabled = !approveEnabled(this.state);
    approve.addEventListener('click', () => void this.approve());
    const dispatch = el('button', 'dispatch') as HTMLButtonElement;
    dispatch.textContent = 'Dispatch';
    dispatch.disabled = !dispatchEnabled(this.state);
    dispatch.addEventListener('click', () => void this.dispatch());
    panel.append(approve, dispatch);
    return panel;
  }

  private renderField(field: FormField, verdict: string): HTMLElement {
    const wrapper = el('label', `field field-${verdict}${field.prompt ? ' field-prompted' : ''}`);
    const caption = el('span', 'field-label');
    caption.textContent = `${field.label}${field.required ? ' *' : ''}`;
    wrapper.append(caption);

    if (field.widget === 'select' && field.options) {
      const select = el('select') as HTMLSelectElement;
      select.name = field.name;
      for (const option of field.options) {
        const item = el('option') as HTMLOptionElement;
        item.value = option;
        item.textContent = option;
        if (option === (field.value ?? field.defaultValue)) item.selected = true;
        select.append(item);
      }
      wrapper.append(select);
    } else {
      const input = el('input') as HTMLInputElement;
      input.name = field.name;
      input.type = field.widget === 'number' ? 'number' : field.widget === 'toggle' ? 'checkbox' : 'text';
      if (field.value !== undefined) input.value = String(field.value);
      else if (field.defaultValue !== undefined) input.placeholder = `default: ${String(field.defaultValue)}`;
      wrapper.append(input);
    }
    if (field.prompt) {
      const message = el('span', 'field-prompt');
      message.textContent = `${field.prompt.reason}: ${field.prompt.message} (expected ${field.prompt.expected})`;
      wrapper.append(message);
    }
    return wrapper;
  }

  private renderRuns(): HTMLElement {
    const panel = el('section', 'runs');
    for (const run of this.state.runs) {
      const card = el('div', 'run-panel');
      const title = el('h3');
      title.textContent = `run ${run.runId.slice(0, 8)} [${run.status}]`;
      card.append(title);
      for (const [stepId, status] of Object.entries(run.steps)) {
        const row = el('div', `step step-${status}`);
        row.textContent = `${stepId}: ${status}`;
        card.append(row);
      }
      const pick = el('button') as HTMLButtonElement;
      pick.textContent = this.state.compareSelection.includes(run.runId) ? 'Deselect' : 'Select for compare';
      pick.addEventListener('click', () => this.toggleCompare(run.runId));
      card.append(pick);
      panel.append(card);
    }
    if (this.state.compareSelection.length === 2) {
      const compare = el('button', 'compare-button') as HTMLButtonElement;
      compare.textContent = 'Compare selected runs';
      compare.addEventListener('click', () => void this.compareSelected());
      panel.append(compare);
    }
    return panel;
  }

  private renderCompare(): HTMLElement {
    const panel = el('section', 'compare');
    if (!this.state.comparison) return panel;
    const view = comparisonRows(this.state.comparison);
    if (view.banner) {
      const banner = el('div', 'compare-banner');
      banner.textContent = view.banner;
      panel.append(banner);
    }
    if (view.empty) {
      const note = el('div', 'compare-empty');
      note.textContent = 'no differences';
      panel.append(note);
      return panel;
    }
    const table = el('table', 'compare-table') as HTMLTableElement;
    for (const row of view.rows) {
      const tr = el('tr', `diff-${row.kind}`) as HTMLTableRowElement;
      for (const cell of [row.kind, row.name, row.a, row.b, row.delta ?? '']) {
        const td = el('td') as HTMLTableCellElement;
        td.textContent = cell;
        tr.append(td);
      }
      table.append(tr);
    }
    panel.append(table);
    return panel;
  }
}

function el(tag: string, className?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}
