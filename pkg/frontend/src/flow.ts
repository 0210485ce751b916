import type { ApiClient } from "./api.js";
import { ApiError } from "./api.js";
import type { Label, LanguageTag, TaskView } from "./types.js";

export interface Progress {
  labeled: number;
  total: number;
}

export type FlowState =
  | { kind: "start" }
  | { kind: "loading" }
  | {
      kind: "labeling";
      task: TaskView;
      language: LanguageTag | null;
      validation: string | null;
      banner: string | null;
      submitting: boolean;
      progress: Progress;
    }
  | { kind: "done"; progress: Progress }
  | { kind: "failed"; message: string };

const NO_LANGUAGE_MESSAGE =
  "pick a language tag first (it will stick for the next comments)";

/**
 * Label-flow state machine, kept free of DOM so it can be driven headless.
 *
 * Rules it enforces: at most one in-flight submission, no advance before the
 * ack arrives, language defaults to the previous comment's tag, a network
 * failure keeps the pending choice and surfaces a retry banner instead of
 * dropping anything.
 */
export class LabelFlow {
  state: FlowState = { kind: "start" };
  private lastLanguage: LanguageTag | null = null;
  private pendingLabel: Label | null = null;
  private annotator = "";

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (s: FlowState) => void = () => {},
  ) {}

  private setState(s: FlowState): void {
    this.state = s;
    this.onChange(s);
  }

  private async progress(): Promise<Progress> {
    try {
      const stats = await this.api.stats();
      return { labeled: stats.labeled, total: stats.total };
    } catch {
      // progress is decoration; never let it block the flow
      const prev = this.state;
      if (prev.kind === "labeling" || prev.kind === "done") return prev.progress;
      return { labeled: 0, total: 0 };
    }
  }

  async begin(annotator: string): Promise<void> {
    if (this.state.kind !== "start" && this.state.kind !== "failed") return;
    if (!annotator.trim()) {
      this.setState({ kind: "failed", message: "enter an annotator id" });
      return;
    }
    this.annotator = annotator.trim();
    this.setState({ kind: "loading" });
    await this.advance();
  }

  private async advance(): Promise<void> {
    try {
      const task = await this.api.nextTask(this.annotator);
      const progress = await this.progress();
      if (task === null) {
        this.setState({ kind: "done", progress });
      } else {
        this.setState({
          kind: "labeling",
          task,
          language: this.lastLanguage,
          validation: null,
          banner: null,
          submitting: false,
          progress,
        });
      }
    } catch (e) {
      this.setState({ kind: "failed", message: describe(e) });
    }
  }

  setLanguage(tag: LanguageTag): void {
    if (this.state.kind !== "labeling" || this.state.submitting) return;
    this.setState({ ...this.state, language: tag, validation: null });
  }

  async choose(label: Label): Promise<void> {
    const s = this.state;
    if (s.kind !== "labeling" || s.submitting) return;
    if (s.language === null) {
      this.setState({ ...s, validation: NO_LANGUAGE_MESSAGE });
      return;
    }
    this.pendingLabel = label;
    await this.submit(s, s.language, label);
  }

  /** Re-send after a network failure; the choice was kept. */
  async retry(): Promise<void> {
    const s = this.state;
    if (s.kind === "failed") {
      this.setState({ kind: "start" });
      if (this.annotator) await this.begin(this.annotator);
      return;
    }
    if (s.kind !== "labeling" || s.submitting) return;
    if (this.pendingLabel === null || s.language === null) return;
    await this.submit(s, s.language, this.pendingLabel);
  }

  private async submit(
    s: Extract<FlowState, { kind: "labeling" }>,
    language: LanguageTag,
    label: Label,
  ): Promise<void> {
    this.setState({ ...s, submitting: true, banner: null, validation: null });
    try {
      await this.api.submitLabel({
        comment_id: s.task.comment_id,
        annotator_id: this.annotator,
        label,
        language,
      });
    } catch (e) {
      const refused =
        e instanceof ApiError && (e.status === 0 || e.status < 500);
      if (refused) {
        // the payload was rejected; keep the task, show why inline
        this.setState({ ...s, submitting: false, validation: describe(e) });
      } else {
        // network trouble or a server fault: keep everything, offer retry
        this.setState({ ...s, submitting: false, banner: describe(e) });
      }
      return;
    }
    this.pendingLabel = null;
    this.lastLanguage = language;
    await this.advance();
  }
}

function describe(e: unknown): string {
  if (e instanceof ApiError) return e.detail;
  if (e instanceof Error) return e.message;
  return String(e);
}
