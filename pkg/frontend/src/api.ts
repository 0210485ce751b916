import type {
  AgreementReport,
  LabelAck,
  LabelPayload,
  StatsResponse,
  TaskView,
} from "./types.js";
import { LABELS, LANGUAGES } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function errorDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return resp.statusText;
  }
}

// client-side mirror of the POST /api/labels schema; the service would
// answer 422, this keeps bad payloads from ever leaving the page
export function validateLabelPayload(p: Partial<LabelPayload>): string[] {
  const problems: string[] = [];
  if (!p.comment_id) problems.push("comment_id is required");
  if (!p.annotator_id) problems.push("annotator_id is required");
  if (!p.label || !LABELS.includes(p.label)) {
    problems.push(`label must be one of ${LABELS.join(", ")}`);
  }
  if (!p.language || !LANGUAGES.includes(p.language)) {
    problems.push(`language must be one of ${LANGUAGES.join(", ")}`);
  }
  return problems;
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok && resp.status !== 204) {
      throw new ApiError(resp.status, await errorDetail(resp));
    }
    return resp;
  }

  // null means the queue is exhausted for this annotator (204)
  async nextTask(annotator: string): Promise<TaskView | null> {
    const resp = await this.request(
      `/api/tasks/next?annotator=${encodeURIComponent(annotator)}`,
    );
    if (resp.status === 204) return null;
    return (await resp.json()) as TaskView;
  }

  async submitLabel(payload: LabelPayload): Promise<LabelAck> {
    const problems = validateLabelPayload(payload);
    if (problems.length > 0) {
      throw new ApiError(0, problems.join("; "));
    }
    const resp = await this.request("/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    return (await resp.json()) as LabelAck;
  }

  async agreement(a: string, b: string): Promise<AgreementReport> {
    const resp = await this.request(
      `/api/agreement?a=${encodeURIComponent(a)}&b=${encodeURIComponent(b)}`,
    );
    return (await resp.json()) as AgreementReport;
  }

  async stats(): Promise<StatsResponse> {
    const resp = await this.request("/api/stats");
    return (await resp.json()) as StatsResponse;
  }
}
