// Shapes mirrored from the annotation service's JSON API.

export type Label = "hate" | "not_hate";
export type LanguageTag = "english" | "hindi" | "hinglish";

export const LABELS: readonly Label[] = ["hate", "not_hate"];
export const LANGUAGES: readonly LanguageTag[] = ["english", "hindi", "hinglish"];

export interface TaskView {
  comment_id: string;
  raw_text: string;
  platform: string;
  status: string;
  assigned_to: string | null;
}

export interface LabelPayload {
  comment_id: string;
  annotator_id: string;
  label: Label;
  language: LanguageTag;
}

export interface LabelAck {
  labeled_count: number;
  revision: number;
}

export interface AgreementReport {
  kappa: number;
  p_o: number;
  p_e: number;
  n_items: number;
}

export interface StatsResponse {
  total: number;
  pending: number;
  labeled: number;
  skipped: number;
  annotators: Record<string, number>;
}
