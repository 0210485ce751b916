import type { AgreementReport } from "./types.js";
import { ApiError } from "./api.js";

// reports display at 2 decimals; full precision stays on the wire
export const formatScore = (x: number): string => x.toFixed(2);

export type AgreementPanel =
  | {
      kind: "ready";
      kappa: string;
      p_o: string;
      p_e: string;
      n_items: number;
    }
  | { kind: "empty"; message: string }
  | { kind: "error"; message: string };

export function agreementPanel(report: AgreementReport): AgreementPanel {
  return {
    kind: "ready",
    kappa: formatScore(report.kappa),
    p_o: formatScore(report.p_o),
    p_e: formatScore(report.p_e),
    n_items: report.n_items,
  };
}

export function agreementFailure(e: unknown): AgreementPanel {
  if (e instanceof ApiError && e.status === 400) {
    // zero overlap is an expected state, not a fault
    return {
      kind: "empty",
      message:
        "these two annotators have no comments in common yet, so there is " +
        "no agreement to measure",
    };
  }
  const message = e instanceof Error ? e.message : String(e);
  return { kind: "error", message };
}
