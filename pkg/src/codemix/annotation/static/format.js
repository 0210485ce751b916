import { ApiError } from "./api.js";
// reports display at 2 decimals; full precision stays on the wire
export const formatScore = (x) => x.toFixed(2);
export function agreementPanel(report) {
    return {
        kind: "ready",
        kappa: formatScore(report.kappa),
        p_o: formatScore(report.p_o),
        p_e: formatScore(report.p_e),
        n_items: report.n_items,
    };
}
export function agreementFailure(e) {
    if (e instanceof ApiError && e.status === 400) {
        // zero overlap is an expected state, not a fault
        return {
            kind: "empty",
            message: "these two annotators have no comments in common yet, so there is " +
                "no agreement to measure",
        };
    }
    const message = e instanceof Error ? e.message : String(e);
    return { kind: "error", message };
}
