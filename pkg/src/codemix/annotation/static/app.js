import { ApiClient } from "./api.js";
import { LabelFlow } from "./flow.js";
import { agreementFailure, agreementPanel } from "./format.js";
const api = new ApiClient("");
const $ = (id) => {
    const el = document.getElementById(id);
    if (!el)
        throw new Error(`missing element #${id}`);
    return el;
};
const LANGUAGE_KEYS = {
    "1": "english",
    "2": "hindi",
    "3": "hinglish",
};
const LABEL_KEYS = { h: "hate", n: "not_hate" };
function show(id, visible) {
    $(id).hidden = !visible;
}
function render(state) {
    show("start-screen", state.kind === "start" || state.kind === "failed");
    show("loading-screen", state.kind === "loading");
    show("task-screen", state.kind === "labeling");
    show("done-screen", state.kind === "done");
    if (state.kind === "failed") {
        const err = $("start-error");
        err.textContent = state.message;
        err.hidden = false;
        return;
    }
    if (state.kind === "labeling") {
        // textContent, never innerHTML: the comment must reach the annotator
        // byte for byte, emoji and all
        $("comment-text").textContent = state.task.raw_text;
        $("platform-badge").textContent = state.task.platform;
        $("progress").textContent =
            `${state.progress.labeled} / ${state.progress.total} labeled`;
        for (const input of document.querySelectorAll("input[name=language]")) {
            input.checked = input.value === state.language;
        }
        const validation = $("validation");
        validation.textContent = state.validation ?? "";
        validation.hidden = state.validation === null;
        const banner = $("retry-banner");
        banner.hidden = state.banner === null;
        $("retry-message").textContent = state.banner ?? "";
        ($("btn-hate")).disabled = state.submitting;
        ($("btn-not-hate")).disabled = state.submitting;
        return;
    }
    if (state.kind === "done") {
        $("done-summary").textContent =
            `${state.progress.labeled} of ${state.progress.total} comments labeled. ` +
                "Nothing left in your queue.";
    }
}
const flow = new LabelFlow(api, render);
function wireLabelFlow() {
    $("start-form").addEventListener("submit", (ev) => {
        ev.preventDefault();
        void flow.begin(($("annotator-id")).value);
    });
    $("btn-hate").addEventListener("click", () => void flow.choose("hate"));
    $("btn-not-hate").addEventListener("click", () => void flow.choose("not_hate"));
    $("btn-retry").addEventListener("click", () => void flow.retry());
    for (const input of document.querySelectorAll("input[name=language]")) {
        input.addEventListener("change", () => {
            flow.setLanguage(input.value);
        });
    }
    document.addEventListener("keydown", (ev) => {
        if (ev.target instanceof HTMLInputElement && ev.target.type === "text") {
            return; // typing an id, not issuing commands
        }
        const key = ev.key.toLowerCase();
        const label = LABEL_KEYS[key];
        if (label) {
            ev.preventDefault();
            void flow.choose(label);
            return;
        }
        const language = LANGUAGE_KEYS[key];
        if (language) {
            ev.preventDefault();
            flow.setLanguage(language);
            return;
        }
        if (key === "r")
            void flow.retry();
    });
}
function renderAgreement(panel) {
    const out = $("agreement-result");
    out.hidden = false;
    if (panel.kind === "ready") {
        out.textContent =
            `kappa ${panel.kappa}   observed ${panel.p_o}   expected ${panel.p_e}` +
                `   over ${panel.n_items} shared comments`;
        out.className = "agreement ok";
    }
    else {
        out.textContent = panel.message;
        out.className = `agreement ${panel.kind}`;
    }
}
function wireAgreement() {
    $("agreement-form").addEventListener("submit", async (ev) => {
        ev.preventDefault();
        const a = ($("annotator-a")).value.trim();
        const b = ($("annotator-b")).value.trim();
        if (!a || !b)
            return;
        try {
            renderAgreement(agreementPanel(await api.agreement(a, b)));
        }
        catch (e) {
            renderAgreement(agreementFailure(e));
        }
    });
}
wireLabelFlow();
wireAgreement();
