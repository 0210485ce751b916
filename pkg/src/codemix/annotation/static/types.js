// Shapes mirrored from the annotation service's JSON API.
export const LABELS = ["hate", "not_hate"];
export const LANGUAGES = ["english", "hindi", "hinglish"];
