"""Evaluation metrics: confusion matrices, classification scores, agreement.

Score reports carry both support-weighted and macro averages; weighted is the
reporting default because support-weighted recall coincides with accuracy,
matching how the result tables relate the two columns. Cohen's kappa uses the
(p_o - p_e) / (1 - p_e) form with kappa defined as 1 when p_o = p_e = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

LABELS: Tuple[str, str] = ("hate", "not_hate")


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class EvalReport:
    confusion: List[List[int]]
    accuracy: float
    weighted_recall: float
    weighted_f1: float
    macro_f1: float
    per_class: Dict[str, ClassScores]

    def as_dict(self) -> dict:
        return {
            "confusion": [list(row) for row in self.confusion],
            "accuracy": self.accuracy,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "macro_f1": self.macro_f1,
            "per_class": {
                label: {
                    "precision": s.precision,
                    "recall": s.recall,
                    "f1": s.f1,
                    "support": s.support,
                }
                for label, s in self.per_class.items()
            },
        }

    def render_text(self) -> str:
        lines = [
            f"accuracy        {self.accuracy:.4f}",
            f"weighted_recall {self.weighted_recall:.4f}",
            f"weighted_f1     {self.weighted_f1:.4f}",
            f"macro_f1        {self.macro_f1:.4f}",
        ]
        for label, s in self.per_class.items():
            lines.append(
                f"{label:<12} precision {s.precision:.4f}  recall {s.recall:.4f}  "
                f"f1 {s.f1:.4f}  support {s.support}"
            )
        lines.append("")
        lines.append(render_confusion(self.confusion))
        return "\n".join(lines)


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    observed_agreement: float
    expected_agreement: float
    n_items: int

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "p_o": self.observed_agreement,
            "p_e": self.expected_agreement,
            "n_items": self.n_items,
        }


def confusion(golds: Sequence[str], preds: Sequence[str],
              labels: Sequence[str] = LABELS) -> List[List[int]]:
    """Count matrix indexed [gold][pred] over the given label order."""
    if len(golds) != len(preds):
        raise ValueError(
            f"length mismatch: {len(golds)} gold labels vs {len(preds)} predictions"
        )
    index = {label: i for i, label in enumerate(labels)}
    matrix = [[0] * len(labels) for _ in labels]
    for g, p in zip(golds, preds):
        if g not in index or p not in index:
            raise ValueError(f"label outside {tuple(labels)}: {g!r} / {p!r}")
        matrix[index[g]][index[p]] += 1
    return matrix


def scores(matrix: Sequence[Sequence[int]],
           labels: Sequence[str] = LABELS) -> EvalReport:
    """Per-class precision/recall/F1 and weighted aggregates from a matrix."""
    total = sum(sum(row) for row in matrix)
    if total == 0:
        raise ValueError("cannot score an all-zero confusion matrix")
    per_class: Dict[str, ClassScores] = {}
    for i, label in enumerate(labels):
        col_sum = sum(row[i] for row in matrix)
        row_sum = sum(matrix[i])
        tp = matrix[i][i]
        precision = tp / col_sum if col_sum > 0 else 0.0
        recall = tp / row_sum if row_sum > 0 else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
        per_class[label] = ClassScores(precision, recall, f1, row_sum)
    accuracy = sum(matrix[i][i] for i in range(len(labels))) / total
    weighted_recall = sum(s.recall * s.support for s in per_class.values()) / total
    weighted_f1 = sum(s.f1 * s.support for s in per_class.values()) / total
    macro_f1 = sum(s.f1 for s in per_class.values()) / len(labels)
    return EvalReport(
        confusion=[list(row) for row in matrix],
        accuracy=accuracy,
        weighted_recall=weighted_recall,
        weighted_f1=weighted_f1,
        macro_f1=macro_f1,
        per_class=per_class,
    )


def evaluate(golds: Sequence[str], preds: Sequence[str],
             labels: Sequence[str] = LABELS) -> EvalReport:
    return scores(confusion(golds, preds, labels), labels)


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> AgreementReport:
    """Chance-corrected agreement between two labelings of the same items."""
    if len(labels_a) != len(labels_b):
        raise ValueError(
            f"length mismatch: {len(labels_a)} vs {len(labels_b)} labels"
        )
    n = len(labels_a)
    if n == 0:
        raise ValueError("agreement needs at least one item")
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    alphabet = set(labels_a) | set(labels_b)
    expected = 0.0
    for label in alphabet:
        pa = sum(1 for a in labels_a if a == label) / n
        pb = sum(1 for b in labels_b if b == label) / n
        expected += pa * pb
    if expected >= 1.0:
        # both marginals degenerate on the same class; agreement is total
        kappa = 1.0
        expected = 1.0
    else:
        kappa = (observed - expected) / (1.0 - expected)
    return AgreementReport(kappa, observed, expected, n)


def render_confusion(matrix: Sequence[Sequence[int]],
                     labels: Sequence[str] = LABELS) -> str:
    width = max(len(label) for label in labels) + 7
    cell = max(8, max(len(str(v)) for row in matrix for v in row) + 2)
    header = " " * width + "".join(f"{'pred ' + label:>{cell + 6}}" for label in labels)
    lines = [header]
    for label, row in zip(labels, matrix):
        lines.append(
            f"{'gold ' + label:<{width}}" + "".join(f"{v:>{cell + 6}}" for v in row)
        )
    return "\n".join(lines)


def render_comparison(rows: Sequence[Tuple[str, str, EvalReport]]) -> str:
    """Result table with Dataset / Model / Accuracy / Recall / F1 columns.

    A row whose report is None renders as FAILED.
    """
    out = [f"{'Dataset':<22}{'Model':<26}{'Accuracy':>10}{'Recall':>10}{'F1':>10}"]
    out.append("-" * len(out[0]))
    for dataset, model, report in rows:
        if report is None:
            out.append(f"{dataset:<22}{model:<26}{'FAILED':>10}{'':>10}{'':>10}")
        else:
            out.append(
                f"{dataset:<22}{model:<26}"
                f"{report.accuracy:>10.2f}{report.weighted_recall:>10.2f}"
                f"{report.weighted_f1:>10.2f}"
            )
    return "\n".join(out)
