"""Dataset model, CSV ingestion, deterministic splitting, FLAIR export.

Comments come in from UTF-8 CSV files with a caller-supplied column mapping
(there is no fixed upstream schema). Splitting is reproducible from a seed
alone; the FLAIR exporter writes the exact `__label__<class> <text>` line
format consumed by stacked-embedding trainers.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

PLATFORMS = ("youtube", "instagram", "twitter", "other")
LANGUAGES = ("english", "hindi", "hinglish", "unknown")
CLASSES = ("hate", "not_hate")

# logical field -> default CSV column name
DEFAULT_COLUMNS = {
    "id": "id",
    "platform": "platform",
    "text": "text",
    "language": "language",
    "label": "label",
}

_LABEL_ALIASES = {
    "hate": "hate",
    "not_hate": "not_hate",
    "not-hate": "not_hate",
    "nothate": "not_hate",
    "not hate": "not_hate",
}


class ConfigError(ValueError):
    """Raised when a column mapping does not fit the file being loaded."""


@dataclass
class Comment:
    id: str
    platform: str
    raw_text: str
    language: str = "unknown"
    gold_label: Optional[str] = None
    annotator_labels: Dict[str, str] = field(default_factory=dict)
    processed_text: Optional[str] = None


@dataclass
class LoadSummary:
    rows_read: int = 0
    loaded: int = 0
    skipped_empty: int = 0
    row_errors: List[Tuple[int, str]] = field(default_factory=list)


@dataclass
class Dataset:
    comments: List[Comment]
    name: str
    load_summary: Optional[LoadSummary] = None

    def __post_init__(self):
        seen = set()
        for c in self.comments:
            if c.id in seen:
                raise ValueError(f"duplicate comment id in dataset: {c.id!r}")
            seen.add(c.id)


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float
    dev_frac: float
    test_frac: float
    seed: int

    def __post_init__(self):
        for frac in (self.train_frac, self.dev_frac, self.test_frac):
            if not 0.0 <= frac <= 1.0:
                raise ValueError(f"split fraction out of [0,1]: {frac}")
        total = self.train_frac + self.dev_frac + self.test_frac
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"split fractions sum to {total}, expected 1")


def normalize_label(raw: str) -> Optional[str]:
    """Map a label cell to hate/not_hate; None for unrecognized values."""
    return _LABEL_ALIASES.get(raw.strip().lower().replace("_", " ").replace("-", " ")
                              .replace(" ", "_"))


def load_csv(path, column_map: Optional[Dict[str, str]] = None) -> Dataset:
    """Load one Comment per CSV row.

    Rows with empty text are skipped and counted; rows with a missing text
    cell or an unrecognized label are recorded as row errors (1-based file
    line numbers) and the load continues.
    """
    path = Path(path)
    columns = dict(DEFAULT_COLUMNS)
    if column_map:
        columns.update(column_map)
    summary = LoadSummary()
    comments: List[Comment] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        header = reader.fieldnames or []
        if columns["text"] not in header:
            raise ConfigError(
                f"required text column {columns['text']!r} not in header {header}"
            )
        for logical, col in columns.items():
            if column_map and logical in column_map and col not in header:
                raise ConfigError(f"mapped column {col!r} ({logical}) not in header")
        for row in reader:
            line_num = reader.line_num
            summary.rows_read += 1
            text = row.get(columns["text"])
            if text is None:
                summary.row_errors.append((line_num, "row too short: no text cell"))
                continue
            if not text.strip():
                summary.skipped_empty += 1
                continue
            raw_label = (row.get(columns["label"]) or "").strip()
            gold = None
            if raw_label:
                gold = normalize_label(raw_label)
                if gold is None:
                    summary.row_errors.append(
                        (line_num, f"unrecognized label {raw_label!r}")
                    )
                    continue
            platform = (row.get(columns["platform"]) or "").strip().lower()
            if platform not in PLATFORMS:
                platform = "other"
            language = (row.get(columns["language"]) or "").strip().lower()
            if language not in LANGUAGES:
                language = "unknown"
            cid = (row.get(columns["id"]) or "").strip() or f"r{line_num}"
            comments.append(Comment(
                id=cid, platform=platform, raw_text=text,
                language=language, gold_label=gold,
            ))
            summary.loaded += 1
    return Dataset(comments=comments, name=path.stem, load_summary=summary)


def split(dataset: Dataset, spec: SplitSpec) -> Tuple[Dataset, Dataset, Dataset]:
    """Deterministic seeded partition into train/dev/test.

    Sizes are floor(n * frac) for train and dev; test receives the rest, so
    remainder items land in test in shuffled order.
    """
    n = len(dataset.comments)
    if n < 3:
        raise ValueError(f"dataset has {n} comments; need at least 3 to split")
    shuffled = list(dataset.comments)
    random.Random(spec.seed).shuffle(shuffled)
    n_train = int(n * spec.train_frac)
    n_dev = int(n * spec.dev_frac)
    train = shuffled[:n_train]
    dev = shuffled[n_train:n_train + n_dev]
    test = shuffled[n_train + n_dev:]
    return (
        Dataset(comments=train, name=f"{dataset.name}-train"),
        Dataset(comments=dev, name=f"{dataset.name}-dev"),
        Dataset(comments=test, name=f"{dataset.name}-test"),
    )


def export_flair(dataset: Dataset, path) -> int:
    """Write `__label__<class> <text>` lines; returns the line count.

    Uses processed_text when present, else raw_text, with internal newlines
    replaced by single spaces. Refuses to write anything if any comment
    lacks a gold label.
    """
    unlabeled = [c.id for c in dataset.comments if c.gold_label is None]
    if unlabeled:
        raise ValueError(f"comments without gold_label: {unlabeled}")
    lines = []
    for c in dataset.comments:
        text = c.processed_text if c.processed_text is not None else c.raw_text
        text = " ".join(text.split("\n"))
        lines.append(f"__label__{c.gold_label} {text}\n")
    with open(path, "w", encoding="utf-8") as f:
        f.writelines(lines)
    return len(lines)
