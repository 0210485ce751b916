"""Annotation project store: task queue, label records, agreement, export.

State lives in a single append-only JSONL project file. Every label submission
is appended, flushed, and fsynced before it is acknowledged, so a crash after
an ack can never lose the record; reopening the file replays it. A torn final
line (crash mid-write) is tolerated and dropped, corruption anywhere else is a
hard error naming the line.
"""

import json
import os
import threading
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..corpus import Comment, Dataset
from .. import metrics

ANNOTATION_LABELS = ("hate", "not_hate")
ANNOTATION_LANGUAGES = ("english", "hindi", "hinglish")
EXPORT_STRATEGIES = ("unanimous", "majority", "first")
TASK_STATUSES = ("pending", "labeled", "skipped")


class UnknownCommentError(LookupError):
    pass


class UnknownAnnotatorError(ValueError):
    pass


class ZeroOverlapError(ValueError):
    pass


@dataclass(frozen=True)
class LabelRecord:
    comment_id: str
    annotator_id: str
    label: str
    language: str
    timestamp: float
    revision: int


@dataclass(frozen=True)
class AnnotationTask:
    comment_id: str
    raw_text: str
    platform: str
    status: str
    assigned_to: Optional[str] = None

    def as_dict(self):
        return {"comment_id": self.comment_id, "raw_text": self.raw_text,
                "platform": self.platform, "status": self.status,
                "assigned_to": self.assigned_to}


@dataclass(frozen=True)
class ExportResult:
    dataset: Dataset
    excluded: int


def _validate_enum(value, allowed, fieldname):
    if value not in allowed:
        raise ValueError(f"invalid {fieldname} {value!r}; expected one of {allowed}")


class AnnotationProject:
    """One annotation project backed by one append-safe JSONL file.

    Submissions are serialized through a lock and the write-ahead append is
    fsynced before the in-memory state updates, so acknowledged labels are
    durable. Task offers are in-memory only: an offer is remembered per
    annotator until that annotator labels the comment, which is what keeps a
    second browser tab from being handed the same comment. Offers reset on
    restart by design.
    """

    def __init__(self, path, roster=None):
        self.path = Path(path)
        if not self.path.is_file():
            raise FileNotFoundError(
                f"project file not found at {self.path}; create one first")
        self.roster = frozenset(roster) if roster else None
        self._lock = threading.Lock()
        self._comments: Dict[str, Comment] = {}
        self._records: Dict[Tuple[str, str], LabelRecord] = {}
        self._first_seq: Dict[Tuple[str, str], int] = {}
        self._seq = 0
        self._offered: Dict[str, set] = {}
        self._replay()
        self._order = sorted(self._comments)
        self._fh = open(self.path, "a", encoding="utf-8")

    @classmethod
    def create(cls, path, dataset: Dataset, roster=None) -> "AnnotationProject":
        path = Path(path)
        if path.exists():
            raise FileExistsError(f"project file already exists at {path}")
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            for c in sorted(dataset.comments, key=lambda c: c.id):
                fh.write(json.dumps({"type": "comment", "id": c.id,
                                     "platform": c.platform, "raw_text": c.raw_text,
                                     "language": c.language}) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return cls(path, roster=roster)

    def _replay(self):
        lines = self.path.read_text(encoding="utf-8").splitlines()
        for n, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                if n == len(lines):
                    # torn final write from a crash; the record was never acked
                    continue
                raise ValueError(f"corrupt project file {self.path} at line {n}")
            if obj["type"] == "comment":
                c = Comment(id=obj["id"], platform=obj["platform"],
                            raw_text=obj["raw_text"],
                            language=obj.get("language", "unknown"))
                self._comments[c.id] = c
            elif obj["type"] == "label":
                key = (obj["comment_id"], obj["annotator_id"])
                if key not in self._first_seq:
                    self._seq += 1
                    self._first_seq[key] = self._seq
                self._records[key] = LabelRecord(
                    comment_id=obj["comment_id"], annotator_id=obj["annotator_id"],
                    label=obj["label"], language=obj["language"],
                    timestamp=obj["timestamp"], revision=obj["revision"])
            else:
                raise ValueError(
                    f"corrupt project file {self.path} at line {n}: "
                    f"unknown record type {obj['type']!r}")

    def _check_annotator(self, annotator_id: str):
        if not annotator_id:
            raise UnknownAnnotatorError("annotator id must be non-empty")
        if self.roster is not None and annotator_id not in self.roster:
            raise UnknownAnnotatorError(
                f"annotator {annotator_id!r} is not registered for this project")

    def _labeled_ids(self) -> set:
        return {cid for cid, _ in self._records}

    @property
    def labeled_count(self) -> int:
        return len(self._labeled_ids())

    def next_task(self, annotator_id: str) -> Optional[AnnotationTask]:
        """First comment in id order neither labeled by nor offered to the caller."""
        self._check_annotator(annotator_id)
        with self._lock:
            offered = self._offered.setdefault(annotator_id, set())
            for cid in self._order:
                if (cid, annotator_id) in self._records or cid in offered:
                    continue
                offered.add(cid)
                c = self._comments[cid]
                status = "labeled" if any(k[0] == cid for k in self._records) else "pending"
                return AnnotationTask(comment_id=cid, raw_text=c.raw_text,
                                      platform=c.platform, status=status,
                                      assigned_to=annotator_id)
        return None

    def submit(self, comment_id: str, annotator_id: str, label: str,
               language: str) -> Tuple[int, int]:
        """Persist one label; returns (labeled_count, revision) after the write."""
        self._check_annotator(annotator_id)
        _validate_enum(label, ANNOTATION_LABELS, "label")
        _validate_enum(language, ANNOTATION_LANGUAGES, "language")
        if comment_id not in self._comments:
            raise UnknownCommentError(f"unknown comment_id {comment_id!r}")
        with self._lock:
            key = (comment_id, annotator_id)
            prev = self._records.get(key)
            revision = prev.revision + 1 if prev else 1
            record = LabelRecord(comment_id=comment_id, annotator_id=annotator_id,
                                 label=label, language=language,
                                 timestamp=time.time(), revision=revision)
            line = json.dumps({"type": "label", "comment_id": comment_id,
                               "annotator_id": annotator_id, "label": label,
                               "language": language, "timestamp": record.timestamp,
                               "revision": revision})
            # durability before acknowledgment
            self._fh.write(line + "\n")
            self._fh.flush()
            os.fsync(self._fh.fileno())
            if key not in self._first_seq:
                self._seq += 1
                self._first_seq[key] = self._seq
            self._records[key] = record
            self._offered.setdefault(annotator_id, set()).discard(comment_id)
            return self.labeled_count, revision

    def agreement(self, annotator_a: str, annotator_b: str) -> metrics.AgreementReport:
        common = [cid for cid in self._order
                  if (cid, annotator_a) in self._records
                  and (cid, annotator_b) in self._records]
        if not common:
            raise ZeroOverlapError(
                f"zero overlap: annotators {annotator_a!r} and {annotator_b!r} "
                f"share no labeled comments")
        la = [self._records[(cid, annotator_a)].label for cid in common]
        lb = [self._records[(cid, annotator_b)].label for cid in common]
        return metrics.cohen_kappa(la, lb)

    def _comment_records(self, cid: str) -> List[LabelRecord]:
        recs = [r for (c, _), r in self._records.items() if c == cid]
        recs.sort(key=lambda r: self._first_seq[(r.comment_id, r.annotator_id)])
        return recs

    def export_labeled(self, strategy: str) -> ExportResult:
        """Resolve per-annotator labels to gold labels under a strategy.

        unanimous: all labels agree, otherwise excluded.
        majority: strict majority, ties excluded.
        first: the label of whoever labeled the comment first (current value).
        Language comes from the modal tag, earliest-first on ties.
        """
        _validate_enum(strategy, EXPORT_STRATEGIES, "strategy")
        out, excluded = [], 0
        for cid in self._order:
            recs = self._comment_records(cid)
            if not recs:
                continue
            labels = [r.label for r in recs]
            if strategy == "first":
                resolved = labels[0]
            elif strategy == "unanimous":
                resolved = labels[0] if len(set(labels)) == 1 else None
            else:
                counts = Counter(labels).most_common()
                if len(counts) > 1 and counts[0][1] == counts[1][1]:
                    resolved = None
                else:
                    resolved = counts[0][0]
            if resolved is None:
                excluded += 1
                continue
            tag_counts = Counter(r.language for r in recs)
            top = max(tag_counts.values())
            language = next(r.language for r in recs if tag_counts[r.language] == top)
            c = self._comments[cid]
            out.append(Comment(id=c.id, platform=c.platform, raw_text=c.raw_text,
                               language=language, gold_label=resolved,
                               annotator_labels={r.annotator_id: r.label for r in recs}))
        return ExportResult(dataset=Dataset(comments=out, name=f"export-{strategy}"),
                            excluded=excluded)

    def stats(self) -> dict:
        labeled = self._labeled_ids()
        per_annotator = Counter(aid for _, aid in self._records)
        return {"total": len(self._comments),
                "pending": len(self._comments) - len(labeled),
                "labeled": len(labeled),
                "skipped": 0,
                "annotators": dict(sorted(per_annotator.items()))}

    def close(self):
        self._fh.close()
