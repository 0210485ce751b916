"""Language-specific text normalization pipelines.

Two fixed pipelines built from small composable stages:

english:  lowercase -> expand_contractions -> strip_social
          -> demojize(replace_with_name) -> remove_stopwords(english)
          -> lemmatize
hinglish: lowercase -> transliterate_devanagari -> strip_social
          -> demojize(remove) -> remove_stopwords(hinglish + english)

Both pipelines are idempotent: running one on its own output returns the
input unchanged. The stage orderings and table contents reproduce the
reference example outputs byte for byte.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, FrozenSet, List, Tuple

from . import tables
from .lemmatize import lemmatize

__all__ = [
    "Pipeline", "StopwordList", "english_pipeline", "hinglish_pipeline",
    "run_pipeline_english", "run_pipeline_hinglish", "lowercase",
    "expand_contractions", "strip_social", "demojize", "demojize_with_stats",
    "remove_stopwords", "stopword_list", "transliterate_devanagari",
    "transliterate_with_stats", "lemmatize",
]

_URL_RE = re.compile(r"https?://\S+|www\.\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\S+")
_HASHTAG_RE = re.compile(r"#\S+")
# tokens that later stages consume whole; contraction matching must not
# rewrite their interiors
_SOCIAL_TOKEN_RE = re.compile(r"^(?:[@#]|https?://|www\.)", re.IGNORECASE)
_SPACE_RUN_RE = re.compile(r" {2,}")


def lowercase(text: str) -> str:
    return text.lower()


@lru_cache(maxsize=1)
def _contraction_re() -> re.Pattern:
    keys = sorted(tables.load_contractions(), key=len, reverse=True)
    alternation = "|".join(re.escape(k) for k in keys)
    return re.compile(
        rf"(?<![A-Za-z0-9_])(?:{alternation})(?![A-Za-z0-9_])", re.IGNORECASE
    )


def expand_contractions(text: str) -> str:
    """Replace table-listed contractions with their lowercase expansions.

    Matching is case-insensitive on whole alphanumeric runs; mentions,
    hashtags, and URLs are left untouched.
    """
    table = tables.load_contractions()
    pattern = _contraction_re()

    def expand_token(token: str) -> str:
        if _SOCIAL_TOKEN_RE.match(token):
            return token
        return pattern.sub(lambda m: table[m.group(0).lower()], token)

    parts = re.split(r"(\s+)", text)
    return "".join(p if i % 2 else expand_token(p) for i, p in enumerate(parts))


def strip_social(text: str) -> str:
    """Remove URLs, mentions, hashtags, and punctuation; collapse whitespace.

    Emoji codepoints survive so a later demojize stage can see them.
    """
    t = _URL_RE.sub(" ", text)
    t = _MENTION_RE.sub(" ", t)
    t = _HASHTAG_RE.sub(" ", t)
    chars = []
    for ch in t:
        cp = ord(ch)
        if tables.is_emoji_codepoint(cp) or cp in tables.SILENT_CODEPOINTS:
            chars.append(ch)
        elif unicodedata.category(ch)[0] in ("P", "S"):
            chars.append(" ")
        else:
            chars.append(ch)
    return re.sub(r"\s+", " ", "".join(chars)).strip()


def demojize_with_stats(text: str, mode: str = "replace_with_name") -> Tuple[str, int]:
    """Demojize and report how many unknown emoji were dropped."""
    if mode not in ("replace_with_name", "remove"):
        raise ValueError(f"unknown demojize mode {mode!r}")
    names = tables.load_emoji_names()
    touched = False
    unknown = 0
    out: List[str] = []
    for ch in text:
        cp = ord(ch)
        if cp in tables.SILENT_CODEPOINTS:
            touched = True
        elif cp in names:
            touched = True
            if mode == "replace_with_name":
                out.append(f" {tables.squash(names[cp])} ")
            else:
                out.append(" ")
        elif tables.is_emoji_codepoint(cp):
            touched = True
            unknown += 1
            out.append(" ")
        else:
            out.append(ch)
    if not touched:
        return text, 0
    return _SPACE_RUN_RE.sub(" ", "".join(out)).strip(" "), unknown


def demojize(text: str, mode: str = "replace_with_name") -> str:
    return demojize_with_stats(text, mode)[0]


@dataclass(frozen=True)
class StopwordList:
    words: FrozenSet[str]
    language: str


@lru_cache(maxsize=None)
def stopword_list(language: str) -> StopwordList:
    if language == "hinglish+english":
        words = tables.load_stopwords("hinglish") | tables.load_stopwords("english")
        return StopwordList(frozenset(words), language)
    return StopwordList(tables.load_stopwords(language), language)


def remove_stopwords(text: str, stoplist: StopwordList) -> str:
    return " ".join(t for t in text.split() if t not in stoplist.words)


def transliterate_with_stats(text: str) -> Tuple[str, int]:
    """Map Devanagari codepoints to Latin; count any unmapped ones dropped."""
    table = tables.load_translit()
    dropped = 0
    out: List[str] = []
    for ch in text:
        cp = ord(ch)
        if 0x0900 <= cp <= 0x097F:
            if cp in table:
                out.append(table[cp])
            else:
                dropped += 1
        else:
            out.append(ch)
    return "".join(out), dropped


def transliterate_devanagari(text: str) -> str:
    return transliterate_with_stats(text)[0]


@dataclass(frozen=True)
class PipelineStage:
    name: str
    transform: Callable[[str], str]


@dataclass(frozen=True)
class Pipeline:
    stages: Tuple[PipelineStage, ...]
    language: str

    @property
    def stage_names(self) -> List[str]:
        return [s.name for s in self.stages]

    def run(self, text: str) -> str:
        for stage in self.stages:
            text = stage.transform(text)
        return text


@lru_cache(maxsize=1)
def english_pipeline() -> Pipeline:
    return Pipeline(
        stages=(
            PipelineStage("lowercase", lowercase),
            PipelineStage("expand_contractions", expand_contractions),
            PipelineStage("strip_social", strip_social),
            PipelineStage("demojize[replace_with_name]",
                          lambda t: demojize(t, "replace_with_name")),
            PipelineStage("remove_stopwords[english]",
                          lambda t: remove_stopwords(t, stopword_list("english"))),
            PipelineStage("lemmatize", lemmatize),
        ),
        language="english",
    )


@lru_cache(maxsize=1)
def hinglish_pipeline() -> Pipeline:
    return Pipeline(
        stages=(
            PipelineStage("lowercase", lowercase),
            PipelineStage("transliterate_devanagari", transliterate_devanagari),
            PipelineStage("strip_social", strip_social),
            PipelineStage("demojize[remove]", lambda t: demojize(t, "remove")),
            PipelineStage("remove_stopwords[hinglish+english]",
                          lambda t: remove_stopwords(t, stopword_list("hinglish+english"))),
        ),
        language="hinglish",
    )


def run_pipeline_english(text: str) -> str:
    return english_pipeline().run(text)


def run_pipeline_hinglish(text: str) -> str:
    return hinglish_pipeline().run(text)


def pipeline_for(language: str) -> Pipeline:
    if language == "english":
        return english_pipeline()
    if language == "hinglish":
        return hinglish_pipeline()
    raise ValueError(f"no pipeline for language {language!r}")
