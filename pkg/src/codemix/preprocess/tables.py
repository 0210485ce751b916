"""Loaders for the bundled normalization data files.

All tables ship as editable text files under preprocess/data/:
contractions (two-column TSV), stopword lists (one token per line),
the Devanagari transliteration table (codepoint-hex TAB replacement),
and the emoji name table (emoji TAB name).
"""

from __future__ import annotations

from functools import lru_cache
from pathlib import Path
from typing import Dict, FrozenSet

DATA_DIR = Path(__file__).parent / "data"

# codepoint blocks scanned for emoji
EMOJI_RANGES = (
    (0x1F000, 0x1FAFF),
    (0x2600, 0x26FF),
    (0x2700, 0x27BF),
    (0x2B00, 0x2BFF),
)

# joiners and presentation modifiers that never carry a name of their own
SILENT_CODEPOINTS = frozenset(
    [0xFE0E, 0xFE0F, 0x200D, 0x20E3] + list(range(0x1F3FB, 0x1F400))
)


def is_emoji_codepoint(cp: int) -> bool:
    return any(lo <= cp <= hi for lo, hi in EMOJI_RANGES)


def squash(name: str) -> str:
    """Collapse an emoji short name to a single token."""
    return "".join(c for c in name if c.isalnum())


@lru_cache(maxsize=None)
def load_contractions() -> Dict[str, str]:
    out: Dict[str, str] = {}
    with open(DATA_DIR / "contractions.tsv", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, value = line.split("\t")
            out[key] = value
    return out


@lru_cache(maxsize=None)
def load_stopwords(language: str) -> FrozenSet[str]:
    if language not in ("english", "hinglish"):
        raise ValueError(f"no stopword list for language {language!r}")
    path = DATA_DIR / f"stopwords_{language}.txt"
    words = set()
    with open(path, encoding="utf-8") as f:
        for line in f:
            word = line.strip()
            if word and not word.startswith("#"):
                words.add(word)
    return frozenset(words)


@lru_cache(maxsize=None)
def load_translit() -> Dict[int, str]:
    out: Dict[int, str] = {}
    with open(DATA_DIR / "translit_devanagari.tsv", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            cp_hex, _, replacement = line.partition("\t")
            out[int(cp_hex, 16)] = replacement
    return out


@lru_cache(maxsize=None)
def load_emoji_names() -> Dict[int, str]:
    out: Dict[int, str] = {}
    with open(DATA_DIR / "emoji_names.tsv", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            emoji, _, name = line.partition("\t")
            assert len(emoji) == 1, f"multi-codepoint key in emoji table: {emoji!r}"
            out[ord(emoji)] = name
    return out
