"""Greedy WordPiece tokenization and fixed-length encoding.

A vocabulary is a plain text file, one token per line, line index = id, with
the four special tokens [PAD] [UNK] [CLS] [SEP] present somewhere in it.
Words are segmented longest-prefix-first with "##" marking continuations;
encoding wraps the pieces in [CLS]...[SEP], truncates keeping the head, and
pads to exactly max_len.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

CONTINUATION_PREFIX = "##"
SPECIAL_SURFACE = {"cls": "[CLS]", "sep": "[SEP]", "pad": "[PAD]", "unk": "[UNK]"}


@dataclass(frozen=True)
class Vocabulary:
    token_to_id: Dict[str, int]
    tokens: List[str]
    specials: Dict[str, str]
    continuation_prefix: str = CONTINUATION_PREFIX

    @property
    def size(self) -> int:
        return len(self.tokens)

    @property
    def cls_id(self) -> int:
        return self.token_to_id[self.specials["cls"]]

    @property
    def sep_id(self) -> int:
        return self.token_to_id[self.specials["sep"]]

    @property
    def pad_id(self) -> int:
        return self.token_to_id[self.specials["pad"]]

    @property
    def unk_id(self) -> int:
        return self.token_to_id[self.specials["unk"]]


@dataclass(frozen=True)
class TokenSequence:
    ids: List[int]
    tokens: List[str]      # surface tokens before padding, [CLS]...[SEP]
    mask: List[int]
    max_len: int


def load_vocab(path) -> Vocabulary:
    path = Path(path)
    tokens: List[str] = []
    positions = defaultdict(list)
    with open(path, encoding="utf-8") as f:
        for line_num, line in enumerate(f, start=1):
            token = line.rstrip("\n")
            tokens.append(token)
            positions[token].append(line_num)
    for token, lines in positions.items():
        if len(lines) > 1:
            raise ValueError(
                f"duplicate token {token!r} on lines {' and '.join(map(str, lines))}"
            )
    for role, surface in SPECIAL_SURFACE.items():
        if surface not in positions:
            raise ValueError(f"vocabulary missing special token {surface}")
    token_to_id = {token: i for i, token in enumerate(tokens)}
    return Vocabulary(token_to_id=token_to_id, tokens=tokens,
                      specials=dict(SPECIAL_SURFACE))


def wordpiece_tokenize(word: str, vocab: Vocabulary) -> List[str]:
    """Greedy longest-match-first subword segmentation.

    At each position the longest vocabulary-known prefix wins, with the
    continuation prefix applied after the first piece; a position with no
    match at all turns the whole word into [UNK].
    """
    prefix = vocab.continuation_prefix
    pieces: List[str] = []
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = prefix + piece
            if piece in vocab.token_to_id:
                match = piece
                break
            end -= 1
        if match is None:
            return [vocab.specials["unk"]]
        pieces.append(match)
        start = end
    return pieces


def encode(text: str, vocab: Vocabulary, max_len: int) -> TokenSequence:
    """Encode whitespace-split text to ids of length exactly max_len."""
    if max_len < 3:
        raise ValueError(f"max_len must be at least 3, got {max_len}")
    pieces: List[str] = [vocab.specials["cls"]]
    for word in text.split():
        pieces.extend(wordpiece_tokenize(word, vocab))
    # head truncation; [SEP] is always the final non-pad token
    pieces = pieces[:max_len - 1]
    pieces.append(vocab.specials["sep"])
    ids = [vocab.token_to_id[p] for p in pieces]
    mask = [1] * len(ids)
    pad_count = max_len - len(ids)
    ids.extend([vocab.pad_id] * pad_count)
    mask.extend([0] * pad_count)
    return TokenSequence(ids=ids, tokens=pieces, mask=mask, max_len=max_len)


def detokenize(tokens: List[str], vocab: Vocabulary) -> List[str]:
    """Fuse continuation pieces back into words, dropping special tokens."""
    special_surfaces = set(vocab.specials.values())
    words: List[str] = []
    for token in tokens:
        if token in special_surfaces:
            continue
        if token.startswith(vocab.continuation_prefix) and words:
            words[-1] += token[len(vocab.continuation_prefix):]
        else:
            words.append(token)
    return words
