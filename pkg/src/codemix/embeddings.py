"""Neural text embedders: tiny transformer, character BiLSTM, stacking.

Every embedder is built deterministically from a seed, so two builds of the
same spec produce bit-identical weights and therefore bit-identical outputs.
Pretrained weights load from a directory holding ``embedder.json`` plus
``tensors.pt``; relative paths resolve against the ``CODEMIX_WEIGHTS``
environment variable.
"""

import json
import math
import os
from dataclasses import dataclass, field, asdict
from functools import lru_cache
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
import torch
from torch import nn

from . import tokenizer as tok

WEIGHTS_ENV = "CODEMIX_WEIGHTS"

KINDS = ("transformer", "char_bilstm", "stacked")
WEIGHT_SOURCES = ("random_tiny", "pretrained_file")


@dataclass(frozen=True)
class EmbedderSpec:
    """Complete recipe for one embedder; hashable so builds can be cached."""

    kind: str
    dim: int
    weight_source: str = "random_tiny"
    seed: int = 0
    trainable: bool = False
    components: Tuple["EmbedderSpec", ...] = ()
    # transformer backend knobs
    vocab_size: int = 0
    vocab_path: str = ""
    layers: int = 2
    heads: int = 2
    max_positions: int = 128
    # pretrained_file source
    weights_path: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown embedder kind {self.kind!r}; expected one of {KINDS}")
        if self.weight_source not in WEIGHT_SOURCES:
            raise ValueError(
                f"unknown weight source {self.weight_source!r}; expected one of {WEIGHT_SOURCES}")
        if self.dim <= 0:
            raise ValueError("embedding dim must be positive")
        if self.kind == "char_bilstm" and self.dim % 2:
            raise ValueError("char_bilstm dim must be even (forward/backward halves)")
        if self.kind == "transformer" and self.dim % self.heads:
            raise ValueError("transformer dim must be divisible by head count")


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Dense vectors for one sequence: row i embeds position/word i."""

    vectors: np.ndarray
    dim: int
    backend: str

    def __post_init__(self):
        if not np.isfinite(self.vectors).all():
            raise ValueError(f"non-finite values in {self.backend} embedding output")


class _Block(nn.Module):
    # post-norm transformer block: attention + FFN, residual around each
    def __init__(self, dim, heads):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.q = nn.Linear(dim, dim)
        self.k = nn.Linear(dim, dim)
        self.v = nn.Linear(dim, dim)
        self.out = nn.Linear(dim, dim)
        self.norm1 = nn.LayerNorm(dim)
        self.norm2 = nn.LayerNorm(dim)
        self.ff1 = nn.Linear(dim, 2 * dim)
        self.ff2 = nn.Linear(2 * dim, dim)

    def forward(self, x):
        length = x.shape[0]
        def split(t):
            return t.view(length, self.heads, self.head_dim).transpose(0, 1)
        q, k, v = split(self.q(x)), split(self.k(x)), split(self.v(x))
        scores = q @ k.transpose(1, 2) / math.sqrt(self.head_dim)
        mixed = torch.softmax(scores, dim=-1) @ v
        mixed = mixed.transpose(0, 1).reshape(length, -1)
        x = self.norm1(x + self.out(mixed))
        x = self.norm2(x + self.ff2(torch.relu(self.ff1(x))))
        return x


class TransformerEmbedder(nn.Module):
    """Subword-level contextual embedder over token ids."""

    def __init__(self, spec: EmbedderSpec):
        super().__init__()
        if spec.vocab_size <= 0:
            raise ValueError("transformer spec needs vocab_size > 0 (or vocab_path)")
        self.spec = spec
        self.token_emb = nn.Embedding(spec.vocab_size, spec.dim)
        self.position_emb = nn.Embedding(spec.max_positions, spec.dim)
        self.blocks = nn.ModuleList(_Block(spec.dim, spec.heads) for _ in range(spec.layers))

    def forward_ids(self, ids: torch.Tensor) -> torch.Tensor:
        length = ids.shape[0]
        if length > self.spec.max_positions:
            raise ValueError(
                f"sequence length {length} exceeds positional capacity "
                f"{self.spec.max_positions} of this backend")
        x = self.token_emb(ids) + self.position_emb(torch.arange(length))
        for block in self.blocks:
            x = block(x)
        return x

    def forward_words(self, words) -> torch.Tensor:
        # word-level view for stacking: encode all words as one sequence,
        # mean-pool each word's subword pieces
        vocab = _vocab_for(self.spec)
        pieces, spans = [], []
        for w in words:
            sub = tok.wordpiece_tokenize(w, vocab)
            start = 1 + len(pieces)  # offset past [CLS]
            pieces.extend(sub)
            spans.append((start, start + len(sub)))
        ids = ([vocab.cls_id]
               + [vocab.token_to_id[p] for p in pieces]
               + [vocab.sep_id])
        out = self.forward_ids(torch.tensor(ids, dtype=torch.long))
        return torch.stack([out[a:b].mean(dim=0) for a, b in spans])

    forward = forward_words


class CharBiLstmEmbedder(nn.Module):
    """Word embedder built from characters, refined by two word-level BiLSTMs.

    The final vector is a softmax-weighted sum of the character-level
    representation and both BiLSTM layer outputs. Raw weights start at zero,
    so at initialization the combination is the plain average of the three.
    """

    def __init__(self, spec: EmbedderSpec):
        super().__init__()
        self.spec = spec
        half = spec.dim // 2
        self.char_emb = nn.Embedding(256, 16)
        self.char_lstm = nn.LSTM(16, half, bidirectional=True, batch_first=True)
        self.word_lstm1 = nn.LSTM(spec.dim, half, bidirectional=True, batch_first=True)
        self.word_lstm2 = nn.LSTM(spec.dim, half, bidirectional=True, batch_first=True)
        self.scalar_raw = nn.Parameter(torch.zeros(3))

    def layer_weights(self) -> torch.Tensor:
        return torch.softmax(self.scalar_raw, dim=0)

    def _char_rep(self, word: str) -> torch.Tensor:
        if not word:
            p = self.char_emb.weight
            return p.new_zeros(self.spec.dim)
        ids = torch.tensor([[ord(c) % 256 for c in word]], dtype=torch.long)
        _, (h_n, _) = self.char_lstm(self.char_emb(ids))
        return torch.cat([h_n[0, 0], h_n[1, 0]])  # final forward + backward state

    def representations(self, words):
        if not words:
            raise ValueError("cannot embed an empty word list")
        rep0 = torch.stack([self._char_rep(w) for w in words])
        rep1, _ = self.word_lstm1(rep0.unsqueeze(0))
        rep2, _ = self.word_lstm2(rep1)
        return [rep0, rep1.squeeze(0), rep2.squeeze(0)]

    def forward(self, words) -> torch.Tensor:
        reps = self.representations(words)
        w = self.layer_weights()
        return w[0] * reps[0] + w[1] * reps[1] + w[2] * reps[2]


class StackedEmbedder(nn.Module):
    """Column-wise concatenation of component embedders at the word level."""

    def __init__(self, spec: EmbedderSpec, modules):
        super().__init__()
        self.spec = spec
        self.parts = nn.ModuleList(modules)

    def forward(self, words) -> torch.Tensor:
        return torch.cat([m(words) for m in self.parts], dim=1)


def _vocab_for(spec: EmbedderSpec):
    if not spec.vocab_path:
        raise ValueError("word-level transformer embedding needs vocab_path in its spec")
    return _load_vocab_cached(spec.vocab_path)


@lru_cache(maxsize=None)
def _load_vocab_cached(path: str):
    return tok.load_vocab(path)


def _resolve_weights_dir(spec: EmbedderSpec) -> Path:
    raw = Path(spec.weights_path)
    if not spec.weights_path:
        raise ValueError("pretrained_file source needs weights_path")
    if not raw.is_absolute():
        root = os.environ.get(WEIGHTS_ENV, "")
        if root:
            raw = Path(root) / raw
    return raw


def save_embedder(module: nn.Module, spec: EmbedderSpec, directory) -> None:
    """Write a loadable weights directory: embedder.json + tensors.pt."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = asdict(spec)
    meta["weight_source"] = "pretrained_file"
    meta["format_version"] = 1
    (directory / "embedder.json").write_text(json.dumps(meta, indent=2) + "\n")
    torch.save(module.state_dict(), directory / "tensors.pt")


def _load_pretrained(module: nn.Module, spec: EmbedderSpec) -> None:
    directory = _resolve_weights_dir(spec)
    tensors = directory / "tensors.pt"
    meta = directory / "embedder.json"
    if not tensors.is_file() or not meta.is_file():
        raise FileNotFoundError(
            f"pretrained weights not found at {directory}: expected a directory "
            f"containing embedder.json and tensors.pt (set {WEIGHTS_ENV} or use an "
            f"absolute weights_path)")
    state = torch.load(tensors, map_location="cpu", weights_only=True)
    module.load_state_dict(state, strict=True)


def build_embedder(spec: EmbedderSpec) -> nn.Module:
    """Construct the torch module for a spec; deterministic in spec.seed."""
    if spec.kind == "stacked":
        if not spec.components:
            raise ValueError("stacked embedder needs at least one component")
        total = sum(c.dim for c in spec.components)
        if total != spec.dim:
            raise ValueError(
                f"stacked dim {spec.dim} does not match component sum {total} "
                f"({' + '.join(str(c.dim) for c in spec.components)})")
        parts = [build_embedder(c) for c in spec.components]
        module = StackedEmbedder(spec, parts)
        module.eval()
        return module

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(spec.seed)
        if spec.kind == "transformer":
            s = spec
            if s.vocab_size <= 0 and s.vocab_path:
                s = EmbedderSpec(**{**asdict(spec),
                                    "components": spec.components,
                                    "vocab_size": _load_vocab_cached(spec.vocab_path).size})
            module = TransformerEmbedder(s)
        else:
            module = CharBiLstmEmbedder(spec)
    if spec.weight_source == "pretrained_file":
        _load_pretrained(module, spec)
    module.eval()
    return module


@lru_cache(maxsize=32)
def _cached_embedder(spec: EmbedderSpec) -> nn.Module:
    return build_embedder(spec)


def _matrix(tensor: torch.Tensor, spec: EmbedderSpec, backend: str) -> EmbeddingMatrix:
    return EmbeddingMatrix(vectors=tensor.detach().numpy().astype(np.float32, copy=False),
                           dim=spec.dim, backend=backend)


def embed_transformer(seq: tok.TokenSequence, spec: EmbedderSpec) -> EmbeddingMatrix:
    """Embed an encoded sequence; one row per position, pads included."""
    module = _cached_embedder(spec)
    with torch.no_grad():
        out = module.forward_ids(torch.tensor(seq.ids, dtype=torch.long))
    return _matrix(out, spec, f"transformer[d{spec.dim}]")


def embed_char_bilstm(words, spec: EmbedderSpec) -> EmbeddingMatrix:
    """Embed a word list; one row per word."""
    module = _cached_embedder(spec)
    with torch.no_grad():
        out = module(list(words))
    return _matrix(out, spec, f"char_bilstm[d{spec.dim}]")


def embed_stacked(words, spec: EmbedderSpec) -> EmbeddingMatrix:
    """Embed a word list with every component, concatenated column-wise."""
    if spec.kind != "stacked":
        raise ValueError("embed_stacked needs a stacked spec")
    module = _cached_embedder(spec)
    with torch.no_grad():
        out = module(list(words))
    return _matrix(out, spec, f"stacked[{'+'.join(c.kind for c in spec.components)}]")


def embed_words(words, spec: EmbedderSpec) -> EmbeddingMatrix:
    """Word-level dispatch across all kinds (transformer pools its pieces)."""
    if spec.kind == "char_bilstm":
        return embed_char_bilstm(words, spec)
    if spec.kind == "stacked":
        return embed_stacked(words, spec)
    module = _cached_embedder(spec)
    with torch.no_grad():
        out = module.forward_words(list(words))
    return _matrix(out, spec, f"transformer[d{spec.dim}]")
