"""Classification heads, the training loop, and model persistence.

All heads consume a padded embedding matrix plus a 0/1 mask and are written so
masked positions can never influence the logits, no matter what values the pad
rows carry. Training is fully deterministic given the config seed: weight init,
batch shuffling, and the best-on-dev snapshot all derive from it.
"""

import copy
import json
import math
import random
from contextlib import nullcontext
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from . import tokenizer as tok
from . import preprocess
from .corpus import Dataset
from .embeddings import EmbedderSpec, build_embedder, _load_vocab_cached
from .metrics import LABELS

HEADS = ("cnn", "mlp", "bilstm")
LANGUAGES = ("english", "hinglish")


@dataclass(frozen=True)
class ClassifierConfig:
    head: str
    max_len: int = 100
    num_classes: int = 2
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    train_embedder: bool = False
    cnn_filters: Tuple[Tuple[int, int], ...] = ((2, 2), (3, 2), (4, 2))
    mlp_hidden: Tuple[int, ...] = (64,)
    bilstm_hidden: int = 32
    language: str = "english"

    def __post_init__(self):
        if self.head not in HEADS:
            raise ValueError(f"unknown head {self.head!r}; expected one of {HEADS}")
        if self.optimizer != "adam":
            raise ValueError(f"unknown optimizer {self.optimizer!r}; only 'adam' is supported")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError("learning rate must be a positive finite number")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.num_classes != 2:
            raise ValueError("only binary classification is supported")
        if self.language not in LANGUAGES:
            raise ValueError(f"unknown language {self.language!r}")
        if self.head == "cnn":
            if not self.cnn_filters:
                raise ValueError("cnn head needs at least one filter group")
            for w, ch in self.cnn_filters:
                if w < 1 or ch < 1:
                    raise ValueError("cnn filter widths and channel counts must be >= 1")


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    dev_accuracy: float


class CnnHead(nn.Module):
    """Per-width convolutions, max-pool over valid windows only, linear out.

    A window is valid when every position it covers is unmasked. With no valid
    window at all the pooled vector is zero, so the logits fall back to the
    output bias.
    """

    def __init__(self, dim, filters, num_classes, max_len):
        super().__init__()
        widest = max(w for w, _ in filters)
        if max_len < widest:
            raise ValueError(
                f"max_len {max_len} is smaller than the largest filter width {widest}")
        self.filters = tuple(filters)
        self.convs = nn.ModuleList(nn.Conv1d(dim, ch, w) for w, ch in filters)
        self.fc = nn.Linear(sum(ch for _, ch in filters), num_classes)

    def forward(self, emb, mask):
        x = emb.transpose(1, 2)
        pooled = []
        for conv, (w, _) in zip(self.convs, self.filters):
            out = conv(x)  # (B, ch, L-w+1)
            valid = mask.unfold(1, w, 1).min(dim=-1).values > 0.5
            out = out.masked_fill(~valid.unsqueeze(1), float("-inf"))
            maxed = out.max(dim=-1).values
            any_valid = valid.any(dim=-1, keepdim=True)
            pooled.append(torch.where(any_valid, maxed, torch.zeros_like(maxed)))
        return self.fc(torch.cat(pooled, dim=1))


class MlpHead(nn.Module):
    """Masked mean pooling followed by a ReLU stack."""

    def __init__(self, dim, hidden, num_classes):
        super().__init__()
        sizes = [dim, *hidden, num_classes]
        self.layers = nn.ModuleList(
            nn.Linear(a, b) for a, b in zip(sizes, sizes[1:]))

    def forward(self, emb, mask):
        counts = mask.sum(dim=1, keepdim=True).clamp(min=1.0)
        x = (emb * mask.unsqueeze(-1)).sum(dim=1) / counts
        for layer in self.layers[:-1]:
            x = torch.relu(layer(x))
        return self.layers[-1](x)


class BiLstmHead(nn.Module):
    """Two LSTM passes (left-to-right, right-to-left) with mask-gated state.

    At a masked step the state carries over unchanged, so pad rows cannot leak
    into the final representation.
    """

    def __init__(self, dim, hidden, num_classes):
        super().__init__()
        self.hidden = hidden
        self.cell_f = nn.LSTMCell(dim, hidden)
        self.cell_b = nn.LSTMCell(dim, hidden)
        self.fc = nn.Linear(2 * hidden, num_classes)

    def _run(self, cell, emb, mask, steps):
        batch = emb.shape[0]
        h = emb.new_zeros(batch, self.hidden)
        c = emb.new_zeros(batch, self.hidden)
        for t in steps:
            h_new, c_new = cell(emb[:, t], (h, c))
            m = mask[:, t].unsqueeze(-1)
            h = m * h_new + (1 - m) * h
            c = m * c_new + (1 - m) * c
        return h

    def forward(self, emb, mask):
        length = emb.shape[1]
        h_f = self._run(self.cell_f, emb, mask, range(length))
        h_b = self._run(self.cell_b, emb, mask, reversed(range(length)))
        return self.fc(torch.cat([h_f, h_b], dim=1))


def build_head(config: ClassifierConfig, dim: int, dtype=torch.float32) -> nn.Module:
    """Construct the head module for a config; deterministic in config.seed."""
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        if config.head == "cnn":
            head = CnnHead(dim, config.cnn_filters, config.num_classes, config.max_len)
        elif config.head == "mlp":
            head = MlpHead(dim, config.mlp_hidden, config.num_classes)
        else:
            head = BiLstmHead(dim, config.bilstm_hidden, config.num_classes)
    return head.to(dtype)


def _head_forward(head: nn.Module, emb, mask) -> np.ndarray:
    dtype = next(head.parameters()).dtype
    if hasattr(emb, "vectors"):
        emb = emb.vectors
    emb_t = torch.as_tensor(np.asarray(emb), dtype=dtype).unsqueeze(0)
    mask_t = torch.as_tensor(np.asarray(mask), dtype=dtype).unsqueeze(0)
    with torch.no_grad():
        probs = torch.softmax(head(emb_t, mask_t), dim=1)
    return probs.squeeze(0).numpy()


def forward_cnn(emb, mask, head: CnnHead) -> np.ndarray:
    return _head_forward(head, emb, mask)


def forward_mlp(emb, mask, head: MlpHead) -> np.ndarray:
    return _head_forward(head, emb, mask)


def forward_bilstm(emb, mask, head: BiLstmHead) -> np.ndarray:
    return _head_forward(head, emb, mask)


@dataclass
class TrainedModel:
    config: ClassifierConfig
    embedder_spec: EmbedderSpec
    embedder: nn.Module
    head: nn.Module
    classes: Tuple[str, ...]
    history: Tuple[EpochStats, ...]
    best_epoch: int


def _check_ready(dataset: Dataset, need_labels: bool = True) -> None:
    raw = [c.id for c in dataset.comments if c.processed_text is None]
    if raw:
        shown = ", ".join(raw[:5])
        raise ValueError(f"dataset {dataset.name!r} has comments not preprocessed: {shown}")
    if need_labels:
        missing = [c.id for c in dataset.comments if c.gold_label is None]
        if missing:
            shown = ", ".join(missing[:5])
            raise ValueError(
                f"dataset {dataset.name!r} has comments missing gold labels: {shown}")


def _encode_text(embedder, spec: EmbedderSpec, text: str, max_len: int, grad: bool = False):
    """Turn one processed text into (emb (L, dim), mask (L,)) tensors."""
    ctx = nullcontext() if grad else torch.no_grad()
    if spec.kind == "transformer":
        vocab = _load_vocab_cached(spec.vocab_path)
        seq = tok.encode(text, vocab, max_len)
        with ctx:
            emb = embedder.forward_ids(torch.tensor(seq.ids, dtype=torch.long))
        mask = torch.tensor(seq.mask, dtype=emb.dtype)
        return emb, mask
    words = text.split()[:max_len]
    if not words:
        words = [""]
    with ctx:
        vecs = embedder(words)
    n = vecs.shape[0]
    if n < max_len:
        vecs = torch.cat([vecs, vecs.new_zeros(max_len - n, vecs.shape[1])])
    mask = torch.zeros(max_len, dtype=vecs.dtype)
    mask[:n] = 1.0
    return vecs, mask


def _batch_logits(head, encoded, idxs):
    emb = torch.stack([encoded[i][0] for i in idxs])
    mask = torch.stack([encoded[i][1] for i in idxs])
    return head(emb, mask)


def train(train_ds: Dataset, dev_ds: Dataset, embedder_spec: EmbedderSpec,
          config: ClassifierConfig) -> TrainedModel:
    """Train a head (optionally the embedder too) with Adam.

    Returns the weights from the epoch with the highest dev accuracy; ties keep
    the earlier epoch. epochs=0 returns the freshly initialized model with an
    empty history.
    """
    _check_ready(train_ds)
    _check_ready(dev_ds)
    if embedder_spec.kind == "transformer" and not embedder_spec.vocab_path:
        raise ValueError("transformer training needs vocab_path in the embedder spec")

    embedder = build_embedder(embedder_spec)
    head = build_head(config, embedder_spec.dim)
    classes = LABELS
    class_index = {c: i for i, c in enumerate(classes)}

    def encode_all(ds):
        return [_encode_text(embedder, embedder_spec, c.processed_text, config.max_len)
                for c in ds.comments]

    trainable = config.train_embedder
    if not trainable:
        for p in embedder.parameters():
            p.requires_grad_(False)
        train_enc = encode_all(train_ds)
    dev_enc = encode_all(dev_ds)

    y_train = torch.tensor([class_index[c.gold_label] for c in train_ds.comments])
    y_dev = torch.tensor([class_index[c.gold_label] for c in dev_ds.comments])

    params = list(head.parameters())
    if trainable:
        params += list(embedder.parameters())
    opt = torch.optim.Adam(params, lr=config.learning_rate)
    rng = random.Random(config.seed)
    order = list(range(len(train_ds.comments)))

    def dev_accuracy():
        hits = 0
        with torch.no_grad():
            for start in range(0, len(dev_enc), config.batch_size):
                idxs = range(start, min(start + config.batch_size, len(dev_enc)))
                logits = _batch_logits(head, dev_enc, idxs)
                hits += int((logits.argmax(dim=1) == y_dev[list(idxs)]).sum())
        return hits / len(dev_enc)

    history: List[EpochStats] = []
    best_acc = -1.0
    best_epoch = -1
    best_state = None
    for epoch in range(config.epochs):
        rng.shuffle(order)
        total, seen = 0.0, 0
        for b, start in enumerate(range(0, len(order), config.batch_size)):
            idxs = order[start:start + config.batch_size]
            if trainable:
                batch_enc = {i: _encode_text(embedder, embedder_spec,
                                             train_ds.comments[i].processed_text,
                                             config.max_len, grad=True)
                             for i in idxs}
                emb = torch.stack([batch_enc[i][0] for i in idxs])
                mask = torch.stack([batch_enc[i][1] for i in idxs])
                logits = head(emb, mask)
            else:
                logits = _batch_logits(head, train_enc, idxs)
            loss = F.cross_entropy(logits, y_train[idxs])
            if not torch.isfinite(loss):
                raise RuntimeError(
                    f"non-finite training loss at epoch {epoch + 1}, batch {b}: "
                    f"{loss.item()}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += loss.item() * len(idxs)
            seen += len(idxs)
        acc = dev_accuracy()
        history.append(EpochStats(epoch=epoch, train_loss=total / seen, dev_accuracy=acc))
        if acc > best_acc:
            best_acc = acc
            best_epoch = epoch
            best_state = {"head": copy.deepcopy(head.state_dict())}
            if trainable:
                best_state["embedder"] = copy.deepcopy(embedder.state_dict())

    if best_state is not None:
        head.load_state_dict(best_state["head"])
        if "embedder" in best_state:
            embedder.load_state_dict(best_state["embedder"])

    return TrainedModel(config=config, embedder_spec=embedder_spec, embedder=embedder,
                        head=head, classes=classes, history=tuple(history),
                        best_epoch=best_epoch)


def _probs_for_processed(model: TrainedModel, processed: str) -> np.ndarray:
    emb, mask = _encode_text(model.embedder, model.embedder_spec, processed,
                             model.config.max_len)
    with torch.no_grad():
        logits = model.head(emb.unsqueeze(0), mask.unsqueeze(0))
        probs = torch.softmax(logits, dim=1)
    return probs.squeeze(0).numpy()


def predict(model: TrainedModel, text: str, language: Optional[str] = None):
    """Classify one raw text; returns (label, {label: probability}).

    The model's own pipeline language is used; passing a conflicting language
    is an error rather than a silent re-route.
    """
    if language is not None and language != model.config.language:
        raise ValueError(
            f"model was trained with the {model.config.language} pipeline, "
            f"cannot predict as {language}")
    pipe = preprocess.pipeline_for(model.config.language)
    probs = _probs_for_processed(model, pipe.run(text))
    idx = int(probs.argmax())
    return model.classes[idx], {c: float(p) for c, p in zip(model.classes, probs)}


def predict_dataset(model: TrainedModel, dataset: Dataset) -> List[str]:
    """Classify every comment; preprocessed text is used as-is when present."""
    pipe = preprocess.pipeline_for(model.config.language)
    out = []
    for c in dataset.comments:
        processed = c.processed_text if c.processed_text is not None else pipe.run(c.raw_text)
        probs = _probs_for_processed(model, processed)
        out.append(model.classes[int(probs.argmax())])
    return out


def save_model(model: TrainedModel, directory) -> None:
    """Write a reloadable artifact: manifest.json (config) + params.pt (weights)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": 1,
        "classes": list(model.classes),
        "config": asdict(model.config),
        "embedder_spec": asdict(model.embedder_spec),
        "history": [asdict(h) for h in model.history],
        "best_epoch": model.best_epoch,
    }
    (directory / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    torch.save({"head": model.head.state_dict(),
                "embedder": model.embedder.state_dict()},
               directory / "params.pt")


def spec_from_dict(d: dict) -> EmbedderSpec:
    d = dict(d)
    d.pop("format_version", None)
    d["components"] = tuple(spec_from_dict(c) for c in d.get("components", ()))
    return EmbedderSpec(**d)


def config_from_dict(d: dict) -> ClassifierConfig:
    d = dict(d)
    # absent keys keep the dataclass defaults; only present ones need tuple coercion
    if "cnn_filters" in d:
        d["cnn_filters"] = tuple(tuple(f) for f in d["cnn_filters"])
    if "mlp_hidden" in d:
        d["mlp_hidden"] = tuple(d["mlp_hidden"])
    return ClassifierConfig(**d)


def _structure_only(spec: EmbedderSpec) -> EmbedderSpec:
    # weights come from params.pt on reload, never from the original files
    d = {**asdict(spec), "weight_source": "random_tiny",
         "components": tuple(_structure_only(c) for c in spec.components)}
    return EmbedderSpec(**d)


def load_model(directory) -> TrainedModel:
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise FileNotFoundError(
            f"model artifact not found at {directory}: missing manifest.json")
    manifest = json.loads(manifest_path.read_text())
    config = config_from_dict(manifest["config"])
    spec = spec_from_dict(manifest["embedder_spec"])
    embedder = build_embedder(_structure_only(spec))
    head = build_head(config, spec.dim)
    state = torch.load(directory / "params.pt", map_location="cpu", weights_only=True)
    embedder.load_state_dict(state["embedder"])
    head.load_state_dict(state["head"])
    history = tuple(EpochStats(**h) for h in manifest["history"])
    return TrainedModel(config=config, embedder_spec=spec, embedder=embedder, head=head,
                        classes=tuple(manifest["classes"]), history=history,
                        best_epoch=manifest["best_epoch"])
