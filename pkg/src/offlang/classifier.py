"""Classifier assembly, fine-tuning and prediction.

The main model is a transformer encoder pooled at its first position into a
dropout + single-linear-unit head; the sigmoid of the head logit is the
offensive-class probability. The encoder is either a pretrained multilingual
checkpoint (``ModelConfig.encoder_id``) or a randomly initialized desk-scale
encoder for testing. A bidirectional-LSTM baseline shares the same training
loop.

Training follows binary cross entropy with Adam and a piecewise-linear
learning-rate schedule: linear warm-up over the first ``warmup_fraction`` of
steps up to the peak rate, then linear decay to zero. No early stopping is
applied; the final-epoch weights are kept and per-epoch dev macro-F1 is
recorded so the choice stays auditable.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .corpus import LabeledExample, Label
from .errors import ContractError, DivergenceError, EncoderUnavailableError
from .metrics import MetricsReport, macro_f1
from .modeling import BiLstmClassifier, DeskTransformerClassifier, dropout_with_rng
from .tokenization import (
    Encoding,
    HashingWordTokenizer,
    NUM_RESERVED_IDS,
    VocabWordTokenizer,
)

ENCODER_CACHE_ENV = "OFFLANG_ENCODER_CACHE"

_PREDICT_BATCH_SIZE = 64


# ---------------------------------------------------------------------------
# Configs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelConfig:
    """Architecture of the encoder classifier.

    With ``encoder_id`` set, the pretrained checkpoint dictates the real
    architecture and the size fields are informational. With ``encoder_id``
    None, a randomly initialized encoder of the given shape is built over a
    hashing word tokenizer with ``vocab_size`` ids.
    """

    encoder_id: str | None = None
    num_blocks: int = 12
    num_attention_heads: int = 12
    hidden_size: int = 768
    head_dropout: float = 0.1
    max_sequence_length: int = 128
    vocab_size: int = 8192

    def __post_init__(self):
        if self.num_blocks < 1 or self.num_attention_heads < 1:
            raise ContractError("num_blocks and num_attention_heads must be >= 1")
        if self.hidden_size % self.num_attention_heads != 0:
            raise ContractError(
                f"hidden_size {self.hidden_size} must be divisible by "
                f"num_attention_heads {self.num_attention_heads}"
            )
        if self.max_sequence_length < 2:
            raise ContractError("max_sequence_length must be >= 2")
        if not 0.0 <= self.head_dropout < 1.0:
            raise ContractError("head_dropout must be in [0, 1)")
        if self.vocab_size <= NUM_RESERVED_IDS:
            raise ContractError(f"vocab_size must exceed {NUM_RESERVED_IDS}")

    def to_dict(self) -> dict:
        return {
            "encoder_id": self.encoder_id,
            "num_blocks": self.num_blocks,
            "num_attention_heads": self.num_attention_heads,
            "hidden_size": self.hidden_size,
            "head_dropout": self.head_dropout,
            "max_sequence_length": self.max_sequence_length,
            "vocab_size": self.vocab_size,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)


@dataclass(frozen=True)
class BaselineConfig:
    """Shape of the recurrent baseline (vocabulary is carried separately)."""

    embedding_dim: int = 100
    hidden_dim: int = 128
    max_sequence_length: int = 128

    def __post_init__(self):
        if self.embedding_dim < 1 or self.hidden_dim < 1:
            raise ContractError("baseline dims must be >= 1")
        if self.max_sequence_length < 2:
            raise ContractError("max_sequence_length must be >= 2")

    def to_dict(self) -> dict:
        return {
            "embedding_dim": self.embedding_dim,
            "hidden_dim": self.hidden_dim,
            "max_sequence_length": self.max_sequence_length,
        }


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 10
    batch_size: int = 32
    peak_learning_rate: float = 5e-5
    warmup_fraction: float = 0.1
    loss: str = "binary_cross_entropy"
    optimizer: str = "adam"
    seed: int = 0
    decision_threshold: float = 0.5

    def __post_init__(self):
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ContractError("batch_size must be >= 1")
        if self.peak_learning_rate <= 0:
            raise ContractError("peak_learning_rate must be > 0")
        if not 0.0 <= self.warmup_fraction < 1.0:
            raise ContractError("warmup_fraction must be in [0, 1)")
        if self.loss != "binary_cross_entropy":
            raise ContractError(f"unsupported loss {self.loss!r}")
        if self.optimizer != "adam":
            raise ContractError(f"unsupported optimizer {self.optimizer!r}")
        if not 0.0 < self.decision_threshold < 1.0:
            raise ContractError("decision_threshold must be in (0, 1)")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "peak_learning_rate": self.peak_learning_rate,
            "warmup_fraction": self.warmup_fraction,
            "loss": self.loss,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "decision_threshold": self.decision_threshold,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainingConfig":
        return cls(**data)


# ---------------------------------------------------------------------------
# Learning-rate schedule
# ---------------------------------------------------------------------------

def warmup_steps(total_steps: int, config: TrainingConfig) -> int:
    return math.ceil(config.warmup_fraction * total_steps)


def lr_at_step(step: int, total_steps: int, config: TrainingConfig) -> float:
    """Piecewise-linear rate: 0 at step 0, peak exactly at the warmup
    boundary, 0 at `total_steps`.

    With W = ceil(warmup_fraction * total_steps):
        step <= W:  peak * step / W        (peak at step 0 when W == 0)
        step >  W:  peak * (total_steps - step) / (total_steps - W)
    """
    if total_steps < 1:
        raise ContractError("total_steps must be >= 1")
    if not 0 <= step <= total_steps:
        raise ContractError(f"step {step} outside [0, {total_steps}]")
    peak = config.peak_learning_rate
    boundary = warmup_steps(total_steps, config)
    if step <= boundary:
        if boundary == 0:
            return peak
        return peak * step / boundary
    return peak * (total_steps - step) / (total_steps - boundary)


# ---------------------------------------------------------------------------
# Handles and checkpoints
# ---------------------------------------------------------------------------

@dataclass
class ClassifierHandle:
    """An untrained (or training-in-progress) classifier.

    A handle is exclusively owned by one training run at a time. ``arch_spec``
    is a JSON-serializable description sufficient to rebuild the module.
    """

    module: nn.Module
    tokenizer: object
    model_config: ModelConfig | BaselineConfig
    arch_spec: dict

    @property
    def max_sequence_length(self) -> int:
        return self.model_config.max_sequence_length


def data_content_hash(examples: Sequence[LabeledExample]) -> str:
    digest = hashlib.sha256()
    for ex in examples:
        record = "\x1f".join((ex.id, ex.text, ex.label.value, ex.language))
        digest.update(record.encode("utf-8"))
        digest.update(b"\x1e")
    return digest.hexdigest()


@dataclass(frozen=True)
class Checkpoint:
    """Immutable training outcome: weights plus everything needed to audit
    and rebuild the model."""

    weights: dict
    model_config: ModelConfig | BaselineConfig
    training_config: TrainingConfig
    training_languages: frozenset[str]
    per_epoch_dev_metrics: tuple[tuple[int, float], ...]
    per_epoch_train_loss: tuple[float, ...]
    optimizer_steps: int
    train_data_hash: str
    arch_spec: dict
    _module_cache: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if not self.training_languages:
            raise ContractError("checkpoint must record at least one training language")

    def materialize(self) -> tuple[nn.Module, object]:
        """Rebuild (module, tokenizer) with the stored weights; cached."""
        if not self._module_cache:
            module, tokenizer = rebuild_from_arch_spec(self.arch_spec)
            module.load_state_dict(self.weights)
            module.eval()
            self._module_cache.append((module, tokenizer))
        return self._module_cache[0]

    def save(self, directory: str | Path) -> Path:
        """Write the two-file checkpoint layout: weights.pt + checkpoint.json."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        torch.save(self.weights, directory / "weights.pt")
        sidecar = {
            "arch_spec": self.arch_spec,
            "training_config": self.training_config.to_dict(),
            "training_languages": sorted(self.training_languages),
            "per_epoch_dev_metrics": [list(entry) for entry in self.per_epoch_dev_metrics],
            "per_epoch_train_loss": list(self.per_epoch_train_loss),
            "optimizer_steps": self.optimizer_steps,
            "train_data_hash": self.train_data_hash,
        }
        with (directory / "checkpoint.json").open("w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "Checkpoint":
        directory = Path(directory)
        weights_path = directory / "weights.pt"
        sidecar_path = directory / "checkpoint.json"
        if not weights_path.is_file() or not sidecar_path.is_file():
            raise ContractError(f"no checkpoint found under {directory}")
        with sidecar_path.open(encoding="utf-8") as fh:
            sidecar = json.load(fh)
        weights = torch.load(weights_path, weights_only=True)
        arch_spec = sidecar["arch_spec"]
        return cls(
            weights=weights,
            model_config=model_config_from_arch_spec(arch_spec),
            training_config=TrainingConfig.from_dict(sidecar["training_config"]),
            training_languages=frozenset(sidecar["training_languages"]),
            per_epoch_dev_metrics=tuple(
                (int(e), float(f)) for e, f in sidecar["per_epoch_dev_metrics"]
            ),
            per_epoch_train_loss=tuple(float(x) for x in sidecar["per_epoch_train_loss"]),
            optimizer_steps=int(sidecar["optimizer_steps"]),
            train_data_hash=sidecar["train_data_hash"],
            arch_spec=arch_spec,
        )


@dataclass(frozen=True)
class PredictionBatch:
    ids: tuple[str, ...]
    probabilities: tuple[float, ...]
    labels: tuple[Label, ...]

    def __post_init__(self):
        if not (len(self.ids) == len(self.probabilities) == len(self.labels)):
            raise ContractError("prediction batch fields must have equal length")


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

def build_classifier(config: ModelConfig, seed: int | None = None) -> ClassifierHandle:
    """Assemble the encoder + head classifier described by `config`.

    `seed` pins the random initialization of a desk-scale encoder (and of the
    head); pretrained encoder weights come from the checkpoint regardless.
    """
    if config.encoder_id is not None:
        return _build_pretrained(config, seed)
    module = DeskTransformerClassifier(
        vocab_size=config.vocab_size,
        num_blocks=config.num_blocks,
        num_heads=config.num_attention_heads,
        hidden_size=config.hidden_size,
        max_sequence_length=config.max_sequence_length,
        dropout=config.head_dropout,
        seed=seed,
    )
    tokenizer = HashingWordTokenizer(config.vocab_size)
    arch_spec = {"arch": "desk_transformer", **config.to_dict()}
    return ClassifierHandle(
        module=module, tokenizer=tokenizer, model_config=config, arch_spec=arch_spec
    )


def build_baseline(
    vocab: Sequence[str],
    embedding_dim: int = 100,
    hidden_dim: int = 128,
    max_sequence_length: int = 128,
    seed: int | None = None,
) -> ClassifierHandle:
    """Assemble the bidirectional recurrent baseline over `vocab`.

    The vocabulary must come from the training split only.
    """
    tokenizer = VocabWordTokenizer(vocab)
    config = BaselineConfig(
        embedding_dim=embedding_dim,
        hidden_dim=hidden_dim,
        max_sequence_length=max_sequence_length,
    )
    module = BiLstmClassifier(
        vocab_size=tokenizer.vocab_size,
        embedding_dim=embedding_dim,
        hidden_dim=hidden_dim,
        seed=seed,
    )
    arch_spec = {"arch": "bilstm", **config.to_dict(), "vocab": list(tokenizer.tokens)}
    return ClassifierHandle(
        module=module, tokenizer=tokenizer, model_config=config, arch_spec=arch_spec
    )


class PretrainedEncoderClassifier(nn.Module):
    """Pretrained masked-LM encoder with the standard one-unit head on top.

    Dropout inside the pretrained encoder uses torch's global RNG (the
    library does not expose a generator hook), so pretrained fine-tuning is
    reproducible only when runs are not interleaved in one process.
    """

    def __init__(self, encoder, hidden_size: int, dropout: float, seed: int | None):
        super().__init__()
        self.encoder = encoder
        self.dropout = dropout
        self.head = nn.Linear(hidden_size, 1)
        rng = torch.Generator()
        rng.manual_seed(0 if seed is None else seed)
        with torch.no_grad():
            self.head.weight.normal_(0.0, 0.02, generator=rng)
            self.head.bias.zero_()

    def embed_ids(self, ids: torch.Tensor) -> torch.Tensor:
        return self.encoder.get_input_embeddings()(ids)

    def forward_embedded(self, embeds, mask, rng=None):
        self.encoder.train(rng is not None)
        output = self.encoder(inputs_embeds=embeds, attention_mask=mask.to(embeds.dtype))
        pooled = output.last_hidden_state[:, 0]
        pooled = dropout_with_rng(pooled, self.dropout, rng)
        return self.head(pooled).squeeze(-1)

    def forward_ids(self, ids, mask, rng=None):
        return self.forward_embedded(self.embed_ids(ids), mask, rng)


class _HFTokenizerAdapter:
    def __init__(self, hf_tokenizer):
        self._tok = hf_tokenizer
        self.pad_id = hf_tokenizer.pad_token_id

    def encode(self, text: str, max_length: int) -> Encoding:
        enc = self._tok(text, truncation=True, max_length=max_length)
        ids = enc["input_ids"]
        pieces = self._tok.convert_ids_to_tokens(ids)
        word_ids = enc.word_ids() if hasattr(enc, "word_ids") else [None] * len(ids)
        # the subword tokenizer's word segmentation matches whitespace words
        # for tweet-like text; keep only words that survived truncation
        surviving = [w for w in word_ids if w is not None]
        words = text.split()[: (max(surviving) + 1) if surviving else 0]
        return Encoding(
            ids=tuple(ids),
            pieces=tuple(pieces),
            word_ids=tuple(word_ids),
            words=tuple(words),
        )


def _build_pretrained(config: ModelConfig, seed: int | None) -> ClassifierHandle:
    try:
        from transformers import AutoModel, AutoTokenizer
    except ImportError as err:
        raise EncoderUnavailableError(
            f"encoder {config.encoder_id!r} requires the 'transformers' package: {err}"
        ) from err
    cache_dir = os.environ.get(ENCODER_CACHE_ENV) or None
    try:
        encoder = AutoModel.from_pretrained(config.encoder_id, cache_dir=cache_dir)
        hf_tokenizer = AutoTokenizer.from_pretrained(config.encoder_id, cache_dir=cache_dir)
    except Exception as err:
        raise EncoderUnavailableError(
            f"could not obtain pretrained encoder {config.encoder_id!r}: {err}"
        ) from err
    hidden = encoder.config.hidden_size
    module = PretrainedEncoderClassifier(encoder, hidden, config.head_dropout, seed)
    arch_spec = {"arch": "pretrained", **config.to_dict()}
    return ClassifierHandle(
        module=module,
        tokenizer=_HFTokenizerAdapter(hf_tokenizer),
        model_config=config,
        arch_spec=arch_spec,
    )


def model_config_from_arch_spec(arch_spec: dict) -> ModelConfig | BaselineConfig:
    spec = dict(arch_spec)
    arch = spec.pop("arch")
    if arch in ("desk_transformer", "pretrained"):
        return ModelConfig.from_dict(spec)
    if arch == "bilstm":
        spec.pop("vocab")
        return BaselineConfig(**spec)
    raise ContractError(f"unknown architecture {arch!r}")


def rebuild_from_arch_spec(arch_spec: dict) -> tuple[nn.Module, object]:
    arch = arch_spec["arch"]
    config = model_config_from_arch_spec(arch_spec)
    if arch == "desk_transformer":
        handle = build_classifier(config, seed=0)
        return handle.module, handle.tokenizer
    if arch == "pretrained":
        handle = build_classifier(config, seed=0)
        return handle.module, handle.tokenizer
    if arch == "bilstm":
        tokenizer = VocabWordTokenizer(arch_spec["vocab"])
        module = BiLstmClassifier(
            vocab_size=tokenizer.vocab_size,
            embedding_dim=config.embedding_dim,
            hidden_dim=config.hidden_dim,
            seed=0,
        )
        return module, tokenizer
    raise ContractError(f"unknown architecture {arch!r}")


# ---------------------------------------------------------------------------
# Batching
# ---------------------------------------------------------------------------

def _labels_tensor(examples: Sequence[LabeledExample]) -> torch.Tensor:
    return torch.tensor(
        [1.0 if ex.label is Label.OFFENSIVE else 0.0 for ex in examples],
        dtype=torch.float32,
    )


def _pad_encodings(encodings: Sequence[Encoding], pad_id: int) -> tuple[torch.Tensor, torch.Tensor]:
    width = max(len(enc.ids) for enc in encodings)
    ids = torch.full((len(encodings), width), pad_id, dtype=torch.long)
    mask = torch.zeros((len(encodings), width), dtype=torch.bool)
    for row, enc in enumerate(encodings):
        ids[row, : len(enc.ids)] = torch.tensor(enc.ids, dtype=torch.long)
        mask[row, : len(enc.ids)] = True
    return ids, mask


def encode_batch(
    tokenizer, examples: Sequence[LabeledExample], max_length: int
) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
    """Tokenize and pad a batch. Returns (ids, padding mask, float labels)."""
    encodings = [tokenizer.encode(ex.text, max_length) for ex in examples]
    ids, mask = _pad_encodings(encodings, tokenizer.pad_id)
    return ids, mask, _labels_tensor(examples)


# ---------------------------------------------------------------------------
# Training and inference
# ---------------------------------------------------------------------------

def fine_tune(
    handle: ClassifierHandle,
    train: Sequence[LabeledExample],
    dev: Sequence[LabeledExample] | None,
    config: TrainingConfig,
) -> Checkpoint:
    """Train `handle` in place and return an immutable checkpoint.

    Runs epochs * ceil(len(train) / batch_size) Adam steps under the
    piecewise-linear schedule, reshuffling the training set each epoch with a
    seed-derived permutation. Dev macro-F1 is recorded after every epoch when
    a dev set is supplied. The final-epoch weights are returned.
    """
    train = tuple(train)
    if not train:
        raise ContractError("fine_tune requires a non-empty training set")
    max_length = handle.max_sequence_length
    batches_per_epoch = math.ceil(len(train) / config.batch_size)
    total_steps = config.epochs * batches_per_epoch
    if total_steps >= 10 and config.warmup_fraction * total_steps < 1:
        raise ContractError(
            f"warmup_fraction {config.warmup_fraction} yields no warmup step over "
            f"{total_steps} steps"
        )

    module = handle.module
    tokenizer = handle.tokenizer
    encodings = [tokenizer.encode(ex.text, max_length) for ex in train]
    labels_all = _labels_tensor(train)

    shuffle_rng = np.random.default_rng(config.seed)
    dropout_rng = torch.Generator()
    dropout_rng.manual_seed(config.seed + 1)
    optimizer = torch.optim.Adam(module.parameters(), lr=0.0)

    dev_history: list[tuple[int, float]] = []
    loss_history: list[float] = []
    step = 0
    module.train()
    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(len(train))
        epoch_loss_sum = 0.0
        for start in range(0, len(train), config.batch_size):
            batch_idx = order[start : start + config.batch_size]
            ids, mask = _pad_encodings([encodings[i] for i in batch_idx], tokenizer.pad_id)
            labels = labels_all[batch_idx]
            logits = module.forward_ids(ids, mask, rng=dropout_rng)
            loss = nn.functional.binary_cross_entropy_with_logits(logits, labels)
            if not torch.isfinite(loss):
                raise DivergenceError(
                    f"non-finite training loss at optimizer step {step}", step=step
                )
            lr = lr_at_step(step, total_steps, config)
            for group in optimizer.param_groups:
                group["lr"] = lr
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss_sum += float(loss.detach()) * len(batch_idx)
            step += 1
        loss_history.append(epoch_loss_sum / len(train))
        if dev:
            report = evaluate_module(module, tokenizer, dev, max_length, config.decision_threshold)
            dev_history.append((epoch, report.macro_f1))
    module.eval()

    return Checkpoint(
        weights={k: v.detach().clone() for k, v in module.state_dict().items()},
        model_config=handle.model_config,
        training_config=config,
        training_languages=frozenset(ex.language for ex in train),
        per_epoch_dev_metrics=tuple(dev_history),
        per_epoch_train_loss=tuple(loss_history),
        optimizer_steps=step,
        train_data_hash=data_content_hash(train),
        arch_spec=handle.arch_spec,
    )


def _predict_probs(
    module: nn.Module, tokenizer, examples: Sequence[LabeledExample], max_length: int
) -> list[float]:
    probs: list[float] = []
    with torch.no_grad():
        for start in range(0, len(examples), _PREDICT_BATCH_SIZE):
            chunk = examples[start : start + _PREDICT_BATCH_SIZE]
            ids, mask, _ = encode_batch(tokenizer, chunk, max_length)
            logits = module.forward_ids(ids, mask, rng=None)
            probs.extend(torch.sigmoid(logits).tolist())
    return probs


def evaluate_module(
    module: nn.Module,
    tokenizer,
    examples: Sequence[LabeledExample],
    max_length: int,
    decision_threshold: float,
) -> MetricsReport:
    probs = _predict_probs(module, tokenizer, examples, max_length)
    predicted = [
        Label.OFFENSIVE if p > decision_threshold else Label.NOT_OFFENSIVE for p in probs
    ]
    return macro_f1([ex.label for ex in examples], predicted)


def predict_proba(
    checkpoint: Checkpoint, examples: Sequence[LabeledExample]
) -> PredictionBatch:
    """Score examples with a trained checkpoint.

    Dropout is disabled, so probabilities are deterministic for fixed weights.
    Labels use the checkpoint's decision threshold: OFFENSIVE iff p > t.
    """
    examples = tuple(examples)
    if not examples:
        raise ContractError("predict_proba requires a non-empty batch")
    module, tokenizer = checkpoint.materialize()
    max_length = checkpoint.model_config.max_sequence_length
    threshold = checkpoint.training_config.decision_threshold
    probs = _predict_probs(module, tokenizer, examples, max_length)
    labels = tuple(
        Label.OFFENSIVE if p > threshold else Label.NOT_OFFENSIVE for p in probs
    )
    return PredictionBatch(
        ids=tuple(ex.id for ex in examples),
        probabilities=tuple(probs),
        labels=labels,
    )


def evaluate_checkpoint(
    checkpoint: Checkpoint, examples: Sequence[LabeledExample]
) -> MetricsReport:
    """Macro-F1 report of a checkpoint on labeled examples."""
    predictions = predict_proba(checkpoint, examples)
    return macro_f1([ex.label for ex in examples], list(predictions.labels))
