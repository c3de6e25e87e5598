"""Stochastic training of the embedding models on the train split.

Updates are strictly sparse: only parameter rows for ids that occur in the
(possibly reciprocal-augmented) train split are ever written, so rows for
out-of-vocabulary ids stay bit-identical to their initialization. Negatives
are drawn from train-split entities only and are *not* filtered against
known-true triples (standard practice; the false-negative rate is tiny at
benchmark scale, but it does shift absolute loss values).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import Triple, Vocabulary, SplitDataset, split_vocab
from .models import ModelParams, SparseGrad, grad, init_params, score

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    model: str = "distmult"
    dim: int = 32
    epochs: int = 100
    batch_size: int = 128
    lr: float = 0.05
    negatives: int = 1
    loss: str | None = None  # None -> margin for transe, logistic otherwise
    margin: float = 1.0
    optimizer: str = "adam"  # "adam" | "sgd"
    reciprocal: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.lr <= 0:
            raise ValueError("lr must be > 0")
        if self.loss not in (None, "logistic", "margin"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.loss == "margin" and self.margin <= 0:
            raise ValueError("margin must be > 0 for the margin loss")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")

    def resolved_loss(self) -> str:
        if self.loss is not None:
            return self.loss
        return "margin" if self.model == "transe" else "logistic"

    @classmethod
    def from_file(cls, path: Path, **overrides) -> "TrainConfig":
        """Flat key=value config file; '#' starts a comment. CLI flags override."""
        parsed: dict = {}
        types = {f.name: f.type for f in fields(cls)}
        for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in types:
                raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
            parsed[key] = _coerce(key, value)
        parsed.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**parsed)


def _coerce(key: str, value: str):
    if key in ("dim", "epochs", "batch_size", "negatives", "seed"):
        return int(value)
    if key in ("lr", "margin"):
        return float(value)
    if key == "reciprocal":
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"bad boolean for {key}: {value!r}")
    return value


def augment_reciprocal(train: Sequence[Triple], vocab: Vocabulary
                       ) -> tuple[list[Triple], Vocabulary]:
    """Add (t, r_inv, h) for every (h, r, t), with fresh inverse relations.

    Relation ids double: r_inv = |R| + r. Inverse labels get an ``_inv``
    suffix; a collision with an existing label is refused rather than merged.
    """
    n = vocab.n_relations
    existing = set(vocab.relations)
    inverse_labels = []
    for label in vocab.relations:
        inv = f"{label}_inv"
        if inv in existing:
            raise ValueError(f"reciprocal label collision: {inv!r} already exists")
        inverse_labels.append(inv)
    extended = Vocabulary(vocab.entities, vocab.relations + tuple(inverse_labels))
    augmented = list(train) + [Triple(t, n + r, h) for h, r, t in train]
    return augmented, extended


def sample_negatives(triple: Triple, k: int, entity_pool: np.ndarray,
                     rng: np.random.Generator) -> list[Triple]:
    """k corruptions of one triple: fair coin on head/tail, uniform train entity.

    Negatives may coincide with true triples; nothing is filtered here.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    out = []
    for _ in range(k):
        side = int(rng.integers(0, 2))
        e = int(entity_pool[int(rng.integers(0, len(entity_pool)))])
        if side == 0:
            out.append(Triple(e, triple.r, triple.t))
        else:
            out.append(Triple(triple.h, triple.r, e))
    return out


def _sigmoid(x: float) -> float:
    return 0.5 * (1.0 + math.tanh(0.5 * x))


def _softplus(x: float) -> float:
    # log(1 + e^x), stable for large |x|
    if x > 30:
        return x
    if x < -30:
        return math.exp(x)
    return math.log1p(math.exp(x))


class _Sgd:
    def __init__(self, params: ModelParams, lr: float):
        self.params = params
        self.lr = lr

    def step(self, g: SparseGrad) -> None:
        for eid, vec in g.entities.items():
            self.params.entities[eid] -= self.lr * vec
        for rid, vec in g.relations.items():
            self.params.relations[rid] -= self.lr * vec


class _Adam:
    """Adam with lazy (touched-row-only) moment updates; decay 0.9/0.999, eps 1e-8."""

    def __init__(self, params: ModelParams, lr: float):
        self.params = params
        self.lr = lr
        self.m_e = np.zeros_like(params.entities)
        self.v_e = np.zeros_like(params.entities)
        self.m_r = np.zeros_like(params.relations)
        self.v_r = np.zeros_like(params.relations)
        self.t = 0

    def step(self, g: SparseGrad) -> None:
        self.t += 1
        bc1 = 1.0 - ADAM_BETA1 ** self.t
        bc2 = 1.0 - ADAM_BETA2 ** self.t
        for table, m, v, rows in (
            (self.params.entities, self.m_e, self.v_e, g.entities),
            (self.params.relations, self.m_r, self.v_r, g.relations),
        ):
            for rid, vec in rows.items():
                m[rid] = ADAM_BETA1 * m[rid] + (1.0 - ADAM_BETA1) * vec
                v[rid] = ADAM_BETA2 * v[rid] + (1.0 - ADAM_BETA2) * vec * vec
                table[rid] -= self.lr * (m[rid] / bc1) / (np.sqrt(v[rid] / bc2) + ADAM_EPS)


def _accumulate(acc: SparseGrad, g: SparseGrad) -> None:
    for eid, vec in g.entities.items():
        if eid in acc.entities:
            acc.entities[eid] += vec
        else:
            acc.entities[eid] = vec.copy()
    for rid, vec in g.relations.items():
        if rid in acc.relations:
            acc.relations[rid] += vec
        else:
            acc.relations[rid] = vec.copy()


@dataclass(frozen=True)
class TrainResult:
    params: ModelParams
    epoch_losses: tuple[float, ...]
    n_updates: int
    vocab_sha256: str  # hash of the *base* (un-augmented) vocabulary
    reciprocal: bool
    train_vocab: Vocabulary  # extended when reciprocal


def train(dataset: SplitDataset, config: TrainConfig) -> TrainResult:
    """Minimize the configured loss over the train split.

    Deterministic for a fixed config and seed: init, batch shuffles and
    negative draws all flow from ``config.seed``. Raises
    :class:`TrainingError` naming the batch if the loss goes non-finite.
    """
    vocab = dataset.vocab
    triples: Sequence[Triple] = dataset.train
    train_vocab = vocab
    if config.reciprocal:
        triples, train_vocab = augment_reciprocal(dataset.train, vocab)
    if not triples:
        raise TrainingError("train split is empty")

    params = init_params(config.model, vocab.n_entities, train_vocab.n_relations,
                         config.dim, config.seed)
    rng = np.random.default_rng((config.seed, 1))
    train_ents, _ = split_vocab(dataset.train)
    entity_pool = np.array(sorted(train_ents), dtype=np.int64)

    loss_kind = config.resolved_loss()
    optimizer = _Adam(params, config.lr) if config.optimizer == "adam" else _Sgd(params, config.lr)
    k = config.negatives
    n = len(triples)
    order_src = np.arange(n)
    epoch_losses: list[float] = []
    n_updates = 0

    for epoch in range(config.epochs):
        order = rng.permutation(order_src)
        epoch_loss = 0.0
        for batch_no, start in enumerate(range(0, n, config.batch_size)):
            batch = [triples[i] for i in order[start:start + config.batch_size]]
            b = len(batch)
            acc = SparseGrad(entities={}, relations={})
            batch_loss = 0.0
            for pos in batch:
                negs = sample_negatives(pos, k, entity_pool, rng)
                s_pos = score(params, *pos)
                if loss_kind == "logistic":
                    batch_loss += _softplus(-s_pos)
                    _accumulate(acc, grad(params, *pos, upstream=-_sigmoid(-s_pos) / b))
                    for neg in negs:
                        s_neg = score(params, *neg)
                        batch_loss += _softplus(s_neg) / k
                        _accumulate(acc, grad(params, *neg, upstream=_sigmoid(s_neg) / (k * b)))
                else:  # margin ranking
                    for neg in negs:
                        s_neg = score(params, *neg)
                        m = config.margin - s_pos + s_neg
                        if m > 0.0:
                            batch_loss += m / k
                            _accumulate(acc, grad(params, *pos, upstream=-1.0 / (k * b)))
                            _accumulate(acc, grad(params, *neg, upstream=1.0 / (k * b)))
            batch_loss /= b
            if not math.isfinite(batch_loss):
                raise TrainingError(
                    f"non-finite loss in epoch {epoch + 1}, batch {batch_no + 1}; "
                    f"try a smaller learning rate"
                )
            optimizer.step(acc)
            n_updates += 1
            epoch_loss += batch_loss * b
        epoch_losses.append(epoch_loss / n)

    return TrainResult(
        params=params,
        epoch_losses=tuple(epoch_losses),
        n_updates=n_updates,
        vocab_sha256=vocab.sha256(),
        reciprocal=config.reciprocal,
        train_vocab=train_vocab,
    )


def write_loss_csv(path: Path, epoch_losses: Sequence[float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_loss"])
        for epoch, loss in enumerate(epoch_losses, start=1):
            writer.writerow([epoch, repr(loss)])
