"""Dataset auditing: out-of-vocabulary reports and overview statistics.

An entity (or relation) is out-of-vocabulary for a split when it occurs
there but never in the train split. Embedding models can only initialize,
never learn, parameters for such ids, so triples containing them do not
measure learned behaviour.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SplitDataset, Triple, split_vocab

EVAL_SPLITS = ("valid", "test")


@dataclass(frozen=True)
class AffectedTriple:
    """A valid/test triple containing at least one OOV field."""

    split: str
    line_no: int
    triple: Triple
    oov_fields: tuple[str, ...]  # subset of ("h", "r", "t")


@dataclass(frozen=True)
class SplitOov:
    oov_entities: frozenset[int]
    oov_relations: frozenset[int]
    affected: tuple[AffectedTriple, ...]
    percentage: float  # affected / split size, as a fraction

    @property
    def n_affected(self) -> int:
        return len(self.affected)

    @property
    def is_empty(self) -> bool:
        return not (self.oov_entities or self.oov_relations or self.affected)


@dataclass(frozen=True)
class OovReport:
    valid: SplitOov
    test: SplitOov

    def split(self, name: str) -> SplitOov:
        if name == "valid":
            return self.valid
        if name == "test":
            return self.test
        raise KeyError(f"no OOV report for split {name!r}")

    @property
    def is_empty(self) -> bool:
        return self.valid.is_empty and self.test.is_empty

    def removed_line_numbers(self, split: str) -> frozenset[int]:
        return frozenset(a.line_no for a in self.split(split).affected)


def _detect_split(dataset: SplitDataset, name: str,
                  train_ents: set[int], train_rels: set[int]) -> SplitOov:
    split = dataset.split(name)
    ents, rels = split_vocab(split)
    oov_ents = frozenset(ents - train_ents)
    oov_rels = frozenset(rels - train_rels)
    affected = []
    for tr, line_no in zip(split, dataset.line_numbers[name]):
        fields = []
        if tr.h in oov_ents:
            fields.append("h")
        if tr.r in oov_rels:
            fields.append("r")
        if tr.t in oov_ents:
            fields.append("t")
        if fields:
            affected.append(AffectedTriple(name, line_no, tr, tuple(fields)))
    pct = len(affected) / len(split) if split else 0.0
    return SplitOov(oov_ents, oov_rels, tuple(affected), pct)


def detect_oov(dataset: SplitDataset) -> OovReport:
    """Exact set differences of valid/test vocabularies against the train split.

    Affected triples are listed in original file order; a triple with several
    OOV fields is counted once.
    """
    train_ents, train_rels = split_vocab(dataset.train)
    return OovReport(
        valid=_detect_split(dataset, "valid", train_ents, train_rels),
        test=_detect_split(dataset, "test", train_ents, train_rels),
    )


@dataclass(frozen=True)
class DegreeStats:
    """Node degree distribution of one split.

    Means and SDs are taken over entities with non-zero degree of the
    respective kind (distinct tails for indegree, distinct heads for
    outdegree), with population SD. This is a documented hypothesis about
    the published tables, checked by the reference comparison.
    """

    indegree_mean: float
    indegree_sd: float
    outdegree_mean: float
    outdegree_sd: float
    n_tail_entities: int
    n_head_entities: int


def degree_stats(split: Sequence[Triple]) -> DegreeStats:
    if not split:
        raise ValueError("degree statistics are undefined for an empty split")
    indeg: Counter[int] = Counter(t for _, _, t in split)
    outdeg: Counter[int] = Counter(h for h, _, _ in split)
    in_counts = np.array(list(indeg.values()), dtype=float)
    out_counts = np.array(list(outdeg.values()), dtype=float)
    return DegreeStats(
        indegree_mean=float(in_counts.mean()),
        indegree_sd=float(in_counts.std()),
        outdegree_mean=float(out_counts.mean()),
        outdegree_sd=float(out_counts.std()),
        n_tail_entities=len(indeg),
        n_head_entities=len(outdeg),
    )


def overview_report(dataset: SplitDataset) -> dict:
    """Per-split sizes, vocabulary sizes, degree stats and the OOV report.

    JSON-ready; the markdown rendering lives in :mod:`kgbench.reporting`.
    """
    oov = detect_oov(dataset)
    splits: dict[str, dict] = {}
    for name in ("train", "valid", "test"):
        split = dataset.split(name)
        ents, rels = split_vocab(split)
        entry: dict = {
            "n_triples": len(split),
            "n_entities": len(ents),
            "n_relations": len(rels),
        }
        if split:
            deg = degree_stats(split)
            entry["indegree"] = {"mean": deg.indegree_mean, "sd": deg.indegree_sd}
            entry["outdegree"] = {"mean": deg.outdegree_mean, "sd": deg.outdegree_sd}
        splits[name] = entry
    return {
        "splits": splits,
        "oov": {
            name: {
                "n_oov_entities": len(oov.split(name).oov_entities),
                "n_oov_relations": len(oov.split(name).oov_relations),
                "n_affected_triples": oov.split(name).n_affected,
                "percentage": oov.split(name).percentage,
            }
            for name in EVAL_SPLITS
        },
        "containment": {
            "entities_ok": not (oov.valid.oov_entities or oov.test.oov_entities),
            "relations_ok": not (oov.valid.oov_relations or oov.test.oov_relations),
        },
    }
