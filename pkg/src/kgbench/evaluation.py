"""Filtered ranking and metric computation under configurable OOV policy.

For each evaluation triple, every entity (or relation) is scored as a
candidate completion, candidates forming a *different* known-true triple
(anywhere in train/valid/test) are filtered out, and the target's rank
among the survivors yields reciprocal-rank and Hits@N contributions. Both
tail and head ranks enter the entity-direction metrics, so denominators
carry a factor 2; relation prediction ranks only the relation slot.

OOV policies:

* ``include``: every evaluation triple is kept and every vocabulary id is
  a candidate, OOV ids being scored with their (untrained) initialization.
* ``exclude``: triples containing an OOV field are dropped and candidates
  are restricted to train-split ids; this is exactly equivalent to
  evaluating the corrected dataset under ``include``.

Tie handling is configurable (optimistic / pessimistic / mean); under the
default mean policy MRR uses the mean rank (half-integers allowed) while
Hits@N counts ties at the boundary as misses.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .audit import detect_oov
from .core import FilterIndex, SplitDataset, Triple, filter_index_build, split_vocab
from .models import ModelParams, score_all_heads, score_all_relations, score_all_tails

OOV_POLICIES = ("include", "exclude")
TIE_POLICIES = ("mean", "optimistic", "pessimistic")
HITS_LEVELS = (1, 3, 10)

#: Fixed accumulation chunk; results are identical for any thread count.
_CHUNK = 256


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class RankRecord:
    """Filtered ranks of one evaluation triple (entity and/or relation slots)."""

    triple: Triple
    rank_tail: float | None = None
    rank_head: float | None = None
    hits_rank_tail: int | None = None
    hits_rank_head: int | None = None
    rank_relation: float | None = None
    hits_rank_relation: int | None = None


@dataclass(frozen=True)
class MetricsReport:
    mrr: float
    hits: dict[int, float]
    per_relation_mrr: dict[int, float]
    n_triples: int
    policy: str
    direction: str  # "entity" | "relation"
    tie: str
    reciprocal: bool = False

    def to_json_dict(self, dataset: SplitDataset | None = None) -> dict:
        per_rel = self.per_relation_mrr
        if dataset is not None:
            per_rel = {dataset.vocab.relation_label(rid): v for rid, v in per_rel.items()}
        else:
            per_rel = {str(rid): v for rid, v in per_rel.items()}
        return {
            "mrr": self.mrr,
            "hits": {str(n): v for n, v in sorted(self.hits.items())},
            "per_relation_mrr": dict(sorted(per_rel.items())),
            # Per-relation values are normalized by 2x the relation's own
            # triple count, not the full split size; recorded because the
            # two conventions disagree in print.
            "per_relation_denominator": "per-relation",
            "n_triples": self.n_triples,
            "policy": self.policy,
            "direction": self.direction,
            "tie": self.tie,
            "reciprocal": self.reciprocal,
        }


def _check_tie(tie: str) -> None:
    if tie not in TIE_POLICIES:
        raise ValueError(f"unknown tie policy {tie!r} (expected one of {TIE_POLICIES})")


def _rank_pair(scores: np.ndarray, mask: np.ndarray, target: int,
               tie: str) -> tuple[float, int]:
    """(rank for MRR, integer rank for Hits@N) of target among masked candidates."""
    s_t = scores[target]
    sel = scores[mask]
    greater = int(np.count_nonzero(sel > s_t))
    ties_other = int(np.count_nonzero(sel == s_t)) - 1
    optimistic = 1 + greater
    pessimistic = optimistic + ties_other
    if tie == "optimistic":
        return float(optimistic), optimistic
    if tie == "pessimistic":
        return float(pessimistic), pessimistic
    return (optimistic + pessimistic) / 2.0, pessimistic


def _candidate_mask(n_rows: int, candidates: np.ndarray | None,
                    filtered: Iterable[int], target: int) -> np.ndarray:
    mask = np.zeros(n_rows, dtype=bool)
    if candidates is None:
        mask[:] = True
    else:
        mask[candidates] = True
    if not mask[target]:
        raise EvaluationError(f"target id {target} is not in the candidate set")
    drop = [x for x in filtered if x != target]
    if drop:
        mask[drop] = False
    return mask


def _inverse_relation(params: ModelParams, r: int) -> int:
    base = params.n_relations // 2
    if params.n_relations % 2 or r >= base:
        raise EvaluationError(
            f"cannot derive inverse of relation {r}: checkpoint has "
            f"{params.n_relations} relation rows"
        )
    return base + r


def filtered_rank(params: ModelParams, index: FilterIndex, h: int, r: int, t: int,
                  direction: str = "tail", tie: str = "mean",
                  candidates: np.ndarray | None = None,
                  reciprocal: bool = False) -> float:
    """Filtered rank of one slot of a known-true triple.

    Candidates whose substituted triple occurs anywhere in the index are
    removed (the query triple itself survives). ``candidates`` optionally
    restricts the candidate ids (used by the exclude policy and by
    reciprocal checkpoints whose parameter tables exceed the vocabulary).
    Returns the rank used for MRR; see :func:`filtered_rank_pair` for the
    Hits@N companion.
    """
    return filtered_rank_pair(params, index, h, r, t, direction, tie,
                              candidates, reciprocal)[0]


def filtered_rank_pair(params: ModelParams, index: FilterIndex, h: int, r: int, t: int,
                       direction: str = "tail", tie: str = "mean",
                       candidates: np.ndarray | None = None,
                       reciprocal: bool = False) -> tuple[float, int]:
    _check_tie(tie)
    if not index.contains(Triple(h, r, t)):
        raise EvaluationError(
            f"triple ({h}, {r}, {t}) is not in the filter index; refusing to rank "
            f"against unfiltered data"
        )
    if direction == "tail":
        scores = score_all_tails(params, h, r)
        filtered: Iterable[int] = index.tails(h, r)
        target = t
    elif direction == "head":
        if reciprocal:
            scores = score_all_tails(params, t, _inverse_relation(params, r))
        else:
            scores = score_all_heads(params, r, t)
        filtered = index.heads(r, t)
        target = h
    elif direction == "relation":
        scores = score_all_relations(params, h, t)
        filtered = index.relations(h, t)
        target = r
    else:
        raise ValueError(f"unknown direction {direction!r}")
    mask = _candidate_mask(len(scores), candidates, filtered, target)
    return _rank_pair(scores, mask, target, tie)


@dataclass(frozen=True)
class _EvalSetup:
    index: FilterIndex
    triples: tuple[Triple, ...]
    entity_candidates: np.ndarray | None
    relation_candidates: np.ndarray | None


def _setup(params: ModelParams, dataset: SplitDataset, split: str, policy: str,
           reciprocal: bool) -> _EvalSetup:
    if policy not in OOV_POLICIES:
        raise ValueError(f"unknown OOV policy {policy!r} (expected one of {OOV_POLICIES})")
    vocab = dataset.vocab
    if params.n_entities < vocab.n_entities:
        raise EvaluationError("params do not cover the dataset's entity vocabulary")
    needed_rel = 2 * vocab.n_relations if reciprocal else vocab.n_relations
    if params.n_relations < needed_rel:
        raise EvaluationError("params do not cover the dataset's relation vocabulary")

    index = filter_index_build(dataset)
    triples = dataset.split(split)
    if policy == "exclude":
        if split in ("valid", "test"):
            affected = {a.triple for a in detect_oov(dataset).split(split).affected}
            triples = tuple(tr for tr in triples if tr not in affected)
        train_ents, train_rels = split_vocab(dataset.train)
        ent_candidates = np.array(sorted(train_ents), dtype=np.int64)
        rel_candidates = np.array(sorted(train_rels), dtype=np.int64)
    else:
        ent_candidates = np.arange(vocab.n_entities, dtype=np.int64)
        rel_candidates = np.arange(vocab.n_relations, dtype=np.int64)
    if not triples:
        raise EvaluationError(f"no {split} triples left to evaluate under policy {policy!r}")
    # Masks are sized to the parameter tables, so candidate arrays are
    # explicit even under include (reciprocal checkpoints have extra rows).
    return _EvalSetup(index, triples, ent_candidates, rel_candidates)


@dataclass
class _Partial:
    rr_sum: float = 0.0
    hits: dict[int, int] = field(default_factory=lambda: {n: 0 for n in HITS_LEVELS})
    per_rel_rr: dict[int, float] = field(default_factory=dict)
    per_rel_n: dict[int, int] = field(default_factory=dict)


def _entity_chunk(params: ModelParams, setup: _EvalSetup, tie: str,
                  reciprocal: bool, chunk: Sequence[Triple]) -> _Partial:
    part = _Partial()
    for tr in chunk:
        rank_t, hit_t = filtered_rank_pair(params, setup.index, *tr, "tail", tie,
                                           setup.entity_candidates, reciprocal)
        rank_h, hit_h = filtered_rank_pair(params, setup.index, *tr, "head", tie,
                                           setup.entity_candidates, reciprocal)
        rr = 1.0 / rank_t + 1.0 / rank_h
        part.rr_sum += rr
        for n in HITS_LEVELS:
            part.hits[n] += (hit_t <= n) + (hit_h <= n)
        part.per_rel_rr[tr.r] = part.per_rel_rr.get(tr.r, 0.0) + rr
        part.per_rel_n[tr.r] = part.per_rel_n.get(tr.r, 0) + 1
    return part


def _relation_chunk(params: ModelParams, setup: _EvalSetup, tie: str,
                    chunk: Sequence[Triple]) -> _Partial:
    part = _Partial()
    for tr in chunk:
        rank_r, hit_r = filtered_rank_pair(params, setup.index, *tr, "relation", tie,
                                           setup.relation_candidates)
        part.rr_sum += 1.0 / rank_r
        for n in HITS_LEVELS:
            part.hits[n] += hit_r <= n
        part.per_rel_rr[tr.r] = part.per_rel_rr.get(tr.r, 0.0) + 1.0 / rank_r
        part.per_rel_n[tr.r] = part.per_rel_n.get(tr.r, 0) + 1
    return part


def _run_chunks(worker, triples: Sequence[Triple], threads: int) -> list[_Partial]:
    chunks = [triples[i:i + _CHUNK] for i in range(0, len(triples), _CHUNK)]
    if threads <= 1:
        return [worker(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, chunks))


def _merge(parts: list[_Partial], n: int, slots: int, policy: str, direction: str,
           tie: str, reciprocal: bool) -> MetricsReport:
    rr_sum = 0.0
    hits = {lvl: 0 for lvl in HITS_LEVELS}
    per_rel_rr: dict[int, float] = {}
    per_rel_n: dict[int, int] = {}
    for part in parts:
        rr_sum += part.rr_sum
        for lvl in HITS_LEVELS:
            hits[lvl] += part.hits[lvl]
        for rid, v in part.per_rel_rr.items():
            per_rel_rr[rid] = per_rel_rr.get(rid, 0.0) + v
        for rid, c in part.per_rel_n.items():
            per_rel_n[rid] = per_rel_n.get(rid, 0) + c
    denom = slots * n
    return MetricsReport(
        mrr=rr_sum / denom,
        hits={lvl: hits[lvl] / denom for lvl in HITS_LEVELS},
        per_relation_mrr={rid: per_rel_rr[rid] / (slots * per_rel_n[rid])
                          for rid in sorted(per_rel_rr)},
        n_triples=n,
        policy=policy,
        direction=direction,
        tie=tie,
        reciprocal=reciprocal,
    )


def evaluate(params: ModelParams, dataset: SplitDataset, split: str = "test",
             policy: str = "include", tie: str = "mean", reciprocal: bool = False,
             threads: int = 1) -> MetricsReport:
    """Entity-direction link prediction metrics over one split.

    MRR averages reciprocal tail and head ranks with denominator 2|split|;
    Hits@N analogously. Under ``exclude`` the denominator shrinks to the
    OOV-free subset.
    """
    _check_tie(tie)
    setup = _setup(params, dataset, split, policy, reciprocal)
    worker = lambda chunk: _entity_chunk(params, setup, tie, reciprocal, chunk)
    parts = _run_chunks(worker, setup.triples, threads)
    return _merge(parts, len(setup.triples), 2, policy, "entity", tie, reciprocal)


def evaluate_per_relation(params: ModelParams, dataset: SplitDataset,
                          split: str = "test", policy: str = "include",
                          tie: str = "mean", reciprocal: bool = False,
                          threads: int = 1) -> dict[int, float]:
    """Entity-direction MRR grouped by relation (per-relation denominators)."""
    report = evaluate(params, dataset, split, policy, tie, reciprocal, threads)
    return report.per_relation_mrr


def evaluate_relation_prediction(params: ModelParams, dataset: SplitDataset,
                                 split: str = "test", policy: str = "include",
                                 tie: str = "mean", threads: int = 1) -> MetricsReport:
    """Relation-direction metrics: rank the missing relation of (h, ?, t).

    Single-slot ranking, so MRR/Hits@N use denominator |split| (no factor 2).
    Reciprocal-augmented checkpoints rank base relations only.
    """
    _check_tie(tie)
    setup = _setup(params, dataset, split, policy, reciprocal=False)
    worker = lambda chunk: _relation_chunk(params, setup, tie, chunk)
    parts = _run_chunks(worker, setup.triples, threads)
    return _merge(parts, len(setup.triples), 1, policy, "relation", tie, False)


def rank_records(params: ModelParams, dataset: SplitDataset, split: str = "test",
                 policy: str = "include", tie: str = "mean",
                 reciprocal: bool = False) -> list[RankRecord]:
    """Per-triple rank records (entity direction plus the relation slot)."""
    setup = _setup(params, dataset, split, policy, reciprocal)
    records = []
    for tr in setup.triples:
        rank_t, hit_t = filtered_rank_pair(params, setup.index, *tr, "tail", tie,
                                           setup.entity_candidates, reciprocal)
        rank_h, hit_h = filtered_rank_pair(params, setup.index, *tr, "head", tie,
                                           setup.entity_candidates, reciprocal)
        rank_r, hit_r = filtered_rank_pair(params, setup.index, *tr, "relation", tie,
                                           setup.relation_candidates)
        records.append(RankRecord(tr, rank_t, rank_h, hit_t, hit_h, rank_r, hit_r))
    return records
