"""Two-sided Wilcoxon signed-rank test over paired metric values.

Used to decide whether removing OOV-affected triples from a benchmark
significantly shifts the measured metrics: the pairs are (metric on the
original dataset, same metric on its corrected version) across models.

Differences of zero are discarded by default (classical treatment) or kept
in the ranking via Pratt's method. Absolute differences are ranked with
average ranks for ties. For small samples the two-sided p-value is exact,
from the full distribution of the positive rank sum over all 2^n sign
assignments (computed by convolution, which enumerates the same mass);
larger samples use the normal approximation with tie and continuity
corrections.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np

if TYPE_CHECKING:
    from .evaluation import MetricsReport

#: Largest n for which the exact distribution is enumerated (2^20 ~ 1e6).
EXACT_CUTOFF = 20

FIXTURE_METRICS = ("mrr", "hits@1", "hits@3", "hits@10")


class DegenerateSampleError(ValueError):
    pass


@dataclass(frozen=True)
class PairedSample:
    label: str
    before: float
    after: float

    @property
    def delta(self) -> float:
        return self.after - self.before


@dataclass(frozen=True)
class TestResult:
    n_used: int
    w_plus: float
    w_minus: float
    statistic: float  # min(w_plus, w_minus)
    p_value: float
    method: str  # "exact-enumeration" | "normal-approximation"
    zero_policy: str

    def to_json_dict(self) -> dict:
        return {
            "n_used": self.n_used,
            "w_plus": self.w_plus,
            "w_minus": self.w_minus,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
            "zero_policy": self.zero_policy,
        }


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=float)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i:j + 1]] = avg
        i = j + 1
    return ranks


def _exact_two_sided_p(doubled_ranks: Sequence[int], doubled_w_plus: int) -> float:
    """Exact p from the distribution of W+ over all sign assignments.

    Ranks are doubled so average ranks (multiples of 0.5) become integers;
    counts are exact Python ints.
    """
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r2 in doubled_ranks:
        for s in range(total - r2, -1, -1):
            if counts[s]:
                counts[s + r2] += counts[s]
    n_assignments = 1 << len(doubled_ranks)
    cdf_le = sum(counts[: doubled_w_plus + 1])
    cdf_ge = sum(counts[doubled_w_plus:])
    return min(1.0, 2.0 * min(cdf_le, cdf_ge) / n_assignments)


def _tie_term(ranks: np.ndarray) -> float:
    """Sum of t^3 - t over groups of repeated rank values."""
    _, counts = np.unique(ranks, return_counts=True)
    reps = counts[counts > 1].astype(float)
    return float((reps ** 3 - reps).sum())


def _normal_two_sided_p(w_plus: float, w_minus: float, n_nonzero: int,
                        n_zero: int, nz_ranks: np.ndarray, zero_policy: str) -> float:
    if zero_policy == "pratt":
        n_all = n_nonzero + n_zero
        mn = (n_all * (n_all + 1) - n_zero * (n_zero + 1)) / 4.0
        var24 = (n_all * (n_all + 1) * (2 * n_all + 1)
                 - n_zero * (n_zero + 1) * (2 * n_zero + 1))
    else:
        n = n_nonzero
        mn = n * (n + 1) / 4.0
        var24 = n * (n + 1) * (2 * n + 1)
    var24 -= 0.5 * _tie_term(nz_ranks)
    se = math.sqrt(var24 / 24.0)
    if se == 0.0:
        return 1.0
    t = min(w_plus, w_minus)
    cc = 0.5 * math.copysign(1.0, t - mn) if t != mn else 0.0
    z = (t - mn - cc) / se
    return math.erfc(abs(z) / math.sqrt(2.0))


def wilcoxon_signed_rank(samples: Sequence[PairedSample],
                         zero_policy: str = "discard",
                         exact_cutoff: int = EXACT_CUTOFF) -> TestResult:
    """Two-sided test of the null that paired differences are symmetric about 0.

    Exact enumeration for n_used <= ``exact_cutoff`` nonzero differences,
    normal approximation (tie + continuity corrected) above.
    """
    if zero_policy not in ("discard", "pratt"):
        raise ValueError(f"unknown zero policy {zero_policy!r}")
    diffs = np.array([s.delta for s in samples], dtype=float)
    if len(diffs) == 0 or not np.isfinite(diffs).all():
        raise ValueError("samples must be non-empty with finite values")
    nonzero = diffs != 0.0
    n_zero = int(np.count_nonzero(~nonzero))
    if not nonzero.any():
        raise DegenerateSampleError("degenerate sample: all paired differences are zero")
    if zero_policy == "discard":
        d = diffs[nonzero]
        nz_ranks = _average_ranks(np.abs(d))
    else:
        all_ranks = _average_ranks(np.abs(diffs))
        d = diffs[nonzero]
        nz_ranks = all_ranks[nonzero]
    w_plus = float(nz_ranks[d > 0].sum())
    w_minus = float(nz_ranks[d < 0].sum())
    n_used = len(d)
    if n_used <= exact_cutoff:
        method = "exact-enumeration"
        doubled = [int(round(2.0 * r)) for r in nz_ranks.tolist()]
        p = _exact_two_sided_p(doubled, int(round(2.0 * w_plus)))
    else:
        method = "normal-approximation"
        p = _normal_two_sided_p(w_plus, w_minus, n_used, n_zero, nz_ranks, zero_policy)
    return TestResult(
        n_used=n_used,
        w_plus=w_plus,
        w_minus=w_minus,
        statistic=min(w_plus, w_minus),
        p_value=p,
        method=method,
        zero_policy=zero_policy,
    )


def delta_summary(samples: Sequence[PairedSample]) -> dict:
    """Mean and population SD of |after - before| over the pairs."""
    deltas = np.abs(np.array([s.delta for s in samples], dtype=float))
    return {
        "n": len(samples),
        "mean_abs_delta": float(deltas.mean()),
        "sd_abs_delta": float(deltas.std()),
    }


@dataclass(frozen=True)
class ComparisonResult:
    test: TestResult
    samples: tuple[PairedSample, ...]
    summary: dict

    def to_json_dict(self) -> dict:
        return {
            "test": self.test.to_json_dict(),
            "pairs": [
                {"label": s.label, "before": s.before, "after": s.after, "delta": s.delta}
                for s in self.samples
            ],
            "summary": self.summary,
        }


def pairs_from_reports(report_a: dict[str, "MetricsReport"],
                       report_b: dict[str, "MetricsReport"]) -> list[PairedSample]:
    missing_in_b = sorted(set(report_a) - set(report_b))
    missing_in_a = sorted(set(report_b) - set(report_a))
    if missing_in_a or missing_in_b:
        raise ValueError(
            f"report sets do not cover the same models; "
            f"missing from first: {missing_in_a}, missing from second: {missing_in_b}"
        )
    samples = []
    for model in sorted(report_a):
        a, b = report_a[model], report_b[model]
        samples.append(PairedSample(f"{model}:mrr", a.mrr, b.mrr))
        for n in sorted(a.hits):
            if n not in b.hits:
                raise ValueError(f"model {model}: hits@{n} present in only one report")
            samples.append(PairedSample(f"{model}:hits@{n}", a.hits[n], b.hits[n]))
    return samples


def compare_reports(report_a: dict[str, "MetricsReport"],
                    report_b: dict[str, "MetricsReport"],
                    zero_policy: str = "discard") -> ComparisonResult:
    """Pair up two labeled report sets, test them, and summarize the deltas."""
    samples = pairs_from_reports(report_a, report_b)
    test = wilcoxon_signed_rank(samples, zero_policy)
    return ComparisonResult(test=test, samples=tuple(samples), summary=delta_summary(samples))


def compare_pairs(samples: Sequence[PairedSample],
                  zero_policy: str = "discard") -> ComparisonResult:
    test = wilcoxon_signed_rank(samples, zero_policy)
    return ComparisonResult(test=test, samples=tuple(samples), summary=delta_summary(samples))


def load_fixture_pairs(source: str | Path) -> list[PairedSample]:
    """Read (dataset, model, metric, original, corrected) rows into pairs.

    ``source`` is a CSV path or the name of a shipped fixture
    (``wn18rr``, ``fb15k-237``, ``yago3-10``).
    """
    path = Path(source)
    if not path.is_file():
        from importlib.resources import files

        resource = files("kgbench") / "fixtures" / f"{source}.csv"
        if not resource.is_file():
            raise FileNotFoundError(f"no fixture file or shipped fixture named {source!r}")
        path = Path(str(resource))
    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            samples.append(
                PairedSample(
                    label=f"{row['model']}:{row['metric']}",
                    before=float(row["original"]),
                    after=float(row["corrected"]),
                )
            )
    if not samples:
        raise ValueError(f"{path}: fixture has no rows")
    return samples
