"""Upper expectation and upper capacity over a finite family of simulated laws.

The estimate is the largest per-law sample mean.  A finite family only sees
part of the supremum, so every estimate is flagged as a lower bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

SURROGATE_NOTE = "finite-control lower bound"
MAX_EXCLUDED_FRACTION = 1e-3


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class LawStat:
    law_id: int
    mean: float
    std_error: float
    n: int
    excluded: int = 0


@dataclass(frozen=True)
class UEEstimate:
    value: float
    per_law: tuple
    argmax_law: int
    surrogate_note: str = SURROGATE_NOTE
    functional: str = ""

    def law(self, law_id: int) -> LawStat:
        return next(s for s in self.per_law if s.law_id == law_id)

    @property
    def std_error(self) -> float:
        return self.law(self.argmax_law).std_error

    def to_json(self) -> dict:
        return {
            "functional": self.functional,
            "value": self.value,
            "std_error": self.std_error,
            "argmax_law": self.argmax_law,
            "per_law": [vars(s) for s in self.per_law],
            "surrogate_note": self.surrogate_note,
        }


class CapacityEstimate(UEEstimate):
    pass


def _values_by_law(f: Callable, fam: Sequence) -> dict[int, list[tuple[np.ndarray, np.ndarray]]]:
    if not fam:
        raise EstimationError("empty family")
    out: dict[int, list] = {}
    for ens in fam:
        vals = np.asarray(f(ens), dtype=float)
        if vals.shape != (len(ens),):
            raise EstimationError(f"functional returned shape {vals.shape}, expected ({len(ens)},)")
        for lid in np.unique(ens.law_ids):
            rows = ens.law_ids == lid
            out.setdefault(int(lid), []).append((ens.path_index[rows], vals[rows]))
    return out


def law_stat(law_id: int, values: np.ndarray) -> LawStat:
    finite = np.isfinite(values)
    excluded = int((~finite).sum())
    if excluded > MAX_EXCLUDED_FRACTION * values.size:
        raise EstimationError(f"law {law_id}: {excluded} of {values.size} values are not finite")
    v = values[finite]
    if v.size == 0:
        raise EstimationError(f"law {law_id} has no samples")
    sd = float(v.std(ddof=1)) if v.size > 1 else 0.0
    return LawStat(law_id, float(v.mean()), sd / np.sqrt(v.size), int(v.size), excluded)


def reduce_laws(stats: Sequence[LawStat], functional: str = "", cls=UEEstimate) -> UEEstimate:
    stats = sorted(stats, key=lambda s: s.law_id)
    best = stats[0]
    for s in stats[1:]:
        if s.mean > best.mean:
            best = s
    return cls(best.mean, tuple(stats), best.law_id, functional=functional)


def _stats(f, fam) -> list[LawStat]:
    stats = []
    for lid, chunks in sorted(_values_by_law(f, fam).items()):
        idx = np.concatenate([c[0] for c in chunks])
        vals = np.concatenate([c[1] for c in chunks])
        # ascending path index so the reduction order never depends on scheduling
        stats.append(law_stat(lid, vals[np.argsort(idx, kind="stable")]))
    return stats


def upper_expectation(f: Callable, fam: Sequence, name: str = "") -> UEEstimate:
    """max over laws of the sample mean of ``f``; ``f(ensemble)`` returns one value per path."""
    return reduce_laws(_stats(f, fam), name or getattr(f, "__name__", ""))


def upper_capacity(pred: Callable, fam: Sequence, name: str = "") -> CapacityEstimate:
    def indicator(ens):
        return np.asarray(pred(ens), dtype=bool).astype(float)

    return reduce_laws(_stats(indicator, fam), name or getattr(pred, "__name__", ""), CapacityEstimate)


@dataclass
class MonotoneReport:
    estimates: list
    defects: list
    defect_ok: bool
    limit: UEEstimate | None = None
    limit_ok: bool | None = None
    note: str = ("downward convergence needs weak compactness and quasi-continuity; "
                 "this probe shows consistency only")
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.defect_ok and self.limit_ok is not False


def monotone_convergence_probe(fs: Sequence[Callable], fam: Sequence, limit: Callable | None = None,
                               k_se: float = 3.0) -> MonotoneReport:
    """Estimates along a pointwise decreasing sequence of functionals."""
    values = [[np.asarray(f(ens), dtype=float) for ens in fam] for f in fs]
    for n in range(len(fs) - 1):
        for a, b in zip(values[n], values[n + 1]):
            if np.any(b > a):
                raise EstimationError(f"functionals {n} and {n + 1} are not pointwise decreasing")
    ests = [upper_expectation(f, fam) for f in fs]
    defects = [max(0.0, ests[n + 1].value - ests[n].value) for n in range(len(ests) - 1)]
    ok = all(d <= k_se * (ests[n].std_error + ests[n + 1].std_error) for n, d in enumerate(defects))
    report = MonotoneReport(ests, defects, ok)
    if limit is not None:
        lim = upper_expectation(limit, fam)
        report.limit = lim
        report.limit_ok = abs(ests[-1].value - lim.value) <= k_se * max(ests[-1].std_error, lim.std_error, 1e-300) \
            or ests[-1].value == lim.value
    return report
