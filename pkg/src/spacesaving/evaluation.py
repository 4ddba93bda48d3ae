"""Ground truth and accuracy metrics for frequent-item reports."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import IO, Iterable, NamedTuple

import numpy as np

from .errors import UndefinedMetricError
from .merge import frequency_threshold
from .summary import ITEM_DTYPE, Counter


@dataclass(frozen=True)
class ExactCounts:
    """Exact frequency of every distinct item of a stream.

    ``items`` is sorted ascending and aligned with ``counts``.
    """

    items: np.ndarray
    counts: np.ndarray
    n: int

    def frequency(self, x: int) -> int:
        i = int(np.searchsorted(self.items, np.uint64(x)))
        if i < self.items.size and int(self.items[i]) == x:
            return int(self.counts[i])
        return 0

    __getitem__ = frequency

    def __len__(self) -> int:
        return int(self.items.size)

    def as_dict(self) -> dict[int, int]:
        return dict(zip(self.items.tolist(), self.counts.tolist()))

    def frequent(self, k: int) -> set[int]:
        """Items occurring at least ``n // k + 1`` times."""
        keep = self.counts >= frequency_threshold(self.n, k)
        return set(self.items[keep].tolist())


def exact_count(stream) -> ExactCounts:
    data = np.asarray(stream, dtype=ITEM_DTYPE).reshape(-1)
    items, counts = np.unique(data, return_counts=True)
    return ExactCounts(items, counts.astype(np.int64), int(data.size))


def relative_error(f: int, f_hat: int) -> float:
    """``|f - f_hat| / f``.

    Raises:
        UndefinedMetricError: when ``f == 0``.
    """
    if f == 0:
        raise UndefinedMetricError("relative error is undefined for an item that never occurred")
    return abs(f - f_hat) / f


class PrecisionRecall(NamedTuple):
    precision: float
    recall: float
    empty_report: bool = False


def precision_recall(reported: Iterable[int], truth: ExactCounts, k: int) -> PrecisionRecall:
    """Precision and recall of ``reported`` against the true ``k``-majority set.

    An empty report has precision 1.0 by convention, with ``empty_report``
    set. An empty true set gives recall 1.0.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    reported = set(int(x) for x in reported)
    true_set = truth.frequent(k)
    hits = len(reported & true_set)
    recall = hits / len(true_set) if true_set else 1.0
    if not reported:
        return PrecisionRecall(1.0, recall, True)
    return PrecisionRecall(hits / len(reported), recall, False)


def average_relative_error(output: Iterable[tuple[int, int]], truth: ExactCounts) -> float:
    """Mean relative error over the reported ``(item, estimate)`` pairs.

    Returns 0.0 for an empty report. Every reported item must occur in the
    stream; one that does not raises :class:`UndefinedMetricError`.
    """
    errors = [relative_error(truth.frequency(item), f_hat) for item, f_hat in output]
    return float(np.mean(errors)) if errors else 0.0


class AccuracyRow(NamedTuple):
    item: int
    f: int
    f_hat: int
    delta_f: float


@dataclass
class AccuracyReport:
    """Accuracy of one run.

    ``are`` averages over every reported item; ``are_frequent`` only over the
    reported items that are true ``k``-majority items.
    """

    are: float
    are_frequent: float
    precision: float
    recall: float
    rows: list[AccuracyRow] = field(default_factory=list)
    flags: tuple[str, ...] = ()

    def dump_csv(self, fh: IO[str]) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("item", "f", "f_hat", "delta_f"))
        for row in self.rows:
            w.writerow((row.item, row.f, row.f_hat, repr(row.delta_f)))
        w.writerow(("mean", "", "", repr(self.are)))

    def dumps_csv(self) -> str:
        buf = io.StringIO()
        self.dump_csv(buf)
        return buf.getvalue()


def evaluate(candidates: Iterable[Counter | tuple[int, int]], truth: ExactCounts, k: int) -> AccuracyReport:
    candidates = [Counter(int(x), int(f)) for x, f in candidates]
    rows = []
    for c in candidates:
        f = truth.frequency(c.item)
        rows.append(AccuracyRow(c.item, f, c.est_freq, relative_error(f, c.est_freq)))
    pr = precision_recall((c.item for c in candidates), truth, k)
    true_set = truth.frequent(k)
    flags = []
    if pr.empty_report:
        flags.append("empty_report")
    frequent_rows = [r.delta_f for r in rows if r.item in true_set]
    if not frequent_rows:
        flags.append("no_frequent_reported")
    return AccuracyReport(
        are=float(np.mean([r.delta_f for r in rows])) if rows else 0.0,
        are_frequent=float(np.mean(frequent_rows)) if frequent_rows else 0.0,
        precision=pr.precision,
        recall=pr.recall,
        rows=rows,
        flags=tuple(flags),
    )
