"""Confusion matrices and the accuracy figures derived from them."""

from dataclasses import dataclass

import numpy as np

from .errors import DataError


@dataclass
class ConfusionMatrix:
    """``counts[t, p]`` = labeled pixels of true class ``t+1`` predicted ``p+1``.

    ``rejected[t]`` counts labeled pixels of class ``t+1`` whose prediction
    is 0 (no class). They belong to the row totals but to no column.
    """

    counts: np.ndarray
    rejected: np.ndarray = None
    class_names: list = None

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise DataError("confusion matrix must be square")
        if counts.size and counts.min() < 0:
            raise DataError("confusion counts must be non-negative")
        self.counts = counts
        k = counts.shape[0]
        self.rejected = (np.zeros(k, dtype=np.int64) if self.rejected is None
                         else np.asarray(self.rejected, dtype=np.int64))
        if self.class_names is None:
            self.class_names = [f"class{i + 1}" for i in range(k)]
        if len(self.class_names) != k:
            raise DataError(f"{len(self.class_names)} class names for {k} classes")

    @property
    def K(self):
        return self.counts.shape[0]

    def row_totals(self):
        return self.counts.sum(axis=1) + self.rejected

    def column_totals(self):
        return self.counts.sum(axis=0)

    def total(self):
        return int(self.counts.sum() + self.rejected.sum())


@dataclass
class AccuracyStats:
    """Overall, producer's and user's accuracy; NaN marks an undefined value."""

    overall: float
    producer: np.ndarray
    user: np.ndarray
    row_totals: np.ndarray
    column_totals: np.ndarray
    total: int


def confusion_matrix(pred, truth, K, class_names=None):
    """Tally predictions over the labeled (nonzero) truth pixels."""
    p = np.asarray(getattr(pred, "ids", pred))
    t = np.asarray(getattr(truth, "ids", truth))
    if p.shape != t.shape:
        raise DataError(f"prediction {p.shape} and truth {t.shape} differ in size")
    if (p.size and (p.max() > K or p.min() < 0)) or (t.size and (t.max() > K or t.min() < 0)):
        raise DataError(f"class ids must lie in [0, {K}]")
    m = t > 0
    tv, pv = t[m] - 1, p[m]
    full = np.bincount(tv * (K + 1) + pv, minlength=K * (K + 1)).reshape(K, K + 1)
    return ConfusionMatrix(full[:, 1:], full[:, 0], class_names)


def accuracy_stats(cm):
    total = cm.total()
    if total == 0:
        raise DataError("confusion matrix is empty")
    diag = np.diag(cm.counts).astype(np.float64)
    rows = cm.row_totals()
    cols = cm.column_totals()
    with np.errstate(divide="ignore", invalid="ignore"):
        producer = np.where(rows > 0, diag / rows, np.nan)
        user = np.where(cols > 0, diag / cols, np.nan)
    return AccuracyStats(float(diag.sum() / total), producer, user, rows, cols, total)


def format_percent(v):
    return "NA" if np.isnan(v) else f"{100.0 * v:.2f}%"


def format_report(cm, stats=None):
    """Plain-text table with producer's/user's accuracies at two decimals."""
    stats = stats or accuracy_stats(cm)
    names = [str(n) for n in cm.class_names]
    width = max(10, max(len(n) for n in names) + 1)
    has_rejected = cm.rejected.any()
    head = ["truth \\ pred"] + names + (["rejected"] if has_rejected else []) + ["total", "producer"]
    lines = ["".join(h.rjust(width) for h in head)]
    for i, name in enumerate(names):
        row = [name] + [str(v) for v in cm.counts[i]]
        if has_rejected:
            row.append(str(cm.rejected[i]))
        row += [str(stats.row_totals[i]), format_percent(stats.producer[i])]
        lines.append("".join(v.rjust(width) for v in row))
    tail = ["total"] + [str(v) for v in stats.column_totals] + ([""] if has_rejected else []) + [str(stats.total)]
    lines.append("".join(v.rjust(width) for v in tail))
    lines.append("".join(v.rjust(width) for v in ["user"] + [format_percent(u) for u in stats.user]))
    lines.append(f"OA: {format_percent(stats.overall)}")
    return "\n".join(lines)
