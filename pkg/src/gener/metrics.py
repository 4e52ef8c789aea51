"""ROC/PR curves, AUROC, average precision, MCC and one-vs-all micro-averaging."""

from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .core import IoFailure, NoPositives, SingleClass


@dataclass(frozen=True)
class ScoredSet:
    scores: np.ndarray
    labels: np.ndarray

    def __init__(self, scores, labels):
        scores = np.asarray(scores, dtype=np.float64).reshape(-1)
        labels = np.asarray(labels).reshape(-1).astype(np.int64)
        if scores.shape != labels.shape or scores.size == 0:
            raise ValueError("scores and labels must be equal-length and non-empty")
        if not np.all(np.isfinite(scores)):
            raise ValueError("scores must be finite")
        if np.any((labels != 0) & (labels != 1)):
            raise ValueError("labels must be binary")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def as_dict(self) -> dict:
        return asdict(self)


def _threshold_counts(s: ScoredSet):
    """Cumulative (tp, fp) after admitting each distinct score, highest first."""
    order = np.argsort(-s.scores, kind="stable")
    scores = s.scores[order]
    labels = s.labels[order]
    tp = np.cumsum(labels)
    fp = np.cumsum(1 - labels)
    # last index of every tie group
    last = np.flatnonzero(np.append(scores[1:] != scores[:-1], True))
    return tp[last], fp[last]


def roc_points(s: ScoredSet) -> list[tuple[float, float]]:
    """(fpr, tpr) at every distinct threshold, from (0, 0) to (1, 1)."""
    n_pos = int(s.labels.sum())
    n_neg = s.labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes")
    tp, fp = _threshold_counts(s)
    pts = [(0.0, 0.0)]
    pts += [(f / n_neg, t / n_pos) for t, f in zip(tp.tolist(), fp.tolist())]
    return pts


def auroc(s: ScoredSet) -> float:
    """Trapezoidal area under :func:`roc_points`.

    Equals P(score+ > score-) + P(score+ == score-)/2.
    """
    pts = np.array(roc_points(s))
    x, y = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1]) / 2))


def pr_points(s: ScoredSet) -> list[tuple[float, float]]:
    """(recall, precision) per distinct threshold, highest first.

    A leading ``(0, p1)`` point, with ``p1`` the precision at the top
    threshold, anchors the step curve at zero recall.
    """
    n_pos = int(s.labels.sum())
    if n_pos == 0:
        raise NoPositives("precision-recall needs at least one positive")
    tp, fp = _threshold_counts(s)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return [(0.0, float(precision[0]))] + list(zip(recall.tolist(), precision.tolist()))


def aupr(s: ScoredSet) -> float:
    """Average precision: sum of recall increments times precision, tie-grouped."""
    n_pos = int(s.labels.sum())
    if n_pos == 0:
        raise NoPositives("precision-recall needs at least one positive")
    tp, fp = _threshold_counts(s)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    d_recall = np.diff(np.concatenate([[0.0], recall]))
    return float(np.sum(d_recall * precision))


def mcc(c: ConfusionMatrix) -> float:
    """Matthews correlation; 0 when any marginal is empty."""
    denom = (c.tp + c.fp) * (c.tp + c.fn) * (c.tn + c.fp) * (c.tn + c.fn)
    if denom == 0:
        return 0.0
    return (c.tp * c.tn - c.fp * c.fn) / math.sqrt(denom)


def pool(per_class: Mapping[int, ScoredSet]) -> ScoredSet:
    return ScoredSet(
        np.concatenate([s.scores for s in per_class.values()]),
        np.concatenate([s.labels for s in per_class.values()]),
    )


def micro_average_ovr(per_class: Mapping[int, ScoredSet]) -> tuple[float, float]:
    """Pool every class's (score, indicator) pairs and score the pooled set."""
    pooled = pool(per_class)
    return auroc(pooled), aupr(pooled)


def one_vs_all(probabilities, labels) -> dict[int, ScoredSet]:
    """Per-class scored sets: column k scores, indicator ``label == k``."""
    probs = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    return {k: ScoredSet(probs[:, k], (labels == k).astype(np.int64)) for k in range(probs.shape[1])}


def confusion_at_argmax(probabilities, labels, positive_class: int) -> ConfusionMatrix:
    """Confusion of argmax predictions (ties go to class 0) against ``labels``."""
    probs = np.asarray(probabilities)
    labels = np.asarray(labels)
    pred = np.argmax(probs, axis=1)  # first maximum wins
    p = pred == positive_class
    t = labels == positive_class
    return ConfusionMatrix(
        tp=int(np.sum(p & t)), fp=int(np.sum(p & ~t)),
        tn=int(np.sum(~p & ~t)), fn=int(np.sum(~p & t)),
    )


# class index 1 = interaction ("Class1"), 0 = no interaction ("Class2")
INTERACTION = 1
NO_INTERACTION = 0


def summarize(probabilities, labels) -> dict:
    """Scalar report fields and curves for two-class probabilities."""
    pooled = pool(one_vs_all(probabilities, labels))
    c1 = confusion_at_argmax(probabilities, labels, INTERACTION)
    c2 = confusion_at_argmax(probabilities, labels, NO_INTERACTION)
    return {
        "auroc_micro": auroc(pooled),
        "aupr_micro": aupr(pooled),
        "mcc_class1": mcc(c1),
        "mcc_class2": mcc(c2),
        "confusion": c1.as_dict(),
        "roc": roc_points(pooled),
        "pr": pr_points(pooled),
    }


# -- export -----------------------------------------------------------------

def _atomic_write(destination, write) -> None:
    destination = Path(destination)
    try:
        destination.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=destination.parent, prefix=f".{destination.name}.")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                write(fh)
            os.replace(tmp, destination)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc


def export_curve_csv(points: Sequence[tuple[float, float]], destination, header=("x", "y")) -> None:
    if len(points) < 2:
        raise ValueError("a curve needs at least 2 points")

    def write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for x, y in points:
            w.writerow([f"{x:.17g}", f"{y:.17g}"])

    _atomic_write(destination, write)


def read_curve_csv(path) -> tuple[tuple[str, str], list[tuple[float, float]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return tuple(rows[0]), [(float(x), float(y)) for x, y in rows[1:]]


def render_curve_svg(points, x_label: str, y_label: str, destination, area_label: str, area: float) -> None:
    """Single-polyline plot over a 600x600 viewBox with axes and the area value."""
    if len(points) < 2:
        raise ValueError("a curve needs at least 2 points")
    margin, size = 60, 480

    def px(x, y):
        return margin + x * size, margin + (1 - y) * size

    poly = " ".join(f"{a:.3f},{b:.3f}" for a, b in (px(x, y) for x, y in points))
    x0, y0 = px(0, 0)
    x1, _ = px(1, 0)
    _, y1 = px(0, 1)
    svg = (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        '<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 600 600" width="600" height="600">\n'
        '  <rect x="0" y="0" width="600" height="600" fill="white"/>\n'
        f'  <line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>\n'
        f'  <line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>\n'
        f'  <polyline points="{poly}" fill="none" stroke="#1f77b4" stroke-width="2"/>\n'
        f'  <text x="300" y="585" text-anchor="middle" font-size="16">{escape(x_label)}</text>\n'
        f'  <text x="18" y="300" text-anchor="middle" font-size="16" '
        f'transform="rotate(-90 18 300)">{escape(y_label)}</text>\n'
        f'  <text x="300" y="35" text-anchor="middle" font-size="18">'
        f'{escape(area_label)} = {area:.4f}</text>\n'
        '</svg>\n'
    )
    _atomic_write(destination, lambda fh: fh.write(svg))
