"""Slow, independent reference implementations used as test oracles."""

from fractions import Fraction
import math
from itertools import groupby


def quantile_fraction(rows):
    """Rank-mean quantile normalization over columns in exact rational arithmetic."""
    n, m = len(rows), len(rows[0])
    cols = [[Fraction(rows[i][j]) for i in range(n)] for j in range(m)]
    sorted_cols = [sorted(c) for c in cols]
    rank_mean = [sum(sc[r] for sc in sorted_cols) / m for r in range(n)]
    out = [[None] * m for _ in range(n)]
    for j, col in enumerate(cols):
        sc = sorted_cols[j]
        for i, v in enumerate(col):
            ranks = [r for r in range(n) if sc[r] == v]
            out[i][j] = sum(rank_mean[r] for r in ranks) / len(ranks)
    return out


def mann_whitney_auroc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    if not pos or not neg:
        return math.nan
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def stepwise_ap(scores, labels):
    """Average precision, one step per distinct threshold (ties kept together)."""
    total_pos = sum(labels)
    if total_pos == 0:
        return math.nan
    ranked = sorted(zip(scores, labels), key=lambda t: -t[0])
    ap, tp, fp = 0.0, 0, 0
    prev_recall = 0.0
    for _, group in groupby(ranked, key=lambda t: t[0]):
        for _, y in group:
            tp += y
            fp += 1 - y
        recall = tp / total_pos
        ap += (recall - prev_recall) * (tp / (tp + fp))
        prev_recall = recall
    return ap


def pearson_abs(x, y):
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    if sxx == 0 or syy == 0:
        return 0.0
    return abs(sxy / math.sqrt(sxx * syy))
