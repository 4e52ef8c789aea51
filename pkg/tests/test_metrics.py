import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gener.core import NoPositives, SingleClass
from gener.metrics import (
    ConfusionMatrix,
    ScoredSet,
    aupr,
    auroc,
    confusion_at_argmax,
    export_curve_csv,
    mcc,
    micro_average_ovr,
    one_vs_all,
    pool,
    pr_points,
    read_curve_csv,
    render_curve_svg,
    roc_points,
    summarize,
)
from oracles import mann_whitney_auroc, stepwise_ap

scored = st.integers(2, 60).flatmap(
    lambda n: st.tuples(
        st.lists(st.sampled_from([0.0, 0.1, 0.25, 0.5, 0.7, 0.9, 1.0]) | st.floats(0, 1), min_size=n, max_size=n),
        st.lists(st.integers(0, 1), min_size=n, max_size=n),
    )
).filter(lambda t: 0 < sum(t[1]) < len(t[1]))


def test_roc_points_example():
    s = ScoredSet([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    assert roc_points(s) == [(0, 0), (0, 0.5), (0.5, 0.5), (0.5, 1), (1, 1)]
    assert auroc(s) == 0.75


def test_roc_degenerate():
    assert roc_points(ScoredSet([0.3] * 4, [0, 1, 0, 1])) == [(0, 0), (1, 1)]
    assert auroc(ScoredSet([0.3] * 4, [0, 1, 0, 1])) == 0.5
    assert (0.0, 1.0) in roc_points(ScoredSet([0.1, 0.9], [0, 1]))
    with pytest.raises(SingleClass):
        auroc(ScoredSet([0.1, 0.2], [1, 1]))


def test_aupr_examples():
    assert aupr(ScoredSet([0.8, 0.4, 0.35, 0.1], [1, 0, 1, 0])) == pytest.approx(5 / 6, abs=1e-15)
    assert aupr(ScoredSet([0.9, 0.8, 0.1], [1, 1, 0])) == 1.0
    assert aupr(ScoredSet([0.9, 0.8, 0.7, 0.1], [0, 0, 0, 1])) == pytest.approx(1 / 4)
    with pytest.raises(NoPositives):
        aupr(ScoredSet([0.1], [0]))


def test_oracles_agree_on_hand_examples():
    assert mann_whitney_auroc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    assert stepwise_ap([0.8, 0.4, 0.35, 0.1], [1, 0, 1, 0]) == pytest.approx(5 / 6)


@settings(max_examples=300)
@given(scored)
def test_auroc_and_aupr_match_oracles(data):
    scores, labels = data
    s = ScoredSet(scores, labels)
    assert abs(auroc(s) - mann_whitney_auroc(scores, labels)) < 1e-9
    assert abs(aupr(s) - stepwise_ap(scores, labels)) < 1e-9
    flipped = ScoredSet(scores, [1 - y for y in labels])
    assert abs(auroc(flipped) - (1 - auroc(s))) < 1e-9


@given(scored)
def test_curve_shapes(data):
    s = ScoredSet(*data)
    roc = roc_points(s)
    assert roc[0] == (0, 0) and roc[-1] == (1, 1)
    assert all(a[0] <= b[0] and a[1] <= b[1] for a, b in zip(roc, roc[1:]))
    pr = pr_points(s)
    assert pr[0][0] == 0 and pr[-1][0] == 1


def test_mcc_examples():
    assert mcc(ConfusionMatrix(tp=3, fp=1, tn=4, fn=2)) == pytest.approx(10 / math.sqrt(600), abs=1e-15)
    assert mcc(ConfusionMatrix(tp=5, fp=0, tn=5, fn=0)) == 1.0
    assert mcc(ConfusionMatrix(tp=0, fp=0, tn=5, fn=5)) == 0.0


def test_micro_average_examples():
    assert micro_average_ovr(one_vs_all([[0.9, 0.1], [0.2, 0.8]], [0, 1]))[0] == 1.0
    assert micro_average_ovr(one_vs_all([[0.5, 0.5]] * 4, [0, 1, 0, 1]))[0] == 0.5


def test_micro_average_pooled_oracle():
    r = np.random.default_rng(8)
    p1 = r.random(50)
    probs = np.stack([1 - p1, p1], axis=1)
    labels = r.integers(0, 2, 50)
    scores = list(probs[:, 0]) + list(probs[:, 1])
    ind = [int(y == 0) for y in labels] + [int(y == 1) for y in labels]
    au, ap = micro_average_ovr(one_vs_all(probs, labels))
    assert abs(au - mann_whitney_auroc(scores, ind)) < 1e-12
    assert abs(ap - stepwise_ap(scores, ind)) < 1e-12
    assert len(pool(one_vs_all(probs, labels)).scores) == 100


def test_confusion_argmax():
    assert confusion_at_argmax([[0.9, 0.1]], [0], 0).tp == 1
    c = confusion_at_argmax([[0.5, 0.5]], [1], 1)
    assert (c.tp, c.fn) == (0, 1)


def test_summarize_keys():
    out = summarize([[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]], [0, 1, 1])
    assert set(out) >= {"auroc_micro", "aupr_micro", "mcc_class1", "mcc_class2", "confusion", "roc", "pr"}
    assert out["confusion"] == {"tp": 1, "fp": 0, "tn": 1, "fn": 1}


def test_curve_csv_round_trip(tmp_path):
    export_curve_csv([(0.0, 0.0), (1.0, 1.0)], tmp_path / "a.csv")
    assert len((tmp_path / "a.csv").read_text().splitlines()) == 3
    pts = [(0.0, 0.0), (1 / 3, 2 / 7), (0.1 + 0.2, math.pi / 4), (1.0, 1.0)]
    export_curve_csv(pts, tmp_path / "b.csv", ("fpr", "tpr"))
    header, back = read_curve_csv(tmp_path / "b.csv")
    assert header == ("fpr", "tpr")
    assert all(abs(a - c) < 1e-12 and abs(b - d) < 1e-12 for (a, b), (c, d) in zip(pts, back))


def test_svg(tmp_path):
    render_curve_svg([(0, 0), (0.5, 0.9), (1, 1)], "FPR", "TPR", tmp_path / "r.svg", "AUROC", 0.9)
    text = (tmp_path / "r.svg").read_text()
    assert text.count("<polyline") == 1 and "AUROC = 0.9000" in text
