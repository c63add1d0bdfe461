"""Clustering agreement scores.

All six scores reduce to the contingency table between two labelings:
normalized mutual information, best-match accuracy (exact assignment via the
Hungarian method), the adjusted Rand index, and pairwise precision / recall /
F-score. Degenerate partitions (single cluster, all singletons) follow the
conventions documented on each function.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

__all__ = [
    "MetricsReport",
    "contingency",
    "nmi",
    "acc",
    "adjusted_rand",
    "pairwise_prf",
    "report",
    "evaluate_runs",
]


def _paired_labels(truth, pred):
    t = np.asarray(truth).ravel()
    p = np.asarray(pred).ravel()
    if t.shape[0] != p.shape[0]:
        raise ValueError(
            f"label vectors differ in length: {t.shape[0]} vs {p.shape[0]}"
        )
    if t.shape[0] == 0:
        raise ValueError("label vectors are empty")
    return t, p


def contingency(truth, pred):
    """Count matrix with one row per truth cluster, one column per predicted."""
    t, p = _paired_labels(truth, pred)
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    counts = np.zeros((ti.max() + 1, pi.max() + 1), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return counts


def nmi(truth, pred):
    """Mutual information over the geometric mean of the entropies.

    Natural logarithms. Two single-cluster partitions score 1; if exactly
    one side has zero entropy the score is 0. All sums go through
    ``math.fsum`` so the result is bit-identical under any relabeling of
    either side (the summands form the same multiset either way).
    """
    c = contingency(truth, pred)
    n = c.sum()
    pi = c.sum(axis=1) / n
    pj = c.sum(axis=0) / n
    h_t = -math.fsum(p * math.log(p) for p in pi if p > 0)
    h_p = -math.fsum(p * math.log(p) for p in pj if p > 0)
    if h_t == 0.0 and h_p == 0.0:
        return 1.0
    if h_t == 0.0 or h_p == 0.0:
        return 0.0
    mi = math.fsum(
        (c[i, j] / n) * math.log(c[i, j] / n / (pi[i] * pj[j]))
        for i in range(c.shape[0])
        for j in range(c.shape[1])
        if c[i, j] > 0
    )
    return float(min(1.0, max(0.0, mi / math.sqrt(h_t * h_p))))


def acc(truth, pred):
    """Fraction matched under the best one-to-one relabeling of clusters."""
    c = contingency(truth, pred)
    rows, cols = scipy.optimize.linear_sum_assignment(c, maximize=True)
    return float(c[rows, cols].sum() / c.sum())


def _pair_count(v):
    return v * (v - 1) // 2


def adjusted_rand(truth, pred):
    """Chance-corrected pair agreement.

    ``(sum_ij C(n_ij,2) - E) / (M - E)`` with ``E`` the expected same-pair
    overlap under independence and ``M`` the mean of the two partitions'
    same-pair counts. A zero denominator only occurs when both partitions
    are single-cluster or both all-singletons, which are identical
    partitions, so it scores 1.

    Worked example: truth ``[0, 0, 1, 1]`` against pred ``[0, 1, 0, 1]``
    gives the all-ones 2x2 table, so no pair lands in the same cluster in
    both partitions; each partition has 2 same-cluster pairs out of 6, so
    ``E = 2 * 2 / 6`` and the score is ``(0 - 2/3) / (2 - 2/3) = -1/2``.

    Evaluated with the denominator cleared to integers, so rational scores
    like the example's -1/2 come out exactly.
    """
    c = contingency(truth, pred)
    n = int(c.sum())
    total_pairs = _pair_count(n)
    if total_pairs == 0:
        return 1.0
    sum_cells = int(_pair_count(c).sum())
    sum_a = int(_pair_count(c.sum(axis=1)).sum())
    sum_b = int(_pair_count(c.sum(axis=0)).sum())
    numerator = 2 * total_pairs * sum_cells - 2 * sum_a * sum_b
    denominator = total_pairs * (sum_a + sum_b) - 2 * sum_a * sum_b
    if denominator == 0:
        return 1.0
    return numerator / denominator


def pairwise_prf(truth, pred):
    """Precision, recall, F-score over all sample pairs.

    A pair counts as positive for a partition when both samples share a
    cluster there. Empty positive sets give precision / recall 1 (vacuous);
    the F-score is 0 whenever precision + recall is 0.

    Worked examples for truth ``[0, 0, 1, 1]``: pred ``[0, 0, 0, 0]``
    claims all 6 pairs and hits the 2 true ones, so precision 1/3,
    recall 1, F-score 1/2; pred ``[0, 1, 2, 3]`` claims no pairs, so
    precision 1 (vacuous), recall 0, F-score 0.
    """
    c = contingency(truth, pred)
    tp = int(_pair_count(c).sum())
    truth_same = int(_pair_count(c.sum(axis=1)).sum())
    pred_same = int(_pair_count(c.sum(axis=0)).sum())
    precision = tp / pred_same if pred_same > 0 else 1.0
    recall = tp / truth_same if truth_same > 0 else 1.0
    fscore = (
        2.0 * precision * recall / (precision + recall)
        if precision + recall > 0
        else 0.0
    )
    return float(precision), float(recall), float(fscore)


@dataclass(frozen=True)
class MetricsReport:
    """The six scores for one labeling against the truth."""

    nmi: float
    acc: float
    ar: float
    fscore: float
    precision: float
    recall: float

    def as_dict(self):
        return {
            "nmi": self.nmi,
            "acc": self.acc,
            "ar": self.ar,
            "fscore": self.fscore,
            "precision": self.precision,
            "recall": self.recall,
        }


def report(truth, pred):
    """All six scores for one run."""
    p, r, f = pairwise_prf(truth, pred)
    return MetricsReport(
        nmi=nmi(truth, pred),
        acc=acc(truth, pred),
        ar=adjusted_rand(truth, pred),
        fscore=f,
        precision=p,
        recall=r,
    )


def evaluate_runs(run_labels, truth):
    """Mean and population standard deviation of each score across runs.

    Returns a pair of :class:`MetricsReport`: the means and the stds.
    """
    if len(run_labels) == 0:
        raise ValueError("need at least one run")
    reports = [report(truth, pred).as_dict() for pred in run_labels]
    keys = reports[0].keys()
    means = {k: float(np.mean([r[k] for r in reports])) for k in keys}
    stds = {k: float(np.std([r[k] for r in reports])) for k in keys}
    return MetricsReport(**means), MetricsReport(**stds)
