"""Clustering evaluation: B-Cubed, CEAF (entity/mention), MUC, BLANC,
pairwise and information-theoretic scores, and fragmentation reporting.

Degenerate-denominator conventions: scores defined as ratios report 1.0
when both numerator and denominator are zero (the claim is vacuously
perfect) and 0.0 when only the denominator is zero, matching the common
reference implementations of the coreference metrics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import IdSetMismatch, TooFewClusters

Partition = Mapping[str, str]


# ---------------------------------------------------------------------------
# Shared plumbing


@dataclass(frozen=True)
class PRF:
    """Precision / recall / F1 triple."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision: float, recall: float) -> "PRF":
        if precision + recall == 0.0:
            return cls(precision, recall, 0.0)
        return cls(precision, recall, 2.0 * precision * recall / (precision + recall))


def _ratio(num: float, den: float) -> float:
    """num/den with the vacuous-truth convention for 0/0."""
    if den == 0.0:
        return 1.0 if num == 0.0 else 0.0
    return num / den


def clusters_of(partition: Partition) -> dict[str, set[str]]:
    """Invert a doc-id -> label mapping into label -> set of doc ids."""
    out: dict[str, set[str]] = {}
    for doc_id, label in partition.items():
        out.setdefault(label, set()).add(doc_id)
    return out


def _check_ids(pred: Partition, gold: Partition) -> None:
    if set(pred) != set(gold):
        missing = sorted(set(gold) - set(pred))[:3]
        extra = sorted(set(pred) - set(gold))[:3]
        raise IdSetMismatch(
            f"partitions cover different documents (missing={missing}, extra={extra})"
        )
    if not pred:
        raise IdSetMismatch("cannot evaluate empty partitions")


def _contingency(pred: Partition, gold: Partition) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Counts n[i, j] = |gold cluster i  ∩  pred cluster j|, plus marginals."""
    gold_labels = sorted(set(gold.values()))
    pred_labels = sorted(set(pred.values()))
    gi = {lab: i for i, lab in enumerate(gold_labels)}
    pj = {lab: j for j, lab in enumerate(pred_labels)}
    n = np.zeros((len(gold_labels), len(pred_labels)), dtype=np.int64)
    for doc_id, g_lab in gold.items():
        n[gi[g_lab], pj[pred[doc_id]]] += 1
    return n, n.sum(axis=1), n.sum(axis=0)


# ---------------------------------------------------------------------------
# B-Cubed


def bcubed(pred: Partition, gold: Partition) -> PRF:
    """Per-document precision/recall averaged over documents."""
    _check_ids(pred, gold)
    pred_clusters = clusters_of(pred)
    gold_clusters = clusters_of(gold)
    p_sum = 0.0
    r_sum = 0.0
    for doc_id in pred:
        pc = pred_clusters[pred[doc_id]]
        gc = gold_clusters[gold[doc_id]]
        overlap = len(pc & gc)
        p_sum += overlap / len(pc)
        r_sum += overlap / len(gc)
    n = len(pred)
    return PRF.from_pr(p_sum / n, r_sum / n)


# ---------------------------------------------------------------------------
# Hungarian assignment (maximum-profit matching)


def _min_cost_square(cost: np.ndarray) -> list[int]:
    """Exact square assignment by shortest augmenting paths with potentials.

    Returns row index assigned to each column (0-based)."""
    n = cost.shape[0]
    INF = math.inf
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row occupying column j (1-based, 0 = free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = INF
            j1 = 0
            row = cost[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    return [match[j] - 1 for j in range(1, n + 1)]


def hungarian(profit) -> list[tuple[int, int]]:
    """Maximum-total-profit assignment on a (possibly rectangular) matrix.

    Returns (row, col) pairs sorted by row; the shorter side is fully
    matched.  Ties in total profit may resolve to any optimal assignment.
    """
    profit = np.asarray(profit, dtype=np.float64)
    if profit.ndim != 2 or profit.size == 0:
        raise ValueError("profit matrix must be 2-d and non-empty")
    n_rows, n_cols = profit.shape
    k = max(n_rows, n_cols)
    cost = np.zeros((k, k), dtype=np.float64)
    cost[:n_rows, :n_cols] = -profit
    row_of_col = _min_cost_square(cost)
    pairs = [
        (row_of_col[j], j)
        for j in range(k)
        if row_of_col[j] < n_rows and j < n_cols
    ]
    return sorted(pairs)


def assignment_value(profit, pairs: Sequence[tuple[int, int]]) -> float:
    profit = np.asarray(profit, dtype=np.float64)
    return float(sum(profit[i, j] for i, j in pairs))


# ---------------------------------------------------------------------------
# CEAF


def _phi_mention(g: set[str], o: set[str]) -> float:
    return float(len(g & o))


def _phi_dice(g: set[str], o: set[str]) -> float:
    return 2.0 * len(g & o) / (len(g) + len(o))


def _phi_jaccard(g: set[str], o: set[str]) -> float:
    union = len(g | o)
    return len(g & o) / union if union else 0.0


def ceaf(pred: Partition, gold: Partition, phi: str = "entity", entity_phi: str = "dice") -> PRF:
    """Constrained entity alignment: optimal one-to-one cluster matching.

    ``phi="entity"`` scores aligned pairs by normalized overlap (``dice`` by
    default, ``jaccard`` as a variant); ``phi="mention"`` scores by raw
    overlap counts.
    """
    _check_ids(pred, gold)
    if phi == "mention":
        sim: Callable[[set[str], set[str]], float] = _phi_mention
    elif phi == "entity":
        if entity_phi == "dice":
            sim = _phi_dice
        elif entity_phi == "jaccard":
            sim = _phi_jaccard
        else:
            raise ValueError("entity_phi must be 'dice' or 'jaccard'")
    else:
        raise ValueError("phi must be 'entity' or 'mention'")
    gold_sets = [gold_set for _, gold_set in sorted(clusters_of(gold).items())]
    pred_sets = [pred_set for _, pred_set in sorted(clusters_of(pred).items())]
    profit = np.array([[sim(g, o) for o in pred_sets] for g in gold_sets])
    total = assignment_value(profit, hungarian(profit))
    self_gold = sum(sim(g, g) for g in gold_sets)
    self_pred = sum(sim(o, o) for o in pred_sets)
    return PRF.from_pr(_ratio(total, self_pred), _ratio(total, self_gold))


# ---------------------------------------------------------------------------
# MUC


def muc(pred: Partition, gold: Partition) -> PRF:
    """Link-based score: recall counts the links missing to reunite each
    gold cluster, precision does the same with roles swapped."""
    _check_ids(pred, gold)
    n, a, b = _contingency(pred, gold)
    touched_pred = (n > 0).sum(axis=1)  # partitions of each gold cluster
    touched_gold = (n > 0).sum(axis=0)
    r_num = float((a - touched_pred).sum())
    r_den = float((a - 1).sum())
    p_num = float((b - touched_gold).sum())
    p_den = float((b - 1).sum())
    return PRF.from_pr(_ratio(p_num, p_den), _ratio(r_num, r_den))


# ---------------------------------------------------------------------------
# Pairwise scores (Rand family, Fowlkes-Mallows, BLANC)


def _pair_counts(pred: Partition, gold: Partition) -> tuple[float, float, float, float]:
    n, a, b = _contingency(pred, gold)
    total_docs = int(a.sum())

    def c2(x) -> float:
        x = np.asarray(x, dtype=np.float64)
        return float((x * (x - 1.0) / 2.0).sum())

    together_both = c2(n)
    gold_pairs = c2(a)
    pred_pairs = c2(b)
    all_pairs = total_docs * (total_docs - 1) / 2.0
    tp = together_both
    fp = pred_pairs - together_both
    fn = gold_pairs - together_both
    tn = all_pairs - tp - fp - fn
    return tp, fp, fn, tn


def pairwise_metrics(pred: Partition, gold: Partition) -> dict[str, object]:
    """Rand index, adjusted Rand, Fowlkes-Mallows, and BLANC."""
    _check_ids(pred, gold)
    if len(pred) < 2:
        raise TooFewClusters("pairwise scores need at least two documents")
    tp, fp, fn, tn = _pair_counts(pred, gold)
    total = tp + fp + fn + tn
    rand = (tp + tn) / total
    gold_pairs = tp + fn
    pred_pairs = tp + fp
    expected = gold_pairs * pred_pairs / total
    max_index = (gold_pairs + pred_pairs) / 2.0
    ari = 1.0 if max_index == expected else (tp - expected) / (max_index - expected)
    if gold_pairs == 0.0 and pred_pairs == 0.0:
        fm = 1.0
    elif gold_pairs == 0.0 or pred_pairs == 0.0:
        fm = 0.0
    else:
        fm = tp / math.sqrt(pred_pairs * gold_pairs)
    coref = PRF.from_pr(_ratio(tp, tp + fp), _ratio(tp, tp + fn))
    non_coref = PRF.from_pr(_ratio(tn, tn + fn), _ratio(tn, tn + fp))
    blanc = PRF(
        precision=(coref.precision + non_coref.precision) / 2.0,
        recall=(coref.recall + non_coref.recall) / 2.0,
        f1=(coref.f1 + non_coref.f1) / 2.0,
    )
    return {
        "rand_index": rand,
        "adjusted_rand": float(ari),
        "fowlkes_mallows": float(fm),
        "blanc": blanc,
    }


# ---------------------------------------------------------------------------
# Information-theoretic scores


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def _mutual_information(n_ij: np.ndarray, a: np.ndarray, b: np.ndarray, n: int) -> float:
    mi = 0.0
    rows, cols = np.nonzero(n_ij)
    for i, j in zip(rows, cols):
        nij = n_ij[i, j]
        mi += (nij / n) * math.log(n * nij / (a[i] * b[j]))
    return mi


def _expected_mi(a: np.ndarray, b: np.ndarray, n: int) -> float:
    """Expected MI under the permutation model (log-gamma evaluation)."""
    lg = math.lgamma
    emi = 0.0
    for ai in a:
        for bj in b:
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            for nij in range(lo, hi + 1):
                log_prob = (
                    lg(ai + 1)
                    + lg(bj + 1)
                    + lg(n - ai + 1)
                    + lg(n - bj + 1)
                    - lg(n + 1)
                    - lg(nij + 1)
                    - lg(ai - nij + 1)
                    - lg(bj - nij + 1)
                    - lg(n - ai - bj + nij + 1)
                )
                emi += (nij / n) * math.log(n * nij / (ai * bj)) * math.exp(log_prob)
    return emi


def v_measure(pred: Partition, gold: Partition) -> dict[str, float]:
    """Homogeneity, completeness, and their harmonic mean."""
    _check_ids(pred, gold)
    n_ij, a, b = _contingency(pred, gold)
    n = int(a.sum())
    h_gold = _entropy(a, n)
    h_pred = _entropy(b, n)
    mi = _mutual_information(n_ij, a, b, n)
    homogeneity = 1.0 if h_gold == 0.0 else mi / h_gold
    completeness = 1.0 if h_pred == 0.0 else mi / h_pred
    if homogeneity + completeness == 0.0:
        v = 0.0
    else:
        v = 2.0 * homogeneity * completeness / (homogeneity + completeness)
    return {"homogeneity": homogeneity, "completeness": completeness, "v_measure": v}


def adjusted_mutual_information(pred: Partition, gold: Partition) -> float:
    """AMI with max normalization: (MI - E[MI]) / (max(H) - E[MI])."""
    _check_ids(pred, gold)
    n_ij, a, b = _contingency(pred, gold)
    n = int(a.sum())
    if len(a) == len(b) == 1:
        return 1.0
    mi = _mutual_information(n_ij, a, b, n)
    emi = _expected_mi(a, b, n)
    h_gold = _entropy(a, n)
    h_pred = _entropy(b, n)
    denom = max(h_gold, h_pred) - emi
    if denom == 0.0:
        return 1.0 if mi == emi else 0.0
    return float((mi - emi) / denom)


def info_metrics(pred: Partition, gold: Partition) -> dict[str, object]:
    """V-measure, AMI, and the MUC link score in one call."""
    return {
        "v_measure": v_measure(pred, gold)["v_measure"],
        "adjusted_mutual_information": adjusted_mutual_information(pred, gold),
        "muc": muc(pred, gold),
    }


# ---------------------------------------------------------------------------
# Fragmentation


@dataclass(frozen=True)
class FragmentationReport:
    """How far the predicted cluster count overshoots the gold count."""

    pred_clusters: int
    gold_clusters: int

    @property
    def excess(self) -> int:
        return self.pred_clusters - self.gold_clusters

    def excess_reduction_vs(self, baseline_pred_clusters: int) -> float | None:
        """Fraction of a baseline's excess clusters eliminated by this run.

        None when the baseline itself has no excess (nothing to reduce).
        """
        baseline_excess = baseline_pred_clusters - self.gold_clusters
        if baseline_excess == 0:
            return None
        return 1.0 - self.excess / baseline_excess


def fragmentation_report(pred: Partition, gold: Partition) -> FragmentationReport:
    _check_ids(pred, gold)
    return FragmentationReport(
        pred_clusters=len(set(pred.values())),
        gold_clusters=len(set(gold.values())),
    )


# ---------------------------------------------------------------------------
# Bootstrap significance


@dataclass(frozen=True)
class BootstrapResult:
    mean_diff: float
    ci_low: float
    ci_high: float
    p_value: float


def bootstrap_f1_diff(
    pred_a: Partition,
    pred_b: Partition,
    gold: Partition,
    metric: Callable[[Partition, Partition], PRF] = bcubed,
    n_resamples: int = 1000,
    rng_seed: int = 0,
) -> BootstrapResult:
    """Percentile bootstrap over documents for metric(a) - metric(b).

    Documents are resampled with replacement; repeats are kept as distinct
    copies so cluster sizes reflect the resample weights.  The p-value is
    the two-sided tail fraction of resampled differences crossing zero.
    """
    _check_ids(pred_a, gold)
    _check_ids(pred_b, gold)
    ids = sorted(gold)
    rng = np.random.default_rng(rng_seed)
    diffs = np.empty(n_resamples)
    for r in range(n_resamples):
        draw = rng.integers(len(ids), size=len(ids))
        sub_a: dict[str, str] = {}
        sub_b: dict[str, str] = {}
        sub_g: dict[str, str] = {}
        for copy, idx in enumerate(draw):
            doc_id = ids[int(idx)]
            key = f"{doc_id}#{copy}"
            sub_a[key] = pred_a[doc_id]
            sub_b[key] = pred_b[doc_id]
            sub_g[key] = gold[doc_id]
        diffs[r] = metric(sub_a, sub_g).f1 - metric(sub_b, sub_g).f1
    lo, hi = np.percentile(diffs, [2.5, 97.5])
    tail = min(float(np.mean(diffs <= 0.0)), float(np.mean(diffs >= 0.0)))
    return BootstrapResult(
        mean_diff=float(diffs.mean()),
        ci_low=float(lo),
        ci_high=float(hi),
        p_value=min(1.0, 2.0 * tail),
    )


# ---------------------------------------------------------------------------
# Battery


METRIC_NAMES = (
    "bcubed",
    "ceaf_e",
    "ceaf_m",
    "muc",
    "blanc",
    "rand_index",
    "adjusted_rand",
    "fowlkes_mallows",
    "v_measure",
    "adjusted_mutual_information",
)


def evaluate_all(
    pred: Partition,
    gold: Partition,
    names: Sequence[str] | None = None,
) -> dict[str, object]:
    """Compute the requested metrics (all by default) plus cluster counts."""
    _check_ids(pred, gold)
    wanted = list(names) if names is not None else list(METRIC_NAMES)
    unknown = [n for n in wanted if n not in METRIC_NAMES]
    if unknown:
        raise ValueError(f"unknown metric names: {unknown}")
    out: dict[str, object] = {}
    pair_cache: dict[str, object] | None = None

    def pairs() -> dict[str, object]:
        nonlocal pair_cache
        if pair_cache is None:
            pair_cache = pairwise_metrics(pred, gold)
        return pair_cache

    for name in wanted:
        if name == "bcubed":
            out[name] = bcubed(pred, gold)
        elif name == "ceaf_e":
            out[name] = ceaf(pred, gold, phi="entity")
        elif name == "ceaf_m":
            out[name] = ceaf(pred, gold, phi="mention")
        elif name == "muc":
            out[name] = muc(pred, gold)
        elif name in ("blanc", "rand_index", "adjusted_rand", "fowlkes_mallows"):
            out[name] = pairs()[name]
        elif name == "v_measure":
            out[name] = v_measure(pred, gold)["v_measure"]
        elif name == "adjusted_mutual_information":
            out[name] = adjusted_mutual_information(pred, gold)
    frag = fragmentation_report(pred, gold)
    out["pred_clusters"] = frag.pred_clusters
    out["gold_clusters"] = frag.gold_clusters
    return out


def format_report(results: Mapping[str, object]) -> str:
    """Render evaluate_all output as aligned TSV-ish lines (percentages)."""
    lines = []
    for name, value in results.items():
        if isinstance(value, PRF):
            lines.append(
                f"{name}\tP={100 * value.precision:.2f}\t"
                f"R={100 * value.recall:.2f}\tF1={100 * value.f1:.2f}"
            )
        elif isinstance(value, float):
            lines.append(f"{name}\t{100 * value:.2f}")
        else:
            lines.append(f"{name}\t{value}")
    return "\n".join(lines)
