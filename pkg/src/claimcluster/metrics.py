"""External cluster-validity metrics computed exactly from a contingency
table: adjusted Rand index, adjusted mutual information, homogeneity,
completeness, V-measure, and purity.

Conventions: pair counting uses exact (arbitrary precision) integers;
mutual information uses natural logarithms; AMI is normalized by the
arithmetic mean of the entropies with the expected mutual information
computed term-by-term in log-space factorials, which stays stable for
clusters up to about 1e5 items. Degenerate denominators resolve to 1.0
for identical partitions and 0.0 otherwise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from scipy.special import gammaln

from .core import Partition
from .errors import IdSetMismatch, TooFewItems

AMI_CONVENTION = "arithmetic mean, natural log"


@dataclass
class ContingencyTable:
    counts: dict[tuple[str, str], int]
    row_marginals: dict[str, int]  # predicted clusters
    col_marginals: dict[str, int]  # true clusters
    n: int

    def is_identical_grouping(self) -> bool:
        """True when both partitions induce the same grouping, i.e. every
        nonzero cell exhausts both its row and its column."""
        return all(
            c == self.row_marginals[p] == self.col_marginals[t]
            for (p, t), c in self.counts.items()
        )


def contingency(pred: Partition, truth: Partition) -> ContingencyTable:
    pred_ids = pred.ids()
    truth_ids = truth.ids()
    if pred_ids != truth_ids:
        only_pred = pred_ids - truth_ids
        only_truth = truth_ids - pred_ids
        raise IdSetMismatch(
            f"partitions cover different ids "
            f"(only in predicted: {sorted(only_pred)[:10]}, "
            f"only in truth: {sorted(only_truth)[:10]})",
            only_pred,
            only_truth,
        )
    counts: dict[tuple[str, str], int] = {}
    rows: dict[str, int] = {}
    cols: dict[str, int] = {}
    for cid in pred_ids:
        p = pred.assignment[cid]
        t = truth.assignment[cid]
        counts[(p, t)] = counts.get((p, t), 0) + 1
        rows[p] = rows.get(p, 0) + 1
        cols[t] = cols.get(t, 0) + 1
    return ContingencyTable(counts, rows, cols, len(pred_ids))


def adjusted_rand_index(table: ContingencyTable) -> float:
    if table.n < 2:
        raise TooFewItems("adjusted Rand index needs at least 2 items")
    index = sum(math.comb(c, 2) for c in table.counts.values())
    sum_rows = sum(math.comb(a, 2) for a in table.row_marginals.values())
    sum_cols = sum(math.comb(b, 2) for b in table.col_marginals.values())
    pairs = math.comb(table.n, 2)
    # everything scaled by 2*pairs so the comparison stays in exact integers
    numerator = 2 * (index * pairs - sum_rows * sum_cols)
    denominator = (sum_rows + sum_cols) * pairs - 2 * sum_rows * sum_cols
    if denominator == 0:
        return 1.0 if table.is_identical_grouping() else 0.0
    return numerator / denominator


def _entropy(marginals: dict[str, int], n: int) -> float:
    return -sum((c / n) * math.log(c / n) for c in marginals.values() if c > 0)


def _mutual_information(table: ContingencyTable) -> float:
    n = table.n
    mi = 0.0
    for (p, t), c in table.counts.items():
        if c == 0:
            continue
        mi += (c / n) * math.log(n * c / (table.row_marginals[p] * table.col_marginals[t]))
    return mi


def _expected_mutual_information(table: ContingencyTable) -> float:
    """Exact hypergeometric expectation of MI, in log-space factorials."""
    n = table.n
    log_fact_n = float(gammaln(n + 1))
    emi = 0.0
    for a in table.row_marginals.values():
        for b in table.col_marginals.values():
            base = (
                float(gammaln(a + 1))
                + float(gammaln(b + 1))
                + float(gammaln(n - a + 1))
                + float(gammaln(n - b + 1))
                - log_fact_n
            )
            lo = max(1, a + b - n)
            hi = min(a, b)
            for nij in range(lo, hi + 1):
                log_weight = base - (
                    float(gammaln(nij + 1))
                    + float(gammaln(a - nij + 1))
                    + float(gammaln(b - nij + 1))
                    + float(gammaln(n - a - b + nij + 1))
                )
                emi += (nij / n) * math.log(n * nij / (a * b)) * math.exp(log_weight)
    return emi


def adjusted_mutual_info(table: ContingencyTable) -> float:
    if table.n < 1:
        raise TooFewItems("adjusted mutual information needs at least 1 item")
    h_pred = _entropy(table.row_marginals, table.n)
    h_true = _entropy(table.col_marginals, table.n)
    mi = _mutual_information(table)
    emi = _expected_mutual_information(table)
    denom = (h_pred + h_true) / 2.0 - emi
    if denom == 0.0:
        return 1.0 if table.is_identical_grouping() else 0.0
    return (mi - emi) / denom


def homogeneity_completeness_v(table: ContingencyTable) -> tuple[float, float, float]:
    if table.n < 1:
        raise TooFewItems("entropy metrics need at least 1 item")
    n = table.n
    h_true = _entropy(table.col_marginals, n)
    h_pred = _entropy(table.row_marginals, n)
    h_true_given_pred = -sum(
        (c / n) * math.log(c / table.row_marginals[p])
        for (p, _t), c in table.counts.items()
        if c > 0
    )
    h_pred_given_true = -sum(
        (c / n) * math.log(c / table.col_marginals[t])
        for (_p, t), c in table.counts.items()
        if c > 0
    )
    h = 1.0 if h_true == 0.0 else 1.0 - h_true_given_pred / h_true
    c = 1.0 if h_pred == 0.0 else 1.0 - h_pred_given_true / h_pred
    v = 0.0 if h + c == 0.0 else 2.0 * h * c / (h + c)
    return h, c, v


def purity(table: ContingencyTable) -> float:
    if table.n < 1:
        raise TooFewItems("purity needs at least 1 item")
    best: dict[str, int] = {}
    for (p, _t), c in table.counts.items():
        if c > best.get(p, 0):
            best[p] = c
    return sum(best.values()) / table.n


@dataclass
class MetricReport:
    algorithm: str
    n_clusters: int
    ari: float
    ami: float
    homogeneity: float
    completeness: float
    v_measure: float
    purity: float
    ami_convention: str = field(default=AMI_CONVENTION)

    def to_json(self) -> str:
        return json.dumps(
            {
                "algorithm": self.algorithm,
                "n_clusters": self.n_clusters,
                "ari": self.ari,
                "ami": self.ami,
                "homogeneity": self.homogeneity,
                "completeness": self.completeness,
                "v_measure": self.v_measure,
                "purity": self.purity,
                "ami_convention": self.ami_convention,
            },
            indent=2,
        )

    def table_row(self) -> str:
        return (
            f"{self.algorithm:<24}{self.n_clusters:>10}"
            f"{self.ari:>8.3f}{self.ami:>8.3f}{self.homogeneity:>8.3f}"
            f"{self.completeness:>8.3f}{self.v_measure:>10.3f}{self.purity:>8.3f}"
        )

    @staticmethod
    def table_header() -> str:
        return (
            f"{'Approach':<24}{'#Clusters':>10}"
            f"{'ARI':>8}{'AMI':>8}{'HMG':>8}{'CMP':>8}{'V-Measure':>10}{'Purity':>8}"
        )


def evaluate(pred: Partition, truth: Partition, algorithm: str = "pipeline") -> MetricReport:
    table = contingency(pred, truth)
    h, c, v = homogeneity_completeness_v(table)
    return MetricReport(
        algorithm=algorithm,
        n_clusters=pred.n_clusters(),
        ari=adjusted_rand_index(table),
        ami=adjusted_mutual_info(table),
        homogeneity=h,
        completeness=c,
        v_measure=v,
        purity=purity(table),
    )
