"""Balance and connectivity metrics over networks and run logs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path as _csgraph_shortest_path

from .errors import EmptyLog, InvalidParams

if TYPE_CHECKING:
    from .engine import RunLog
    from .network import Network


@dataclass(frozen=True)
class Histogram:
    bin_width: int
    counts: dict[int, int]

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def cdf(self) -> list[tuple[int, float]]:
        """``(bin upper bound, fraction of channels below it)`` pairs."""
        total = self.total
        acc = 0
        out = []
        for lo in sorted(self.counts):
            acc += self.counts[lo]
            out.append((lo + self.bin_width, acc / total if total else 0.0))
        return out

    def to_csv(self) -> str:
        return series_csv(sorted(self.counts.items()), ("bin_lo", "count"))


@dataclass(frozen=True)
class PathStats:
    average: float | None
    reachability: float


@dataclass(frozen=True)
class Diameter:
    hops: int | None
    all_reachable: bool


def network_imbalance(network: Network) -> float:
    """Mean absolute deviation of the directional balances from their mean."""
    b = network.balances()
    if b.size == 0:
        raise InvalidParams("imbalance needs at least one channel")
    return float(np.abs(b - b.mean()).mean())


def capacity_histogram(network: Network, bin_width: int = 10) -> Histogram:
    if bin_width <= 0:
        raise InvalidParams("bin_width must be positive")
    lows, counts = np.unique(network.balances() // bin_width * bin_width, return_counts=True)
    return Histogram(bin_width, dict(zip(lows.tolist(), counts.tolist())))


def count_below(network: Network, threshold: int) -> int:
    return int((network.balances() < threshold).sum())


def fraction_within(network: Network, lo: int, hi: int) -> float:
    b = network.balances()
    return float(((b >= lo) & (b <= hi)).mean())


def moving_avg_hops(runlog: RunLog, window: int = 100) -> list[tuple[int, float]]:
    """Trailing mean hop count of successful payments, one point per payment index.

    Point ``i`` (1-based count of processed payments, ``i >= window``)
    averages the successes among payments ``i-window+1 .. i``; windows with no
    success are skipped. A window longer than the log yields one point over
    the whole log.
    """
    if window < 1:
        raise InvalidParams("window must be at least 1")
    n = len(runlog.outcomes)
    if n == 0:
        return []
    hops = np.array([o.hops for o in runlog.outcomes], dtype=float)
    ok = np.array([o.success for o in runlog.outcomes], dtype=float)
    if window > n:
        return [(n, float(hops.sum() / ok.sum()))] if ok.sum() else []
    csum_h = np.concatenate([[0.0], np.cumsum(hops)])
    csum_s = np.concatenate([[0.0], np.cumsum(ok)])
    ends = np.arange(window, n + 1)
    sh = csum_h[ends] - csum_h[ends - window]
    ss = csum_s[ends] - csum_s[ends - window]
    keep = ss > 0
    return list(zip(ends[keep].tolist(), (sh[keep] / ss[keep]).tolist()))


def feasible_hop_matrix(network: Network, amount: int) -> np.ndarray:
    """All-pairs hop distances over edges holding >= ``amount`` (inf if unreachable)."""
    if amount < 0:
        raise InvalidParams("amount must be non-negative")
    b = network.balances()
    edges = np.array(network.directed_edges(), dtype=np.int64).reshape(-1, 2)
    keep = b >= amount
    graph = csr_matrix((np.ones(int(keep.sum())), (edges[keep, 0], edges[keep, 1])),
                       shape=(network.n, network.n))
    return _csgraph_shortest_path(graph, directed=True, unweighted=True)


def _off_diagonal(dist: np.ndarray) -> np.ndarray:
    return dist[~np.eye(dist.shape[0], dtype=bool)]


def all_pairs_path_length(network: Network, amount: int) -> PathStats:
    """Mean hop count over reachable ordered pairs and the reachable fraction."""
    d = _off_diagonal(feasible_hop_matrix(network, amount))
    if d.size == 0:
        return PathStats(None, 0.0)
    finite = np.isfinite(d)
    reach = float(finite.mean())
    return PathStats(float(d[finite].mean()) if finite.any() else None, reach)


def diameter(network: Network, amount: int) -> Diameter:
    """Largest hop distance among reachable ordered pairs.

    ``all_reachable`` is False when some ordered pair has no feasible path;
    ``hops`` is None when no pair is reachable at all.
    """
    d = _off_diagonal(feasible_hop_matrix(network, amount))
    finite = np.isfinite(d)
    hops = int(d[finite].max()) if finite.any() else None
    return Diameter(hops, bool(finite.all()))


def success_ratio(runlog: RunLog) -> float:
    if not runlog.outcomes:
        raise EmptyLog("success ratio of an empty log")
    return runlog.successes / len(runlog.outcomes)


def mean_hops(runlog: RunLog) -> float | None:
    hops = [o.hops for o in runlog.outcomes if o.success]
    return sum(hops) / len(hops) if hops else None


@dataclass
class MetricsReport:
    histogram: Histogram
    cdf: list[tuple[int, float]]
    imbalance_timeline: list[tuple[int, float]]
    moving_avg_hops: list[tuple[int, float]]
    apl_by_amount: list[tuple[int, float | None]]
    diameter_by_amount: list[tuple[int, int | None]]
    reachability_by_amount: list[tuple[int, float]]
    success_ratio: float | None
    mean_hops: float | None
    final_imbalance: float

    def tables(self) -> dict[str, str]:
        """CSV text for every series, keyed by a file stem."""
        return {
            "histogram": self.histogram.to_csv(),
            "cdf": series_csv(self.cdf, ("bin_hi", "value")),
            "imbalance": series_csv(self.imbalance_timeline),
            "moving_avg_hops": series_csv(self.moving_avg_hops),
            "apl_by_amount": series_csv(self.apl_by_amount, ("amount", "value")),
            "diameter_by_amount": series_csv(self.diameter_by_amount, ("amount", "value")),
            "reachability_by_amount": series_csv(self.reachability_by_amount, ("amount", "value")),
        }


def report(network: Network, runlog: RunLog, amounts: Sequence[int] = (10, 20, 30, 40, 50),
           window: int = 100, bin_width: int = 10) -> MetricsReport:
    """Every metric for the final network state of one run."""
    hist = capacity_histogram(network, bin_width)
    apl, dia, reach = [], [], []
    for a in amounts:
        stats = all_pairs_path_length(network, a)
        apl.append((a, stats.average))
        reach.append((a, stats.reachability))
        dia.append((a, diameter(network, a).hops))
    return MetricsReport(
        histogram=hist,
        cdf=hist.cdf(),
        imbalance_timeline=list(runlog.samples),
        moving_avg_hops=moving_avg_hops(runlog, window),
        apl_by_amount=apl,
        diameter_by_amount=dia,
        reachability_by_amount=reach,
        success_ratio=success_ratio(runlog) if runlog.outcomes else None,
        mean_hops=mean_hops(runlog),
        final_imbalance=network_imbalance(network),
    )


def series_csv(rows: Iterable[tuple], header: tuple[str, str] = ("index", "value")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for a, b in rows:
        w.writerow([a, "" if b is None else b])
    return buf.getvalue()
