"""Sequential payment simulation over a live network."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ConfigError, InsufficientBalance, NoRoute, PCNError, ReplayMismatch
from .metrics import network_imbalance
from .network import Network
from .routing import WeightPolicy, select_route
from .workload import EndpointBinding, Workload

CSV_HEADER = ["index", "success", "hops", "cost", "amount"]


@dataclass(frozen=True)
class PaymentOutcome:
    index: int
    success: bool
    hops: int
    cost: int | None
    amount: int
    path: tuple[int, ...] = ()


@dataclass
class RunLog:
    outcomes: list[PaymentOutcome]
    samples: list[tuple[int, float]] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)
    final_imbalance: float = 0.0
    final_digest: str = ""

    def __len__(self) -> int:
        return len(self.outcomes)

    @property
    def successes(self) -> int:
        return sum(o.success for o in self.outcomes)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for o in self.outcomes:
            w.writerow([o.index, int(o.success), o.hops, "" if o.cost is None else o.cost, o.amount])
        return buf.getvalue()

    def sidecar(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "imbalance_samples": [[i, v] for i, v in self.samples],
            "final_imbalance": self.final_imbalance,
            "final_digest": self.final_digest,
            "payments": len(self.outcomes),
            "successes": self.successes,
        }

    def save(self, csv_path: str | Path, json_path: str | Path | None = None) -> None:
        csv_path = Path(csv_path)
        csv_path.write_text(self.to_csv())
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        json_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, csv_path: str | Path, json_path: str | Path | None = None) -> "RunLog":
        """Read an exported log. Paths are not part of the CSV, so a loaded log cannot be replayed."""
        csv_path = Path(csv_path)
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        with open(csv_path, newline="") as f:
            rows = list(csv.DictReader(f))
        outcomes = [
            PaymentOutcome(int(r["index"]), r["success"] == "1", int(r["hops"]),
                           int(r["cost"]) if r["cost"] else None, int(r["amount"]))
            for r in rows
        ]
        side = json.loads(json_path.read_text())
        return cls(outcomes, [(int(i), float(v)) for i, v in side["imbalance_samples"]],
                   side["config"], side["final_imbalance"], side["final_digest"])


def run(network: Network, policy: WeightPolicy, workload: Workload,
        binding: EndpointBinding, sample_every: int | None = 100,
        config: dict[str, Any] | None = None, check_failures: bool = False) -> RunLog:
    """Route and settle every payment of ``workload`` in order, mutating ``network``.

    Ingress nodes equal to a payment's destination are skipped. Imbalance is
    sampled after every ``sample_every`` payments (``None`` or 0 disables).
    With ``check_failures`` the balances around each failed payment are
    compared to prove the failure left no trace.
    """
    missing = sorted({p.customer for p in workload.payments if p.customer not in binding})
    if missing:
        raise ConfigError(f"binding lacks customers {missing[:10]}")
    outcomes = []
    samples = []
    for i, p in enumerate(workload.payments):
        ingress = [s for s in binding[p.customer] if s != p.dst]
        if not ingress:
            raise ConfigError(f"payment {i}: destination {p.dst} is the customer's only ingress")
        before = list(network._bal) if check_failures else None
        try:
            route = select_route(network, policy, ingress, p.dst, p.amount)
        except NoRoute:
            if before is not None and before != network._bal:
                raise PCNError(f"payment {i} failed but changed balances")
            outcomes.append(PaymentOutcome(i, False, 0, None, p.amount))
        else:
            try:
                network.apply_transfer(route.path, p.amount)
            except InsufficientBalance as exc:
                raise PCNError(f"payment {i}: pruned route was infeasible ({exc})") from exc
            outcomes.append(PaymentOutcome(i, True, route.hops, route.cost, p.amount, route.path))
        if sample_every and (i + 1) % sample_every == 0:
            samples.append((i + 1, network_imbalance(network)))
    return RunLog(outcomes, samples, dict(config or {}),
                  network_imbalance(network) if network.channel_count else 0.0,
                  network.digest())


def replay(runlog: RunLog, network_initial: Network) -> Network:
    """Re-apply the logged successful paths to a copy of the initial network."""
    net = network_initial.copy()
    sample_at = dict(runlog.samples)
    for o in runlog.outcomes:
        if o.success:
            if len(o.path) != o.hops + 1:
                raise ReplayMismatch(f"payment {o.index}: path does not match {o.hops} hops")
            try:
                net.apply_transfer(o.path, o.amount)
            except PCNError as exc:
                raise ReplayMismatch(f"payment {o.index}: {exc}") from exc
        expected = sample_at.get(o.index + 1)
        if expected is not None and network_imbalance(net) != expected:
            raise ReplayMismatch(f"imbalance diverges after payment {o.index + 1}")
    if runlog.final_digest and net.digest() != runlog.final_digest:
        raise ReplayMismatch("final network state diverges from the log")
    return net

