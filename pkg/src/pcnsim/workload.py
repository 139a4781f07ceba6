"""Payment sequences and customer ingress bindings.

Customer ``i`` is the IoT device whose home store is node ``i``; with a
single connection it pays through node ``i`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import rng as _rng
from .errors import InvalidParams
from .network import Network

MAX_ROUND_DRAWS = 10_000


class Payment(NamedTuple):
    customer: int
    dst: int
    amount: int


@dataclass
class Workload:
    payments: list[Payment]
    kind: str
    rate: float = 0.0
    seed: int = 0
    amount_lo: int = 5
    amount_hi: int = 15

    def __len__(self) -> int:
        return len(self.payments)

    def sent_counts(self, n: int) -> np.ndarray:
        return np.bincount([p.customer for p in self.payments], minlength=n)

    def received_counts(self, n: int) -> np.ndarray:
        return np.bincount([p.dst for p in self.payments], minlength=n)

    def with_amounts(self, seed: int, lo: int | None = None, hi: int | None = None) -> "Workload":
        """Same senders and receivers, amounts redrawn uniformly from [lo, hi]."""
        lo = self.amount_lo if lo is None else lo
        hi = self.amount_hi if hi is None else hi
        amounts = _draw_amounts(len(self.payments), lo, hi, _rng.make_rng(seed, _rng.AMOUNTS))
        payments = [Payment(c, d, a) for (c, d, _), a in zip(self.payments, amounts)]
        return replace(self, payments=payments, amount_lo=lo, amount_hi=hi)

    def to_text(self) -> str:
        lines = [f"wl v1 {self.kind} {len(self.payments)} {self.rate:g} {self.seed}"]
        lines += [f"{p.customer} {p.dst} {p.amount}" for p in self.payments]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Workload":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0][:2] != ["wl", "v1"] or len(rows[0]) != 6:
            raise InvalidParams("missing 'wl v1 <kind> <count> <rate> <seed>' header")
        _, _, kind, count, rate, seed = rows[0]
        try:
            payments = [Payment(int(c), int(d), int(a)) for c, d, a in rows[1:]]
        except ValueError:
            bad = next(r for r in rows[1:] if len(r) != 3 or not all(x.lstrip("-").isdigit() for x in r))
            raise InvalidParams(f"bad payment line: {' '.join(bad)}") from None
        if len(payments) != int(count):
            raise InvalidParams(f"header promises {count} payments, found {len(payments)}")
        amounts = [p.amount for p in payments] or [0]
        return cls(payments, kind, float(rate), int(seed), min(amounts), max(amounts))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Workload":
        return cls.from_text(Path(path).read_text())


@dataclass
class EndpointBinding:
    k: int
    ingress: dict[int, list[int]] = field(default_factory=dict)

    def __getitem__(self, customer: int) -> list[int]:
        return self.ingress[customer]

    def __contains__(self, customer: int) -> bool:
        return customer in self.ingress

    def to_text(self) -> str:
        lines = [f"bind v1 {self.k}"]
        for c in sorted(self.ingress):
            lines.append(" ".join(str(x) for x in [c, *self.ingress[c]]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "EndpointBinding":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0][:2] != ["bind", "v1"] or len(rows[0]) != 3:
            raise InvalidParams("missing 'bind v1 <k>' header")
        k = int(rows[0][2])
        ingress = {}
        for row in rows[1:]:
            nodes = [int(x) for x in row[1:]]
            if not nodes or len(set(nodes)) != len(nodes):
                raise InvalidParams(f"bad binding line: {' '.join(row)}")
            ingress[int(row[0])] = nodes
        return cls(k, ingress)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "EndpointBinding":
        return cls.from_text(Path(path).read_text())


def _draw_amounts(count: int, lo: int, hi: int, gen: np.random.Generator) -> list[int]:
    if lo < 0 or hi < lo:
        raise InvalidParams(f"amount range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
    return gen.integers(lo, hi, size=count, endpoint=True).tolist()


def _derangement(n: int, gen: np.random.Generator) -> list[int]:
    for _ in range(MAX_ROUND_DRAWS):
        perm = gen.permutation(n)
        if not np.any(perm == np.arange(n)):
            return perm.tolist()
    raise InvalidParams(f"could not draw a fixed-point-free permutation of {n} nodes")


def gen_balanced(n: int, per_node: int, amount_lo: int, amount_hi: int, seed: int) -> Workload:
    """Every node sends and receives exactly ``per_node`` payments.

    Each round pairs senders to receivers with a random derangement; the
    rounds are then concatenated and shuffled.
    """
    if n < 2:
        raise InvalidParams("a balanced workload needs at least two nodes")
    if per_node < 1:
        raise InvalidParams("per_node must be at least 1")
    gen = _rng.make_rng(seed, _rng.WORKLOAD)
    pairs = []
    for _ in range(per_node):
        perm = _derangement(n, gen)
        pairs.extend((i, perm[i]) for i in range(n))
    order = gen.permutation(len(pairs))
    amounts = _draw_amounts(len(pairs), amount_lo, amount_hi, gen)
    payments = [Payment(pairs[j][0], pairs[j][1], a) for j, a in zip(order.tolist(), amounts)]
    return Workload(payments, "balanced", 0.0, seed, amount_lo, amount_hi)


def _adjust(counts: list[int], target: int, order: Sequence[int]) -> None:
    # Walk nodes round-robin, nudging counts by one until they sum to target.
    diff = target - sum(counts)
    i = 0
    while diff:
        node = order[i % len(order)]
        if diff > 0:
            counts[node] += 1
            diff -= 1
        elif counts[node] > 0:
            counts[node] -= 1
            diff += 1
        i += 1


def skewed_counts(n: int, total: int, rate: float, seed: int) -> tuple[list[int], list[int], list[int]]:
    """Per-node send and receive counts for a skewed workload.

    Returns ``(sent, received, surplus_nodes)``. Surplus nodes send
    ``ceil(base*(1+rate))`` and receive ``floor(base*(1-rate))``; the other
    half mirrors this. ``base = total / n``.
    """
    gen = _rng.make_rng(seed, _rng.WORKLOAD)
    perm = gen.permutation(n).tolist()
    surplus = sorted(perm[: n // 2])
    is_surplus = [False] * n
    for v in surplus:
        is_surplus[v] = True
    base = total / n
    # round first so 50 * 1.1 counts as 55, not 56
    hi = math.ceil(round(base * (1 + rate), 9))
    lo = math.floor(round(base * (1 - rate), 9))
    sent = [hi if is_surplus[v] else lo for v in range(n)]
    received = [lo if is_surplus[v] else hi for v in range(n)]
    _adjust(sent, total, perm)
    _adjust(received, total, perm[::-1])
    return sent, received, surplus


def _match(sent: list[int], received: list[int], gen: np.random.Generator) -> list[tuple[int, int]]:
    senders = np.repeat(np.arange(len(sent)), sent)
    receivers = gen.permutation(np.repeat(np.arange(len(received)), received))
    total = len(senders)
    for i in range(total):
        if senders[i] != receivers[i]:
            continue
        # swap with a random slot that fixes both positions
        for _ in range(MAX_ROUND_DRAWS):
            j = int(gen.integers(total))
            if senders[j] != receivers[i] and senders[i] != receivers[j]:
                receivers[i], receivers[j] = receivers[j], receivers[i]
                break
        else:
            raise InvalidParams("cannot pair senders and receivers without self-payments")
    return list(zip(senders.tolist(), receivers.tolist()))


def gen_skewed(n: int, total: int, rate: float, amount_lo: int, amount_hi: int,
               seed: int) -> Workload:
    """Half the nodes send more than they receive by ``rate``; the other half less."""
    if n < 2 or n % 2:
        raise InvalidParams(f"a skewed workload needs an even node count >= 2, got {n}")
    if not 0 < rate <= 0.5:
        raise InvalidParams(f"imbalance rate must lie in (0, 0.5], got {rate}")
    if total < n:
        raise InvalidParams(f"total ({total}) must be at least n ({n})")
    sent, received, _ = skewed_counts(n, total, rate, seed)
    gen = _rng.make_rng(seed, _rng.WORKLOAD, 1)
    pairs = _match(sent, received, gen)
    order = gen.permutation(len(pairs)).tolist()
    amounts = _draw_amounts(len(pairs), amount_lo, amount_hi, gen)
    payments = [Payment(pairs[j][0], pairs[j][1], a) for j, a in zip(order, amounts)]
    return Workload(payments, "skewed", rate, seed, amount_lo, amount_hi)


def assign_connections(customers: int, k: int, network: Network, seed: int) -> EndpointBinding:
    """Bind each customer to ``k`` distinct ingress nodes.

    The customer's home node comes first; the other ``k - 1`` are drawn
    uniformly without replacement from the remaining nodes.
    """
    n = network.n
    if not 1 <= k <= n:
        raise InvalidParams(f"connections must lie in [1, {n}], got {k}")
    if not 1 <= customers <= n:
        raise InvalidParams(f"customers must lie in [1, {n}], got {customers}")
    gen = _rng.make_rng(seed, _rng.BINDING)
    ingress = {}
    for c in range(customers):
        others = np.delete(np.arange(n), c)
        extra = gen.choice(others, size=k - 1, replace=False).tolist() if k > 1 else []
        ingress[c] = [c, *extra]
    return EndpointBinding(k, ingress)
