"""Edge weight policies and least-cost feasible routing."""

from __future__ import annotations

from dataclasses import dataclass, field
from heapq import heappop, heappush
from typing import Sequence, Union

from . import rng as _rng
from .errors import InvalidParams, NoRoute
from .network import Network


@dataclass(frozen=True)
class CommonWeight:
    """Balance-aware weight ``(mc - balance)**2`` shared by every node.

    ``mc`` is the network-wide maximum channel capacity; it must be at least
    the largest directional balance so cheaper edges are always the ones
    holding more balance.
    """

    mc: int
    name = "common"

    def edge_weights(self, network: Network) -> list[int]:
        mc = self.mc
        bal = network._bal
        if bal and max(bal) > mc:
            raise InvalidParams(f"balance {max(bal)} exceeds MC={mc}")
        return [(mc - b) * (mc - b) for b in bal]


@dataclass(frozen=True)
class FixedRandom:
    """Balance-oblivious baseline: each directional edge keeps one random weight.

    Weights are integers drawn uniformly from ``[lo, hi]`` by edge index, so
    they are fixed once the seed is chosen and never react to balances.
    """

    seed: int
    lo: int = 1
    hi: int = 100
    name = "fixed-random"
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise InvalidParams(f"weight range must satisfy 0 <= lo <= hi, got [{self.lo}, {self.hi}]")

    def edge_weights(self, network: Network) -> list[int]:
        m = network.directional_count
        w = self._cache.get(m)
        if w is None:
            gen = _rng.make_rng(self.seed, _rng.POLICY)
            w = gen.integers(self.lo, self.hi, size=m, endpoint=True).tolist()
            self._cache[m] = w
        return w


WeightPolicy = Union[CommonWeight, FixedRandom]


def make_policy(name: str, *, mc: int | None = None, seed: int = 0,
                lo: int = 1, hi: int = 100) -> WeightPolicy:
    if name == "common":
        if mc is None:
            raise InvalidParams("common weight policy needs MC")
        return CommonWeight(int(mc))
    if name == "fixed-random":
        return FixedRandom(int(seed), int(lo), int(hi))
    raise InvalidParams(f"unknown policy {name!r} (expected 'common' or 'fixed-random')")


@dataclass(frozen=True)
class RouteResult:
    path: tuple[int, ...]
    cost: int

    @property
    def hops(self) -> int:
        return len(self.path) - 1


def compute_weight(policy: WeightPolicy, network: Network, u: int, v: int) -> int:
    e = network.edge_index(u, v)
    if isinstance(policy, CommonWeight):
        b = network._bal[e]
        if b > policy.mc:
            raise InvalidParams(f"balance {b} exceeds MC={policy.mc}")
        return (policy.mc - b) ** 2
    return policy.edge_weights(network)[e]


def _keyed_weights(policy: WeightPolicy, network: Network) -> list[int]:
    """Per-edge ``weight * n + 1`` so one integer sum orders by (cost, hops).

    Cached on the network; CommonWeight entries are refreshed for the edges
    touched by transfers since the last call, which equals recomputing every
    weight from the live balances.
    """
    scale = network.n
    cache = network._weight_cache.get(policy)
    if isinstance(policy, CommonWeight):
        if cache is None or cache[0] != network._generation:
            keyed = [w * scale + 1 for w in policy.edge_weights(network)]
            cache = [network._generation, len(network._touched), keyed]
            network._weight_cache[policy] = cache
            return keyed
        keyed = cache[2]
        touched = network._touched
        if cache[1] < len(touched):
            mc = policy.mc
            bal = network._bal
            for e in touched[cache[1]:]:
                for x in (e, e ^ 1):
                    b = bal[x]
                    if b > mc:
                        raise InvalidParams(f"balance {b} exceeds MC={mc}")
                    keyed[x] = (mc - b) * (mc - b) * scale + 1
            cache[1] = len(touched)
        return keyed
    if cache is None:
        cache = [w * scale + 1 for w in policy.edge_weights(network)]
        network._weight_cache[policy] = cache
    return cache


def _dijkstra(network: Network, keyed: Sequence[int], src: int, dst: int,
              amount: int) -> RouteResult | None:
    # keyed weights sum to cost * n + hops; equal keys fall back to the
    # smaller predecessor id.
    n = network.n
    adj = network._adj
    bal = network._bal
    key = [None] * n
    pred = [-1] * n
    done = [False] * n
    key[src] = 0
    heap = [(0, src)]
    while heap:
        k, u = heappop(heap)
        if done[u]:
            continue
        done[u] = True
        if u == dst:
            break
        for v, e in adj[u]:
            if done[v] or bal[e] < amount:
                continue
            nk = k + keyed[e]
            old = key[v]
            if old is None or nk < old or (nk == old and u < pred[v]):
                key[v] = nk
                pred[v] = u
                heappush(heap, (nk, v))
    if not done[dst]:
        return None
    path = [dst]
    while path[-1] != src:
        path.append(pred[path[-1]])
    path.reverse()
    return RouteResult(tuple(path), key[dst] // n)


def shortest_path(network: Network, policy: WeightPolicy, src: int, dst: int,
                  amount: int) -> RouteResult:
    """Least-weight path from ``src`` to ``dst`` using only edges holding >= ``amount``."""
    if src == dst:
        raise InvalidParams("source and destination must differ")
    if amount < 0:
        raise InvalidParams("amount must be non-negative")
    found = _dijkstra(network, _keyed_weights(policy, network), src, dst, amount)
    if found is None:
        raise NoRoute(f"no feasible route {src}->{dst} for amount {amount}")
    return found


def select_route(network: Network, policy: WeightPolicy, ingress: Sequence[int],
                 dst: int, amount: int) -> RouteResult:
    """Cheapest route to ``dst`` over all ingress points.

    Weights are recomputed from the live balances once, then a shortest path
    is searched from every ingress node; the lowest cost wins and the earlier
    ingress wins a tie.
    """
    if not ingress:
        raise InvalidParams("ingress list is empty")
    if dst in ingress:
        raise InvalidParams(f"destination {dst} is one of the ingress nodes")
    if amount < 0:
        raise InvalidParams("amount must be non-negative")
    keyed = _keyed_weights(policy, network)
    best = None
    for s in ingress:
        found = _dijkstra(network, keyed, s, dst, amount)
        if found is not None and (best is None or found.cost < best.cost):
            best = found
    if best is None:
        raise NoRoute(f"no ingress in {list(ingress)} reaches {dst} for amount {amount}")
    return best
