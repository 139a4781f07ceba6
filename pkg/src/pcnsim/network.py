"""Payment channel network topology and balance state.

A channel between ``u < v`` owns two directional edges. Directional edge
``2*c`` carries the spendable balance ``u -> v`` of channel ``c`` and edge
``2*c + 1`` the balance ``v -> u``. Balances are integer currency units.
"""

from __future__ import annotations

import hashlib
from collections import deque
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import rng as _rng
from .errors import GenerationFailed, InsufficientBalance, InvalidParams, NoSuchChannel

MAX_GENERATION_ATTEMPTS = 1000


class Network:
    """Undirected channel graph with per-direction balances."""

    def __init__(self, n: int, edges: Iterable[tuple[int, int]]):
        if n < 1:
            raise InvalidParams(f"node count must be positive, got {n}")
        self.n = n
        ends: list[tuple[int, int]] = []
        seen: set[tuple[int, int]] = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidParams(f"self-channel on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise InvalidParams(f"channel ({u}, {v}) outside [0, {n})")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise InvalidParams(f"duplicate channel {key}")
            seen.add(key)
            ends.append(key)
        ends.sort()
        self._ends = ends
        self._bal = [0] * (2 * len(ends))
        self._index: dict[tuple[int, int], int] = {}
        self._head: list[int] = [0] * (2 * len(ends))
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for c, (u, v) in enumerate(ends):
            self._index[(u, v)] = 2 * c
            self._index[(v, u)] = 2 * c + 1
            self._head[2 * c] = v
            self._head[2 * c + 1] = u
            adj[u].append((v, 2 * c))
            adj[v].append((u, 2 * c + 1))
        for row in adj:
            row.sort()
        self._adj = adj
        self._reset_tracking()

    def _reset_tracking(self) -> None:
        # Routing caches per-edge weights; transfers log the edges they touch
        # so caches refresh only those, any other write bumps the generation.
        self._generation = 0
        self._touched: list[int] = []
        self._weight_cache: dict = {}

    # -- structure --

    @property
    def channels(self) -> list[tuple[int, int]]:
        return list(self._ends)

    @property
    def channel_count(self) -> int:
        return len(self._ends)

    @property
    def directional_count(self) -> int:
        return 2 * len(self._ends)

    def neighbors(self, u: int) -> list[int]:
        return [v for v, _ in self._adj[u]]

    def degree(self, u: int) -> int:
        return len(self._adj[u])

    def has_channel(self, u: int, v: int) -> bool:
        return (u, v) in self._index

    def edge_index(self, u: int, v: int) -> int:
        """Index of the directional edge ``u -> v`` in :meth:`balances`."""
        try:
            return self._index[(u, v)]
        except KeyError:
            raise NoSuchChannel(f"no channel between {u} and {v}") from None

    def directed_edges(self) -> list[tuple[int, int]]:
        """``(from, to)`` pairs in directional-index order."""
        out = []
        for u, v in self._ends:
            out.append((u, v))
            out.append((v, u))
        return out

    def is_connected(self) -> bool:
        if self.n == 1:
            return True
        seen = [False] * self.n
        seen[0] = True
        queue = deque([0])
        count = 1
        while queue:
            u = queue.popleft()
            for v, _ in self._adj[u]:
                if not seen[v]:
                    seen[v] = True
                    count += 1
                    queue.append(v)
        return count == self.n

    # -- balances --

    def directional_balance(self, u: int, v: int) -> int:
        return self._bal[self.edge_index(u, v)]

    def set_channel_balance(self, u: int, v: int, balance_uv: int, balance_vu: int) -> None:
        """Fund one channel explicitly (both directions)."""
        if balance_uv < 0 or balance_vu < 0:
            raise InvalidParams("balances must be non-negative")
        self._bal[self.edge_index(u, v)] = int(balance_uv)
        self._bal[self.edge_index(v, u)] = int(balance_vu)
        self._generation += 1

    def set_balances(self, balances: Sequence[int]) -> None:
        values = [int(b) for b in balances]
        if len(values) != len(self._bal):
            raise InvalidParams(f"expected {len(self._bal)} balances, got {len(values)}")
        if any(b < 0 for b in values):
            raise InvalidParams("balances must be non-negative")
        self._bal = values
        self._generation += 1

    def balances(self) -> np.ndarray:
        """Directional balances as an int64 array, in directional-index order."""
        return np.array(self._bal, dtype=np.int64)

    def channel_totals(self) -> np.ndarray:
        b = self.balances()
        return b[0::2] + b[1::2]

    def total_balance(self) -> int:
        return sum(self._bal)

    def apply_transfer(self, path: Sequence[int], amount: int) -> None:
        """Move ``amount`` along ``path``, all hops or none.

        Raises NoSuchChannel or InsufficientBalance without touching any
        balance when some hop is invalid.
        """
        if len(path) < 2:
            raise InvalidParams("a transfer path needs at least two nodes")
        if amount < 0:
            raise InvalidParams("amount must be non-negative")
        bal = self._bal
        hops = []
        for a, b in zip(path, path[1:]):
            e = self.edge_index(a, b)
            if bal[e] < amount:
                raise InsufficientBalance(
                    f"hop {a}->{b} holds {bal[e]}, needs {amount}"
                )
            hops.append(e)
        if len(set(hops)) != len(hops):
            # a hop used twice would need its balance checked cumulatively
            raise InvalidParams("transfer path repeats a directional edge")
        for e in hops:
            bal[e] -= amount
            bal[e ^ 1] += amount
        self._touched.extend(hops)

    def copy(self) -> "Network":
        other = Network.__new__(Network)
        other.n = self.n
        other._ends = self._ends
        other._index = self._index
        other._head = self._head
        other._adj = self._adj
        other._bal = list(self._bal)
        other._reset_tracking()
        return other

    def digest(self) -> str:
        """Short hash of topology and balances, for equality checks across processes."""
        h = hashlib.sha256()
        h.update(f"{self.n}:{self._ends}:{self._bal}".encode())
        return h.hexdigest()[:16]

    # -- snapshot text format --

    def to_text(self) -> str:
        lines = [f"pcn v1 {self.n} {self.channel_count}"]
        for (u, v), b in zip(self.directed_edges(), self._bal):
            lines.append(f"{u} {v} {b}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Network":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        if not rows or rows[0][:2] != ["pcn", "v1"] or len(rows[0]) != 4:
            raise InvalidParams("missing 'pcn v1 <n> <channel_count>' header")
        n, m = int(rows[0][2]), int(rows[0][3])
        body = rows[1:]
        if len(body) != 2 * m:
            raise InvalidParams(f"expected {2 * m} directional edges, found {len(body)}")
        directed = {}
        for row in body:
            if len(row) != 3:
                raise InvalidParams(f"bad edge line: {' '.join(row)}")
            u, v, b = (int(x) for x in row)
            if (u, v) in directed:
                raise InvalidParams(f"directional edge {u}->{v} listed twice")
            directed[(u, v)] = b
        edges = {(min(u, v), max(u, v)) for u, v in directed}
        if len(edges) != m:
            raise InvalidParams("channel count does not match header")
        net = cls(n, edges)
        for (u, v) in edges:
            if (u, v) not in directed or (v, u) not in directed:
                raise InvalidParams(f"channel ({u}, {v}) lacks one direction")
            net.set_channel_balance(u, v, directed[(u, v)], directed[(v, u)])
        return net

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def load(cls, path: str | Path) -> "Network":
        return cls.from_text(Path(path).read_text())

    def __repr__(self) -> str:
        return f"Network(n={self.n}, channels={self.channel_count})"


def _pair_stubs(n: int, d: int, gen: np.random.Generator) -> list[tuple[int, int]] | None:
    # Pair shuffled stubs; stubs that would form a loop or a repeated edge
    # are re-shuffled among themselves until none remain or no legal pair is left.
    edges: set[tuple[int, int]] = set()
    stubs = np.repeat(np.arange(n), d).tolist()
    while stubs:
        leftover: dict[int, int] = {}
        order = gen.permutation(len(stubs))
        shuffled = [stubs[i] for i in order]
        for u, v in zip(shuffled[0::2], shuffled[1::2]):
            key = (u, v) if u < v else (v, u)
            if u != v and key not in edges:
                edges.add(key)
            else:
                leftover[u] = leftover.get(u, 0) + 1
                leftover[v] = leftover.get(v, 0) + 1
        if leftover and not _can_pair(edges, leftover):
            return None
        stubs = [u for u in sorted(leftover) for _ in range(leftover[u])]
    return sorted(edges)


def _can_pair(edges: set[tuple[int, int]], leftover: dict[int, int]) -> bool:
    nodes = sorted(leftover)
    return any((a, b) not in edges for i, a in enumerate(nodes) for b in nodes[i + 1:])


def new_random_regular(n: int, d: int, seed: int) -> Network:
    """Connected simple ``d``-regular graph on ``n`` nodes (configuration model).

    Stubs are paired at random; pairs that would create a self-loop or a
    parallel edge are re-drawn, and an attempt that gets stuck or yields more
    than one component is discarded. Attempt ``i`` draws from the sub-seed
    ``(seed, TOPOLOGY, i)``.
    Channels start unfunded.
    """
    if n < 2 or d < 1 or d >= n or (n * d) % 2 or (d == 1 and n > 2):
        raise InvalidParams(f"no simple connected {d}-regular graph on {n} nodes")
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        gen = _rng.make_rng(seed, _rng.TOPOLOGY, attempt)
        edges = _pair_stubs(n, d, gen)
        if edges is None:
            continue
        net = Network(n, edges)
        if net.is_connected():
            return net
    raise GenerationFailed(
        f"no connected simple {d}-regular graph on {n} nodes after "
        f"{MAX_GENERATION_ATTEMPTS} attempts"
    )


def fund_uniform(network: Network, lo: int, hi: int, seed: int) -> None:
    """Draw every directional balance independently from the integers in [lo, hi]."""
    if lo < 0 or hi < lo:
        raise InvalidParams(f"funding range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]")
    gen = _rng.make_rng(seed, _rng.FUNDING)
    network.set_balances(gen.integers(lo, hi, size=network.directional_count, endpoint=True).tolist())
