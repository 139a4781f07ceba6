from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_network
from pcnsim import (
    GenerationFailed,
    InsufficientBalance,
    InvalidParams,
    Network,
    NoSuchChannel,
    fund_uniform,
    new_random_regular,
)
from pcnsim import network as network_mod


def _connected(net):
    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in net.neighbors(u):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == net.n


class TestRandomRegular:
    def test_table_one_network(self):
        net = new_random_regular(100, 3, seed=7)
        assert net.n == 100
        assert net.channel_count == 150
        assert net.directional_count == 300
        assert all(net.degree(u) == 3 for u in range(100))
        assert _connected(net)

    def test_k4_is_forced(self):
        for seed in range(5):
            net = new_random_regular(4, 3, seed)
            assert set(net.channels) == {(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)}

    @pytest.mark.parametrize("n,d", [(3, 3), (5, 3), (4, 5), (1, 0), (6, 1)])
    def test_invalid(self, n, d):
        with pytest.raises(InvalidParams):
            new_random_regular(n, d, 0)

    def test_deterministic(self):
        assert new_random_regular(50, 4, 3).channels == new_random_regular(50, 4, 3).channels
        assert new_random_regular(50, 4, 3).channels != new_random_regular(50, 4, 4).channels

    def test_generation_failed(self, monkeypatch):
        monkeypatch.setattr(network_mod, "MAX_GENERATION_ATTEMPTS", 0)
        with pytest.raises(GenerationFailed):
            new_random_regular(10, 3, 0)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(3, 40), st.integers(1, 5), st.integers(0, 2**64 - 1))
    def test_regular_and_connected(self, n, d, seed):
        if d >= n or (n * d) % 2 or (d == 1 and n > 2):
            with pytest.raises(InvalidParams):
                new_random_regular(n, d, seed)
            return
        net = new_random_regular(n, d, seed)
        assert all(net.degree(u) == d for u in range(n))
        assert _connected(net)


class TestFunding:
    def test_table_one_range(self):
        net = new_random_regular(100, 3, 1)
        fund_uniform(net, 50, 150, seed=2)
        b = net.balances()
        assert b.size == 300
        assert b.min() >= 50 and b.max() <= 150

    def test_degenerate_range(self):
        net = new_random_regular(100, 3, 1)
        fund_uniform(net, 100, 100, seed=2)
        assert (net.balances() == 100).all()

    def test_reversed_range(self):
        with pytest.raises(InvalidParams):
            fund_uniform(new_random_regular(4, 3, 0), 150, 50, 0)

    def test_deterministic(self):
        a, b = new_random_regular(20, 3, 1), new_random_regular(20, 3, 1)
        fund_uniform(a, 0, 1000, 9)
        fund_uniform(b, 0, 1000, 9)
        assert a.balances().tolist() == b.balances().tolist()


class TestTransfer:
    def test_fig2_sequence(self, fig2_channel):
        net = fig2_channel
        net.apply_transfer([0, 1], 50)
        net.apply_transfer([0, 1], 50)
        assert net.directional_balance(0, 1) == 0
        assert net.directional_balance(1, 0) == 200
        with pytest.raises(InsufficientBalance):
            net.apply_transfer([0, 1], 1)
        net.apply_transfer([1, 0], 130)
        assert net.directional_balance(0, 1) == 130
        assert net.directional_balance(1, 0) == 70

    def test_zero_amount_is_noop(self):
        net = make_network(3, {(0, 1): (10, 20), (1, 2): (30, 40)})
        before = net.balances().tolist()
        net.apply_transfer([0, 1, 2], 0)
        assert net.balances().tolist() == before

    def test_multi_hop(self):
        net = make_network(3, {(0, 1): (10, 20), (1, 2): (30, 40)})
        net.apply_transfer([0, 1, 2], 7)
        assert net.directional_balance(0, 1) == 3
        assert net.directional_balance(1, 0) == 27
        assert net.directional_balance(1, 2) == 23
        assert net.directional_balance(2, 1) == 47

    def test_atomic_on_insufficient_later_hop(self):
        net = make_network(3, {(0, 1): (100, 100), (1, 2): (5, 100)})
        before = net.balances().tolist()
        with pytest.raises(InsufficientBalance):
            net.apply_transfer([0, 1, 2], 10)
        assert net.balances().tolist() == before

    def test_atomic_on_missing_channel(self):
        net = make_network(3, {(0, 1): (100, 100), (1, 2): (100, 100)})
        before = net.balances().tolist()
        with pytest.raises(NoSuchChannel):
            net.apply_transfer([0, 1, 2, 0], 10)
        assert net.balances().tolist() == before

    def test_directional_balance_non_adjacent(self):
        net = make_network(3, {(0, 1): (100, 100), (1, 2): (100, 100)})
        assert net.directional_balance(0, 1) == 100
        with pytest.raises(NoSuchChannel):
            net.directional_balance(0, 2)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32), st.lists(st.tuples(st.integers(0, 11), st.integers(0, 11),
                                                      st.integers(0, 60)), max_size=40))
    def test_conservation_and_atomicity(self, seed, transfers):
        net = new_random_regular(12, 3, seed)
        fund_uniform(net, 0, 50, seed)
        totals = net.channel_totals().tolist()
        grand = net.total_balance()
        for src, dst, amount in transfers:
            if src == dst:
                continue
            # walk along BFS tree path src -> dst
            prev = {src: None}
            queue = deque([src])
            while queue:
                u = queue.popleft()
                for v in net.neighbors(u):
                    if v not in prev:
                        prev[v] = u
                        queue.append(v)
            path = [dst]
            while path[-1] != src:
                path.append(prev[path[-1]])
            path.reverse()
            before = net.balances().tolist()
            try:
                net.apply_transfer(path, amount)
            except InsufficientBalance:
                assert net.balances().tolist() == before
            assert net.channel_totals().tolist() == totals
            assert net.total_balance() == grand
            assert net.balances().min() >= 0


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        net = new_random_regular(10, 3, 4)
        fund_uniform(net, 50, 150, 4)
        net.save(tmp_path / "net.txt")
        back = Network.load(tmp_path / "net.txt")
        assert back.channels == net.channels
        assert back.balances().tolist() == net.balances().tolist()
        assert back.digest() == net.digest()

    def test_format(self, fig2_channel):
        assert fig2_channel.to_text() == "pcn v1 2 1\n0 1 100\n1 0 100\n"

    @pytest.mark.parametrize("text", [
        "",
        "pcn v2 2 1\n0 1 1\n1 0 1\n",
        "pcn v1 2 1\n0 1 1\n",
        "pcn v1 2 1\n0 1 1\n0 1 1\n",
    ])
    def test_rejects_malformed(self, text):
        with pytest.raises(InvalidParams):
            Network.from_text(text)

    def test_rejects_bad_edges(self):
        with pytest.raises(InvalidParams):
            Network(3, [(0, 0)])
        with pytest.raises(InvalidParams):
            Network(3, [(0, 1), (1, 0)])
        with pytest.raises(InvalidParams):
            Network(3, [(0, 3)])

    def test_copy_is_independent(self, fig2_channel):
        other = fig2_channel.copy()
        other.apply_transfer([0, 1], 10)
        assert fig2_channel.directional_balance(0, 1) == 100
        assert np.array_equal(other.balances(), [90, 110])
