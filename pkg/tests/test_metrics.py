import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_network
from oracles import bfs_distances, network_dict
from pcnsim import (
    EmptyLog,
    InvalidParams,
    PaymentOutcome,
    RunLog,
    all_pairs_path_length,
    capacity_histogram,
    diameter,
    fund_uniform,
    moving_avg_hops,
    network_imbalance,
    new_random_regular,
    success_ratio,
)
from pcnsim.metrics import report, series_csv


def _log(hops):
    return RunLog([PaymentOutcome(i, h > 0, h, h if h else None, 10) for i, h in enumerate(hops)])


class TestImbalance:
    def test_uniform(self):
        net = new_random_regular(10, 3, 0)
        fund_uniform(net, 100, 100, 0)
        assert network_imbalance(net) == 0

    def test_hand_arithmetic(self):
        net = make_network(3, {(0, 1): (90, 110), (1, 2): (90, 110)})
        assert network_imbalance(net) == 10

    def test_needs_channels(self):
        with pytest.raises(InvalidParams):
            network_imbalance(make_network(2, {}))

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.integers(0, 500), min_size=2, max_size=40).filter(lambda x: len(x) % 2 == 0))
    def test_non_negative_and_zero_iff_equal(self, balances):
        n = len(balances) // 2 + 1
        net = make_network(n, {(0, i + 1): (balances[2 * i], balances[2 * i + 1])
                               for i in range(len(balances) // 2)})
        value = network_imbalance(net)
        mean = sum(balances) / len(balances)
        assert value == pytest.approx(sum(abs(b - mean) for b in balances) / len(balances))
        assert value >= 0
        assert (value == 0) == (len(set(balances)) == 1)


class TestHistogram:
    def test_fresh_funding(self):
        net = new_random_regular(100, 3, 1)
        fund_uniform(net, 50, 150, 1)
        h = capacity_histogram(net, 10)
        assert h.total == 300
        assert min(h.counts) >= 50 and max(h.counts) <= 150
        assert all(lo % 10 == 0 for lo in h.counts)

    def test_all_hundred(self):
        net = new_random_regular(100, 3, 1)
        fund_uniform(net, 100, 100, 1)
        assert capacity_histogram(net).counts == {100: 300}

    def test_bin_edges_and_cdf(self):
        net = make_network(3, {(0, 1): (0, 9), (1, 2): (10, 25)})
        h = capacity_histogram(net, 10)
        assert h.counts == {0: 2, 10: 1, 20: 1}
        assert h.cdf() == [(10, 0.5), (20, 0.75), (30, 1.0)]
        assert h.to_csv() == "bin_lo,count\n0,2\n10,1\n20,1\n"

    def test_bad_width(self):
        with pytest.raises(InvalidParams):
            capacity_histogram(make_network(2, {(0, 1): (1, 1)}), 0)


class TestMovingAverage:
    def test_constant(self):
        assert {v for _, v in moving_avg_hops(_log([2] * 300), 100)} == {2.0}
        assert [i for i, _ in moving_avg_hops(_log([2] * 300), 100)] == list(range(100, 301))

    def test_window_larger_than_log(self):
        assert moving_avg_hops(_log([1, 2, 0, 3]), 10) == [(4, 2.0)]

    def test_failures_excluded(self):
        assert moving_avg_hops(_log([2, 0, 4, 0]), 2) == [(2, 2.0), (3, 4.0), (4, 4.0)]

    def test_bad_window(self):
        with pytest.raises(InvalidParams):
            moving_avg_hops(_log([1]), 0)


class TestPaths:
    def test_complete_graph(self):
        net = new_random_regular(4, 3, 0)
        fund_uniform(net, 100, 100, 0)
        stats = all_pairs_path_length(net, 1)
        assert (stats.average, stats.reachability) == (1.0, 1.0)
        assert diameter(net, 1).hops == 1

    def test_amount_above_every_balance(self):
        net = new_random_regular(10, 3, 0)
        fund_uniform(net, 10, 20, 0)
        stats = all_pairs_path_length(net, 21)
        assert stats.average is None and stats.reachability == 0
        d = diameter(net, 21)
        assert d.hops is None and not d.all_reachable

    def test_path_graph_diameter(self):
        net = make_network(4, {(0, 1): (50, 50), (1, 2): (50, 50), (2, 3): (50, 50)})
        d = diameter(net, 10)
        assert d.hops == 3 and d.all_reachable
        one_way = make_network(4, {(0, 1): (50, 0), (1, 2): (50, 0), (2, 3): (50, 0)})
        d = diameter(one_way, 10)
        assert d.hops == 3 and not d.all_reachable
        assert all_pairs_path_length(one_way, 10).reachability == 0.5

    @pytest.mark.parametrize("amount", [0, 60, 120])
    def test_against_bfs_oracle(self, amount):
        net = new_random_regular(100, 3, 12)
        fund_uniform(net, 50, 150, 12)
        bal = network_dict(net)
        dists = []
        pairs = 0
        for s in range(100):
            d = bfs_distances(100, bal, s, amount)
            dists += [v for t, v in d.items() if t != s]
            pairs += 99
        stats = all_pairs_path_length(net, amount)
        dia = diameter(net, amount)
        assert stats.reachability == pytest.approx(len(dists) / pairs)
        if dists:
            assert stats.average == pytest.approx(sum(dists) / len(dists))
            assert dia.hops == max(dists)
        assert dia.all_reachable == (len(dists) == pairs)

    def test_diameter_bounds_average(self):
        net = new_random_regular(60, 3, 3)
        fund_uniform(net, 50, 150, 3)
        stats = all_pairs_path_length(net, 0)
        assert stats.reachability == 1
        assert diameter(net, 0).hops >= stats.average >= 1

    def test_monotone_feasibility(self):
        rng = random.Random(7)
        for trial in range(20):
            net = new_random_regular(30, 3, trial)
            fund_uniform(net, 0, 100, trial)
            amounts = sorted(rng.sample(range(0, 100), 4))
            mats = [self._hops(net, a) for a in amounts]
            for low, high in zip(mats, mats[1:]):
                assert np.isfinite(high).sum() <= np.isfinite(low).sum()
                both = np.isfinite(high)
                assert (high[both] >= low[both]).all()

    @staticmethod
    def _hops(net, amount):
        from pcnsim.metrics import feasible_hop_matrix
        return feasible_hop_matrix(net, amount)


def test_success_ratio():
    assert success_ratio(_log([1, 2, 3])) == 1.0
    assert success_ratio(_log([1, 0])) == 0.5
    with pytest.raises(EmptyLog):
        success_ratio(RunLog([]))


def test_report_tables():
    net = new_random_regular(20, 3, 0)
    fund_uniform(net, 50, 150, 0)
    rep = report(net, _log([2] * 150), amounts=(10, 500), window=100)
    assert rep.success_ratio == 1.0
    assert rep.apl_by_amount[1] == (500, None)
    assert rep.histogram.total == 60
    tables = rep.tables()
    assert tables["apl_by_amount"].splitlines()[0] == "amount,value"
    assert tables["apl_by_amount"].splitlines()[2] == "500,"
    assert tables["moving_avg_hops"].startswith("index,value\n100,2.0\n")
    assert math.isclose(rep.cdf[-1][1], 1.0)
    assert series_csv([(1, 2.5)]) == "index,value\n1,2.5\n"
