"""
One simulation run and its metrics
==================================

Run 5000 balanced payments on a 100-node network under both policies and
compare the final balances and paths.
"""

from pcnsim import (
    CommonWeight, FixedRandom, all_pairs_path_length, assign_connections, capacity_histogram,
    count_below, diameter, fraction_within, fund_uniform, gen_balanced, moving_avg_hops,
    network_imbalance, new_random_regular, replay, run, success_ratio,
)

base = new_random_regular(100, 3, seed=5)
fund_uniform(base, 50, 150, seed=5)
workload = gen_balanced(100, per_node=50, amount_lo=5, amount_hi=15, seed=5)
binding = assign_connections(100, 1, base, seed=5)

for policy in (CommonWeight(mc=300), FixedRandom(seed=5, lo=90, hi=110)):
    net = base.copy()
    log = run(net, policy, workload, binding, sample_every=500)
    print(f"\n== {policy.name}")
    print("success ratio       ", round(success_ratio(log), 3))
    print("imbalance           ", round(network_imbalance(net), 2))
    print("in [50,150]         ", round(fraction_within(net, 50, 150), 3))
    print("below 20            ", count_below(net, 20))
    print("APL / diameter @50  ", round(all_pairs_path_length(net, 50).average, 2), diameter(net, 50))
    print("moving avg hops     ", [round(v, 2) for _, v in moving_avg_hops(log, 500)[::500]])
    print("imbalance samples   ", [round(v, 1) for _, v in log.samples])

    # the log replays to the same final state
    assert replay(log, base).digest() == net.digest()

print()
print(capacity_histogram(net).to_csv())
