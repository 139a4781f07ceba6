"""
Balance-aware routing versus frozen random weights
==================================================

The common weight of a directional channel is (MC - b)^2, so well funded
directions are cheap and drained ones are expensive. The baseline freezes
one random integer weight per directional channel.
"""

from pcnsim import (
    CommonWeight, FixedRandom, NoRoute, Network, compute_weight, select_route, shortest_path,
)

# %%
# Two routes from 0 to 3: through 1 (rich) or through 2 (drained).
net = Network(4, [(0, 1), (1, 3), (0, 2), (2, 3)])
net.set_channel_balance(0, 1, 180, 20)
net.set_channel_balance(1, 3, 170, 30)
net.set_channel_balance(0, 2, 60, 140)
net.set_channel_balance(2, 3, 40, 160)

common = CommonWeight(mc=200)
for u, v in [(0, 1), (1, 3), (0, 2), (2, 3)]:
    print(f"w({u}->{v}) = {compute_weight(common, net, u, v)}")
print("common:", shortest_path(net, common, 0, 3, amount=10))

fixed = FixedRandom(seed=3)
print("fixed-random:", shortest_path(net, fixed, 0, 3, amount=10))

# %%
# Channels that cannot carry the amount are pruned before the search.
print("amount 50:", shortest_path(net, common, 0, 3, amount=50))
try:
    shortest_path(net, common, 0, 3, amount=200)
except NoRoute as exc:
    print("amount 200:", exc)

# %%
# With several ingress points the cheapest route over all of them wins.
print("ingress [0, 1]:", select_route(net, common, [0, 1], 3, amount=10))
