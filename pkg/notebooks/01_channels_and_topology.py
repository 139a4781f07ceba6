"""
Channels, balances and random topologies
========================================

A channel holds two directional balances whose sum never changes. A
multi-hop transfer moves the same amount along every hop at once, or
not at all.
"""

from pcnsim import InsufficientBalance, Network, fund_uniform, new_random_regular

# %%
# A three-node line: 0 - 1 - 2.
net = Network(3, [(0, 1), (1, 2)])
net.set_channel_balance(0, 1, 50, 30)
net.set_channel_balance(1, 2, 40, 40)
print("before:", net.balances().tolist(), "total", net.total_balance())

net.apply_transfer([0, 1, 2], 25)
print("after 0->2 of 25:", net.balances().tolist(), "total", net.total_balance())

# %%
# A transfer that cannot clear every hop leaves the network untouched.
snapshot = net.balances().tolist()
try:
    net.apply_transfer([0, 1, 2], 30)
except InsufficientBalance as exc:
    print("rejected:", exc)
assert net.balances().tolist() == snapshot

# %%
# Random 3-regular topologies are reproducible from a seed.
g = new_random_regular(100, 3, seed=7)
fund_uniform(g, 50, 150, seed=7)
print(g.channel_count, "channels, connected:", g.is_connected(), "digest", g.digest())
assert new_random_regular(100, 3, seed=7).channels == g.channels

# The text format round-trips exactly.
assert Network.from_text(g.to_text()).digest() == g.digest()
print(g.to_text().splitlines()[:4])
