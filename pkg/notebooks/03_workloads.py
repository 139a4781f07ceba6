"""
Balanced and skewed payment workloads
=====================================

Balanced workloads make every node send and receive the same number of
payments. Skewed workloads give half the nodes a sending surplus and the
other half a deficit.
"""

import numpy as np

from pcnsim import assign_connections, gen_balanced, gen_skewed, new_random_regular

# %%
wl = gen_balanced(10, per_node=20, amount_lo=5, amount_hi=15, seed=1)
print(len(wl.payments), "payments")
print("sent    ", wl.sent_counts(10).tolist())
print("received", wl.received_counts(10).tolist())

# %%
sk = gen_skewed(10, total=200, rate=0.5, amount_lo=5, amount_hi=15, seed=1)
sent, recv = sk.sent_counts(10), sk.received_counts(10)
print("sent - received:", (sent - recv).tolist())
print("no self payments:", all(p.customer != p.dst for p in sk.payments))

# %%
# The same payment sequence with fresh amounts for another replication.
again = sk.with_amounts(seed=99, lo=5, hi=15)
print("amounts differ:", [p.amount for p in sk.payments[:5]], [p.amount for p in again.payments[:5]])

# %%
# Each customer gets its home node plus k-1 extra ingress nodes.
net = new_random_regular(10, 3, seed=1)
binding = assign_connections(10, k=3, network=net, seed=1)
print({c: binding.ingress[c] for c in range(3)})
print("mean amount:", np.mean([p.amount for p in sk.payments]))
