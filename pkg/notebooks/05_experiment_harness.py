"""
Running an experiment grid
==========================

The harness runs every combination of policy, connection count, skew
rate and funding range over several workload files and seeds, then
aggregates each cell. The ``pcn-sim`` command wraps the same functions.
"""

import tempfile

from pcnsim import harness

cfg = harness.override(
    harness.load_preset("fig7-multi-connection"),
    nodes=50, payments=1000, files=2, replications=3,
    rates=[0.1, 0.5], connections=[1, 3], amounts=[], write_run_logs=False,
)
print(harness.describe(cfg))

# %%
# In memory: one list of per-run summaries per cell.
results = harness.simulate(cfg)
for label, runs in sorted(results.items()):
    mean = sum(r["summary"]["success_ratio"] for r in runs) / len(runs)
    print(f"{label:32s} success {mean:.3f} over {len(runs)} runs")

# %%
# On disk: workload files, aggregate JSON per cell, then report tables.
with tempfile.TemporaryDirectory() as out:
    cfg = harness.override(cfg, out=out)
    harness.cmd_generate(cfg)
    aggregates = harness.cmd_run(cfg)
    tables = harness.cmd_report(aggregates, out)
    print([p.name for p in tables])
    print((tables[0].parent / "success_by_rate.csv").read_text())
