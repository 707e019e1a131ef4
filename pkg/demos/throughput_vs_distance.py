"""
Throughput against distance for MCS tables 1, 2 and 4
=====================================================

A reduced version of the full sweep (fewer distances, two seeds) so it runs
in well under a minute. The full grid is

    fr2sim sweep --preset paper-fig5 --tables 1,2,4 --min-d 10 --max-d 400 --step 10 --seeds 5
"""

import os

from fr2sim.config import resolve
from fr2sim.scenario import summarize_sweep, sweep

template = resolve("paper-fig5").scenario()
distances = [10.0, 50.0, 100.0, 150.0, 200.0, 300.0, 400.0]
rows = sweep(template, distances, seeds=[1, 2], tables=(1, 2, 4), jobs=os.cpu_count() or 1)
points = {(p.table, p.distance_m): p for p in summarize_sweep(rows)}

print("distance    T1      T2      T4   (MAC Mbps, 2-seed mean)")
for d in distances:
    print(f"{d:6.0f}  " + "  ".join(f"{points[(t, d)].mean_mac_mbps:6.1f}" for t in (1, 2, 4)))

# Close in, the higher tables win; past a few hundred metres the link only
# supports low-order rows that all three tables share, and the curves meet.
try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    for t in (1, 2, 4):
        plt.plot(distances, [points[(t, d)].mean_mac_mbps for d in distances], marker="o", label=f"table {t}")
    plt.xlabel("distance (m)")
    plt.ylabel("MAC throughput (Mbps)")
    plt.legend()
    os.makedirs("demo_out", exist_ok=True)
    plt.savefig("demo_out/throughput_vs_distance.png", dpi=100)
    print("wrote demo_out/throughput_vs_distance.png")
