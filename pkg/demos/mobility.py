"""
Stationary, walking and cycling users
=====================================

Fast fading makes a 5 ms old CQI report stale. Moving users therefore see
less 256QAM airtime and more retransmissions on the high-order table.
Durations are cut short here to keep the demo quick.
"""

from dataclasses import replace

from fr2sim.link_adapt import TableMode
from fr2sim.config import resolve
from fr2sim.scenario import ScenarioKind, run

base = resolve("paper-fig5").scenario()
cases = [(ScenarioKind.STATIONARY, 1.0), (ScenarioKind.WALKING, 10.0), (ScenarioKind.BIKING, 10.0)]

for kind, seconds in cases:
    for table in (1, 2):
        m = run(replace(base, kind=kind, duration_s=seconds, table_mode=TableMode.fixed(table)))
        print(f"{kind.value:10s} table {table}: {m.mac_mbps:6.1f} Mbps, retx {m.retx_rate:5.3f}, "
              f"256QAM share {m.utilization_share(8):.2f}")

# The adaptive mode switches between tables 1 and 2 on filtered SINR.
m = run(replace(base, kind=ScenarioKind.WALKING, duration_s=10.0, table_mode=TableMode.adaptive(base.bler)))
print(f"walking adaptive: {m.mac_mbps:6.1f} Mbps")
