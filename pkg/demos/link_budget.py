"""
Path loss, SINR and fast fading along a street
==============================================

Evaluates the UMi line-of-sight link budget used for the distance sweeps
and draws a short fading trace for a walking and a cycling user.
"""

import numpy as np

from fr2sim.channel import (
    ChannelState,
    doppler_hz,
    generate_trace,
    noise_power_dbm,
    umi_los_path_loss,
)
from fr2sim.config import resolve

budget = resolve("paper-fig5").scenario().budget
d = np.array([10, 50, 100, 200, 300, 400.0])
pl = umi_los_path_loss(d, budget)
sinr = budget.eirp_dbm + budget.ue_rx_gain_db - pl - noise_power_dbm(budget)
for di, p, s in zip(d, pl, sinr):
    print(f"{di:5.0f} m  path loss {p:6.2f} dB  mean SINR {s:5.1f} dB")

# Doppler at walking and cycling speed, and the spread of the fading gain
# over one second of slots.
for speed in (1.375, 6.7):
    rng = np.random.default_rng(7)
    state = ChannelState.initial(rng, np.random.default_rng(8), 0.0, 4.0, 10.0)
    n = 8000
    trace = generate_trace(state, np.full(n, 50.0), np.arange(n) * speed / 8000, 1 / 8000, speed, budget)
    print(f"{speed} m/s: Doppler {doppler_hz(speed, budget):.0f} Hz, fading p5/p95 "
          f"{np.percentile(trace.fading_db, 5):.1f}/{np.percentile(trace.fading_db, 95):.1f} dB")
