"""Constructed record sets with known aggregate statistics."""

from fr2sim.fieldstats import FieldRecord


def record(slot, table=2, qm=8, tbs=1000, rsrp=-80.0, new_tx=True, ack=True, n_prb=66, time_s=None,
           carrier=None):
    return FieldRecord(slot, slot / 8000 if time_s is None else time_s, 50.0, rsrp, 20.0, table, 10, qm,
                       n_prb, tbs, new_tx, ack, carrier)


def utilization_35():
    """35 of 100 PRB-equal records on 256QAM, the rest on 64QAM."""
    return [record(k, qm=8 if k < 35 else 6) for k in range(100)]


def gain_fixture(factor, n_windows=20, window_s=0.1, slots_per_window=5):
    """Table 1 and table 2 runs whose per-window MAC throughput differs by ``factor``."""
    out = []
    for w in range(n_windows):
        base = 1000 + 10 * w
        for j in range(slots_per_window):
            t = w * window_s + j * 1e-3
            out.append(record(len(out), table=1, qm=6, tbs=base * 100, time_s=t))
            out.append(record(len(out), table=2, qm=8, tbs=round(base * 100 * factor), time_s=t))
    return out


def crossover_fixture(threshold_dbm=-90.0, n_per_bin=40, window_s=0.1):
    """Table 1 flat at 500 Mbps; table 2 at 600 above the threshold and 400 below."""
    out = []
    w = 0
    for centre in (-97.0, -95.0, -93.0, -91.0, -89.0, -87.0, -85.0, -83.0):
        for _ in range(n_per_bin):
            t = w * window_s
            for table, mbps in ((1, 500.0), (2, 600.0 if centre > threshold_dbm else 400.0)):
                bits = round(mbps * 1e6 * window_s)
                out.append(record(len(out), table=table, qm=6 if table == 1 else 8, tbs=bits, rsrp=centre,
                                  time_s=t))
            w += 1
    return out
