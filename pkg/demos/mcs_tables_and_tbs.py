"""
MCS tables, peak efficiency and transport block sizes
=====================================================

Walks through the three PDSCH MCS tables, compares their top spectral
efficiencies, and shows what one 100 MHz FR2 carrier can carry per slot.
"""

from fr2sim.mac import TddPattern, dl_symbols_in_slot
from fr2sim.nr_tables import TbsInput, compute_tbs, peak_spectral_ratio, usable_entries

# The top rows: 64QAM, 256QAM and 1024QAM.
for table in (1, 2, 4):
    top = usable_entries(table)[-1]
    print(f"table {table}: {len(usable_entries(table))} usable rows, top index {top.index}, "
          f"Qm {top.qm}, SE {top.spectral_efficiency}")

print("peak SE table2 / table1 =", round(peak_spectral_ratio(2, 1), 4))
print("peak SE table4 / table2 =", round(peak_spectral_ratio(4, 2), 4))

# TBS of a full slot (13 data symbols after one control symbol) and of the
# special slot (9 data symbols), 66 PRBs, 2 layers.
pattern = TddPattern()
per_period = {}
for table in (1, 2, 4):
    top = usable_entries(table)[-1]
    bits = [compute_tbs(TbsInput(66, dl_symbols_in_slot(pattern, k) - 1, top))
            for k in range(pattern.period_slots) if dl_symbols_in_slot(pattern, k) > 1]
    per_period[table] = sum(bits)
    print(f"table {table}: TBS per slot {bits}, peak {per_period[table] * 1600 / 1e6:.1f} Mbps")

# TBS quantisation eats part of the 33% spectral gain.
print("peak throughput table2 / table1 =", round(per_period[2] / per_period[1], 4))
