"""Aggregates over slot-record CSVs: utilization, retransmissions, RSRP curves.

Input is the slot-record schema the simulator exports; drive-test logs can
be analysed once converted to it. Throughput samples are formed per time
window (``window_s``) and per MCS table, so RSRP curves and gains do not
depend on how finely the rows are sliced within a window.
"""

from __future__ import annotations

import csv
import math
import warnings
from collections.abc import Mapping
from dataclasses import dataclass, fields

from .errors import RecordParseError
from .mac import SlotRecord

RECORD_COLUMNS = ("slot", "time_s", "distance_m", "rsrp_dbm", "sinr_db", "table", "mcs", "qm",
                  "n_prb", "tbs_bits", "new_tx", "ack")
RSRP_RANGE_DBM = (-156.0, -31.0)
MODULATION_COLUMNS = {2: "qpsk", 4: "16qam", 6: "64qam", 8: "256qam", 10: "1024qam"}


@dataclass
class FieldRecord(SlotRecord):
    carrier_id: int | None = None


_ATTR_FOR_COLUMN = {
    "slot": "slot_index", "table": "table_id", "mcs": "mcs_index",
}
_INT_COLUMNS = {"slot", "table", "mcs", "qm", "n_prb", "tbs_bits"}
_BOOL_COLUMNS = {"new_tx", "ack"}


def _convert(column: str, raw: str, row: int):
    raw = raw.strip()
    try:
        if column in _BOOL_COLUMNS:
            if raw not in ("0", "1"):
                raise ValueError
            return raw == "1"
        if column in _INT_COLUMNS or column == "carrier_id":
            return int(raw)
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError
        return value
    except ValueError:
        kind = "0 or 1" if column in _BOOL_COLUMNS else "a number"
        raise RecordParseError(f"row {row}, column {column!r}: expected {kind}, got {raw!r}",
                               row=row, column=column) from None


def parse_records(stream) -> list[FieldRecord]:
    """Read and validate a slot-record CSV; ``#`` lines are comments.

    Row numbers in errors count data rows from 1.
    """
    reader = csv.reader(line for line in stream if not line.lstrip().startswith("#"))
    header = next(reader, None)
    if header is None:
        raise RecordParseError("empty input: no header row")
    header = [h.strip() for h in header]
    missing = [c for c in RECORD_COLUMNS if c not in header]
    if missing:
        raise RecordParseError(f"header is missing column(s): {', '.join(missing)}",
                               row=0, column=missing[0])
    has_carrier = "carrier_id" in header
    pos = {c: header.index(c) for c in header}
    records = []
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise RecordParseError(f"row {row_no}: expected {len(header)} fields, got {len(row)}",
                                   row=row_no)
        values = {}
        for column in RECORD_COLUMNS:
            values[_ATTR_FOR_COLUMN.get(column, column)] = _convert(column, row[pos[column]], row_no)
        if not RSRP_RANGE_DBM[0] <= values["rsrp_dbm"] <= RSRP_RANGE_DBM[1]:
            raise RecordParseError(
                f"row {row_no}, column 'rsrp_dbm': {values['rsrp_dbm']} outside "
                f"{RSRP_RANGE_DBM[0]}..{RSRP_RANGE_DBM[1]} dBm", row=row_no, column="rsrp_dbm")
        if values["qm"] not in MODULATION_COLUMNS:
            raise RecordParseError(f"row {row_no}, column 'qm': unknown modulation order "
                                   f"{values['qm']}", row=row_no, column="qm")
        carrier = None
        if has_carrier and row[pos["carrier_id"]].strip():
            carrier = _convert("carrier_id", row[pos["carrier_id"]], row_no)
        records.append(FieldRecord(**values, carrier_id=carrier))
    return records


def write_records(records, stream, comments=()):
    """Write records in the slot-record CSV schema (floats round-trip exactly)."""
    for line in comments:
        stream.write(f"# {line}\n")
    with_carrier = any(getattr(r, "carrier_id", None) is not None for r in records)
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS + (("carrier_id",) if with_carrier else ()))
    for r in records:
        row = [r.slot_index, repr(float(r.time_s)), repr(float(r.distance_m)),
               repr(float(r.rsrp_dbm)), repr(float(r.sinr_db)), r.table_id, r.mcs_index, r.qm,
               r.n_prb, r.tbs_bits, int(r.new_tx), int(r.ack)]
        if with_carrier:
            carrier = getattr(r, "carrier_id", None)
            row.append("" if carrier is None else carrier)
        writer.writerow(row)


def to_field_records(slot_records) -> list[FieldRecord]:
    return [FieldRecord(**{f.name: getattr(r, f.name) for f in fields(SlotRecord)})
            for r in slot_records]


def modulation_utilization(records, weight: str = "prb") -> dict[int, float]:
    """Share of scheduled PRBs (``weight="prb"``) or TBs (``"tb"``) per modulation order."""
    if weight not in ("prb", "tb"):
        raise ValueError("weight must be 'prb' or 'tb'")
    totals: dict[int, int] = {}
    for r in records:
        w = r.n_prb if weight == "prb" else 1
        totals[r.qm] = totals.get(r.qm, 0) + w
    grand = sum(totals.values())
    if grand == 0:
        return {}
    return {qm: totals[qm] / grand for qm in sorted(totals)}


def retransmission_rate(records) -> float:
    records = list(records)
    if not records:
        warnings.warn("no transmissions; retransmission rate reported as 0", RuntimeWarning,
                      stacklevel=2)
        return 0.0
    return sum(1 for r in records if not r.new_tx) / len(records)


@dataclass(frozen=True)
class ThroughputSample:
    table_id: int
    window: int
    mac_mbps: float
    rsrp_dbm: float


def throughput_samples(records, window_s: float = 0.1) -> list[ThroughputSample]:
    """One MAC throughput sample per (table, carrier, time window) that has records.

    Sums use ``math.fsum`` so the result does not depend on row order.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    groups: dict[tuple, list] = {}
    for r in records:
        key = (r.table_id, getattr(r, "carrier_id", None) or 0, math.floor(r.time_s / window_s))
        groups.setdefault(key, []).append(r)
    samples = []
    for (table, _carrier, window), rows in sorted(groups.items(), key=lambda kv: kv[0]):
        bits = math.fsum(r.tbs_bits for r in rows if r.ack)
        rsrp = math.fsum(r.rsrp_dbm for r in rows) / len(rows)
        samples.append(ThroughputSample(table, window, bits / window_s / 1e6, rsrp))
    return samples


@dataclass(frozen=True)
class BinnedCurve:
    table_id: int
    bin_center_dbm: float
    mean_mbps: float
    ci95_halfwidth_mbps: float
    n: int


def mean_ci95(values) -> tuple[float, float]:
    """Mean and normal-approximation 95% CI half-width (1.96 s / sqrt(n))."""
    values = list(values)
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, 1.96 * math.sqrt(var) / math.sqrt(n)


def binned_throughput(records, bin_width_db: float = 2.0, min_n: int = 30,
                      window_s: float = 0.1) -> list[BinnedCurve]:
    """Mean MAC throughput per RSRP bin and table, with 95% confidence intervals."""
    if bin_width_db <= 0:
        raise ValueError("bin_width_db must be positive")
    bins: dict[tuple[int, int], list[float]] = {}
    for s in throughput_samples(records, window_s):
        bins.setdefault((s.table_id, math.floor(s.rsrp_dbm / bin_width_db)), []).append(s.mac_mbps)
    curves = []
    for (table, b), vals in sorted(bins.items()):
        if len(vals) < min_n:
            continue
        mean, half = mean_ci95(sorted(vals))
        curves.append(BinnedCurve(table, (b + 0.5) * bin_width_db, mean, half, len(vals)))
    return curves


def crossover_bins(curves, table_a: int = 1, table_b: int = 2) -> list[float]:
    """Bin centres where table_b's curve crosses table_a's.

    A crossing is reported at the first bin (walking up in RSRP) whose sign
    of ``b - a`` differs from the previous shared bin's. Exact ties are
    skipped.
    """
    a = {c.bin_center_dbm: c.mean_mbps for c in curves if c.table_id == table_a}
    b = {c.bin_center_dbm: c.mean_mbps for c in curves if c.table_id == table_b}
    shared = sorted(set(a) & set(b))
    signs = [(x, math.copysign(1.0, b[x] - a[x]) if b[x] != a[x] else 0.0) for x in shared]
    out = []
    prev = None
    for x, s in signs:
        if s == 0.0:
            continue
        if prev is not None and s != prev:
            out.append(x)
        prev = s
    return out


def mean_mac_mbps(records, window_s: float = 0.1) -> float | None:
    samples = throughput_samples(records, window_s)
    if not samples:
        return None
    return math.fsum(s.mac_mbps for s in samples) / len(samples)


@dataclass(frozen=True)
class GainSummary:
    per_case: dict
    overall: float | None
    complete: bool


def table_gain_summary(records, window_s: float = 0.1) -> GainSummary:
    """Relative MAC throughput gain of table 2 over table 1.

    ``records`` is either one record sequence or a mapping of case label to
    records. The overall figure averages the per-case gains; cases missing
    either table get ``None`` and mark the summary incomplete.
    """
    cases = records if isinstance(records, Mapping) else {"all": records}
    per_case = {}
    for label, rows in cases.items():
        rows = list(rows)
        t1 = mean_mac_mbps([r for r in rows if r.table_id == 1], window_s)
        t2 = mean_mac_mbps([r for r in rows if r.table_id == 2], window_s)
        per_case[label] = None if t1 is None or t2 is None or t1 == 0 else (t2 - t1) / t1
    gains = [g for g in per_case.values() if g is not None]
    overall = math.fsum(gains) / len(gains) if gains else None
    return GainSummary(per_case, overall, all(g is not None for g in per_case.values()))
