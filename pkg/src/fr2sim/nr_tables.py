"""PDSCH MCS tables, CQI tables and transport block size determination.

The table rows live in plain-text files under ``fr2sim/data`` (one row per
line, ``index qm rate_x1024 se``) so the transcription can be audited
without reading code. Everything here is immutable after import.
"""

from __future__ import annotations

import bisect
import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from functools import lru_cache
from importlib import resources

from .errors import DomainError

__all__ = [
    "McsTable",
    "CqiTable",
    "McsEntry",
    "CqiEntry",
    "TbsInput",
    "lookup_mcs",
    "lookup_cqi",
    "mcs_table",
    "cqi_table",
    "cqi_table_for",
    "compute_tbs",
    "peak_spectral_ratio",
    "SMALL_TBS",
]


class McsTable(enum.IntEnum):
    """PDSCH MCS index tables (value is the table number)."""

    TABLE1 = 1  # qam64
    TABLE2 = 2  # qam256
    TABLE4 = 4  # qam1024

    @classmethod
    def parse(cls, value) -> "McsTable":
        if isinstance(value, McsTable):
            return value
        try:
            return cls(int(str(value).strip().lower().removeprefix("table")))
        except ValueError:
            raise DomainError(f"unknown MCS table {value!r}; expected 1, 2 or 4") from None


class CqiTable(enum.IntEnum):
    """4-bit CQI tables, numbered as in TS 38.214 Table 5.2.2.1-x."""

    TABLE2 = 2  # 64QAM
    TABLE3 = 3  # 256QAM
    TABLE5 = 5  # 1024QAM


_CQI_FOR_MCS = {
    McsTable.TABLE1: CqiTable.TABLE2,
    McsTable.TABLE2: CqiTable.TABLE3,
    McsTable.TABLE4: CqiTable.TABLE5,
}

MODULATION_NAMES = {2: "qpsk", 4: "16qam", 6: "64qam", 8: "256qam", 10: "1024qam"}


@dataclass(frozen=True)
class McsEntry:
    table_id: McsTable
    index: int
    qm: int
    code_rate_x1024: Fraction | None
    spectral_efficiency: float | None
    reserved: bool = False

    @property
    def code_rate(self) -> Fraction:
        if self.reserved:
            raise DomainError(f"MCS {self.table_id.value}/{self.index} is reserved")
        return self.code_rate_x1024 / 1024


@dataclass(frozen=True)
class CqiEntry:
    table_id: CqiTable
    cqi: int
    qm: int | None
    code_rate_x1024: Fraction | None
    spectral_efficiency: float | None

    @property
    def out_of_range(self) -> bool:
        return self.cqi == 0


@dataclass(frozen=True)
class TbsInput:
    """Inputs to the PDSCH TBS procedure for one transport block."""

    n_prb: int
    n_symbols_data: int
    mcs: McsEntry
    n_dmrs_re_per_prb: int = 12
    x_overhead: int = 0
    n_layers: int = 2

    def __post_init__(self):
        if self.n_prb < 1:
            raise DomainError(f"n_prb must be >= 1, got {self.n_prb}")
        if not 1 <= self.n_symbols_data <= 14:
            raise DomainError(f"n_symbols_data must be in 1..14, got {self.n_symbols_data}")
        if self.n_dmrs_re_per_prb < 0:
            raise DomainError("n_dmrs_re_per_prb must be >= 0")
        if self.x_overhead not in (0, 6, 12, 18):
            raise DomainError(f"x_overhead must be one of 0, 6, 12, 18, got {self.x_overhead}")
        if not 1 <= self.n_layers <= 4:
            raise DomainError(f"n_layers must be in 1..4, got {self.n_layers}")
        if self.re_per_prb <= 0:
            raise DomainError("no resource elements left for data after overhead")

    @property
    def re_per_prb(self) -> int:
        return 12 * self.n_symbols_data - self.n_dmrs_re_per_prb - self.x_overhead


def _se_4dp(qm: int, rate: Fraction) -> Decimal:
    exact = Decimal(rate.numerator * qm) / Decimal(rate.denominator * 1024)
    return exact.quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP)


def _data_lines(name: str):
    text = resources.files("fr2sim.data").joinpath(name).read_text(encoding="utf-8")
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            yield line.split()


def _check_se(where: str, qm: int, rate: Fraction, se: str):
    if _se_4dp(qm, rate) != Decimal(se):
        raise RuntimeError(f"{where}: printed SE {se} disagrees with Qm*R ({_se_4dp(qm, rate)})")


@lru_cache(maxsize=None)
def mcs_table(table_id) -> tuple[McsEntry, ...]:
    """All 32 rows of an MCS table, reserved rows included."""
    table_id = McsTable.parse(table_id)
    rows = []
    for fields in _data_lines(f"mcs_table{table_id.value}.txt"):
        index, qm = int(fields[0]), int(fields[1])
        if fields[2] == "reserved":
            rows.append(McsEntry(table_id, index, qm, None, None, reserved=True))
            continue
        rate = Fraction(fields[2])
        _check_se(f"MCS table {table_id.value} row {index}", qm, rate, fields[3])
        rows.append(McsEntry(table_id, index, qm, rate, float(fields[3])))
    if [r.index for r in rows] != list(range(32)):
        raise RuntimeError(f"MCS table {table_id.value} must list indexes 0..31 in order")
    return tuple(rows)


@lru_cache(maxsize=None)
def cqi_table(table_id) -> tuple[CqiEntry, ...]:
    table_id = CqiTable(int(table_id))
    rows = []
    for fields in _data_lines(f"cqi_table{table_id.value}.txt"):
        cqi = int(fields[0])
        if fields[1] == "out_of_range":
            rows.append(CqiEntry(table_id, cqi, None, None, None))
            continue
        qm, rate = int(fields[1]), Fraction(fields[2])
        _check_se(f"CQI table {table_id.value} row {cqi}", qm, rate, fields[3])
        rows.append(CqiEntry(table_id, cqi, qm, rate, float(fields[3])))
    if [r.cqi for r in rows] != list(range(16)):
        raise RuntimeError(f"CQI table {table_id.value} must list CQI 0..15 in order")
    return tuple(rows)


def cqi_table_for(table_id) -> CqiTable:
    """CQI table a UE reports against when the given MCS table is configured."""
    return _CQI_FOR_MCS[McsTable.parse(table_id)]


def lookup_mcs(table_id, index: int) -> McsEntry:
    if not 0 <= index <= 31:
        raise DomainError(f"MCS index must be in 0..31, got {index}")
    return mcs_table(table_id)[index]


def lookup_cqi(table_id, cqi: int) -> CqiEntry:
    if not 0 <= cqi <= 15:
        raise DomainError(f"CQI must be in 0..15, got {cqi}")
    return cqi_table(table_id)[cqi]


def _load_small_tbs() -> tuple[int, ...]:
    values = tuple(int(f[1]) for f in _data_lines("tbs_small.txt"))
    if len(values) != 93:
        raise RuntimeError("small-TBS table must have 93 entries")
    return values


SMALL_TBS = _load_small_tbs()


def compute_tbs(tbs_in: TbsInput) -> int:
    """Transport block size in bits for one PDSCH allocation.

    Integer arithmetic throughout: the information bit count is carried as
    a multiple of 1/2048 so half-integer code rates stay exact.
    """
    mcs = tbs_in.mcs
    if mcs.reserved:
        raise DomainError(f"MCS {mcs.table_id.value}/{mcs.index} is reserved; no TBS defined")
    rate2 = int(mcs.code_rate_x1024 * 2)  # code rate in units of 1/2048
    n_re = min(156, tbs_in.re_per_prb) * tbs_in.n_prb
    scale = 2048
    ninfo = n_re * rate2 * mcs.qm * tbs_in.n_layers  # N_info * 2048

    if ninfo <= 3824 * scale:
        whole = ninfo // scale
        log2_floor = whole.bit_length() - 1 if whole >= 1 else -1
        n = max(3, log2_floor - 6)
        ninfo_q = max(24, (1 << n) * (ninfo // (scale << n)))
        return SMALL_TBS[bisect.bisect_left(SMALL_TBS, ninfo_q)]

    x = ninfo - 24 * scale
    n = (x // scale).bit_length() - 1 - 5
    step = scale << n
    ninfo_q = max(3840, (1 << n) * ((2 * x + step) // (2 * step)))
    if rate2 <= 512:
        c = -(-(ninfo_q + 24) // 3816)
    elif ninfo_q > 8424:
        c = -(-(ninfo_q + 24) // 8424)
    else:
        c = 1
    return 8 * c * -(-(ninfo_q + 24) // (8 * c)) - 24


def peak_spectral_ratio(table_a, table_b) -> float:
    """Ratio of the highest spectral efficiencies of two MCS tables."""

    def peak(t):
        return max(e.spectral_efficiency for e in mcs_table(t) if not e.reserved)

    return peak(table_a) / peak(table_b)


def usable_entries(table_id) -> tuple[McsEntry, ...]:
    return tuple(e for e in mcs_table(table_id) if not e.reserved)


def format_rate(rate: Fraction | None) -> str:
    if rate is None:
        return ""
    return str(rate.numerator) if rate.denominator == 1 else f"{float(rate):g}"


def dump_csv_rows(table_id):
    """Rows for a CSV dump: header first, then one row per MCS index."""
    yield ["index", "qm", "modulation", "rate_x1024", "se", "reserved"]
    for e in mcs_table(table_id):
        se = "" if e.reserved else f"{e.spectral_efficiency:.4f}"
        yield [e.index, e.qm, MODULATION_NAMES[e.qm], format_rate(e.code_rate_x1024), se, int(e.reserved)]

