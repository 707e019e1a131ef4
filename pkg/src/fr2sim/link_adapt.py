"""Inner/outer loop link adaptation and dynamic MCS-table switching."""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError
from .nr_tables import McsEntry, McsTable, cqi_table, mcs_table
from .phy import BlerModel, Feedback, bler_for_se, snr_at_bler50

OLLA_CLAMP_DB = 15.0


@dataclass
class OllaState:
    offset_db: float = 0.0
    step_down_db: float = 0.5
    step_up_db: float = 0.5 * 0.1 / 0.9
    target_bler: float = 0.1

    @classmethod
    def from_target(cls, target_bler: float = 0.1, step_down_db: float = 0.5,
                    offset_db: float = 0.0) -> "OllaState":
        if not 0.0 < target_bler < 1.0:
            raise DomainError(f"target_bler must be in (0, 1), got {target_bler}")
        step_up = step_down_db * target_bler / (1.0 - target_bler)
        return cls(offset_db, step_down_db, step_up, target_bler)


def olla_update(olla: OllaState, feedback: Feedback) -> OllaState:
    if feedback is Feedback.NACK:
        olla.offset_db -= olla.step_down_db
    else:
        olla.offset_db += olla.step_up_db
    olla.offset_db = min(OLLA_CLAMP_DB, max(-OLLA_CLAMP_DB, olla.offset_db))
    return olla


@lru_cache(maxsize=None)
def _mcs_thresholds(table_id: McsTable, model: BlerModel):
    rows = tuple(e for e in mcs_table(table_id) if not e.reserved)
    thresholds = [snr_at_bler50(e.spectral_efficiency, model) for e in rows]
    # suffix minima are sorted, and the highest index with threshold <= x is
    # the highest index whose suffix minimum is <= x (table 1 has one SE dip)
    suffix_min = list(thresholds)
    for k in range(len(suffix_min) - 2, -1, -1):
        suffix_min[k] = min(suffix_min[k], suffix_min[k + 1])
    return rows, tuple(suffix_min)


def illa_select_mcs(cqi: int, cqi_table_id, mcs_table_id, olla: OllaState,
                    model: BlerModel) -> McsEntry:
    """Highest usable MCS whose 50%-BLER SINR fits under the CQI-implied estimate."""
    if cqi == 0:
        raise DomainError("CQI 0 means out of range; nothing should be scheduled")
    row = cqi_table(cqi_table_id)[cqi]
    sinr_est = snr_at_bler50(row.spectral_efficiency, model) + olla.offset_db
    rows, suffix_min = _mcs_thresholds(McsTable.parse(mcs_table_id), model)
    k = bisect.bisect_right(suffix_min, sinr_est) - 1
    return rows[max(k, 0)]


class TableModeKind(enum.Enum):
    FIXED1 = "1"
    FIXED2 = "2"
    FIXED4 = "4"
    ADAPTIVE = "adaptive"


@dataclass(frozen=True)
class TableMode:
    mode: TableModeKind = TableModeKind.FIXED2
    switch_up_sinr_db: float = math.nan
    switch_down_sinr_db: float = math.nan

    def __post_init__(self):
        if self.mode is TableModeKind.ADAPTIVE and not self.switch_up_sinr_db > self.switch_down_sinr_db:
            raise DomainError("adaptive table mode needs switch_up_sinr_db > switch_down_sinr_db")

    @classmethod
    def fixed(cls, table_id) -> "TableMode":
        return cls(TableModeKind(str(McsTable.parse(table_id).value)))

    @classmethod
    def adaptive(cls, model: BlerModel, up_db: float | None = None, down_db: float | None = None,
                 hysteresis_db: float = 3.0) -> "TableMode":
        if up_db is None or down_db is None:
            centre = table_crossover_sinr(model)
            up_db = centre + hysteresis_db if up_db is None else up_db
            down_db = centre - hysteresis_db if down_db is None else down_db
        return cls(TableModeKind.ADAPTIVE, up_db, down_db)

    def initial_table(self) -> McsTable:
        if self.mode is TableModeKind.ADAPTIVE:
            return McsTable.TABLE1
        return McsTable(int(self.mode.value))


def select_table(mode: TableMode, filtered_sinr_db: float, current: McsTable) -> McsTable:
    if mode.mode is not TableModeKind.ADAPTIVE:
        return McsTable(int(mode.mode.value))
    if filtered_sinr_db >= mode.switch_up_sinr_db:
        return McsTable.TABLE2
    if filtered_sinr_db <= mode.switch_down_sinr_db:
        return McsTable.TABLE1
    return current


def _best_goodput(sinr_db: float, entries, model: BlerModel) -> float:
    return max(e.spectral_efficiency * (1.0 - bler_for_se(sinr_db, e.spectral_efficiency, 1, model))
               for e in entries)


@lru_cache(maxsize=None)
def table_crossover_sinr(model: BlerModel, lo: float = 0.0, hi: float = 40.0,
                         step: float = 0.01) -> float:
    """Lowest SINR where a 256QAM row of table 2 out-earns every table 1 row.

    Goodput here is SE times first-transmission success probability.
    """
    table1 = [e for e in mcs_table(McsTable.TABLE1) if not e.reserved]
    qam256 = [e for e in mcs_table(McsTable.TABLE2) if not e.reserved and e.qm == 8]
    for sinr in np.arange(lo, hi, step):
        if _best_goodput(sinr, qam256, model) > _best_goodput(sinr, table1, model):
            return round(float(sinr), 6)
    return hi
