"""Link-to-system abstraction: SINR and MCS to BLER, CRC draws, CQI choice."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError
from .nr_tables import McsEntry, cqi_table

CQI_TARGET_BLER = 0.1


class Feedback(enum.Enum):
    ACK = "ACK"
    NACK = "NACK"


@dataclass(frozen=True)
class BlerModel:
    """Logistic BLER waterfall anchored a fixed gap above Shannon capacity.

    Retransmissions are credited ``harq_combining_gain_db`` each, a
    chase-combining approximation.
    """

    shannon_gap_db: float = 1.5
    waterfall_slope_per_db: float = 2.0
    harq_combining_gain_db: float = 3.0

    def __post_init__(self):
        if self.waterfall_slope_per_db <= 0:
            raise ValueError("waterfall_slope_per_db must be positive")
        if self.harq_combining_gain_db < 0:
            raise ValueError("harq_combining_gain_db must be non-negative")

    @property
    def margin_db(self) -> float:
        """SINR above the 50% point at which BLER reaches the CQI target."""
        return math.log(1.0 / CQI_TARGET_BLER - 1.0) / self.waterfall_slope_per_db


def snr_at_bler50(se: float, model: BlerModel) -> float:
    if se <= 0:
        return -math.inf
    return 10.0 * math.log10(2.0**se - 1.0) + model.shannon_gap_db


def _logistic_tail(x: float) -> float:
    # 1 / (1 + exp(x)) without overflow
    if x >= 0:
        e = math.exp(-x)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(x))


def bler_for_se(sinr_db: float, se: float, tx_count: int, model: BlerModel) -> float:
    if tx_count < 1:
        raise DomainError(f"tx_count must be >= 1, got {tx_count}")
    eff = sinr_db + (tx_count - 1) * model.harq_combining_gain_db
    return _logistic_tail(model.waterfall_slope_per_db * (eff - snr_at_bler50(se, model)))


def bler(sinr_db: float, mcs: McsEntry, tx_count: int, model: BlerModel) -> float:
    if mcs.reserved:
        raise DomainError(f"MCS {mcs.table_id.value}/{mcs.index} is reserved")
    return bler_for_se(sinr_db, mcs.spectral_efficiency, tx_count, model)


def draw_crc(bler_value: float, rng) -> Feedback:
    if not 0.0 <= bler_value <= 1.0:
        raise DomainError(f"BLER must be a probability, got {bler_value}")
    return Feedback.NACK if rng.random() < bler_value else Feedback.ACK


@lru_cache(maxsize=None)
def cqi_thresholds(cqi_table_id, model: BlerModel) -> tuple[float, ...]:
    """Minimum SINR for each CQI 1..15 to meet the 10% BLER target."""
    rows = cqi_table(cqi_table_id)[1:]
    return tuple(snr_at_bler50(r.spectral_efficiency, model) + model.margin_db for r in rows)


def select_cqi(sinr_db: float, cqi_table_id, model: BlerModel) -> int:
    """Highest CQI whose first-transmission BLER at ``sinr_db`` is at most 10%."""
    cqi = 0
    for i, threshold in enumerate(cqi_thresholds(cqi_table_id, model), start=1):
        if sinr_db >= threshold:
            cqi = i
    return cqi
