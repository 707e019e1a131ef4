"""TDD airtime, HARQ bookkeeping, single-UE scheduling and MAC/PHY accounting."""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

from .errors import DomainError
from .link_adapt import OllaState, TableMode, illa_select_mcs, olla_update, select_table
from .nr_tables import McsEntry, TbsInput, compute_tbs, cqi_table_for
from .phy import BlerModel, Feedback, bler, select_cqi

SLOTS_PER_SECOND_120KHZ = 8000
QM_ORDERS = (2, 4, 6, 8, 10)


@dataclass(frozen=True)
class TddPattern:
    """Periodic slot pattern: DL slots, one special slot, then UL slots."""

    period_slots: int = 5
    dl_slots: int = 3
    special_dl_symbols: int = 10
    special_ul_symbols: int = 1
    ul_slots: int = 1
    slot_duration_s: float = 1.0 / SLOTS_PER_SECOND_120KHZ

    def __post_init__(self):
        if self.dl_slots + self.ul_slots + 1 != self.period_slots:
            raise DomainError("dl_slots + ul_slots + 1 special slot must equal period_slots")
        if self.special_dl_symbols + self.special_ul_symbols > 14:
            raise DomainError("special slot symbols exceed 14")

    @property
    def dl_symbol_fraction(self) -> float:
        return (14 * self.dl_slots + self.special_dl_symbols) / (14 * self.period_slots)


def dl_symbols_in_slot(pattern: TddPattern, slot_index: int) -> int:
    pos = slot_index % pattern.period_slots
    if pos < pattern.dl_slots:
        return 14
    if pos == pattern.dl_slots:
        return pattern.special_dl_symbols
    return 0


def is_ul_slot(pattern: TddPattern, slot_index: int) -> bool:
    return slot_index % pattern.period_slots > pattern.dl_slots


def next_ul_slot(pattern: TddPattern, earliest: int) -> int:
    slot = earliest
    while not is_ul_slot(pattern, slot):
        slot += 1
    return slot


class HarqOutcome(enum.Enum):
    COMPLETED = "completed"
    RETRANSMIT = "retransmit"
    DROPPED = "dropped"


@dataclass
class HarqProcess:
    id: int
    tb_bits: int = 0
    mcs: McsEntry | None = None
    tx_count: int = 0
    max_tx: int = 4
    active: bool = False
    first_tx_slot: int = -1
    n_symbols: int = 0


def process_feedback(process: HarqProcess, feedback: Feedback) -> HarqOutcome:
    if not process.active:
        raise DomainError(f"feedback for inactive HARQ process {process.id}")
    if feedback is Feedback.ACK:
        process.active = False
        return HarqOutcome.COMPLETED
    if process.tx_count < process.max_tx:
        process.tx_count += 1
        return HarqOutcome.RETRANSMIT
    process.active = False
    return HarqOutcome.DROPPED


@dataclass
class SlotRecord:
    slot_index: int
    time_s: float
    distance_m: float
    rsrp_dbm: float
    sinr_db: float
    table_id: int
    mcs_index: int
    qm: int
    n_prb: int
    tbs_bits: int
    new_tx: bool
    ack: bool


@dataclass
class RunMetrics:
    mac_throughput_bps: float = 0.0
    phy_throughput_bps: float = 0.0
    retx_rate: float = 0.0
    modulation_utilization: dict = field(default_factory=dict)
    mean_rsrp_dbm: float = math.nan
    n_transmissions: int = 0
    n_retransmissions: int = 0
    n_dropped: int = 0
    duration_s: float = 0.0
    dl_symbol_fraction: float = math.nan
    slot_records: list | None = None

    @property
    def mac_mbps(self) -> float:
        return self.mac_throughput_bps / 1e6

    @property
    def phy_mbps(self) -> float:
        return self.phy_throughput_bps / 1e6

    def utilization_share(self, qm: int) -> float:
        return self.modulation_utilization.get(qm, 0.0)


def accumulate_metrics(records, duration_s: float | None = None) -> RunMetrics:
    """Throughput, retransmission rate and PRB-weighted modulation shares.

    A TB contributes to MAC throughput once, on the transmission that was
    ACKed. Without ``duration_s`` the record time span is used.
    """
    records = list(records)
    if not records:
        return RunMetrics(duration_s=duration_s or 0.0)
    if duration_s is None:
        times = [r.time_s for r in records]
        duration_s = max(times) - min(times) + 1.0 / SLOTS_PER_SECOND_120KHZ
    mac_bits = math.fsum(r.tbs_bits for r in records if r.ack)
    phy_bits = math.fsum(r.tbs_bits for r in records)
    n_retx = sum(1 for r in records if not r.new_tx)
    prb = {}
    for r in records:
        prb[r.qm] = prb.get(r.qm, 0) + r.n_prb
    total_prb = sum(prb.values())
    return RunMetrics(
        mac_throughput_bps=mac_bits / duration_s,
        phy_throughput_bps=phy_bits / duration_s,
        retx_rate=n_retx / len(records),
        modulation_utilization={qm: prb[qm] / total_prb for qm in sorted(prb)},
        mean_rsrp_dbm=math.fsum(r.rsrp_dbm for r in records) / len(records),
        n_transmissions=len(records),
        n_retransmissions=n_retx,
        duration_s=duration_s,
    )


@dataclass
class _PendingFeedback:
    due_slot: int
    process: HarqProcess
    feedback: Feedback
    was_first_tx: bool


@dataclass(frozen=True)
class PhyConfig:
    n_prb: int = 66
    n_layers: int = 2
    n_dmrs_re_per_prb: int = 12
    x_overhead: int = 0
    control_symbols: int = 1
    n_harq_processes: int = 16
    max_tx: int = 4
    feedback_delay_slots: int = 2


class UeScheduler:
    """Full-buffer scheduler for one UE that owns all PRBs of the carrier.

    Feedback for a slot-k transmission arrives in the first UL slot at or
    after k + feedback_delay_slots; a NACKed TB is retransmitted, with its
    original MCS and TBS, in the next DL slot.
    """

    def __init__(self, pattern: TddPattern, phy: PhyConfig, table_mode: TableMode,
                 bler_model: BlerModel, olla: OllaState, sinr_filter_alpha: float = 0.5):
        self.pattern = pattern
        self.phy = phy
        self.table_mode = table_mode
        self.bler_model = bler_model
        self.olla = olla
        self.table = table_mode.initial_table()
        self.processes = [HarqProcess(i, max_tx=phy.max_tx) for i in range(phy.n_harq_processes)]
        self.retx_queue: deque[HarqProcess] = deque()
        self.pending: deque[_PendingFeedback] = deque()
        self.reported_sinr_db: float | None = None
        self.filtered_sinr_db: float | None = None
        self.sinr_filter_alpha = sinr_filter_alpha
        self.n_dropped = 0
        self._cqi_cache: dict = {}
        self._tbs_cache: dict = {}

    def report_csi(self, sinr_db: float):
        """Take a (possibly stale) wideband SINR measurement as the new CSI report."""
        self.reported_sinr_db = sinr_db
        if self.filtered_sinr_db is None:
            self.filtered_sinr_db = sinr_db
        else:
            a = self.sinr_filter_alpha
            self.filtered_sinr_db = a * sinr_db + (1.0 - a) * self.filtered_sinr_db
        self.table = select_table(self.table_mode, self.filtered_sinr_db, self.table)
        self._cqi_cache.clear()

    @property
    def cqi(self) -> int:
        if self.reported_sinr_db is None:
            return 0
        cqi = self._cqi_cache.get(self.table)
        if cqi is None:
            cqi = select_cqi(self.reported_sinr_db, cqi_table_for(self.table), self.bler_model)
            self._cqi_cache[self.table] = cqi
        return cqi

    def tbs(self, mcs: McsEntry, dl_symbols: int) -> int:
        key = (mcs, dl_symbols)
        tbs = self._tbs_cache.get(key)
        if tbs is None:
            tbs = compute_tbs(TbsInput(
                n_prb=self.phy.n_prb,
                n_symbols_data=dl_symbols - self.phy.control_symbols,
                mcs=mcs,
                n_dmrs_re_per_prb=self.phy.n_dmrs_re_per_prb,
                x_overhead=self.phy.x_overhead,
                n_layers=self.phy.n_layers,
            ))
            self._tbs_cache[key] = tbs
        return tbs

    def deliver_feedback(self, slot_index: int):
        """Apply all HARQ feedback due by ``slot_index`` (call on every slot)."""
        while self.pending and self.pending[0].due_slot <= slot_index:
            fb = self.pending.popleft()
            if fb.was_first_tx:
                olla_update(self.olla, fb.feedback)
            outcome = process_feedback(fb.process, fb.feedback)
            if outcome is HarqOutcome.RETRANSMIT:
                self.retx_queue.append(fb.process)
            elif outcome is HarqOutcome.DROPPED:
                self.n_dropped += 1

    def schedule_slot(self, slot_index: int):
        """Pick what to send in a slot: (process, is_new) or None."""
        dl_symbols = dl_symbols_in_slot(self.pattern, slot_index)
        if dl_symbols <= self.phy.control_symbols:
            return None
        if self.retx_queue:
            return self.retx_queue.popleft(), False
        cqi = self.cqi
        if cqi == 0:
            return None
        proc = next((p for p in self.processes if not p.active), None)
        if proc is None:
            return None
        mcs = illa_select_mcs(cqi, cqi_table_for(self.table), self.table, self.olla, self.bler_model)
        proc.mcs = mcs
        proc.tb_bits = self.tbs(mcs, dl_symbols)
        proc.tx_count = 1
        proc.active = True
        proc.first_tx_slot = slot_index
        proc.n_symbols = dl_symbols
        return proc, True

    def transmit(self, slot_index: int, sinr_db: float, uniform: float):
        """Schedule a slot and resolve its CRC; returns (process, is_new, ack) or None."""
        choice = self.schedule_slot(slot_index)
        if choice is None:
            return None
        proc, is_new = choice
        p_err = bler(sinr_db, proc.mcs, proc.tx_count, self.bler_model)
        feedback = Feedback.NACK if uniform < p_err else Feedback.ACK
        due = next_ul_slot(self.pattern, slot_index + self.phy.feedback_delay_slots)
        self.pending.append(_PendingFeedback(due, proc, feedback, is_new))
        return proc, is_new, feedback is Feedback.ACK
