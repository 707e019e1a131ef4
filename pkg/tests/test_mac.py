import pytest

from fr2sim.errors import DomainError
from fr2sim.link_adapt import OllaState, TableMode
from fr2sim.mac import (
    HarqOutcome,
    HarqProcess,
    PhyConfig,
    SlotRecord,
    TddPattern,
    UeScheduler,
    accumulate_metrics,
    dl_symbols_in_slot,
    is_ul_slot,
    next_ul_slot,
    process_feedback,
)
from fr2sim.phy import BlerModel, Feedback


def test_pattern():
    p = TddPattern()
    assert [dl_symbols_in_slot(p, k) for k in range(5)] == [14, 14, 14, 10, 0]
    assert dl_symbols_in_slot(p, 7) == dl_symbols_in_slot(p, 2)
    assert p.dl_symbol_fraction == pytest.approx(52 / 70)
    assert is_ul_slot(p, 4) and not is_ul_slot(p, 3)
    assert next_ul_slot(p, 2) == 4 and next_ul_slot(p, 5) == 9
    with pytest.raises(DomainError):
        TddPattern(period_slots=6)
    with pytest.raises(DomainError):
        TddPattern(special_dl_symbols=12, special_ul_symbols=3)


def test_process_feedback():
    p = HarqProcess(0, active=True, tx_count=1)
    assert process_feedback(p, Feedback.ACK) is HarqOutcome.COMPLETED and not p.active
    p = HarqProcess(0, active=True, tx_count=1)
    assert process_feedback(p, Feedback.NACK) is HarqOutcome.RETRANSMIT and p.tx_count == 2
    p = HarqProcess(0, active=True, tx_count=4, max_tx=4)
    assert process_feedback(p, Feedback.NACK) is HarqOutcome.DROPPED and not p.active
    with pytest.raises(DomainError):
        process_feedback(HarqProcess(1), Feedback.ACK)


def rec(slot, new_tx=True, ack=True, qm=8, tbs=1000, n_prb=66):
    return SlotRecord(slot, slot / 8000, 10.0, -80.0, 20.0, 2, 10, qm, n_prb, tbs, new_tx, ack)


def test_accumulate_examples():
    m = accumulate_metrics([rec(k) for k in range(10)], duration_s=1.0)
    assert m.retx_rate == 0 and m.mac_throughput_bps == m.phy_throughput_bps == 10_000
    recs = []
    for k in range(0, 20, 2):
        recs += [rec(k, True, False), rec(k + 1, False, True)]
    m = accumulate_metrics(recs, duration_s=1.0)
    assert m.retx_rate == 0.5
    assert m.mac_throughput_bps == 10_000 and m.phy_throughput_bps == 20_000
    m = accumulate_metrics([rec(0, qm=6), rec(1, qm=8), rec(2, qm=8, n_prb=132)], duration_s=1.0)
    assert sum(m.modulation_utilization.values()) == pytest.approx(1.0)
    assert m.modulation_utilization[6] == pytest.approx(0.25)
    empty = accumulate_metrics([])
    assert empty.mac_throughput_bps == 0 and empty.modulation_utilization == {}


def sched(**kw):
    return UeScheduler(TddPattern(), PhyConfig(**kw), TableMode.fixed(2), BlerModel(),
                       OllaState.from_target())


def test_scheduler_basics():
    s = sched()
    assert s.schedule_slot(0) is None  # no CSI yet
    s.report_csi(60.0)
    assert s.cqi == 15
    proc, new = s.schedule_slot(0)
    assert new and proc.mcs.index == 27 and proc.tb_bits == 139376
    assert s.schedule_slot(4) is None  # UL slot
    proc, new = s.schedule_slot(3)
    assert proc.tb_bits == 94248


def test_retransmission_keeps_tbs_and_mcs():
    s = sched()
    s.report_csi(60.0)
    proc, new, ack = s.transmit(0, -30.0, 0.5)  # certain NACK
    assert not ack
    first = (proc.mcs, proc.tb_bits)
    s.deliver_feedback(3)
    assert not s.retx_queue  # feedback not due before the UL slot
    s.deliver_feedback(4)
    assert list(s.retx_queue) == [proc]
    again, is_new, _ = s.transmit(5, 60.0, 0.5)
    assert again is proc and not is_new and (again.mcs, again.tb_bits) == first
    assert again.tx_count == 2


def test_drop_after_max_tx():
    s = sched(max_tx=2)
    s.report_csi(60.0)
    s.transmit(0, -40.0, 0.99)
    s.deliver_feedback(4)
    s.transmit(5, -40.0, 0.99)
    s.deliver_feedback(9)
    assert s.n_dropped == 1 and not s.retx_queue


def test_process_pool_exhaustion():
    s = sched(n_harq_processes=2)
    s.report_csi(60.0)
    assert s.transmit(0, 60.0, 0.5) is not None
    assert s.transmit(1, 60.0, 0.5) is not None
    assert s.transmit(2, 60.0, 0.5) is None
    s.deliver_feedback(4)
    assert s.transmit(5, 60.0, 0.5) is not None
