import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fr2sim.errors import DomainError
from fr2sim.link_adapt import (
    OLLA_CLAMP_DB,
    OllaState,
    TableMode,
    TableModeKind,
    illa_select_mcs,
    olla_update,
    select_table,
    table_crossover_sinr,
)
from fr2sim.nr_tables import McsTable, cqi_table, cqi_table_for, mcs_table
from fr2sim.phy import BlerModel, Feedback
from oracles import illa_scan_oracle


def test_step_up_formula():
    o = OllaState.from_target(0.1, 0.5)
    assert o.step_up_db == pytest.approx(0.5 * 0.1 / 0.9)
    assert o.step_up_db == pytest.approx(0.0556, abs=1e-4)
    with pytest.raises(DomainError):
        OllaState.from_target(1.0)


def test_alternating_drifts_down():
    o = OllaState.from_target()
    for _ in range(100):
        olla_update(o, Feedback.ACK)
        olla_update(o, Feedback.NACK)
    assert o.offset_db < -10


def test_clamp():
    o = OllaState.from_target(offset_db=-15.0)
    for _ in range(10_000):
        olla_update(o, Feedback.ACK)
        assert o.offset_db <= OLLA_CLAMP_DB
    assert o.offset_db == OLLA_CLAMP_DB
    for _ in range(100):
        olla_update(o, Feedback.NACK)
    assert o.offset_db == -OLLA_CLAMP_DB


def test_illa_examples(model):
    o = OllaState.from_target()
    assert illa_select_mcs(15, 3, 2, o, model).index == 27
    assert illa_select_mcs(1, 3, 2, o, model).index == 0
    low = illa_select_mcs(10, 3, 2, OllaState.from_target(offset_db=-3), model)
    assert low.index <= illa_select_mcs(10, 3, 2, o, model).index
    # the floor case: even a mid CQI minus the full clamp lands below row 0
    assert illa_select_mcs(4, 3, 2, OllaState.from_target(offset_db=-15), model).index == 0
    assert illa_select_mcs(15, 3, 2, OllaState.from_target(offset_db=-15), model).index == 10
    with pytest.raises(DomainError):
        illa_select_mcs(0, 3, 2, o, model)


@pytest.mark.parametrize("table", [1, 2, 4])
def test_illa_matches_scan_oracle(table, model):
    ct = cqi_table_for(table)
    rows = [(e.index, None if e.reserved else e.spectral_efficiency) for e in mcs_table(table)]
    for cqi, offset in itertools.product(range(1, 16), np.arange(-15, 15.01, 0.25)):
        got = illa_select_mcs(cqi, ct, table, OllaState.from_target(offset_db=float(offset)), model)
        assert not got.reserved
        want = illa_scan_oracle(cqi_table(ct)[cqi].spectral_efficiency, rows, float(offset))
        assert got.index == want, (cqi, offset)


@given(st.integers(1, 15), st.floats(-15, 15), st.floats(0.01, 3))
def test_illa_monotone_in_offset(cqi, offset, delta):
    m = BlerModel()
    a = illa_select_mcs(cqi, 3, 2, OllaState.from_target(offset_db=offset), m)
    b = illa_select_mcs(cqi, 3, 2, OllaState.from_target(offset_db=offset + delta), m)
    assert a.spectral_efficiency <= b.spectral_efficiency


def test_select_table_fixed_and_adaptive():
    assert select_table(TableMode.fixed(1), 50.0, McsTable.TABLE2) is McsTable.TABLE1
    mode = TableMode(TableModeKind.ADAPTIVE, 22.0, 16.0)
    assert select_table(mode, 25.0, McsTable.TABLE1) is McsTable.TABLE2
    assert select_table(mode, 19.0, McsTable.TABLE2) is McsTable.TABLE2
    assert select_table(mode, 19.0, McsTable.TABLE1) is McsTable.TABLE1
    assert select_table(mode, 15.0, McsTable.TABLE2) is McsTable.TABLE1
    with pytest.raises(DomainError):
        TableMode(TableModeKind.ADAPTIVE, 10.0, 10.0)


@given(st.lists(st.floats(16.01, 21.99), min_size=1, max_size=50))
def test_no_chatter_inside_band(values):
    mode = TableMode(TableModeKind.ADAPTIVE, 22.0, 16.0)
    for start in (McsTable.TABLE1, McsTable.TABLE2):
        cur = start
        for v in values:
            cur = select_table(mode, v, cur)
        assert cur is start


def test_derived_thresholds(model):
    x = table_crossover_sinr(model)
    assert 15.0 < x < 30.0
    mode = TableMode.adaptive(model)
    assert mode.switch_up_sinr_db == pytest.approx(x + 3.0)
    assert mode.switch_down_sinr_db == pytest.approx(x - 3.0)
    assert mode.initial_table() is McsTable.TABLE1


def _olla_nack_rate(step_down, sinr=12.0, n=20_000, seed=3):
    from fr2sim.phy import bler, draw_crc, select_cqi

    m = BlerModel()
    o = OllaState.from_target(0.1, step_down)
    rng = np.random.default_rng(seed)
    cqi = select_cqi(sinr, 3, m)
    nacks = 0
    for _ in range(n):
        e = illa_select_mcs(cqi, 3, 2, o, m)
        fb = draw_crc(bler(sinr, e, 1, m), rng)
        nacks += fb is Feedback.NACK
        olla_update(o, fb)
    return nacks / n


def test_fixed_point_invariant_to_step_scale():
    a = _olla_nack_rate(0.5)
    b = _olla_nack_rate(1.0)
    assert abs(a - 0.1) < 0.02 and abs(b - 0.1) < 0.02
    assert math.isclose(a, b, abs_tol=0.02)
