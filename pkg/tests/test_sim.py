import math
from dataclasses import replace

import pytest

from oracles import brute_force_best
from plc_pfc.bank import PAPER_COMBOS, binary_weights
from plc_pfc.controller import ControllerConfig
from plc_pfc.errors import RangeError, ValidationError
from plc_pfc.scenario import FaultInjection, binary_scenario, paper_scenario
from plc_pfc.sim import (dump_waveforms, frange, profile_current, records_csv, run_scenario,
                         settle_duration, sweep)


def test_profile_is_step_held():
    prof = ((0.0, 3.0), (0.5, 5.0), (1.0, 4.0))
    assert profile_current(prof, 0.0) == 3.0
    assert profile_current(prof, 0.49) == 3.0
    assert profile_current(prof, 0.5) == 5.0
    assert profile_current(prof, 7.0) == 4.0


def test_constant_7a_lookup_reaches_combo_c():
    recs = run_scenario(paper_scenario(load_profile=((0.0, 7.0),), duration=2.0))
    last = recs[-1]
    assert last.mask == PAPER_COMBOS[2]
    assert last.motor_pf == 0.41
    assert last.corrected_pf > 0.41
    assert last.q_load == pytest.approx(4423.4, abs=0.5)


def test_zero_duration_rejected():
    with pytest.raises(ValidationError, match="duration"):
        run_scenario(paper_scenario(duration=0.0))


def test_profile_outside_table_is_range_error():
    with pytest.raises(RangeError):
        run_scenario(paper_scenario(load_profile=((0.0, 9.0),), duration=0.1))


def test_constant_4a_greedy_binary():
    recs = run_scenario(binary_scenario(2700.0, 4, load_profile=((0.0, 4.0),), duration=1.0))
    last = recs[-1]
    q_step = 2700.0 / 15
    assert q_step == 180.0
    expected = brute_force_best(binary_weights(2700.0, 4), last.q_load)
    assert expected == pytest.approx(2520.0)
    assert last.q_cap == pytest.approx(expected, rel=1e-12)
    # P = 775.96 W, Q_res = 140.43 VAr
    assert last.corrected_pf == pytest.approx(0.984015409420899, abs=1e-9)
    assert last.lagging


def test_records_satisfy_power_triangle():
    recs = run_scenario(binary_scenario(load_profile=((0.0, 3.0), (0.3, 6.0)), duration=0.6))
    for r in recs:
        s = math.sqrt(3) * 400.0 * r.supply_current
        assert abs(s ** 2 - (r.real_power ** 2 + r.q_residual ** 2)) <= 1e-6 * s ** 2


def test_steady_state_within_bound():
    cfg = binary_scenario(load_profile=((0.0, 5.5),), duration=1.0)
    recs = run_scenario(cfg)
    bound = cfg.controller.debounce_scans + len(cfg.bank) + 1
    masks = {r.mask for r in recs[bound:]}
    assert len(masks) == 1


def test_stuck_open_reduces_q_cap_until_reselect():
    cfg = binary_scenario(load_profile=((0.0, 4.0),), duration=1.0,
                          faults=(FaultInjection(0.5, 3, "stuck_open"),))
    recs = run_scenario(cfg)
    before = [r for r in recs if r.time < 0.5][-1]
    at = next(r for r in recs if r.time >= 0.5)
    assert at.q_cap < before.q_cap
    assert recs[-1].faults == ((3, "stuck_open"),)


def test_sweep_uncompensated_table_1():
    rows = sweep([3, 4, 5, 6, 7], False, paper_scenario())
    assert [r.record.q_load for r in rows] == pytest.approx(
        [2017.8, 2660.4, 3218.3, 3809.8, 4423.4], abs=0.5)
    assert [r.record.motor_pf for r in rows] == [0.24, 0.28, 0.37, 0.40, 0.41]


def test_sweep_empty():
    assert sweep([], True, paper_scenario()) == []


def test_sweep_reports_row_errors():
    rows = sweep([2.0, 4.0], False, paper_scenario())
    assert rows[0].error and rows[0].record is None
    assert rows[1].record is not None


def test_sweep_compensated_4a():
    (row,) = sweep([4.0], True, binary_scenario(2700.0, 4))
    assert row.record.corrected_pf >= 0.95
    assert row.record.lagging


def test_frange_inclusive():
    assert frange(3, 7, 1) == [3, 4, 5, 6, 7]
    assert frange(3, 3.3, 0.1) == [3.0, 3.1, 3.2, 3.3]
    assert frange(5, 3, 1) == []


def test_settle_duration_covers_debounce():
    cfg = binary_scenario()
    assert settle_duration(cfg) >= cfg.controller.debounce_scans * cfg.controller.scan_period


def _lag_from_csv(text):
    rows = [line.split(",") for line in text.strip().split("\n")[1:]]
    v = [float(r[3]) for r in rows]
    i = [float(r[4]) for r in rows]
    x = [float(r[5]) for r in rows]
    return math.pi * sum(x) / len(x), v, i


def test_waveform_header_and_format():
    out = dump_waveforms(3.0, paper_scenario(), cycles=1)["uncompensated"]
    lines = out.split("\n")
    assert lines[0] == "t_s,v_volts,i_amperes,v_square,i_square,xor_level"
    assert lines[1] == "0,0,-4.11864,0,0,0"
    assert "\r" not in out


@pytest.mark.parametrize("current, lag_deg", [(3.0, 76.1134596373710), (7.0, 65.7951651985417)])
def test_waveform_lag(current, lag_deg):
    lag, _, _ = _lag_from_csv(dump_waveforms(current, paper_scenario())["uncompensated"])
    assert math.degrees(lag) == pytest.approx(lag_deg, abs=360 / 400)


def test_waveform_corrected_to_unity_has_no_lag():
    from plc_pfc.sim import waveform_csv
    from plc_pfc.phasor import SupplySpec
    lag, v, i = _lag_from_csv(waveform_csv(SupplySpec(), 1.12, 0.0, 20000.0, 3))
    assert lag == 0.0
    assert v == i


def test_waveform_compensated_output():
    dumps = dump_waveforms(4.0, binary_scenario(), compensated=True)
    lag_u, _, _ = _lag_from_csv(dumps["uncompensated"])
    lag_c, _, _ = _lag_from_csv(dumps["compensated"])
    assert lag_c < lag_u


def test_csv_is_deterministic():
    cfg = binary_scenario(load_profile=((0.0, 3.0), (0.2, 6.0)), duration=0.5)
    assert records_csv(run_scenario(cfg)) == records_csv(run_scenario(cfg))


def test_stuck_closed_is_compensated_around():
    cfg = binary_scenario(load_profile=((0.0, 4.0),), duration=1.0,
                          faults=(FaultInjection(0.0, 3, "stuck_closed"),))
    last = run_scenario(cfg)[-1]
    assert (3, "stuck_closed") in last.faults
    assert last.q_cap <= last.q_load
    # 1440 fixed; best of 180/360/720 within the remaining 1220 is 1080
    assert last.q_cap == pytest.approx(2520.0)


def test_bank_sized_for_full_load_reaches_095_everywhere():
    # 4500 VAr covers the 4423 VAr drawn at 7 A; steps of 145 VAr keep the residual small
    rows = sweep([3, 4, 5, 6, 7], True, binary_scenario(4500.0, 5))
    for row in rows:
        assert row.record.corrected_pf >= 0.95
        assert row.record.lagging
        assert row.record.q_cap <= row.record.q_load


def test_undersized_bank_saturates():
    # a 2700 VAr bank is fully engaged from 5 A upward and cannot reach 0.95 there
    rows = sweep([5, 6, 7], True, binary_scenario(2700.0, 4))
    for row in rows:
        assert row.record.mask == (1, 1, 1, 1)
        assert row.record.corrected_pf < 0.95
