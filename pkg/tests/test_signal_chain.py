import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plc_pfc.errors import DomainError, OverRangeError, ValidationError
from plc_pfc.phasor import SupplySpec
from plc_pfc.signal_chain import (LOGIC_HIGH_V, LogicSignal, SampledSignal, adc_convert,
                                  clip_negative, comparator, digital_input_level, measure,
                                  peak_detect, phase_from_duty, scale_peak_to_rms, synthesize,
                                  xor_duty)

PHI_024 = 1.3284304757559334  # arccos(0.24)
FS = 20_000.0
N = 400


def square(n_periods, per, offset):
    k = np.arange(n_periods * per)
    return LogicSignal(per * 50.0, 50.0, ((k - offset) % per) < per // 2)


def reference_duty(phi, per, periods):
    """Pure-python comparator + XOR count on the sample grid.

    The reference voltage's sign is taken exactly from k; ``phi`` must not put
    a current crossing on the grid.
    """
    def levels(sign_of):
        out, level = [], False
        for k in range(per * periods):
            x = sign_of(k)
            if x > 0:
                level = True
            elif x < 0:
                level = False
            out.append(level)
        return out

    def v_sign(k):
        r = k % per
        return 0 if r % (per // 2) == 0 else (1 if r < per // 2 else -1)

    v = levels(v_sign)
    i = levels(lambda k: math.sin(2 * math.pi * k / per - phi))
    return sum(a != b for a, b in zip(v, i)) / len(v)


def test_synthesize_one_cycle(supply):
    s = synthesize(1.0, 0.0, supply, 1000.0, 1)
    assert len(s.samples) == 20
    assert s.samples.max() == pytest.approx(math.sqrt(2), abs=1e-12)


def test_synthesize_definition(supply):
    s = synthesize(3.0, PHI_024, supply, FS, 5)
    assert len(s.samples) == 2000
    k = 123
    assert s.samples[k] == pytest.approx(math.sqrt(2) * 3 * math.sin(2 * math.pi * 50 * k / FS - PHI_024))


def test_synthesize_zero_amplitude(supply):
    assert not synthesize(0.0, 0.3, supply, FS, 2).samples.any()


def test_synthesize_rate_too_low(supply):
    with pytest.raises(ValidationError):
        synthesize(1.0, 0.0, supply, 999.0, 1)
    with pytest.raises(ValidationError):
        synthesize(1.0, 0.0, supply, FS, 0)


def test_sampled_signal_needs_a_period():
    with pytest.raises(ValidationError):
        SampledSignal(FS, 50.0, np.zeros(10))


def test_comparator_sine_half_high(supply):
    sq = comparator(synthesize(1.0, 0.3, supply, FS, 1))
    assert abs(int(sq.high.sum()) - N // 2) <= 1
    assert set(np.unique(sq.levels)) <= {0.0, LOGIC_HIGH_V}


def test_comparator_all_negative():
    s = SampledSignal(FS, 50.0, -np.ones(N))
    assert not comparator(s).high.any()


def test_comparator_zero_holds_previous():
    x = np.zeros(N)
    x[:3] = [0.0, 1.0, 0.0]
    x[3:6] = [0.0, -1.0, 0.0]
    high = comparator(SampledSignal(FS, 50.0, x)).high
    assert list(high[:7]) == [False, True, True, True, False, False, False]


def test_comparator_edge_delay(supply):
    phi = 0.7
    sq = comparator(synthesize(1.0, phi, supply, FS, 2))
    rising = np.flatnonzero(sq.high[1:] & ~sq.high[:-1]) + 1
    # first grid index strictly after the delayed zero crossing at phi / (2 pi f)
    expected = math.floor(phi / (2 * math.pi) * N) + 1
    assert rising[0] == expected


def test_xor_identity_and_complement():
    a = square(2, N, 0)
    b = LogicSignal(a.sample_rate, 50.0, ~a.high)
    assert xor_duty(a, a) == 0.0
    assert xor_duty(a, b) == 1.0


def test_xor_quadrature():
    assert xor_duty(square(3, N, 0), square(3, N, N // 4)) == 0.5


def test_xor_length_mismatch():
    with pytest.raises(DomainError):
        xor_duty(square(2, N, 0), square(3, N, 0))


def test_xor_duty_for_no_load_angle(supply):
    v = comparator(synthesize(230.0, 0.0, supply, FS, 5))
    i = comparator(synthesize(3.0, PHI_024, supply, FS, 5))
    duty = xor_duty(v, i)
    assert duty == reference_duty(PHI_024, N, 5)
    assert duty == pytest.approx(0.4228525535409500, abs=2 / N)


@pytest.mark.parametrize("duty, phi", [(0.0, 0.0), (0.5, math.pi / 2), (0.4228525535409500, PHI_024)])
def test_phase_from_duty(duty, phi):
    assert phase_from_duty(duty) == pytest.approx(phi, abs=1e-12)


@pytest.mark.parametrize("duty", [-0.01, 1.01])
def test_phase_from_duty_domain(duty):
    with pytest.raises(DomainError):
        phase_from_duty(duty)


def test_clip_negative(supply):
    pos = SampledSignal(FS, 50.0, np.linspace(0, 1, N))
    assert np.array_equal(clip_negative(pos).samples, pos.samples)
    sine = synthesize(1.0, 0.0, supply, FS, 1)
    half = clip_negative(sine).samples
    assert np.array_equal(half, np.where(sine.samples > 0, sine.samples, 0.0))
    assert not clip_negative(SampledSignal(FS, 50.0, -np.ones(N))).samples.any()


@given(st.lists(st.floats(-1e3, 1e3), min_size=N, max_size=2 * N))
def test_clip_idempotent(values):
    s = SampledSignal(FS, 50.0, values)
    once = clip_negative(s)
    assert np.array_equal(clip_negative(once).samples, once.samples)


def test_peak_of_sine(supply):
    s = synthesize(9.9 / math.sqrt(2), 0.4, supply, FS, 3)
    quantum = 9.9 * (1 - math.cos(math.pi / N))
    assert abs(peak_detect(s) - 9.9) <= quantum


def test_peak_zero_and_halfwave(supply):
    assert peak_detect(SampledSignal(FS, 50.0, np.zeros(N))) == 0.0
    s = clip_negative(synthesize(5 / math.sqrt(2), 0.0, supply, FS, 2))
    assert peak_detect(s) == pytest.approx(5.0, abs=1e-9)


def test_peak_uses_latest_period():
    x = np.concatenate([np.full(N, 8.0), np.full(N, 2.0)])
    assert peak_detect(SampledSignal(FS, 50.0, x)) == 2.0


def test_peak_droop_lowers_hold():
    x = np.zeros(N)
    x[0] = 4.0
    held = peak_detect(SampledSignal(FS, 50.0, x), droop_per_cycle=0.1)
    assert held == pytest.approx(4.0 * math.exp(-0.1 * (N - 1) / N))


@pytest.mark.parametrize("v, code", [(0.0, 0), (10.0, 4095), (5.0, 2048), (-1.0, 0), (12.0, 4095)])
def test_adc(v, code):
    assert adc_convert(v, 10.0, 12) == code


@given(st.floats(-5, 15), st.floats(-5, 15))
def test_adc_monotone_and_half_lsb(a, b):
    lo, hi = sorted((a, b))
    assert adc_convert(lo) <= adc_convert(hi)
    v = min(max(lo, 0.0), 10.0)
    assert abs(adc_convert(lo) * 10.0 / 4095 - v) <= 0.5 * 10.0 / 4095 + 1e-12


@pytest.mark.parametrize("v, prev, level", [
    (24.0, 0, 1), (13.0, 0, 1), (30.0, 0, 1),
    (0.0, 1, 0), (5.0, 1, 0), (-3.0, 1, 0),
    (9.0, 1, 1), (9.0, 0, 0),
])
def test_digital_input_level(v, prev, level):
    assert digital_input_level(v, prev) == level


@pytest.mark.parametrize("v", [30.5, -3.5])
def test_digital_input_over_range(v):
    with pytest.raises(OverRangeError):
        digital_input_level(v, 0)


@pytest.mark.parametrize("peak, ratio, rms", [
    (4.2426, 1.0, 2.99997122986205),
    (0.0, 1.0, 0.0),
    (9.8995, 1.0, 7.00000358035623),
    (1.0, 100.0, 70.7106781186548),
])
def test_scale_peak_to_rms(peak, ratio, rms):
    assert scale_peak_to_rms(peak, ratio) == pytest.approx(rms, rel=1e-12)


@settings(max_examples=200)
@given(st.floats(0.0, math.pi - 0.02), st.sampled_from([20, 40, 100, 400, 1000]))
def test_phase_round_trip(phi, n):
    supply = SupplySpec()
    fs = n * 50.0
    v = comparator(synthesize(1.0, 0.0, supply, fs, 3))
    i = comparator(synthesize(1.0, phi, supply, fs, 3))
    assert abs(phase_from_duty(xor_duty(v, i)) - phi) <= 2 * math.pi / n + 1e-9


@settings(max_examples=200)
@given(st.floats(0.01, 100.0), st.floats(0.0, 2 * math.pi), st.sampled_from([20, 40, 400]))
def test_peak_round_trip(i_rms, lag, n):
    supply = SupplySpec()
    s = synthesize(i_rms, lag, supply, n * 50.0, 2)
    measured = scale_peak_to_rms(peak_detect(s)) * math.sqrt(2)
    true = math.sqrt(2) * i_rms
    assert abs(measured - true) <= true * (1 - math.cos(math.pi / n)) + 1e-12


def test_measure_no_load_point(supply):
    m = measure(3.0, PHI_024, supply)
    assert m.duty == pytest.approx(PHI_024 / math.pi, abs=2 / N)
    assert m.analog_code == adc_convert(m.peak)
    assert m.peak == pytest.approx(3 * math.sqrt(2), rel=1 - math.cos(math.pi / N))
