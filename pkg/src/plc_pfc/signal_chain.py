"""Interfacing-circuit model: waveform synthesis through to PLC input values.

Covers the comparator/XOR phase detector, negative clipping, the peak
detector, the 12-bit ADC and the 24 V digital input thresholds. All
functions are pure and operate on numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, OverRangeError, ValidationError
from .phasor import SupplySpec

LOGIC_HIGH_V = 24.0
LOGIC_LOW_V = 0.0
DEFAULT_SAMPLE_RATE = 20_000.0
MIN_SAMPLES_PER_PERIOD = 20
ZERO_SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class SampledSignal:
    sample_rate: float
    fundamental: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate < MIN_SAMPLES_PER_PERIOD * self.fundamental:
            raise ValidationError(
                f"sample_rate: {self.sample_rate} Hz is below "
                f"{MIN_SAMPLES_PER_PERIOD} x {self.fundamental} Hz")
        if len(self.samples) < self.samples_per_period:
            raise ValidationError("samples: fewer than one fundamental period")

    @property
    def samples_per_period(self) -> int:
        return int(round(self.sample_rate / self.fundamental))

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


@dataclass(frozen=True, eq=False)
class LogicSignal:
    """Two-level signal; ``high`` is True where the line sits at 24 V."""

    sample_rate: float
    fundamental: float
    high: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "high", np.asarray(self.high, dtype=bool))

    @property
    def levels(self) -> np.ndarray:
        return np.where(self.high, LOGIC_HIGH_V, LOGIC_LOW_V)

    @property
    def samples_per_period(self) -> int:
        return int(round(self.sample_rate / self.fundamental))

    def __len__(self):
        return len(self.high)


def synthesize(amplitude_rms: float, phase_lag: float, supply: SupplySpec,
               sample_rate: float = DEFAULT_SAMPLE_RATE, cycles: int = 5) -> SampledSignal:
    """sqrt(2) * A * sin(2 pi f k / fs - lag) for a whole number of cycles."""
    if cycles < 1:
        raise ValidationError(f"cycles: must be >= 1, got {cycles}")
    f = supply.frequency
    if sample_rate < MIN_SAMPLES_PER_PERIOD * f:
        raise ValidationError(
            f"sample_rate: {sample_rate} Hz is below {MIN_SAMPLES_PER_PERIOD} x {f} Hz")
    n = int(round(cycles * sample_rate / f))
    k = np.arange(n)
    peak = math.sqrt(2.0) * amplitude_rms
    samples = peak * np.sin(2.0 * np.pi * f * k / sample_rate - phase_lag)
    # crossings that fall on the grid come out as +-1e-16 noise; make them exact zeros
    samples[np.abs(samples) <= ZERO_SNAP * abs(peak)] = 0.0
    return SampledSignal(sample_rate, f, samples)


def comparator(signal: SampledSignal) -> LogicSignal:
    """Zero-threshold comparator; a sample of exactly 0 keeps the previous level."""
    x = signal.samples
    # +1 / -1 where decided, 0 where the sample is exactly zero
    decided = np.sign(x)
    idx = np.where(decided != 0, np.arange(len(x)), -1)
    last = np.maximum.accumulate(idx)
    # initial level is low until the first non-zero sample
    high = np.where(last >= 0, decided[np.maximum(last, 0)] > 0, False)
    return LogicSignal(signal.sample_rate, signal.fundamental, high)


def xor_signal(a: LogicSignal, b: LogicSignal) -> LogicSignal:
    if len(a) != len(b) or a.sample_rate != b.sample_rate:
        raise DomainError(
            f"cannot XOR signals of length/rate {len(a)}@{a.sample_rate} "
            f"and {len(b)}@{b.sample_rate}")
    return LogicSignal(a.sample_rate, a.fundamental, a.high ^ b.high)


def xor_duty(a: LogicSignal, b: LogicSignal) -> float:
    """High fraction of a XOR b over the whole periods contained in the signals."""
    x = xor_signal(a, b)
    per = x.samples_per_period
    n = (len(x) // per) * per
    if n == 0:
        raise DomainError("signals shorter than one fundamental period")
    return float(np.count_nonzero(x.high[:n])) / n


def phase_from_duty(duty: float) -> float:
    if not 0.0 <= duty <= 1.0:
        raise DomainError(f"duty must lie in [0, 1], got {duty}")
    return math.pi * duty


def clip_negative(signal: SampledSignal) -> SampledSignal:
    return SampledSignal(signal.sample_rate, signal.fundamental,
                         np.maximum(signal.samples, 0.0))


def peak_detect(signal: SampledSignal, droop_per_cycle: float = 0.0) -> float:
    """Value held on the detector capacitor at the end of the signal.

    With ``droop_per_cycle == 0`` this is the maximum over the most recent full
    period. Otherwise the hold decays by ``exp(-droop_per_cycle)`` per period
    and is recharged by any sample above it.
    """
    per = signal.samples_per_period
    window = signal.samples[-per:]
    if droop_per_cycle <= 0.0:
        return float(max(window.max(), 0.0))
    decay = math.exp(-droop_per_cycle / per)
    held = 0.0
    for v in window:
        held = max(float(v), held * decay)
    return held


def adc_convert(voltage: float, full_scale: float = 10.0, bits: int = 12) -> int:
    if not full_scale > 0:
        raise DomainError(f"full_scale must be > 0, got {full_scale}")
    top = 2 ** bits - 1
    v = min(max(voltage, 0.0), full_scale)
    return int(math.floor(v / full_scale * top + 0.5))


def adc_to_volts(code: int, full_scale: float = 10.0, bits: int = 12) -> float:
    return code / (2 ** bits - 1) * full_scale


def digital_input_level(voltage: float, previous: int = 0) -> int:
    """24 V DC sinking input: 13..30 V reads 1, -3..5 V reads 0, else unchanged."""
    if voltage > 30.0 or voltage < -3.0:
        raise OverRangeError(f"digital input at {voltage} V is outside [-3, 30] V")
    if 13.0 <= voltage:
        return 1
    if voltage <= 5.0:
        return 0
    return int(previous)


def scale_peak_to_rms(peak: float, ct_ratio: float = 1.0) -> float:
    if peak < 0:
        raise DomainError(f"peak must be >= 0, got {peak}")
    return peak / math.sqrt(2.0) * ct_ratio


@dataclass(frozen=True)
class Measurement:
    """What the interfacing circuit hands to the PLC for one load state."""

    duty: float
    peak: float
    analog_code: int


def measure(current_rms: float, phase_lag: float, supply: SupplySpec, *,
            sample_rate: float = DEFAULT_SAMPLE_RATE, cycles: int = 5,
            ct_ratio: float = 1.0, adc_full_scale: float = 10.0, adc_bits: int = 12,
            droop_per_cycle: float = 0.0) -> Measurement:
    """Run voltage and current through the phase detector and peak detector."""
    v = synthesize(supply.phase_voltage_rms, 0.0, supply, sample_rate, cycles)
    i = synthesize(current_rms / ct_ratio, phase_lag, supply, sample_rate, cycles)
    duty = xor_duty(comparator(v), comparator(i))
    peak = peak_detect(clip_negative(i), droop_per_cycle)
    return Measurement(duty, peak, adc_convert(peak, adc_full_scale, adc_bits))
