"""Closed-loop time stepping, sweeps and CSV output."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .bank import (BankState, CapacitorUnit, advance, bank_reactive_power, command_switches,
                   make_bank, set_health)
from .controller import ControllerConfig, ScanImage, initial_state, scan
from .errors import RangeError, ValidationError
from .motor import lookup_point
from .phasor import OperatingPoint, SupplySpec, corrected_point
from .scenario import ScenarioConfig, validate_scenario
from .signal_chain import Measurement, comparator, measure, synthesize, xor_signal


@dataclass(frozen=True)
class SimRecord:
    time: float
    load_current: float
    motor_pf: float
    speed: float | None
    real_power: float
    q_load: float
    mask: tuple[int, ...]
    q_cap: float
    corrected_pf: float
    # supply-side line current after compensation
    supply_current: float
    lagging: bool
    faults: tuple[tuple[int, str], ...] = ()
    measurement_fault: bool = False
    measured_current: float | None = None
    measured_pf: float | None = None
    # (unit, time) of engagements that took effect during this step
    engagements: tuple[tuple[int, float], ...] = ()

    @property
    def q_residual(self) -> float:
        return self.q_load - self.q_cap


def profile_current(profile: Sequence[tuple[float, float]], t: float) -> float:
    """Step-held load current at time ``t``."""
    current = profile[0][1]
    for tb, ib in profile:
        if tb <= t + 1e-12:
            current = ib
        else:
            break
    return current


def _measurement_fn(cfg: ScenarioConfig):
    cache: dict[tuple[float, float], Measurement] = {}
    ctl, sig = cfg.controller, cfg.signal

    def get(point: OperatingPoint) -> Measurement:
        key = (point.line_current_rms, point.power_factor)
        if key not in cache:
            cache[key] = measure(
                point.line_current_rms, point.phase_angle, cfg.supply,
                sample_rate=sig.sample_rate, cycles=sig.cycles, ct_ratio=ctl.ct_ratio,
                adc_full_scale=ctl.adc_full_scale, adc_bits=ctl.adc_bits,
                droop_per_cycle=sig.droop_per_cycle)
        return cache[key]

    return get


def _effective_controller(cfg: ScenarioConfig) -> ControllerConfig:
    # selection margin must cover the phase resolution of the sampled detector
    resolution = 2.0 * math.pi * cfg.supply.frequency / cfg.signal.sample_rate
    ctl = cfg.controller
    if ctl.phase_margin < resolution:
        ctl = replace(ctl, phase_margin=resolution)
    return ctl


def run_scenario(cfg: ScenarioConfig) -> list[SimRecord]:
    """Step the closed loop once per scan period over ``cfg.duration``.

    Raises ValidationError before stepping if the config is inconsistent and
    RangeError if the profile leaves the load table.
    """
    problems = validate_scenario(cfg)
    if problems:
        raise ValidationError(problems)
    supply = cfg.supply
    ctl = _effective_controller(cfg)
    get_measurement = _measurement_fn(cfg)

    bank = make_bank(cfg.bank)
    cstate = initial_state(len(bank))
    injections = sorted(cfg.faults, key=lambda f: f.time)
    next_injection = 0
    n_steps = max(1, int(math.floor(cfg.duration / ctl.scan_period + 1e-9)))

    records = []
    for k in range(n_steps):
        t = k * ctl.scan_period
        logged = len(bank.engagement_log)
        while next_injection < len(injections) and injections[next_injection].time <= t + 1e-12:
            f = injections[next_injection]
            bank = set_health(bank, f.unit, f.health)
            next_injection += 1
        bank = advance(bank, t)

        point = lookup_point(cfg.load_table, profile_current(cfg.load_profile, t), supply)
        m = get_measurement(point)
        image = ScanImage(m.duty, m.analog_code, bank.command_bits, bank.readback_bits)
        desired, cstate = scan(image, ctl, cstate, supply, bank)
        bank = command_switches(bank, desired, t, supply)

        records.append(_record(t, point, bank, supply, cstate))
        if len(bank.engagement_log) > logged:
            records[-1] = replace(records[-1], engagements=bank.engagement_log[logged:])
    return records


def _record(t, point, bank: BankState, supply, cstate=None) -> SimRecord:
    q_cap = bank_reactive_power(bank, supply)
    corr = corrected_point(supply, point, q_cap)
    last = cstate.last if cstate is not None else None
    return SimRecord(
        time=t,
        load_current=point.line_current_rms,
        motor_pf=point.power_factor,
        speed=point.speed,
        real_power=point.real_power,
        q_load=point.reactive_power,
        mask=bank.command_bits,
        q_cap=q_cap,
        corrected_pf=corr.power_factor,
        supply_current=corr.line_current_rms,
        lagging=corr.lagging,
        faults=tuple((i, h.value) for i, h in cstate.latched) if cstate is not None else (),
        measurement_fault=cstate.measurement_fault if cstate is not None else False,
        measured_current=last.current_rms if last else None,
        measured_pf=last.power_factor if last else None,
    )


def settle_duration(cfg: ScenarioConfig) -> float:
    """Time after which a constant load has reached its steady relay mask."""
    ctl = cfg.controller
    scans = ctl.debounce_scans + len(cfg.bank) + 2
    return scans * ctl.scan_period + 1.0 / (2.0 * cfg.supply.frequency)


@dataclass(frozen=True)
class SweepRow:
    current: float
    record: SimRecord | None = None
    error: str | None = None


def _uncompensated(cfg: ScenarioConfig, current: float) -> SimRecord:
    point = lookup_point(cfg.load_table, current, cfg.supply)
    return _record(0.0, point, make_bank(cfg.bank), cfg.supply)


def sweep(currents: Iterable[float], compensate: bool, cfg: ScenarioConfig) -> list[SweepRow]:
    """One row per constant load current; failing rows carry an error instead."""
    rows = []
    duration = max(cfg.duration, settle_duration(cfg))
    for current in currents:
        try:
            if compensate:
                run = replace(cfg, load_profile=((0.0, float(current)),), faults=(),
                              duration=duration)
                record = run_scenario(run)[-1]
            else:
                record = _uncompensated(cfg, float(current))
            rows.append(SweepRow(float(current), record))
        except RangeError as exc:
            rows.append(SweepRow(float(current), error=str(exc)))
    return rows


def frange(start: float, stop: float, step: float) -> list[float]:
    """Inclusive float range that avoids accumulating rounding error."""
    if step <= 0:
        raise ValidationError(f"step: must be > 0, got {step}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + k * step, 12) for k in range(n + 1)] if n >= 0 else []


# --- CSV -----------------------------------------------------------------------

def fmt(x) -> str:
    """Six significant digits; negative zero is written as 0."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x == 0:
        x = 0.0
    return f"{float(x):.6g}"


RECORD_COLUMNS = (
    "t_s", "motor_current_a", "motor_pf", "speed_rpm", "p_w", "q_load_var", "mask",
    "q_cap_var", "q_res_var", "corrected_pf", "supply_current_a", "lagging",
    "measured_current_a", "measured_pf", "measurement_fault", "faults",
)


def _record_cells(r: SimRecord) -> list[str]:
    return [
        fmt(r.time), fmt(r.load_current), fmt(r.motor_pf), fmt(r.speed), fmt(r.real_power),
        fmt(r.q_load), "".join(str(b) for b in r.mask), fmt(r.q_cap), fmt(r.q_residual),
        fmt(r.corrected_pf), fmt(r.supply_current), fmt(r.lagging),
        fmt(r.measured_current), fmt(r.measured_pf), fmt(r.measurement_fault),
        ";".join(f"u{i}:{h}" for i, h in r.faults),
    ]


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def write_records(records: Iterable[SimRecord], out) -> None:
    w = _writer(out)
    w.writerow(RECORD_COLUMNS)
    for r in records:
        w.writerow(_record_cells(r))


def write_sweep(rows: Iterable[SweepRow], out) -> None:
    w = _writer(out)
    w.writerow(RECORD_COLUMNS + ("error",))
    for row in rows:
        if row.record is None:
            cells = [""] * len(RECORD_COLUMNS)
            cells[1] = fmt(row.current)
            w.writerow(cells + [row.error])
        else:
            w.writerow(_record_cells(row.record) + [""])


def records_csv(records: Iterable[SimRecord]) -> str:
    buf = io.StringIO()
    write_records(records, buf)
    return buf.getvalue()


# --- waveforms -----------------------------------------------------------------

WAVEFORM_COLUMNS = ("t_s", "v_volts", "i_amperes", "v_square", "i_square", "xor_level")


def waveform_csv(supply: SupplySpec, current_rms: float, phase_lag: float,
                 sample_rate: float, cycles: int) -> str:
    """Phase voltage, line current and the phase-detector logic levels (0/1)."""
    v = synthesize(supply.phase_voltage_rms, 0.0, supply, sample_rate, cycles)
    i = synthesize(current_rms, phase_lag, supply, sample_rate, cycles)
    vs, is_ = comparator(v), comparator(i)
    x = xor_signal(vs, is_)
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(WAVEFORM_COLUMNS)
    for row in zip(v.times, v.samples, i.samples, vs.high, is_.high, x.high):
        w.writerow([fmt(row[0]), fmt(row[1]), fmt(row[2]),
                    fmt(bool(row[3])), fmt(bool(row[4])), fmt(bool(row[5]))])
    return buf.getvalue()


def dump_waveforms(current: float, cfg: ScenarioConfig, sample_rate: float | None = None,
                   cycles: int = 5, compensated: bool = False) -> dict[str, str]:
    """Waveform CSVs keyed ``"uncompensated"`` and, if requested, ``"compensated"``."""
    supply = cfg.supply
    fs = sample_rate or cfg.signal.sample_rate
    point = lookup_point(cfg.load_table, current, supply)
    out = {"uncompensated": waveform_csv(supply, current, point.phase_angle, fs, cycles)}
    if compensated:
        row = sweep([current], True, cfg)[0]
        if row.record is None:
            raise RangeError(row.error)
        corr = corrected_point(supply, point, row.record.q_cap)
        out["compensated"] = waveform_csv(supply, corr.line_current_rms, corr.phase_angle, fs, cycles)
    return out
