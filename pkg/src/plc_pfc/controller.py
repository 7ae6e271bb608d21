"""Scan-cycle power-factor controller.

Each scan decodes the PLC input image (XOR duty and the peak-detector ADC
code), estimates the load's lagging reactive power, picks a capacitor
combination, debounces the choice and watches the relay readback port for
stuck switches.
"""

from __future__ import annotations

import bisect
import enum
import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

from .bank import PAPER_COMBOS, BankState, Health, unit_weights
from .errors import ValidationError
from .phasor import SQRT3, SupplySpec
from .signal_chain import DEFAULT_SAMPLE_RATE, adc_to_volts, phase_from_duty, scale_peak_to_rms

MAX_EXACT_UNITS = 16


class Mode(str, enum.Enum):
    LOOKUP = "lookup"
    GREEDY = "greedy"


@dataclass(frozen=True)
class ControllerConfig:
    mode: Mode = Mode.GREEDY
    # region edges in A: A below the first, B up to the last, C from the last on;
    # the middle edge is where the described B range ends
    region_thresholds: tuple[float, float, float] = (3.9, 5.2, 6.0)
    # region for currents between the middle and last edge
    gap_region: str = "B"
    combo_presets: tuple[tuple[int, ...], ...] = PAPER_COMBOS
    # reported against, not servoed
    target_pf: float = 0.95
    # None: half the smallest bank step
    deadband: float | None = None
    debounce_scans: int = 5
    fault_scans: int = 3
    scan_period: float = 0.01
    per_phase: bool = False
    ct_ratio: float = 1.0
    adc_full_scale: float = 10.0
    adc_bits: int = 12
    # phase resolution of the XOR detector; subtracted before selection
    phase_margin: float = 2.0 * math.pi * 50.0 / DEFAULT_SAMPLE_RATE

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "region_thresholds",
                           tuple(float(t) for t in self.region_thresholds))
        object.__setattr__(self, "combo_presets",
                           tuple(tuple(int(b) for b in m) for m in self.combo_presets))
        problems = []
        t = self.region_thresholds
        if len(t) != 3 or not all(a < b for a, b in zip(t, t[1:])):
            problems.append(f"controller.region_thresholds: must be 3 strictly increasing values, got {t}")
        if self.gap_region not in ("B", "C"):
            problems.append(f"controller.gap_region: must be 'B' or 'C', got {self.gap_region!r}")
        if len(self.combo_presets) != 3:
            problems.append(f"controller.combo_presets: need 3 masks, got {len(self.combo_presets)}")
        if not 0.0 < self.target_pf <= 1.0:
            problems.append(f"controller.target_pf: must lie in (0, 1], got {self.target_pf}")
        if self.deadband is not None and self.deadband < 0:
            problems.append(f"controller.deadband: must be >= 0, got {self.deadband}")
        if self.debounce_scans < 1:
            problems.append(f"controller.debounce_scans: must be >= 1, got {self.debounce_scans}")
        if self.fault_scans < 1:
            problems.append(f"controller.fault_scans: must be >= 1, got {self.fault_scans}")
        if not self.scan_period > 0:
            problems.append(f"controller.scan_period: must be > 0, got {self.scan_period}")
        if not self.ct_ratio > 0:
            problems.append(f"controller.ct_ratio: must be > 0, got {self.ct_ratio}")
        if not self.adc_full_scale > 0:
            problems.append(f"controller.adc_full_scale: must be > 0, got {self.adc_full_scale}")
        if self.phase_margin < 0:
            problems.append(f"controller.phase_margin: must be >= 0, got {self.phase_margin}")
        if problems:
            raise ValidationError(problems)

    @property
    def adc_top(self) -> int:
        return 2 ** self.adc_bits - 1


@dataclass(frozen=True)
class ScanImage:
    duty_accumulator: float
    analog_code: int
    digital_out: tuple[int, ...]
    readback_in: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "digital_out", tuple(int(b) for b in self.digital_out))
        object.__setattr__(self, "readback_in", tuple(int(b) for b in self.readback_in))
        if len(self.digital_out) != len(self.readback_in):
            raise ValidationError("image: digital_out and readback_in differ in length")


@dataclass(frozen=True)
class Reading:
    """Decoded measurement from one scan."""

    current_rms: float
    phase: float
    power_factor: float
    q_load: float
    # lower bound used for selection
    q_conservative: float
    candidate: tuple[int, ...]


@dataclass(frozen=True)
class ControllerState:
    pending_mask: tuple[int, ...] | None = None
    stable_count: int = 0
    mismatch_counts: tuple[int, ...] = ()
    latched: tuple[tuple[int, Health], ...] = ()
    measurement_fault: bool = False
    scans: int = 0
    last: Reading | None = field(default=None, compare=False)

    @property
    def faults(self) -> dict[int, Health]:
        return dict(self.latched)


def initial_state(n_units: int) -> ControllerState:
    return ControllerState(mismatch_counts=(0,) * n_units)


# --- selection -----------------------------------------------------------------

def _mask_from(indices, n):
    chosen = set(indices)
    return tuple(int(i in chosen) for i in range(n))


def _total(weights, indices) -> float:
    return math.fsum(weights[i] for i in indices)


def is_binary_weighted(weights: Sequence[float], rel_tol: float = 1e-9) -> bool:
    w = sorted(weights)
    if not w or w[0] <= 0:
        return False
    return all(math.isclose(b, 2.0 * a, rel_tol=rel_tol) for a, b in zip(w, w[1:]))


def largest_first(weights: Sequence[float], capacity: float,
                  candidates: Sequence[int] | None = None) -> list[int]:
    """Take units in descending weight order whenever they still fit."""
    if candidates is None:
        candidates = range(len(weights))
    chosen: list[int] = []
    for i in sorted(candidates, key=lambda i: (-weights[i], i)):
        if _total(weights, chosen + [i]) <= capacity:
            chosen.append(i)
    return sorted(chosen)


def _half_sums(weights, idx):
    out = []
    for r in range(len(idx) + 1):
        for combo in itertools.combinations(idx, r):
            out.append((_total(weights, combo), combo))
    out.sort(key=lambda s: (s[0], len(s[1]), s[1]))
    return out


def best_subset(weights: Sequence[float], capacity: float,
                candidates: Sequence[int] | None = None) -> list[int]:
    """Exact maximum-total subset with total <= capacity (meet in the middle).

    Ties prefer fewer units, then lower indices.
    """
    if candidates is None:
        candidates = list(range(len(weights)))
    candidates = sorted(candidates)
    if len(candidates) > MAX_EXACT_UNITS:
        raise ValidationError(f"bank: at most {MAX_EXACT_UNITS} selectable units, got {len(candidates)}")
    if capacity < 0:
        return []
    mid = len(candidates) // 2
    left = _half_sums(weights, candidates[:mid])
    right = _half_sums(weights, candidates[mid:])
    right_sums = [s for s, _ in right]
    best_key = None
    best: tuple[int, ...] = ()
    for s_left, c_left in left:
        if s_left > capacity:
            break
        j = bisect.bisect_right(right_sums, capacity - s_left) - 1
        # step down past any float-rounding overshoot of the exact total
        while j >= 0:
            combo = tuple(sorted(c_left + right[j][1]))
            total = _total(weights, combo)
            if total <= capacity:
                break
            j -= 1
        if j < 0:
            continue
        key = (total, -len(combo), tuple(-i for i in combo))
        if best_key is None or key > best_key:
            best_key, best = key, combo
    return list(best)


def select_greedy(q_load: float, bank: BankState, supply: SupplySpec,
                  cfg: ControllerConfig | None = None,
                  faults: dict[int, Health] | None = None, *,
                  single_phase: bool = False) -> tuple[int, ...]:
    """Largest bank VAr that does not exceed ``q_load``.

    Latched stuck-closed units are counted as already injecting; latched
    units of either kind are never selected.
    """
    faults = faults or {}
    weights = unit_weights(bank, supply)
    if single_phase:
        weights = [w / 3.0 for w in weights]
    fixed = _total(weights, [i for i, h in faults.items() if h is Health.STUCK_CLOSED])
    capacity = q_load - fixed
    free = [i for i in range(len(weights)) if i not in faults]
    if is_binary_weighted([weights[i] for i in free]):
        chosen = largest_first(weights, capacity, free)
    else:
        chosen = best_subset(weights, capacity, free)
    return _mask_from(chosen, len(weights))


def region_of(current_rms: float, cfg: ControllerConfig) -> str:
    """Load-current region; intervals are closed on the left."""
    a_edge, b_end, c_edge = cfg.region_thresholds
    if current_rms < a_edge:
        return "A"
    if current_rms >= c_edge or (cfg.gap_region == "C" and current_rms >= b_end):
        return "C"
    return "B"


def select_lookup(current_rms: float, cfg: ControllerConfig) -> tuple[int, ...]:
    return cfg.combo_presets["ABC".index(region_of(current_rms, cfg))]


# --- fault detection ------------------------------------------------------------

def detect_switch_fault(command_bits: Sequence[int], readback_bits: Sequence[int],
                        state: ControllerState,
                        cfg: ControllerConfig) -> tuple[dict[int, Health], ControllerState]:
    """Latch a unit once command and readback disagree for K consecutive scans."""
    if len(command_bits) != len(readback_bits):
        raise ValidationError("command and readback bit-vectors differ in length")
    counts = list(state.mismatch_counts) or [0] * len(command_bits)
    latched = dict(state.latched)
    for i, (cmd, rb) in enumerate(zip(command_bits, readback_bits)):
        if int(cmd) != int(rb):
            counts[i] += 1
            if counts[i] >= cfg.fault_scans and i not in latched:
                latched[i] = Health.STUCK_OPEN if cmd else Health.STUCK_CLOSED
        else:
            counts[i] = 0
    state = replace(state, mismatch_counts=tuple(counts),
                    latched=tuple(sorted(latched.items())))
    return latched, state


# --- the scan -------------------------------------------------------------------

def decode_current(code: int, cfg: ControllerConfig) -> float:
    return scale_peak_to_rms(adc_to_volts(code, cfg.adc_full_scale, cfg.adc_bits), cfg.ct_ratio)


def _debounce(candidate, current, state, cfg):
    if candidate == current:
        return current, replace(state, pending_mask=None, stable_count=0)
    count = state.stable_count + 1 if candidate == state.pending_mask else 1
    if count >= cfg.debounce_scans:
        return candidate, replace(state, pending_mask=None, stable_count=0)
    return current, replace(state, pending_mask=candidate, stable_count=count)


def _deadband(cfg, weights):
    if cfg.deadband is not None:
        return cfg.deadband
    return 0.5 * min(weights) if weights else 0.0


def _scan(image, cfg, state, supply, bank, single_phase):
    n = len(bank)
    if len(image.digital_out) != n:
        raise ValidationError(f"image: {len(image.digital_out)} output bits for {n} units")
    current_cmd = image.digital_out
    faults, state = detect_switch_fault(image.digital_out, image.readback_in, state, cfg)
    state = replace(state, scans=state.scans + 1)

    if not 0 <= image.analog_code < cfg.adc_top or not 0.0 <= image.duty_accumulator <= 1.0:
        # saturated or invalid input: hold outputs
        return current_cmd, replace(state, measurement_fault=True,
                                    pending_mask=None, stable_count=0)

    i_rms = decode_current(image.analog_code, cfg)
    phi = min(phase_from_duty(image.duty_accumulator), math.pi / 2)
    volts = supply.phase_voltage_rms if single_phase else SQRT3 * supply.line_voltage_rms
    q_load = volts * i_rms * math.sin(phi)
    half_lsb = decode_current(1, cfg) / 2.0
    q_low = volts * max(i_rms - half_lsb, 0.0) * math.sin(max(phi - cfg.phase_margin, 0.0))

    weights = unit_weights(bank, supply)
    if single_phase:
        weights = [w / 3.0 for w in weights]
    if cfg.mode is Mode.LOOKUP:
        candidate = select_lookup(i_rms, cfg)
        if len(candidate) != n:
            raise ValidationError(f"controller.combo_presets: masks have {len(candidate)} bits for {n} units")
        candidate = tuple(0 if i in faults else b for i, b in enumerate(candidate))
    else:
        candidate = select_greedy(q_low, bank, supply, cfg, faults, single_phase=single_phase)
        fixed = _total(weights, [i for i, h in faults.items() if h is Health.STUCK_CLOSED])
        on_now = [i for i, b in enumerate(current_cmd) if b]
        q_now = _total(weights, on_now) + fixed
        q_cand = _total(weights, [i for i, b in enumerate(candidate) if b]) + fixed
        keep = (q_now <= q_low and not any(i in faults for i in on_now)
                and q_cand - q_now <= _deadband(cfg, weights))
        if keep:
            candidate = current_cmd

    emitted, state = _debounce(candidate, current_cmd, state, cfg)
    pf = math.cos(phi)
    reading = Reading(i_rms, phi, pf, q_load, q_low, candidate)
    return emitted, replace(state, measurement_fault=False, last=reading)


def scan(image: ScanImage, cfg: ControllerConfig, state: ControllerState,
         supply: SupplySpec, bank: BankState) -> tuple[tuple[int, ...], ControllerState]:
    """One PLC scan: returns the output bits to drive and the next state."""
    return _scan(image, cfg, state, supply, bank, single_phase=False)


def per_phase_scan(images: Sequence[ScanImage], cfg: ControllerConfig,
                   states: Sequence[ControllerState], supply: SupplySpec,
                   banks: Sequence[BankState]):
    """Independent single-phase control of three capacitor groups.

    Each group's units are rated as three-phase equivalents; one third of that
    is taken as the per-phase contribution.
    """
    if not cfg.per_phase:
        raise ValidationError("controller.per_phase: must be true for per-phase scanning")
    if not len(images) == len(states) == len(banks) == 3:
        raise ValidationError("per-phase scan needs exactly three images, states and banks")
    masks, new_states = [], []
    for image, state, bank in zip(images, states, banks):
        mask, state = _scan(image, cfg, state, supply, bank, single_phase=True)
        masks.append(mask)
        new_states.append(state)
    return masks, new_states
