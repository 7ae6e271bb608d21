"""Balanced three-phase power-triangle arithmetic."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import DomainError

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class SupplySpec:
    line_voltage_rms: float = 400.0
    frequency: float = 50.0
    phase_count: int = 3

    def __post_init__(self):
        if not self.line_voltage_rms > 0:
            raise DomainError(f"line_voltage_rms must be > 0, got {self.line_voltage_rms}")
        if not self.frequency > 0:
            raise DomainError(f"frequency must be > 0, got {self.frequency}")
        if self.phase_count != 3:
            raise DomainError(f"phase_count must be 3, got {self.phase_count}")

    @property
    def phase_voltage_rms(self) -> float:
        return self.line_voltage_rms / SQRT3

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.frequency


@dataclass(frozen=True)
class OperatingPoint:
    """One steady load state seen from the supply terminals."""

    line_current_rms: float
    power_factor: float
    real_power: float
    reactive_power: float
    lagging: bool = True
    speed: float | None = None

    def __post_init__(self):
        if not 0.0 < self.power_factor <= 1.0:
            raise DomainError(f"power_factor must lie in (0, 1], got {self.power_factor}")
        if self.line_current_rms < 0:
            raise DomainError(f"line_current_rms must be >= 0, got {self.line_current_rms}")

    @property
    def apparent_power(self) -> float:
        return math.hypot(self.real_power, self.reactive_power)

    @property
    def phase_angle(self) -> float:
        """Displacement angle in radians, positive when the current lags."""
        phi = math.acos(self.power_factor)
        return phi if self.lagging else -phi


def _check_pf(pf: float) -> None:
    if not 0.0 < pf <= 1.0:
        raise DomainError(f"power factor must lie in (0, 1], got {pf}")


def _check_current(current: float) -> None:
    if current < 0:
        raise DomainError(f"current must be >= 0, got {current}")


def phase_angle_from_pf(pf: float) -> float:
    _check_pf(pf)
    return math.acos(pf)


def pf_from_phase_angle(phi: float) -> float:
    return math.cos(phi)


def apparent_power(supply: SupplySpec, current: float) -> float:
    _check_current(current)
    return SQRT3 * supply.line_voltage_rms * current


def reactive_power(supply: SupplySpec, current: float, pf: float) -> float:
    """Q = sqrt(3) * V_L * I * sin(phi) for a balanced load."""
    _check_pf(pf)
    return apparent_power(supply, current) * math.sqrt(1.0 - pf * pf)


def real_power(supply: SupplySpec, current: float, pf: float) -> float:
    _check_pf(pf)
    return apparent_power(supply, current) * pf


def derive_point(supply: SupplySpec, current: float, pf: float, *,
                 lagging: bool = True, speed: float | None = None) -> OperatingPoint:
    """Build an operating point whose P and Q are consistent with (V, I, pf)."""
    q = reactive_power(supply, current, pf)
    return OperatingPoint(
        line_current_rms=current,
        power_factor=pf,
        real_power=real_power(supply, current, pf),
        reactive_power=q if lagging else -q,
        lagging=lagging,
        speed=speed,
    )


def corrected_point(supply: SupplySpec, uncompensated: OperatingPoint,
                    q_cap: float) -> OperatingPoint:
    """Operating point seen by the supply after ``q_cap`` VAr of shunt capacitance.

    The residual Q may go negative (leading); policy is left to the caller.
    """
    if q_cap < 0:
        raise DomainError(f"q_cap must be >= 0, got {q_cap}")
    if q_cap == 0:
        return uncompensated
    p = uncompensated.real_power
    q_res = uncompensated.reactive_power - q_cap
    s = math.hypot(p, q_res)
    if s == 0.0:
        pf = 1.0
    else:
        pf = min(p / s, 1.0)
    return replace(
        uncompensated,
        line_current_rms=s / (SQRT3 * supply.line_voltage_rms),
        power_factor=pf,
        reactive_power=q_res,
        lagging=q_res >= 0,
    )
