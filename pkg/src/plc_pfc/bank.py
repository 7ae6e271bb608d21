"""Switched capacitor bank: unit ratings, binary sizing, gated switching, health."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Sequence

from .errors import DomainError
from .phasor import SupplySpec

# slack for float comparisons on the zero-crossing grid, in seconds
TIME_EPS = 1e-9


class Connection(str, enum.Enum):
    DELTA = "delta"
    STAR = "star"

    @property
    def voltage_factor(self) -> int:
        # delta units see line voltage: 3 * V_L^2 * w * C versus V_L^2 * w * C in star
        return 3 if self is Connection.DELTA else 1


class Health(str, enum.Enum):
    OK = "ok"
    STUCK_OPEN = "stuck_open"
    STUCK_CLOSED = "stuck_closed"


@dataclass(frozen=True)
class CapacitorUnit:
    """One switched three-phase capacitor step.

    ``engaged`` is the state of the switch as driven by the PLC; whether the
    unit actually carries current also depends on ``health``.
    """

    capacitance_uf: float
    connection: Connection = Connection.STAR
    engaged: bool = False
    health: Health = Health.OK

    def __post_init__(self):
        if not self.capacitance_uf > 0:
            raise DomainError(f"capacitance must be > 0 uF, got {self.capacitance_uf}")
        object.__setattr__(self, "connection", Connection(self.connection))
        object.__setattr__(self, "health", Health(self.health))

    @property
    def effective(self) -> bool:
        if self.health is Health.STUCK_CLOSED:
            return True
        return self.engaged and self.health is Health.OK


@dataclass(frozen=True)
class BankState:
    units: tuple[CapacitorUnit, ...]
    command_bits: tuple[int, ...]
    readback_bits: tuple[int, ...]
    pending_engagements: tuple[tuple[int, float], ...] = ()
    # every engagement that became effective: (unit index, time s)
    engagement_log: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        n = len(self.units)
        if len(self.command_bits) != n or len(self.readback_bits) != n:
            raise DomainError(
                f"bit-vector lengths {len(self.command_bits)}/{len(self.readback_bits)} "
                f"do not match unit count {n}")

    def __len__(self):
        return len(self.units)


def make_bank(units: Sequence[CapacitorUnit]) -> BankState:
    units = tuple(units)
    return BankState(
        units=units,
        command_bits=tuple(int(u.engaged) for u in units),
        readback_bits=tuple(int(u.effective) for u in units),
    )


def rated_reactive_power(unit: CapacitorUnit, supply: SupplySpec) -> float:
    """VAr the unit injects when carrying current, regardless of its switch state."""
    c = unit.capacitance_uf * 1e-6
    return unit.connection.voltage_factor * supply.line_voltage_rms ** 2 * supply.omega * c


def unit_reactive_power(unit: CapacitorUnit, supply: SupplySpec) -> float:
    return rated_reactive_power(unit, supply) if unit.effective else 0.0


def unit_weights(state: BankState, supply: SupplySpec) -> list[float]:
    return [rated_reactive_power(u, supply) for u in state.units]


def bank_reactive_power(state: BankState, supply: SupplySpec) -> float:
    return math.fsum(unit_reactive_power(u, supply) for u in state.units)


def capacitance_for(q: float, supply: SupplySpec, connection: Connection | str) -> float:
    """Capacitance in uF that yields ``q`` VAr at ``supply``."""
    connection = Connection(connection)
    return q / (connection.voltage_factor * supply.line_voltage_rms ** 2 * supply.omega) * 1e6


def binary_weights(q_max: float, n_steps: int) -> list[float]:
    if not q_max > 0:
        raise DomainError(f"q_max must be > 0, got {q_max}")
    if not 1 <= n_steps <= 16:
        raise DomainError(f"n_steps must lie in [1, 16], got {n_steps}")
    q_step = q_max / (2 ** n_steps - 1)
    return [q_step * 2 ** k for k in range(n_steps)]


def size_binary_bank(q_max: float, n_steps: int, supply: SupplySpec,
                     connection: Connection | str = Connection.STAR) -> list[CapacitorUnit]:
    """Units with VAr ratings q_step * (1, 2, 4, ...), q_step = q_max / (2**n - 1)."""
    connection = Connection(connection)
    return [CapacitorUnit(capacitance_for(q, supply, connection), connection)
            for q in binary_weights(q_max, n_steps)]


def next_zero_crossing(now: float, frequency: float) -> float:
    """Earliest voltage zero crossing at or after ``now`` (either slope)."""
    half = 1.0 / (2.0 * frequency)
    n = math.ceil(now / half - TIME_EPS / half)
    return max(n, 0) * half


def _refresh(units):
    return tuple(int(u.effective) for u in units)


def advance(state: BankState, now: float) -> BankState:
    """Make every queued engagement scheduled at or before ``now`` effective."""
    due = [(i, t) for i, t in state.pending_engagements if t <= now + TIME_EPS]
    if not due:
        return state
    units = list(state.units)
    for i, _ in due:
        units[i] = replace(units[i], engaged=True)
    return replace(
        state,
        units=tuple(units),
        readback_bits=_refresh(units),
        pending_engagements=tuple(p for p in state.pending_engagements if p not in due),
        engagement_log=state.engagement_log + tuple(sorted(due, key=lambda p: (p[1], p[0]))),
    )


def command_switches(state: BankState, desired_bits: Sequence[int], now: float,
                     supply: SupplySpec) -> BankState:
    """Drive the output port with ``desired_bits`` at time ``now``.

    Openings act at once. Closings wait for the next voltage zero crossing.
    """
    desired = tuple(int(bool(b)) for b in desired_bits)
    if len(desired) != len(state.units):
        raise DomainError(f"expected {len(state.units)} bits, got {len(desired)}")
    units = list(state.units)
    pending = dict(state.pending_engagements)
    for i, bit in enumerate(desired):
        if bit:
            if not units[i].engaged and i not in pending:
                pending[i] = next_zero_crossing(now, supply.frequency)
        else:
            pending.pop(i, None)
            if units[i].engaged:
                units[i] = replace(units[i], engaged=False)
    state = replace(
        state,
        units=tuple(units),
        command_bits=desired,
        readback_bits=_refresh(units),
        pending_engagements=tuple(sorted(pending.items())),
    )
    return advance(state, now)


def set_health(state: BankState, index: int, health: Health | str) -> BankState:
    units = list(state.units)
    units[index] = replace(units[index], health=Health(health))
    return replace(state, units=tuple(units), readback_bits=_refresh(units))


# Three combinations described for the 3.7 kW laboratory motor, read as:
#   A: one 20 uF delta + two 2.5 uF star
#   B: two 2.5 uF delta + two 20 uF star
#   C: three 20 uF star
# The wording is ambiguous, so these are defaults, not fixed behaviour.
def paper_units() -> list[CapacitorUnit]:
    return [
        CapacitorUnit(20.0, Connection.DELTA),
        CapacitorUnit(2.5, Connection.STAR),
        CapacitorUnit(2.5, Connection.STAR),
        CapacitorUnit(2.5, Connection.DELTA),
        CapacitorUnit(2.5, Connection.DELTA),
        CapacitorUnit(20.0, Connection.STAR),
        CapacitorUnit(20.0, Connection.STAR),
        CapacitorUnit(20.0, Connection.STAR),
    ]


PAPER_COMBOS: tuple[tuple[int, ...], ...] = (
    (1, 1, 1, 0, 0, 0, 0, 0),
    (0, 0, 0, 1, 1, 1, 1, 0),
    (0, 0, 0, 0, 0, 1, 1, 1),
)
