"""Table-driven surrogate of the laboratory induction motor."""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import RangeError, ValidationError
from .phasor import OperatingPoint, SupplySpec, derive_point

# (line current A, power factor, speed rpm) measured at 400 V without compensation
DEFAULT_ROWS: tuple[tuple[float, float, float], ...] = (
    (3.0, 0.24, 1447.0),
    (4.0, 0.28, 1467.0),
    (5.0, 0.37, 1465.0),
    (6.0, 0.40, 1446.0),
    (7.0, 0.41, 1441.0),
)


@dataclass(frozen=True)
class LoadTable:
    currents: tuple[float, ...]
    power_factors: tuple[float, ...]
    speeds: tuple[float | None, ...]

    @property
    def min_current(self) -> float:
        return self.currents[0]

    @property
    def max_current(self) -> float:
        return self.currents[-1]

    def __len__(self):
        return len(self.currents)


def load_table_from_rows(rows: Iterable[Sequence[float | None]]) -> LoadTable:
    """Validate ``(current, pf[, speed])`` rows and return them sorted by current.

    Raises ValidationError naming every offending row.
    """
    parsed = []
    problems = []
    for n, row in enumerate(rows):
        row = tuple(row)
        if len(row) not in (2, 3):
            problems.append(f"rows[{n}]: expected (current, pf[, speed]), got {row!r}")
            continue
        current, pf = float(row[0]), float(row[1])
        speed = None if len(row) == 2 or row[2] is None else float(row[2])
        if current < 0:
            problems.append(f"rows[{n}].current: must be >= 0, got {current}")
        if not 0.0 < pf <= 1.0:
            problems.append(f"rows[{n}].pf: must lie in (0, 1], got {pf}")
        parsed.append((current, pf, speed, n))
    if not parsed and not problems:
        problems.append("rows: table is empty")
    parsed.sort(key=lambda r: r[0])
    for prev, cur in zip(parsed, parsed[1:]):
        if cur[0] == prev[0]:
            problems.append(
                f"rows[{cur[3]}].current: duplicate current {cur[0]} (also rows[{prev[3]}])")
    if len(parsed) < 2:
        problems.append(f"rows: need at least 2 rows, got {len(parsed)}")
    if problems:
        raise ValidationError(problems)
    return LoadTable(
        currents=tuple(r[0] for r in parsed),
        power_factors=tuple(r[1] for r in parsed),
        speeds=tuple(r[2] for r in parsed),
    )


def default_table() -> LoadTable:
    return load_table_from_rows(DEFAULT_ROWS)


def _lerp(x0, x1, y0, y1, x):
    if y0 is None or y1 is None:
        return None
    if x == x0:
        return y0
    if x == x1:
        return y1
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def lookup_point(table: LoadTable, current: float, supply: SupplySpec) -> OperatingPoint:
    """Interpolate pf and speed linearly between the bracketing knots."""
    if not table.min_current <= current <= table.max_current:
        raise RangeError(
            f"current {current} A outside table range "
            f"[{table.min_current}, {table.max_current}] A")
    hi = bisect.bisect_left(table.currents, current)
    if table.currents[hi] == current:
        pf, speed = table.power_factors[hi], table.speeds[hi]
    else:
        lo = hi - 1
        x0, x1 = table.currents[lo], table.currents[hi]
        pf = _lerp(x0, x1, table.power_factors[lo], table.power_factors[hi], current)
        speed = _lerp(x0, x1, table.speeds[lo], table.speeds[hi], current)
    return derive_point(supply, current, pf, speed=speed)
