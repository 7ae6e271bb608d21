"""Simulation of PLC-driven power-factor correction for three-phase inductive loads."""

from .bank import (BankState, CapacitorUnit, Connection, Health, bank_reactive_power,
                   command_switches, make_bank, size_binary_bank, unit_reactive_power)
from .controller import (ControllerConfig, ControllerState, Mode, ScanImage, detect_switch_fault,
                         per_phase_scan, scan, select_greedy, select_lookup)
from .errors import DomainError, OverRangeError, RangeError, ValidationError
from .motor import LoadTable, default_table, load_table_from_rows, lookup_point
from .phasor import (OperatingPoint, SupplySpec, corrected_point, derive_point,
                     phase_angle_from_pf, reactive_power, real_power)
from .scenario import ScenarioConfig, load_scenario, parse_scenario
from .sim import SimRecord, dump_waveforms, run_scenario, sweep

__version__ = "0.1.0"
