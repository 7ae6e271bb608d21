"""Scenario configuration and its sectioned ``key=value`` text format.

Example::

    [supply]
    line_voltage = 400
    frequency = 50

    [motor]
    i=3 pf=0.24 rpm=1447
    i=7 pf=0.41 rpm=1441

    [bank]
    binary q_max=2700 steps=4 connection=star

    [controller]
    mode = greedy
    debounce_scans = 5

    [signal]
    sample_rate = 20000

    [profile]
    duration = 2.0
    t=0.0 i=3.0
    t=1.0 i=5.0

    [faults]
    t=0.5 unit=2 health=stuck_open

``[bank]`` takes either ``binary ...``, ``preset paper`` or a list of
``unit c=20 connection=delta`` lines. Omitted sections fall back to the
laboratory defaults.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .bank import PAPER_COMBOS, CapacitorUnit, Connection, Health, paper_units, size_binary_bank
from .controller import ControllerConfig, Mode
from .errors import DomainError, ValidationError
from .motor import DEFAULT_ROWS, LoadTable, default_table, load_table_from_rows
from .phasor import SupplySpec
from .signal_chain import DEFAULT_SAMPLE_RATE, MIN_SAMPLES_PER_PERIOD

SECTIONS = ("supply", "motor", "bank", "controller", "signal", "profile", "faults")


@dataclass(frozen=True)
class SignalConfig:
    sample_rate: float = DEFAULT_SAMPLE_RATE
    cycles: int = 5
    droop_per_cycle: float = 0.0


@dataclass(frozen=True)
class FaultInjection:
    time: float
    unit: int
    health: Health

    def __post_init__(self):
        object.__setattr__(self, "health", Health(self.health))


@dataclass(frozen=True)
class ScenarioConfig:
    supply: SupplySpec = field(default_factory=SupplySpec)
    load_table: LoadTable = field(default_factory=default_table)
    # (time s, current A) breakpoints, step-held
    load_profile: tuple[tuple[float, float], ...] = ((0.0, 3.0),)
    bank: tuple[CapacitorUnit, ...] = field(default_factory=lambda: tuple(paper_units()))
    controller: ControllerConfig = field(default_factory=lambda: ControllerConfig(mode=Mode.LOOKUP))
    faults: tuple[FaultInjection, ...] = ()
    duration: float = 2.0
    signal: SignalConfig = field(default_factory=SignalConfig)
    # how the bank was described, kept for round-tripping
    bank_directive: str | None = None


def validate_scenario(cfg: ScenarioConfig) -> list[str]:
    problems = []
    if not cfg.duration > 0:
        problems.append(f"profile.duration: must be > 0, got {cfg.duration}")
    if not cfg.load_profile:
        problems.append("profile: at least one breakpoint is required")
    times = [t for t, _ in cfg.load_profile]
    for n, (t, i) in enumerate(cfg.load_profile):
        if t < 0:
            problems.append(f"profile[{n}].t: must be >= 0, got {t}")
        if i < 0:
            problems.append(f"profile[{n}].i: must be >= 0, got {i}")
    for n, (a, b) in enumerate(zip(times, times[1:]), start=1):
        if b <= a:
            problems.append(f"profile[{n}].t: breakpoints must be strictly increasing ({a} then {b})")
    if not cfg.bank:
        problems.append("bank: no capacitor units")
    for n, f in enumerate(cfg.faults):
        if not 0 <= f.unit < len(cfg.bank):
            problems.append(f"faults[{n}].unit: index {f.unit} outside bank of {len(cfg.bank)} units")
        if f.time < 0:
            problems.append(f"faults[{n}].t: must be >= 0, got {f.time}")
    ctl = cfg.controller
    if ctl.mode is Mode.LOOKUP:
        for name, mask in zip("ABC", ctl.combo_presets):
            if len(mask) != len(cfg.bank):
                problems.append(
                    f"controller.combo_{name.lower()}: {len(mask)} bits for a bank of {len(cfg.bank)} units")
    if ctl.per_phase:
        problems.append("controller.per_phase: run_scenario simulates a balanced load; "
                        "use per_phase_scan directly")
    sig = cfg.signal
    if sig.sample_rate < MIN_SAMPLES_PER_PERIOD * cfg.supply.frequency:
        problems.append(f"signal.sample_rate: {sig.sample_rate} Hz is below "
                        f"{MIN_SAMPLES_PER_PERIOD} x {cfg.supply.frequency} Hz")
    if sig.cycles < 1:
        problems.append(f"signal.cycles: must be >= 1, got {sig.cycles}")
    return problems


def binary_scenario(q_max: float = 2700.0, steps: int = 4, *, connection="star",
                    supply: SupplySpec | None = None, **kwargs) -> ScenarioConfig:
    """Greedy-mode scenario over a freshly sized binary bank."""
    supply = supply or SupplySpec()
    controller = kwargs.pop("controller", ControllerConfig(mode=Mode.GREEDY))
    return ScenarioConfig(
        supply=supply,
        bank=tuple(size_binary_bank(q_max, steps, supply, connection)),
        controller=controller,
        bank_directive=f"binary q_max={q_max:g} steps={steps} connection={Connection(connection).value}",
        **kwargs,
    )


def paper_scenario(**kwargs) -> ScenarioConfig:
    """Lookup-mode scenario over the laboratory bank and its three combinations."""
    return ScenarioConfig(bank_directive="preset paper", **kwargs)


# --- text format -----------------------------------------------------------------

_EQ = re.compile(r"\s*=\s*")


class _Parser:
    def __init__(self):
        self.problems: list[str] = []

    def err(self, lineno, msg):
        self.problems.append(f"line {lineno}: {msg}")

    def number(self, lineno, path, text, kind=float):
        try:
            value = kind(text)
        except ValueError:
            self.err(lineno, f"{path}: expected {kind.__name__}, got {text!r}")
            return None
        if kind is float and not math.isfinite(value):
            self.err(lineno, f"{path}: must be finite, got {text!r}")
            return None
        return value

    def tokens(self, lineno, path, words, required, optional=()):
        out = {}
        for w in words:
            if "=" not in w:
                self.err(lineno, f"{path}: expected key=value, got {w!r}")
                continue
            k, v = w.split("=", 1)
            if k not in required and k not in optional:
                self.err(lineno, f"{path}.{k}: unknown key")
                continue
            out[k] = v
        for k in required:
            if k not in out:
                self.err(lineno, f"{path}.{k}: missing")
        return out


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def _mask(text, n):
    text = text.strip()
    if text in ("", "-"):
        return (0,) * n
    idx = [int(x) for x in text.split(",")]
    if any(not 0 <= i < n for i in idx):
        raise ValueError(f"unit index outside 0..{n - 1}")
    return tuple(int(i in idx) for i in range(n))


_CONTROLLER_KEYS = {
    "mode": str, "gap_region": str, "target_pf": float, "deadband": float,
    "debounce_scans": int, "fault_scans": int, "scan_period": float,
    "per_phase": _bool, "ct_ratio": float, "adc_full_scale": float, "adc_bits": int,
    "phase_margin": float,
}
_SIGNAL_KEYS = {"sample_rate": float, "cycles": int, "droop_per_cycle": float}


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse scenario text; raises ValidationError listing every problem found."""
    p = _Parser()
    section = None
    seen: dict[str, list[tuple[int, list[str]]]] = {s: [] for s in SECTIONS}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in SECTIONS:
                p.err(lineno, f"unknown section [{section}]")
                section = None
            continue
        if section is None:
            p.err(lineno, "content outside a known section")
            continue
        seen[section].append((lineno, _EQ.sub("=", line).split()))

    supply_kw = {}
    for lineno, words in seen["supply"]:
        kv = p.tokens(lineno, "supply", words, (), ("line_voltage", "frequency"))
        for k, v in kv.items():
            val = p.number(lineno, f"supply.{k}", v)
            if val is not None:
                supply_kw["line_voltage_rms" if k == "line_voltage" else k] = val
    try:
        supply = SupplySpec(**supply_kw)
    except DomainError as exc:
        p.problems.append(f"supply: {exc}")
        supply = SupplySpec()

    rows = []
    for n, (lineno, words) in enumerate(seen["motor"]):
        kv = p.tokens(lineno, f"motor[{n}]", words, ("i", "pf"), ("rpm",))
        vals = [p.number(lineno, f"motor[{n}].{k}", kv[k]) for k in ("i", "pf") if k in kv]
        rpm = p.number(lineno, f"motor[{n}].rpm", kv["rpm"]) if "rpm" in kv else None
        if len(vals) == 2 and None not in vals:
            rows.append((vals[0], vals[1], rpm))
    table = None
    try:
        table = load_table_from_rows(rows or DEFAULT_ROWS)
    except ValidationError as exc:
        p.problems.extend(f"motor: {m}" for m in exc.problems)

    units: list[CapacitorUnit] = []
    directive = None
    bank_lines = seen["bank"]
    if not bank_lines:
        units, directive = paper_units(), "preset paper"
    for n, (lineno, words) in enumerate(bank_lines):
        kind, rest = words[0], words[1:]
        if kind == "preset":
            if rest != ["paper"]:
                p.err(lineno, f"bank[{n}]: only 'preset paper' is known, got {' '.join(rest)!r}")
            else:
                units.extend(paper_units())
                directive = "preset paper"
        elif kind == "binary":
            kv = p.tokens(lineno, f"bank[{n}]", rest, ("q_max", "steps"), ("connection",))
            q_max = p.number(lineno, f"bank[{n}].q_max", kv.get("q_max", "nan"))
            steps = p.number(lineno, f"bank[{n}].steps", kv.get("steps", "x"), int)
            try:
                conn = Connection(kv.get("connection", "star"))
                if q_max is not None and steps is not None:
                    units.extend(size_binary_bank(q_max, steps, supply, conn))
                    directive = f"binary q_max={q_max:g} steps={steps} connection={conn.value}"
            except (ValueError, DomainError) as exc:
                p.err(lineno, f"bank[{n}]: {exc}")
        elif kind == "unit":
            kv = p.tokens(lineno, f"bank[{n}]", rest, ("c",), ("connection", "health"))
            c = p.number(lineno, f"bank[{n}].c", kv.get("c", "nan"))
            try:
                if c is not None:
                    units.append(CapacitorUnit(c, kv.get("connection", "star"),
                                               health=kv.get("health", "ok")))
            except (ValueError, DomainError) as exc:
                p.err(lineno, f"bank[{n}]: {exc}")
        else:
            p.err(lineno, f"bank[{n}]: expected 'unit', 'binary' or 'preset', got {kind!r}")
    if len(bank_lines) > 1 and directive is not None and any(w[0] != "unit" for _, w in bank_lines):
        p.problems.append("bank: 'binary' and 'preset' cannot be combined with other bank lines")

    ctl_kw: dict = {}
    for lineno, words in seen["controller"]:
        for w in words:
            if "=" not in w:
                p.err(lineno, f"controller: expected key=value, got {w!r}")
                continue
            k, v = w.split("=", 1)
            if k == "thresholds":
                try:
                    ctl_kw["region_thresholds"] = tuple(float(x) for x in v.split(","))
                except ValueError:
                    p.err(lineno, f"controller.thresholds: expected comma-separated numbers, got {v!r}")
            elif k in ("combo_a", "combo_b", "combo_c"):
                try:
                    ctl_kw[k] = _mask(v, len(units))
                except ValueError as exc:
                    p.err(lineno, f"controller.{k}: {exc}")
            elif k in _CONTROLLER_KEYS:
                kind = _CONTROLLER_KEYS[k]
                if kind is str:
                    ctl_kw[k] = v
                elif kind is _bool:
                    try:
                        ctl_kw[k] = _bool(v)
                    except ValueError:
                        p.err(lineno, f"controller.{k}: expected a boolean, got {v!r}")
                else:
                    val = p.number(lineno, f"controller.{k}", v, kind)
                    if val is not None:
                        ctl_kw[k] = val
            else:
                p.err(lineno, f"controller.{k}: unknown key")
    combos = [ctl_kw.pop(k, None) for k in ("combo_a", "combo_b", "combo_c")]
    if any(c is not None for c in combos):
        if any(c is None for c in combos):
            p.problems.append("controller: combo_a, combo_b and combo_c must be given together")
        else:
            ctl_kw["combo_presets"] = tuple(combos)
    elif directive != "preset paper":
        # presets for the laboratory bank make no sense elsewhere; default to empty masks
        ctl_kw.setdefault("combo_presets", ((0,) * len(units),) * 3)
    ctl_kw.setdefault("mode", "lookup" if directive == "preset paper" else "greedy")
    controller = ControllerConfig(mode=Mode.GREEDY)
    try:
        controller = ControllerConfig(**ctl_kw)
    except ValidationError as exc:
        p.problems.extend(exc.problems)
    except ValueError as exc:
        p.problems.append(f"controller: {exc}")

    sig_kw = {}
    for lineno, words in seen["signal"]:
        kv = p.tokens(lineno, "signal", words, (), tuple(_SIGNAL_KEYS))
        for k, v in kv.items():
            val = p.number(lineno, f"signal.{k}", v, _SIGNAL_KEYS[k])
            if val is not None:
                sig_kw[k] = val
    signal = SignalConfig(**sig_kw)

    profile = []
    duration = None
    for lineno, words in seen["profile"]:
        if len(words) == 1 and words[0].startswith("duration="):
            duration = p.number(lineno, "profile.duration", words[0].split("=", 1)[1])
            continue
        n = len(profile)
        kv = p.tokens(lineno, f"profile[{n}]", words, ("t", "i"))
        t = p.number(lineno, f"profile[{n}].t", kv["t"]) if "t" in kv else None
        i = p.number(lineno, f"profile[{n}].i", kv["i"]) if "i" in kv else None
        profile.append((t, i))
    if duration is None:
        p.problems.append("profile.duration: missing")

    faults = []
    for n, (lineno, words) in enumerate(seen["faults"]):
        kv = p.tokens(lineno, f"faults[{n}]", words, ("t", "unit", "health"))
        t = p.number(lineno, f"faults[{n}].t", kv["t"]) if "t" in kv else None
        unit = p.number(lineno, f"faults[{n}].unit", kv["unit"], int) if "unit" in kv else None
        try:
            health = Health(kv.get("health", "ok"))
        except ValueError:
            p.err(lineno, f"faults[{n}].health: unknown health {kv.get('health')!r}")
            continue
        if t is not None and unit is not None:
            faults.append(FaultInjection(t, unit, health))

    if p.problems:
        raise ValidationError(p.problems)
    cfg = ScenarioConfig(
        supply=supply,
        load_table=table,
        load_profile=tuple(profile),
        bank=tuple(units),
        controller=controller,
        faults=tuple(faults),
        duration=duration,
        signal=signal,
        bank_directive=directive,
    )
    problems = validate_scenario(cfg)
    if problems:
        raise ValidationError(problems)
    return cfg


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())


def _mask_text(mask):
    on = [str(i) for i, b in enumerate(mask) if b]
    return ",".join(on) if on else "-"


def format_scenario(cfg: ScenarioConfig) -> str:
    """Serialize ``cfg`` in the text format accepted by ``parse_scenario``."""
    out = ["[supply]",
           f"line_voltage = {cfg.supply.line_voltage_rms!r}",
           f"frequency = {cfg.supply.frequency!r}",
           "", "[motor]"]
    t = cfg.load_table
    for i, pf, rpm in zip(t.currents, t.power_factors, t.speeds):
        out.append(f"i={i!r} pf={pf!r}" + (f" rpm={rpm!r}" if rpm is not None else ""))
    out += ["", "[bank]"]
    if cfg.bank_directive:
        out.append(cfg.bank_directive)
    else:
        for u in cfg.bank:
            line = f"unit c={u.capacitance_uf!r} connection={u.connection.value}"
            if u.health is not Health.OK:
                line += f" health={u.health.value}"
            out.append(line)
    c = cfg.controller
    out += ["", "[controller]",
            f"mode = {c.mode.value}",
            "thresholds = " + ",".join(repr(x) for x in c.region_thresholds),
            f"gap_region = {c.gap_region}"]
    for name, mask in zip(("combo_a", "combo_b", "combo_c"), c.combo_presets):
        out.append(f"{name} = {_mask_text(mask)}")
    for f in fields(c):
        if f.name in ("mode", "region_thresholds", "gap_region", "combo_presets"):
            continue
        value = getattr(c, f.name)
        if value is None:
            continue
        if isinstance(value, bool):
            value = "true" if value else "false"
        else:
            value = repr(value)
        out.append(f"{f.name} = {value}")
    s = cfg.signal
    out += ["", "[signal]",
            f"sample_rate = {s.sample_rate!r}",
            f"cycles = {s.cycles}",
            f"droop_per_cycle = {s.droop_per_cycle!r}",
            "", "[profile]", f"duration = {cfg.duration!r}"]
    for tt, ii in cfg.load_profile:
        out.append(f"t={tt!r} i={ii!r}")
    if cfg.faults:
        out += ["", "[faults]"]
        for f in cfg.faults:
            out.append(f"t={f.time!r} unit={f.unit} health={f.health.value}")
    return "\n".join(out) + "\n"


def with_profile(cfg: ScenarioConfig, profile, duration: float | None = None) -> ScenarioConfig:
    return replace(cfg, load_profile=tuple((float(t), float(i)) for t, i in profile),
                   duration=cfg.duration if duration is None else duration)
