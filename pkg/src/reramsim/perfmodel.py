"""Closed-form area, energy and latency models for one accelerator core.

Three variants are modelled around a 1024x1024 weight matrix: the analog
ReRAM neural core, a digital core holding 8-bit weights in eight binary
ReRAM crossbars, and a digital core holding them in SRAM. Every component
row is computed from technology constants; kernel totals (VMM, MVM, outer
product update) are weighted sums of those rows, and the grand total is
one three-kernel training cycle.

Reports are in um^2, ns and nJ. Internal arithmetic is SI.
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path

from .errors import ConfigError, DomainError
from .xbar import CodingConfig

VARIANTS = ("analog-reram", "digital-reram", "sram")
BITS = (8, 4, 2)
KERNELS = ("vmm", "mvm", "update")
SECONDS_PER_YEAR = 3.156e7

AF, FJ, PJ, NS, UM = 1e-18, 1e-15, 1e-12, 1e-9, 1e-6


@dataclass(frozen=True)
class TechParams:
    m1_full_pitch_nm: float = 64.0
    wire_cap_af_per_um: float = 200.0
    wire_res_ohm_per_um: float = 30.0
    logic_tr_area_um2: float = 0.04
    hv_tr_area_um2: float = 0.35
    logic_vdd: float = 0.8
    hv_vdd: float = 1.8
    clock_period_ns: float = 1.0

    @property
    def cell_wire_cap(self) -> float:
        """Wire capacitance of one cell pitch, in farads."""
        return self.wire_cap_af_per_um * AF * self.m1_full_pitch_nm * 1e-3


@dataclass(frozen=True)
class AnalogReramParams:
    r_on: float = 100e6
    on_off_ratio: float = 10.0
    c_cell_af: float = 35.0
    i_read: float = 1e-9
    i_write: float = 10.3e-9
    v_read: float = 0.785
    v_write: float = 1.8


@dataclass(frozen=True)
class BinaryReramParams:
    r_on: float = 1e6
    r_off: float = 10e6
    i_read: float = 98e-9
    i_write: float = 846e-9
    v_read: float = 0.954
    v_write: float = 1.8
    write_pulse_ns: float = 10.0
    i_budget: float = 54e-6
    n_arrays: int = 8
    # latency used in the tables; None means use the RC estimate
    read_latency_ns: float | None = 86.0
    sense_amps: int = 256
    sense_amp_transistors: int = 60
    sense_amp_fj: float = 5.0
    hv_transistors_per_col: int = 24
    decoder_area_um2: float = 200.0


@dataclass(frozen=True)
class SramParams:
    bits_per_subarray: int = 128 * 1024
    read_fj_per_bit: float = 34.0
    write_fj_per_bit: float = 46.0
    subarray_area_um2: float = 12103.0
    bits_per_access: int = 64
    access_ns: float = 2.0
    transpose_factor: int = 8


@dataclass(frozen=True)
class MacParams:
    units_parallel: int = 256
    weight_bits: int = 8
    # keyed by input bit width
    pj_per_op: dict = field(default_factory=lambda: {8: 1.46, 4: 900e3 / 2**20, 2: 520e3 / 2**20})
    area_um2_total: dict = field(default_factory=lambda: {8: 54000.0, 4: 35000.0, 2: 23000.0})
    buffer_ff_area_um2: float = 7000.0 / 8192


@dataclass(frozen=True)
class PeripheryParams:
    td_hv_transistors: int = 20
    td_logic_area_um2: dict = field(default_factory=lambda: {8: 8.6, 4: 5100 / 1024, 2: 3100 / 1024})
    td_analog_pj_8bit: float = 170.0
    td_logic_pj_8bit: float = 35.0
    td_setup_ns: float = 1.0
    vd_hv_per_rail: int = 8
    vd_logic_area_um2: dict = field(default_factory=lambda: {8: 17.0, 4: 10000 / 1024, 2: 7100 / 1024})
    vd_analog_pj: float = 80.0
    vd_logic_pj: float = 10.0
    integrator_area_um2: float = 6.4
    integrator_current: float = 12e-6
    adc_area_um2: float = 5.7
    comparator_current: float = 20e-6
    routing_hv_per_col: int = 8
    write_phases: int = 4


@dataclass(frozen=True)
class CoreConfig:
    bits: int = 8
    n_rows: int = 1024
    n_cols: int = 1024
    coding: CodingConfig = field(default_factory=CodingConfig)
    tech: TechParams = field(default_factory=TechParams)
    analog: AnalogReramParams = field(default_factory=AnalogReramParams)
    binary_reram: BinaryReramParams = field(default_factory=BinaryReramParams)
    sram: SramParams = field(default_factory=SramParams)
    mac: MacParams = field(default_factory=MacParams)
    periphery: PeripheryParams = field(default_factory=PeripheryParams)
    # share of the analog communication energy charged to each kernel
    comm_split: tuple = (1 / 3, 1 / 3, 1 / 3)
    # "printed" rounds digital latency rows to whole microseconds before
    # deriving transposes and totals, as the published tables do
    latency_mode: str = "printed"

    def __post_init__(self):
        if self.bits not in BITS:
            raise DomainError(f"bit width must be one of {BITS}, got {self.bits}")
        if self.n_rows < 1 or self.n_cols < 1:
            raise DomainError("array dimensions must be positive")
        if self.latency_mode not in ("printed", "exact"):
            raise ConfigError("latency_mode must be 'printed' or 'exact'")
        if len(self.comm_split) != 3 or any(s < 0 for s in self.comm_split):
            raise ConfigError("comm_split needs three non-negative shares")

    @property
    def pulse_ns(self) -> float:
        return self.coding.pulse_unit_ns

    @property
    def max_pulses(self) -> int:
        return self.coding.t_max


def _merge(base, override: dict, path: str = ""):
    """Return a copy of dataclass ``base`` with nested ``override`` applied."""
    if not isinstance(override, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    names = {f.name: f for f in fields(base)}
    updates = {}
    for key, val in override.items():
        if key not in names:
            raise ConfigError(f"unknown config key {path + key!r}")
        cur = getattr(base, key)
        if is_dataclass(cur):
            updates[key] = _merge(cur, val, f"{path}{key}.")
        elif isinstance(cur, dict):
            if not isinstance(val, dict):
                raise ConfigError(f"{path + key} must be an object keyed by bit width")
            merged = dict(cur)
            merged.update({int(k): float(v) for k, v in val.items()})
            updates[key] = merged
        elif isinstance(cur, tuple):
            updates[key] = tuple(val)
        else:
            updates[key] = val
    try:
        return type(base)(**{**{f: getattr(base, f) for f in names}, **updates})
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def make_config(bits: int = 8, overrides: dict | None = None) -> CoreConfig:
    """Reference configuration for a bit width, with optional nested overrides."""
    base = CoreConfig(bits=bits, coding=CodingConfig.preset(bits))
    if overrides:
        overrides = dict(overrides)
        overrides.pop("bits", None)
        base = _merge(base, overrides)
    return base


def load_overrides(path) -> dict:
    """Read a JSON config file; an empty file means no overrides."""
    text = Path(path).read_text().strip()
    if not text:
        return {}
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return data


def config_to_dict(cfg: CoreConfig) -> dict:
    return json.loads(json.dumps(asdict(cfg)))


# reports ----------------------------------------------------------------------


@dataclass
class Row:
    name: str
    value: float
    # multiplicity of this row in the vmm, mvm and update kernels
    weights: tuple = (0.0, 0.0, 0.0)


@dataclass
class CostReport:
    variant: str
    bits: int
    area: list = field(default_factory=list)
    latency: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    total_area_um2: float = 0.0
    details: dict = field(default_factory=dict)

    def kernel_energy_nj(self) -> dict:
        return _compose(self.energy)

    def kernel_latency_ns(self) -> dict:
        return _compose(self.latency)

    @property
    def total_energy_nj(self) -> float:
        return sum(self.kernel_energy_nj().values())

    @property
    def total_latency_ns(self) -> float:
        return sum(self.kernel_latency_ns().values())

    def row(self, table: str, name: str) -> float:
        for r in getattr(self, table):
            if r.name == name:
                return r.value
        raise KeyError(name)

    def to_dict(self) -> dict:
        def rows(rs):
            return [{"name": r.name, "value": r.value, "vmm": r.weights[0], "mvm": r.weights[1],
                     "update": r.weights[2]} for r in rs]
        return {
            "variant": self.variant,
            "bits": self.bits,
            "area_um2": rows(self.area),
            "latency_ns": rows(self.latency),
            "energy_nj": rows(self.energy),
            "kernel_energy_nj": self.kernel_energy_nj(),
            "kernel_latency_ns": self.kernel_latency_ns(),
            "totals": {"area_um2": self.total_area_um2, "energy_nj": self.total_energy_nj,
                       "latency_ns": self.total_latency_ns},
            "details": self.details,
        }

    def to_csv_rows(self) -> list[tuple]:
        out = []
        for table, unit in (("area", "um2"), ("latency", "ns"), ("energy", "nJ")):
            for r in getattr(self, table):
                out.append((self.variant, self.bits, table, r.name, r.value, unit))
        for k, v in self.kernel_latency_ns().items():
            out.append((self.variant, self.bits, "kernel_latency", k, v, "ns"))
        for k, v in self.kernel_energy_nj().items():
            out.append((self.variant, self.bits, "kernel_energy", k, v, "nJ"))
        out.append((self.variant, self.bits, "total", "area", self.total_area_um2, "um2"))
        out.append((self.variant, self.bits, "total", "latency", self.total_latency_ns, "ns"))
        out.append((self.variant, self.bits, "total", "energy", self.total_energy_nj, "nJ"))
        return out


CSV_HEADER = ("variant", "bits", "table", "name", "value", "unit")


def _compose(rows) -> dict:
    out = dict.fromkeys(KERNELS, 0.0)
    for r in rows:
        for k, w in zip(KERNELS, r.weights):
            out[k] += w * r.value
    return out


# analog array ------------------------------------------------------------------


def analog_array_area(cfg: CoreConfig) -> float:
    """Area of the weight and reference arrays in um^2."""
    pitch_um = cfg.tech.m1_full_pitch_nm * 1e-3
    return 2 * cfg.n_rows * cfg.n_cols * pitch_um**2


def analog_line_capacitance(cfg: CoreConfig) -> float:
    return cfg.n_cols * (cfg.tech.cell_wire_cap + cfg.analog.c_cell_af * AF)


def analog_read_energy(cfg: CoreConfig, n_bits_t: int | None = None, v_read: float | None = None) -> float:
    """Array energy of one temporally coded read, in joules."""
    n = cfg.coding.n_bits_t if n_bits_t is None else n_bits_t
    v = cfg.analog.v_read if v_read is None else v_read
    c_line = analog_line_capacitance(cfg)
    dynamic = 0.5 * 2 * (n - 1) * cfg.n_rows * c_line * v**2
    pulses = 2 ** (n - 1) - 1
    static = 0.5 * cfg.n_rows * cfg.n_cols * cfg.analog.i_read * v * cfg.pulse_ns * NS * pulses
    return dynamic + static


def analog_write_energy_terms(cfg: CoreConfig, n_bits_t: int | None = None, v_write: float | None = None,
                              printed_pulse_count: bool = False) -> tuple[float, float, float]:
    """Setup, transition and I-V energy of a four-phase write, in joules.

    The I-V term counts ``2**(n-1) - 1`` pulses (magnitude bits only);
    ``printed_pulse_count`` switches to ``2**n - 1`` for comparison.
    """
    n = cfg.coding.n_bits_t if n_bits_t is None else n_bits_t
    v = cfg.analog.v_write if v_write is None else v_write
    c_line = analog_line_capacitance(cfg)
    setup = cfg.n_rows * c_line * (3 * (v / 3) ** 2 + 0.5 * v**2 + 0.5 * (v / 3) ** 2)
    transition = (2 / 2) * cfg.n_rows * max(n - 2, 0) * c_line * (0.5 * (v / 3) ** 2 + 0.5 * 4 / 9 * v**2)
    pulses = (2**n - 1) if printed_pulse_count else (2 ** (n - 1) - 1)
    iv = 0.5 * cfg.n_cols * cfg.n_rows * cfg.analog.i_write * v * cfg.pulse_ns * NS * pulses
    return setup, transition, iv


def analog_write_energy(cfg: CoreConfig, **kw) -> float:
    return sum(analog_write_energy_terms(cfg, **kw))


def _temporal_driver_ns(cfg: CoreConfig) -> float:
    return cfg.max_pulses * cfg.pulse_ns + cfg.periphery.td_setup_ns


def adc_latency_ns(cfg: CoreConfig) -> float:
    """Ramp time: one level per clock, minus the unused top level below 4 bits."""
    levels = 2**cfg.coding.n_bits_adc
    n = levels if cfg.coding.n_bits_adc >= 4 else levels - 1
    return n * cfg.tech.clock_period_ns


def analog_component_costs(cfg: CoreConfig) -> CostReport:
    t, p, a = cfg.tech, cfg.periphery, cfg.analog
    bits = cfg.bits
    n_drv = max(cfg.n_rows, cfg.n_cols)
    rep = CostReport("analog-reram", bits)

    vd_rails = 1 + 2 ** (cfg.coding.n_bits_v - 1)
    periphery_area = [
        Row("Temporal Driver Analog Transistors", n_drv * p.td_hv_transistors * t.hv_tr_area_um2),
        Row("Temporal Driver Cache and Control Circuitry", n_drv * p.td_logic_area_um2[bits]),
        Row("Voltage Drivers Analog Transistors", cfg.n_cols * vd_rails * p.vd_hv_per_rail * t.hv_tr_area_um2),
        Row("Voltage Drivers: Cache and Control Circuitry", cfg.n_cols * p.vd_logic_area_um2[bits]),
        Row("Integrators", n_drv * p.integrator_area_um2),
        Row("ADCs", n_drv * p.adc_area_um2),
        Row("Analog Routing", n_drv * p.routing_hv_per_col * t.hv_tr_area_um2),
    ]
    array_area = analog_array_area(cfg)
    rep.area = [Row("Arrays", array_area)] + periphery_area
    # the crossbar is built above its drivers, so only the larger footprint counts
    rep.total_area_um2 = max(array_area, sum(r.value for r in periphery_area))

    td = _temporal_driver_ns(cfg)
    adc_ns = adc_latency_ns(cfg)
    tau = _analog_row_tau(cfg)
    rep.latency = [
        Row("Array", 2.2 * tau / NS),
        Row("Read: Temporal Driver", td, (1, 1, 0)),
        Row("Read: ADC", adc_ns, (1, 1, 0)),
        Row(f"Write: Temporal Driver×{p.write_phases}", p.write_phases * td, (0, 0, 1)),
    ]

    nt = cfg.coding.n_bits_t
    run_s = cfg.max_pulses * cfg.pulse_ns * NS
    adc_energy_s = 2**cfg.coding.n_bits_adc * t.clock_period_ns * NS
    split = cfg.comm_split
    comm = analog_comm_energy(cfg, rep.total_area_um2)
    rep.energy = [
        Row("Read: Array", analog_read_energy(cfg) * 1e9, (1, 1, 0)),
        Row("Write: Array", analog_write_energy(cfg) * 1e9, (0, 0, 1)),
        Row("Temporal Driver Analog Transistors (1 cycle)", p.td_analog_pj_8bit * nt / 8 * PJ * 1e9, (1, 1, 2)),
        Row("Temporal Driver Digital Logic (1 cycle)", p.td_logic_pj_8bit * nt / 8 * PJ * 1e9, (1, 1, 2)),
        Row("Voltage Driver Analog Transistors (4 cycle write)", p.vd_analog_pj * PJ * 1e9, (0, 0, 1)),
        Row("Voltage Driver Digital Logic (4 cycle write)",
            2 * p.vd_logic_pj * cfg.coding.n_bits_v / 4 * PJ * 1e9, (0, 0, 1)),
        Row("Read: Integrator", cfg.n_cols * p.integrator_current * t.hv_vdd * run_s * 1e9, (1, 1, 0)),
        Row("Read: ADC", cfg.n_cols * p.comparator_current * t.hv_vdd * adc_energy_s * 1e9, (1, 1, 0)),
        Row("Analog Cross Core Communication", comm * 1e9, tuple(split)),
    ]
    s, tr, iv = analog_write_energy_terms(cfg)
    rep.details = {
        "write_setup_nj": s * 1e9,
        "write_transition_nj": tr * 1e9,
        "write_iv_nj": iv * 1e9,
        "write_array_printed_pulse_count_nj": analog_write_energy(cfg, printed_pulse_count=True) * 1e9,
        "line_capacitance_ff": analog_line_capacitance(cfg) / FJ,
        "row_tau_ns": tau / NS,
    }
    return rep


def _analog_row_tau(cfg: CoreConfig) -> float:
    """Distributed RC of one row wire loaded by its cells."""
    pitch_um = cfg.tech.m1_full_pitch_nm * 1e-3
    r_line = cfg.n_cols * pitch_um * cfg.tech.wire_res_ohm_per_um
    return 0.5 * r_line * analog_line_capacitance(cfg)


def analog_comm_energy(cfg: CoreConfig, area_um2: float) -> float:
    return _edge_wire_energy(cfg, area_um2) * (cfg.n_rows + cfg.n_cols)


def _edge_wire_energy(cfg: CoreConfig, area_um2: float) -> float:
    """CV^2 of a wire spanning the core edge, per bit moved."""
    c_edge = cfg.tech.wire_cap_af_per_um * AF * math.sqrt(area_um2)
    return c_edge * cfg.tech.logic_vdd**2


# digital variants ------------------------------------------------------------------


def _weight_bits(cfg: CoreConfig) -> int:
    return cfg.n_rows * cfg.n_cols * cfg.mac.weight_bits


def _round_pow2(x: float) -> int:
    return 2 ** int(round(math.log2(x)))


def binary_reram_parallelism(cfg: CoreConfig) -> tuple[int, int]:
    """Bits written and read in parallel under the line current budget."""
    b = cfg.binary_reram
    return _round_pow2(b.i_budget / b.i_write), _round_pow2(b.i_budget / b.i_read)


def binary_reram_read_latency(cfg: CoreConfig) -> dict:
    """2.2 RC read settling time of a column sensed through a load resistor."""
    b, t = cfg.binary_reram, cfg.tech
    pitch_um = t.m1_full_pitch_nm * 1e-3
    r_line = cfg.n_rows * pitch_um * t.wire_res_ohm_per_um
    c_line = cfg.n_rows * (t.cell_wire_cap + cfg.analog.c_cell_af * AF)
    r_load = math.sqrt(b.r_on * b.r_off)
    r_par = b.r_on * r_load / (b.r_on + r_load)
    tau = 0.5 * r_line * c_line * (1 + 2 * r_par / r_line)
    return {"r_line_ohm": r_line, "c_line_ff": c_line / FJ, "r_load_ohm": r_load,
            "r_parallel_ohm": r_par, "tau_ns": tau / NS, "read_latency_ns": 2.2 * tau / NS}


def _digital_common(cfg: CoreConfig, rep: CostReport, mem_area: float, mem_name: str):
    """MAC and input-buffer rows shared by both digital variants."""
    m = cfg.mac
    rep.area = [
        Row(mem_name, mem_area),
        Row(f"Multiply & Accumulate ({m.units_parallel} in parallel)", m.area_um2_total[cfg.bits]),
        Row("Input Buffers", cfg.n_rows * cfg.coding.n_bits_t * m.buffer_ff_area_um2),
    ]
    rep.total_area_um2 = sum(r.value for r in rep.area)


def _us(x_ns: float, printed: bool) -> float:
    return round(x_ns / 1000.0) * 1000.0 if printed else x_ns


def _mac_rows(cfg: CoreConfig, printed: bool):
    ops = cfg.n_rows * cfg.n_cols
    lat = ops / cfg.mac.units_parallel * cfg.tech.clock_period_ns
    e = ops * cfg.mac.pj_per_op[cfg.bits] * PJ * 1e9
    label = "Multiply and Accumulate"
    # MAC work is pipelined behind the memory accesses, so it adds no latency
    return (Row(f"{label} ({cfg.mac.units_parallel} in parallel)", _us(lat, printed)),
            Row(f"{label} ({ops / 2**20:g}M operations)", e, (1, 1, 1)))


def digital_reram_model(cfg: CoreConfig) -> CostReport:
    b, t = cfg.binary_reram, cfg.tech
    rep = CostReport("digital-reram", cfg.bits)
    printed = cfg.latency_mode == "printed"

    array_area = cfg.n_rows * cfg.n_cols * (t.m1_full_pitch_nm * 1e-3) ** 2
    drivers = (cfg.n_cols * b.hv_transistors_per_col * t.hv_tr_area_um2 + b.decoder_area_um2
               + b.sense_amps * b.sense_amp_transistors * t.logic_tr_area_um2)
    mem_area = b.n_arrays * max(array_area, drivers)
    _digital_common(cfg, rep, mem_area, "Array: 1MB ReRAM")

    w_par, r_par = binary_reram_parallelism(cfg)
    rc = binary_reram_read_latency(cfg)
    read_lat = rc["read_latency_ns"] if b.read_latency_ns is None else b.read_latency_ns
    cells = cfg.n_rows * cfg.n_cols  # per array; the arrays run side by side
    read_ns = _us(math.ceil(cells / r_par) * read_lat, printed)
    write_ns = _us(math.ceil(cells / w_par) * b.write_pulse_ns, printed)
    mac_lat, mac_e = _mac_rows(cfg, printed)
    rep.latency = [
        Row("Read: 1MB ReRAM", read_ns, (1, 0, 1)),
        Row("Read Transpose: 1MB ReRAM", read_ns, (0, 1, 0)),
        Row("Write: 1MB ReRAM", write_ns, (0, 0, 1)),
        mac_lat,
    ]

    nbits = _weight_bits(cfg)
    c_col = cfg.n_rows * (t.cell_wire_cap + cfg.analog.c_cell_af * AF)
    read_bit = (0.5 * c_col * b.v_read**2 + 0.5 * b.i_read * b.v_read * read_lat * NS)
    sense_bit = b.sense_amp_fj * FJ
    write_bit = 0.5 * c_col * b.v_write**2 + 0.5 * b.i_write * b.v_write * b.write_pulse_ns * NS
    read_e = nbits * (read_bit + sense_bit) * 1e9
    comm = _edge_wire_energy(cfg, rep.total_area_um2) * nbits * 1e9
    rep.energy = [
        Row("Read: 1MB ReRAM", read_e, (1, 0, 1)),
        Row("Read Transpose: 1MB ReRAM", read_e, (0, 1, 0)),
        Row("Write: 1MB ReRAM", nbits * write_bit * 1e9, (0, 0, 1)),
        mac_e,
        Row("Digital ReRAM Cross Core Communication", comm, (1, 1, 2)),
    ]
    rep.details = {
        "write_parallelism": w_par,
        "read_parallelism": r_par,
        "write_parallelism_raw": b.i_budget / b.i_write,
        "read_parallelism_raw": b.i_budget / b.i_read,
        "read_latency_used_ns": read_lat,
        **{f"rc_{k}": v for k, v in rc.items()},
        "read_energy_without_sense_nj": nbits * read_bit * 1e9,
        "sense_energy_nj": nbits * sense_bit * 1e9,
        "memory_area_per_array_um2": max(array_area, drivers),
    }
    return rep


def sram_model(cfg: CoreConfig) -> CostReport:
    s = cfg.sram
    rep = CostReport("sram", cfg.bits)
    printed = cfg.latency_mode == "printed"
    nbits = _weight_bits(cfg)
    n_sub = math.ceil(nbits / s.bits_per_subarray)
    _digital_common(cfg, rep, n_sub * s.subarray_area_um2, "Array: 1MB SRAM")

    accesses = math.ceil(nbits / (n_sub * s.bits_per_access))
    read_ns = _us(accesses * s.access_ns, printed)
    mac_lat, mac_e = _mac_rows(cfg, printed)
    rep.latency = [
        Row("Read: 1MB SRAM", read_ns, (1, 0, 1)),
        Row("Read Transpose: 1MB SRAM", s.transpose_factor * read_ns, (0, 1, 0)),
        Row("Write: 1MB SRAM", read_ns, (0, 0, 1)),
        mac_lat,
    ]
    read_e = nbits * s.read_fj_per_bit * FJ * 1e9
    comm = _edge_wire_energy(cfg, rep.total_area_um2) * nbits * 1e9
    rep.energy = [
        Row(f"Read: {n_sub} 128kb SRAMs", read_e, (1, 0, 1)),
        Row(f"Read Transpose: {n_sub} 128kb SRAMs", s.transpose_factor * read_e, (0, 1, 0)),
        Row(f"Write: {n_sub} 128kb SRAMs", nbits * s.write_fj_per_bit * FJ * 1e9, (0, 0, 1)),
        mac_e,
        Row("Digital SRAM Cross Core Communication", comm, (1, 1, 2)),
    ]
    rep.details = {"subarrays": n_sub, "accesses_per_read": accesses}
    return rep


def cost_report(variant: str, cfg: CoreConfig) -> CostReport:
    if variant == "analog-reram":
        return analog_component_costs(cfg)
    if variant == "digital-reram":
        return digital_reram_model(cfg)
    if variant == "sram":
        return sram_model(cfg)
    raise DomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def all_reports(overrides: dict | None = None) -> dict:
    """Reports for every (variant, bits) pair, keyed by that pair."""
    return {(v, b): cost_report(v, make_config(b, overrides)) for b in BITS for v in VARIANTS}


def headline_ratios(analog: CostReport, reram: CostReport, sram: CostReport, n_rows=1024, n_cols=1024) -> dict:
    """Digital-over-analog advantage factors plus analog energy per MAC."""
    return {
        "energy_vs_digital_reram": reram.total_energy_nj / analog.total_energy_nj,
        "energy_vs_sram": sram.total_energy_nj / analog.total_energy_nj,
        "latency_vs_digital_reram": reram.total_latency_ns / analog.total_latency_ns,
        "latency_vs_sram": sram.total_latency_ns / analog.total_latency_ns,
        "area_vs_digital_reram": reram.total_area_um2 / analog.total_area_um2,
        "area_vs_sram": sram.total_area_um2 / analog.total_area_um2,
        "analog_energy_per_mac_fj": analog.total_energy_nj * 1e6 / (3 * n_rows * n_cols),
    }


# physical constraints ----------------------------------------------------------------


@dataclass(frozen=True)
class ElectromigrationReport:
    i_limit: float
    n_parallel: int
    i_nudge: float
    i_nudge_max: float
    r_on_min: float
    passed: bool


@dataclass(frozen=True)
class EnduranceReport:
    pulses_per_cycle: float
    update_rate_hz: float
    duty: float
    years: float
    required_endurance: float
    literature_updates: float
    passed: bool


def electromigration_check(n_parallel: int, i_limit: float = 33e-6, i_nudge: float = 10e-9,
                           v_nudge: float | None = None) -> ElectromigrationReport:
    """Largest per-device write current when ``n_parallel`` devices share a line.

    ``v_nudge`` is the voltage across the device during a nudge; by default
    the on-state write current times the on-state resistance of the analog
    cell, which sets the minimum on resistance ``v_nudge / i_nudge_max``.
    """
    if n_parallel < 1:
        raise DomainError("n_parallel must be >= 1")
    if i_limit <= 0:
        raise DomainError("i_limit must be positive")
    if v_nudge is None:
        a = AnalogReramParams()
        v_nudge = a.i_write * a.r_on
    i_max = i_limit / n_parallel
    return ElectromigrationReport(i_limit, n_parallel, i_nudge, i_max, v_nudge / i_max, i_nudge <= i_max)


def endurance_requirement(pulses_per_cycle: float, rate_hz: float, duty: float = 1.0, years: float = 1.0,
                          literature_cycles: float = 1e12) -> EnduranceReport:
    """Single-pulse endurance needed for continuous training.

    One literature memory cycle (a full swing up and back) counts as two
    updates.
    """
    for name, v in (("pulses_per_cycle", pulses_per_cycle), ("rate_hz", rate_hz), ("duty", duty), ("years", years)):
        if v < 0:
            raise DomainError(f"{name} must be non-negative")
    need = pulses_per_cycle * rate_hz * duty * years * SECONDS_PER_YEAR
    lit = 2 * literature_cycles
    return EnduranceReport(pulses_per_cycle, rate_hz, duty, years, need, lit, need <= lit)


DEFAULT_CHECK = {
    "electromigration": {"n_parallel": 1024, "i_limit": 33e-6, "i_nudge": 10e-9},
    "endurance": [
        {"pulses_per_cycle": 256, "rate_hz": 1e5, "duty": 1.0, "years": 1.0},
        {"pulses_per_cycle": 128, "rate_hz": 1e5, "duty": 0.1, "years": 1.0},
    ],
}


def constraint_report(overrides: dict | None = None) -> dict:
    """Electromigration and endurance checks as a JSON-ready dict."""
    cfg = copy.deepcopy(DEFAULT_CHECK)
    for key, val in (overrides or {}).items():
        if key == "electromigration":
            cfg[key].update(val)
        elif key == "endurance":
            cfg[key] = val if isinstance(val, list) else [val]
        else:
            raise ConfigError(f"unknown check key {key!r}")
    em = electromigration_check(**cfg["electromigration"])
    ends = [endurance_requirement(**e) for e in cfg["endurance"]]
    return {
        "electromigration": asdict(em),
        "endurance": [asdict(e) for e in ends],
        "passed": em.passed and all(e.passed for e in ends),
    }
