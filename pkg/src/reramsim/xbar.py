"""Numerical model of one analog neural core.

Signed weights are stored as the difference between a programmable array
``g_pos`` and a fixed reference array ``g_ref`` held at mid-range. Inputs are
signed integers: for reads they become pulse lengths (temporal coding); for
the outer-product update the row vector sets pulse counts and the column
vector selects one of ``2**(n_bits_v-1)-1`` voltage levels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import (
    DeviceModel,
    Polarity,
    apply_read_noise,
    delta_g_of_voltage,
    device_from_dict,
    device_to_dict,
    mean_delta_g,
    sample_pulse_train,
    voltage_for_delta_g,
)
from .errors import DomainError

PHASES = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class CodingConfig:
    n_bits_t: int = 8
    n_bits_v: int = 4
    n_bits_adc: int = 8
    pulse_unit_ns: float = 1.0

    def __post_init__(self):
        if self.n_bits_t < 2 or self.n_bits_v < 2 or self.n_bits_adc < 2:
            raise DomainError("temporal, voltage and ADC codes need >= 2 bits (one is the sign)")
        if self.pulse_unit_ns <= 0:
            raise DomainError("pulse_unit_ns must be positive")

    @classmethod
    def preset(cls, bits: int) -> "CodingConfig":
        """Reference coding for 8-, 4- and 2-bit cores."""
        table = {8: (8, 4, 8, 1.0), 4: (4, 2, 4, 1.0), 2: (2, 2, 2, 7.0)}
        if bits not in table:
            raise DomainError(f"no preset for {bits}-bit cores")
        t, v, a, p = table[bits]
        return cls(t, v, a, p)

    @property
    def t_max(self) -> int:
        return 2 ** (self.n_bits_t - 1) - 1

    @property
    def v_levels(self) -> int:
        return 2 ** (self.n_bits_v - 1) - 1

    @property
    def adc_max(self) -> int:
        return 2 ** (self.n_bits_adc - 1) - 1


def _as_code(x, limit: int, length: int, what: str, batch: bool = False) -> np.ndarray:
    x = np.asarray(x)
    ok_dims = (1, 2) if batch else (1,)
    if x.ndim not in ok_dims or x.shape[-1] != length:
        raise DomainError(f"{what} must be a vector of length {length}, got shape {x.shape}")
    if not np.issubdtype(x.dtype, np.integer):
        if not np.all(np.equal(np.mod(x, 1), 0)):
            raise DomainError(f"{what} must hold integer codes")
        x = x.astype(np.int64)
    if np.any(np.abs(x) > limit):
        raise DomainError(f"{what} codes exceed +/-{limit}")
    return x.astype(np.int64)


@dataclass
class CrossbarCore:
    device: DeviceModel
    n_rows: int
    n_cols: int
    coding: CodingConfig = field(default_factory=CodingConfig)
    v_read: float = 0.785
    v_write: float = 1.8
    adc_saturation_fraction: float = 0.05
    # ADC range for the transpose read; None reuses adc_saturation_fraction
    mvm_saturation_fraction: float | None = None
    g_pos: np.ndarray | None = None
    g_ref: np.ndarray | None = None
    offset_row: np.ndarray | None = None
    # integrator/comparator offsets seen at each column output, in coulombs
    column_offset: np.ndarray | None = None

    def __post_init__(self):
        mid = self.device.range.mid
        shape = (self.n_rows, self.n_cols)
        if self.g_pos is None:
            self.g_pos = np.full(shape, mid)
        if self.g_ref is None:
            self.g_ref = np.full(shape, mid)
        if self.offset_row is None:
            self.offset_row = np.full(self.n_cols, mid)
        if self.column_offset is None:
            self.column_offset = np.zeros(self.n_cols)
        self.g_pos = np.asarray(self.g_pos, dtype=float)
        self.g_ref = np.asarray(self.g_ref, dtype=float)
        self.offset_row = np.asarray(self.offset_row, dtype=float)
        self.column_offset = np.asarray(self.column_offset, dtype=float)
        if self.g_pos.shape != shape or self.g_ref.shape != shape or self.offset_row.shape != (self.n_cols,):
            raise DomainError("conductance arrays do not match the core shape")
        for frac in (self.adc_saturation_fraction, self.mvm_saturation_fraction):
            if frac is not None and not 0 < frac <= 1:
                raise DomainError("ADC saturation fractions must lie in (0, 1]")

    # weights ---------------------------------------------------------------

    @property
    def half_span(self) -> float:
        return 0.5 * self.device.range.span

    def weights(self) -> np.ndarray:
        return decode_weight(self.g_pos, self.g_ref, self)

    def set_weights(self, w) -> None:
        """Store ``w`` exactly, as a perfect program-and-verify pass would."""
        self.g_pos = encode_weight(w, self)

    # read path --------------------------------------------------------------

    def _unit_charge(self) -> float:
        """Charge of one code unit through one unit of weight."""
        return self.coding.pulse_unit_ns * 1e-9 * self.v_read * self.half_span

    def full_scale_charge(self, transpose: bool = False) -> float:
        """Charge at which the ADC saturates: a fraction of the worst case."""
        n_in = self.n_cols if transpose else self.n_rows
        frac = self.adc_saturation_fraction
        if transpose and self.mvm_saturation_fraction is not None:
            frac = self.mvm_saturation_fraction
        return frac * n_in * self.coding.t_max * self._unit_charge()

    def adc_lsb(self, transpose: bool = False) -> float:
        """ADC step in coulombs for VMM (or MVM when ``transpose``)."""
        return 2.0 * self.full_scale_charge(transpose) / 2 ** self.coding.n_bits_adc

    def output_lsb(self, transpose: bool = False) -> float:
        """ADC step expressed in (input code x weight) units."""
        return self.adc_lsb(transpose) / self._unit_charge()

    def digitize(self, q, transpose: bool = False) -> np.ndarray:
        m = self.coding.adc_max
        return np.clip(np.rint(np.asarray(q) / self.adc_lsb(transpose)), -m, m).astype(np.int64)

    def _read_diff(self, rng) -> np.ndarray:
        if self.device.read_noise_rel == 0:
            return self.g_pos - self.g_ref
        return apply_read_noise(self.g_pos, self.device, rng) - apply_read_noise(self.g_ref, self.device, rng)

    def column_charge(self, x, rng: np.random.Generator | None = None) -> np.ndarray:
        """Analog integrator charge per column for row input codes ``x``.

        ``x`` may be a batch (one input vector per row); read noise is then
        drawn once for the whole batch.
        """
        x = _as_code(x, self.coding.t_max, self.n_rows, "row input", batch=True)
        lengths, signs = temporal_encode(x, self.coding)
        t = signs * lengths * 1e-9
        q = (t * self.v_read) @ self._read_diff(rng)
        off = self.offset_row
        if self.device.read_noise_rel:
            off = apply_read_noise(off, self.device, rng)
        t_off = self.coding.t_max * self.coding.pulse_unit_ns * 1e-9
        return q + t_off * self.v_read * (off - self.device.range.mid) + self.column_offset

    def row_charge(self, x, rng: np.random.Generator | None = None) -> np.ndarray:
        x = _as_code(x, self.coding.t_max, self.n_cols, "column input", batch=True)
        lengths, signs = temporal_encode(x, self.coding)
        t = signs * lengths * 1e-9
        return (t * self.v_read) @ self._read_diff(rng).T

    # serialisation ------------------------------------------------------------

    def to_dict(self) -> dict:
        c = self.coding
        return {
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
            "coding": {"n_bits_t": c.n_bits_t, "n_bits_v": c.n_bits_v, "n_bits_adc": c.n_bits_adc,
                       "pulse_unit_ns": c.pulse_unit_ns},
            "v_read": self.v_read,
            "v_write": self.v_write,
            "adc_saturation_fraction": self.adc_saturation_fraction,
            "mvm_saturation_fraction": self.mvm_saturation_fraction,
            "device": device_to_dict(self.device),
            "g_pos": self.g_pos.tolist(),
            "g_ref": self.g_ref.tolist(),
            "offset_row": self.offset_row.tolist(),
            "column_offset": self.column_offset.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CrossbarCore":
        return cls(
            device=device_from_dict(d["device"]),
            n_rows=d["n_rows"],
            n_cols=d["n_cols"],
            coding=CodingConfig(**d["coding"]),
            v_read=d["v_read"],
            v_write=d["v_write"],
            adc_saturation_fraction=d["adc_saturation_fraction"],
            mvm_saturation_fraction=d.get("mvm_saturation_fraction"),
            g_pos=np.array(d["g_pos"], dtype=float).reshape(d["n_rows"], d["n_cols"]),
            g_ref=np.array(d["g_ref"], dtype=float).reshape(d["n_rows"], d["n_cols"]),
            offset_row=np.array(d["offset_row"], dtype=float),
            column_offset=np.array(d["column_offset"], dtype=float),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "CrossbarCore":
        return cls.from_dict(json.loads(Path(path).read_text()))


# weight encoding -------------------------------------------------------------


def encode_weight(w, core: CrossbarCore) -> np.ndarray:
    """Conductance of the programmable device for weight ``w`` in [-1, 1]."""
    w = np.asarray(w, dtype=float)
    if np.any(np.abs(w) > 1):
        raise DomainError("weights must lie in [-1, 1]")
    r = core.device.range
    return np.clip(r.mid + w * core.half_span, r.g_min, r.g_max)


def decode_weight(g_pos, g_ref, core: CrossbarCore) -> np.ndarray:
    return (np.asarray(g_pos) - np.asarray(g_ref)) / core.half_span


def temporal_encode(x, coding: CodingConfig) -> tuple[np.ndarray, np.ndarray]:
    """Pulse length in ns and drive polarity for each input code."""
    x = np.asarray(x)
    if np.any(np.abs(x) > coding.t_max):
        raise DomainError(f"temporal codes exceed +/-{coding.t_max}")
    return np.abs(x) * coding.pulse_unit_ns, np.sign(x).astype(np.int64)


# parallel kernels --------------------------------------------------------------


def vmm(core: CrossbarCore, x, rng: np.random.Generator | None = None) -> np.ndarray:
    """Drive rows with ``x``, integrate and digitise each column."""
    return core.digitize(core.column_charge(x, rng))


def mvm(core: CrossbarCore, x, rng: np.random.Generator | None = None) -> np.ndarray:
    """Drive columns with ``x``, integrate and digitise each row."""
    return core.digitize(core.row_charge(x, rng), transpose=True)


@dataclass(frozen=True)
class PhaseRecord:
    signs: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    voltages: np.ndarray  # signed pulse amplitude applied to each selected column


def _level_scale(core: CrossbarCore, s_abs: np.ndarray, amplitude: float, polarity: int):
    """Per-pulse Delta-G multiplier and the voltage producing it."""
    frac = s_abs / core.coding.v_levels * amplitude
    vr = core.device.voltage_response
    if vr is None:
        return frac, np.sign(polarity) * core.v_write * np.ones_like(frac)
    ref = delta_g_of_voltage(polarity * core.v_write, vr)
    volts = voltage_for_delta_g(frac * ref, vr, polarity)
    return delta_g_of_voltage(volts, vr) / ref, volts


def outer_update(core: CrossbarCore, x, s, rng: np.random.Generator,
                 amplitude: float = 1.0, exact: bool = False) -> list[PhaseRecord]:
    """Rank-one update ``W += x (x) s`` in four sign phases.

    A device receives ``|x_i|`` pulses at the voltage level encoding
    ``|s_j|``; one pulse at the top level with ``amplitude=1`` is the
    device's nominal step. Devices sharing only a row or a column with the
    selected set see a third of the phase's largest write voltage.
    """
    x = _as_code(x, core.coding.t_max, core.n_rows, "row update vector")
    s = _as_code(s, core.coding.v_levels, core.n_cols, "column update vector")
    if amplitude < 0:
        raise DomainError("amplitude must be non-negative")
    vr = core.device.voltage_response
    records = []
    for sx, ss in PHASES:
        rows = np.flatnonzero(np.sign(x) == sx)
        cols = np.flatnonzero(np.sign(s) == ss)
        if rows.size == 0 or cols.size == 0:
            continue
        pol = sx * ss
        scale, volts = _level_scale(core, np.abs(s[cols]).astype(float), amplitude, pol)
        block = core.g_pos[np.ix_(rows, cols)]
        n = np.abs(x[rows])[:, None]
        core.g_pos[np.ix_(rows, cols)] = sample_pulse_train(
            block, n, pol, core.device, rng, scale[None, :], exact=exact)
        records.append(PhaseRecord((sx, ss), rows, cols, volts))
        if vr is not None:
            _half_select(core, rows, cols, n[:, 0], np.max(np.abs(volts)) / 3.0, pol, rng)
    return records


def _half_select(core, rows, cols, n_rows_pulses, v_half, pol, rng):
    vr = core.device.voltage_response
    ref = delta_g_of_voltage(pol * core.v_write, vr)
    disturb = float(delta_g_of_voltage(pol * v_half, vr) / ref)
    if disturb == 0.0:
        return
    other_cols = np.setdiff1d(np.arange(core.n_cols), cols)
    other_rows = np.setdiff1d(np.arange(core.n_rows), rows)
    if other_cols.size:
        ix = np.ix_(rows, other_cols)
        core.g_pos[ix] = sample_pulse_train(core.g_pos[ix], n_rows_pulses[:, None], pol, core.device, rng, disturb)
    if other_rows.size:
        ix = np.ix_(other_rows, cols)
        core.g_pos[ix] = sample_pulse_train(core.g_pos[ix], int(n_rows_pulses.max()), pol, core.device, rng, disturb)


# serial access -------------------------------------------------------------------


@dataclass(frozen=True)
class SerialWriteResult:
    pulses: int
    residual: float
    converged: bool


def program_weights(core: CrossbarCore, rows, cols, targets, rng: np.random.Generator, *,
                    tolerance: float = 0.01, max_pulses: int = 10_000, pulse_scale: float = 1.0,
                    burst_gain: float = 0.8, array: str = "pos") -> tuple[np.ndarray, np.ndarray]:
    """Closed-loop program-and-verify of many devices at once.

    Each round reads every unfinished device, then applies a burst of
    pulses sized from the model's expected local step (never more than
    ``burst_gain`` of the remaining error). ``array`` is ``"pos"`` for the
    weight array or ``"offset"`` for the offset-correction row, in which case
    ``rows`` is ignored. Returns pulses used and final signed error per device.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=float))
    cols = np.atleast_1d(np.asarray(cols))
    if np.any(np.abs(targets) > 1):
        raise DomainError("target weights must lie in [-1, 1]")
    if array == "pos":
        rows = np.atleast_1d(np.asarray(rows))
        if np.any(rows < 0) or np.any(rows >= core.n_rows) or np.any(cols < 0) or np.any(cols >= core.n_cols):
            raise DomainError("device index out of range")
        ref = core.g_ref[rows, cols]

        def get():
            return core.g_pos[rows, cols]

        def put(mask, vals):
            core.g_pos[rows[mask], cols[mask]] = vals
    elif array == "offset":
        if np.any(cols < 0) or np.any(cols >= core.n_cols):
            raise DomainError("column index out of range")
        ref = np.full(cols.shape, core.device.range.mid)

        def get():
            return core.offset_row[cols]

        def put(mask, vals):
            core.offset_row[cols[mask]] = vals
    else:
        raise DomainError(f"unknown array {array!r}")

    r = core.device.range
    half = core.half_span
    used = np.zeros(targets.shape, dtype=np.int64)
    err = np.zeros(targets.shape)
    while True:
        g = get()
        err = targets - (apply_read_noise(g, core.device, rng) - ref) / half
        pol = np.where(err > 0, Polarity.SET, Polarity.RESET)
        stuck = ((pol > 0) & (g >= r.g_max)) | ((pol < 0) & (g <= r.g_min))
        active = (np.abs(err) > tolerance) & (used < max_pulses) & ~stuck
        if not np.any(active):
            break
        ga, pa = g[active], pol[active]
        step_w = np.abs(mean_delta_g(ga, pa, core.device, pulse_scale)) / half
        with np.errstate(divide="ignore"):
            n = np.floor(burst_gain * np.abs(err[active]) / step_w)
        n = np.clip(np.nan_to_num(n, posinf=max_pulses), 1, max_pulses - used[active]).astype(np.int64)
        put(active, sample_pulse_train(ga, n, pa, core.device, rng, pulse_scale))
        used[active] += n
    return used, err


def serial_write(core: CrossbarCore, i: int, j: int, target_w: float, max_pulses: int,
                 tolerance: float, rng: np.random.Generator, pulse_scale: float = 1.0) -> SerialWriteResult:
    """Program one device of the weight array to ``target_w``."""
    used, err = program_weights(core, [i], [j], [target_w], rng, tolerance=tolerance,
                                max_pulses=max_pulses, pulse_scale=pulse_scale)
    return SerialWriteResult(int(used[0]), float(err[0]), bool(abs(err[0]) <= tolerance))


def serial_read(core: CrossbarCore, i: int, rng: np.random.Generator | None = None) -> np.ndarray:
    """Digitised weights of row ``i`` obtained by driving only that row at full length."""
    x = np.zeros(core.n_rows, dtype=np.int64)
    x[i] = core.coding.t_max
    return vmm(core, x, rng)


def calibrate_offset_row(core: CrossbarCore, rng: np.random.Generator | None = None,
                         tolerance_lsb: float = 0.25, max_pulses: int = 10_000) -> np.ndarray:
    """Program the offset row so a zero input integrates to zero charge.

    Returns the residual zero-input charge of each column in ADC LSBs.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    zero = np.zeros(core.n_rows, dtype=np.int64)
    q0 = core.column_charge(zero, rng)
    t_off = core.coding.t_max * core.coding.pulse_unit_ns * 1e-9
    per_weight = t_off * core.v_read * core.half_span
    mid = core.device.range.mid
    current_w = (core.offset_row - mid) / core.half_span
    target_w = np.clip(current_w - q0 / per_weight, -1.0, 1.0)
    tol_w = tolerance_lsb * core.adc_lsb() / per_weight
    program_weights(core, None, np.arange(core.n_cols), target_w, rng, tolerance=tol_w,
                    max_pulses=max_pulses, array="offset")
    return core.column_charge(zero, rng) / core.adc_lsb()
