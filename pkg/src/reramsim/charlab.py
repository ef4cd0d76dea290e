"""Device characterisation: pulse-train traces, Delta-G tables, voltage fits.

A trace is a sequence of cycles. Each cycle is a run of identical SET
pulses followed by a run of identical RESET pulses, with the conductance
read after every pulse. Consecutive reads inside a cycle give one Delta-G
sample, filed under the bin of the conductance before the pulse.
"""
from __future__ import annotations

import csv
import gzip
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .device import (
    ConductanceRange,
    ConductanceTable,
    DeviceModel,
    Polarity,
    VoltageResponseParams,
    sample_update,
)
from .errors import DomainError, FormatError, TraceParseError

TRACE_HEADER = ("cycle", "pulse", "polarity", "voltage_V", "width_ns", "conductance_S")
POINTS_HEADER = ("voltage_V", "mean_dg")
_POLARITY = {"SET": 1, "RESET": -1, "+1": 1, "1": 1, "-1": -1}


@dataclass
class PulseTrace:
    cycle: np.ndarray
    pulse: np.ndarray
    polarity: np.ndarray
    voltage: np.ndarray
    width_ns: np.ndarray
    conductance: np.ndarray
    device_id: str = ""

    def __post_init__(self):
        self.cycle = np.asarray(self.cycle, dtype=np.int64)
        self.pulse = np.asarray(self.pulse, dtype=np.int64)
        self.polarity = np.asarray(self.polarity, dtype=np.int64)
        self.voltage = np.asarray(self.voltage, dtype=float)
        self.width_ns = np.asarray(self.width_ns, dtype=float)
        self.conductance = np.asarray(self.conductance, dtype=float)
        n = len(self.cycle)
        for name in ("pulse", "polarity", "voltage", "width_ns", "conductance"):
            if len(getattr(self, name)) != n:
                raise DomainError("trace columns must have equal length")

    def __len__(self) -> int:
        return len(self.cycle)

    @property
    def g_min_observed(self) -> float:
        return float(self.conductance.min())

    @property
    def g_max_observed(self) -> float:
        return float(self.conductance.max())


def _open_text(path):
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"\x1f\x8b":
        return io.TextIOWrapper(gzip.open(path, "rb"), newline="")
    return open(path, newline="")


def parse_trace(path) -> PulseTrace:
    """Read a trace CSV (optionally gzipped). Lines starting with '#' are comments;
    a ``# device_id: NAME`` comment sets the device id."""
    device_id = ""
    cols: list[list] = [[] for _ in TRACE_HEADER]
    header_seen = False
    last: tuple[int, int] | None = None
    with _open_text(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("device_id:"):
                    device_id = body.split(":", 1)[1].strip()
                continue
            fields_ = next(csv.reader([line]))
            if not header_seen:
                if tuple(f.strip() for f in fields_) != TRACE_HEADER:
                    raise TraceParseError(f"expected header {','.join(TRACE_HEADER)}", lineno)
                header_seen = True
                continue
            if len(fields_) != len(TRACE_HEADER):
                raise TraceParseError(f"expected {len(TRACE_HEADER)} fields, got {len(fields_)}", lineno)
            try:
                cyc, pulse = int(fields_[0]), int(fields_[1])
                pol_txt = fields_[2].strip().upper()
                if pol_txt not in _POLARITY:
                    raise ValueError(f"unknown polarity {fields_[2]!r}")
                pol = _POLARITY[pol_txt]
                v, w, g = float(fields_[3]), float(fields_[4]), float(fields_[5])
            except ValueError as exc:
                raise TraceParseError(str(exc), lineno) from None
            if not np.isfinite(g) or g <= 0:
                raise TraceParseError(f"conductance must be positive, got {fields_[5].strip()}", lineno)
            if not (np.isfinite(v) and np.isfinite(w)) or w <= 0:
                raise TraceParseError("voltage must be finite and width positive", lineno)
            if last is not None and last[0] == cyc and pulse <= last[1]:
                raise TraceParseError(f"pulse index {pulse} does not increase within cycle {cyc}", lineno)
            last = (cyc, pulse)
            for c, val in zip(cols, (cyc, pulse, pol, v, w, g)):
                c.append(val)
    if not header_seen:
        raise TraceParseError("empty trace file")
    if not cols[0]:
        raise TraceParseError("trace has no data rows")
    return PulseTrace(*cols, device_id=device_id)


def write_trace(trace: PulseTrace, path) -> None:
    """Write ``trace`` as CSV; a ``.gz`` suffix selects gzip. Floats round-trip exactly."""
    path = Path(path)
    buf = io.StringIO()
    if trace.device_id:
        buf.write(f"# device_id: {trace.device_id}\n")
    buf.write(",".join(TRACE_HEADER) + "\n")
    pol = np.where(trace.polarity > 0, "SET", "RESET")
    for row in zip(trace.cycle.tolist(), trace.pulse.tolist(), pol.tolist(), trace.voltage.tolist(),
                   trace.width_ns.tolist(), trace.conductance.tolist()):
        buf.write("%d,%d,%s,%r,%r,%r\n" % row)
    data = buf.getvalue().encode()
    if path.suffix == ".gz":
        # fixed mtime and no embedded name keep repeated writes byte-identical
        with open(path, "wb") as raw, gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
            fh.write(data)
    else:
        path.write_bytes(data)


def synthesize_trace(model: DeviceModel, n_cycles: int, pulses_per_run: int, rng: np.random.Generator,
                     set_voltage: float = 1.0, reset_voltage: float = -1.0, width_ns: float = 10.0,
                     g_start: float | None = None, device_id: str = "synthetic") -> PulseTrace:
    """Simulate SET-then-RESET pulse cycles on ``model``.

    Every cycle starts from ``g_start`` (default ``g_min``); cycles are
    simulated side by side, which is equivalent to running them back to back
    when each cycle begins in the same state.
    """
    if n_cycles < 1 or pulses_per_run < 1:
        raise DomainError("need at least one cycle and one pulse per run")
    r = model.range
    g = np.full(n_cycles, r.g_min if g_start is None else g_start, dtype=float)
    n = 2 * pulses_per_run
    out = np.empty((n_cycles, n))
    for k in range(n):
        pol = Polarity.SET if k < pulses_per_run else Polarity.RESET
        g = sample_update(g, pol, model, rng)
        out[:, k] = g
    pol_row = np.r_[np.ones(pulses_per_run, dtype=np.int64), -np.ones(pulses_per_run, dtype=np.int64)]
    v_row = np.where(pol_row > 0, set_voltage, reset_voltage)
    return PulseTrace(
        cycle=np.repeat(np.arange(n_cycles), n),
        pulse=np.tile(np.arange(n), n_cycles),
        polarity=np.tile(pol_row, n_cycles),
        voltage=np.tile(v_row, n_cycles),
        width_ns=np.full(n_cycles * n, width_ns),
        conductance=out.ravel(),
        device_id=device_id,
    )


# tables --------------------------------------------------------------------------


def transitions(trace: PulseTrace) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """(g_before, delta_g, polarity, row index of the pulse) for every in-cycle transition."""
    same = trace.cycle[1:] == trace.cycle[:-1]
    idx = np.flatnonzero(same) + 1
    g = trace.conductance
    return g[idx - 1], g[idx] - g[idx - 1], trace.polarity[idx], idx


def uniform_edges(g_lo: float, g_hi: float, n_bins: int) -> np.ndarray:
    if n_bins < 2:
        raise DomainError("n_bins must be >= 2")
    if g_hi < g_lo or g_lo <= 0:
        raise DomainError("conductance range must be positive and ordered")
    if g_hi == g_lo:
        # a flat trace still needs a non-empty range to bin into
        g_lo, g_hi = g_lo * (1 - 1e-6), g_hi * (1 + 1e-6)
    return np.linspace(g_lo, g_hi, n_bins + 1)


def binned_transitions(trace: PulseTrace, edges: np.ndarray) -> dict:
    """Delta-G samples per polarity per bin of the pre-pulse conductance."""
    g0, dg, pol, _ = transitions(trace)
    n_bins = len(edges) - 1
    bins = np.clip(np.searchsorted(edges, g0, side="right") - 1, 0, n_bins - 1)
    out = {}
    for p in (Polarity.SET, Polarity.RESET):
        sel = pol == p
        out[p] = [dg[sel & (bins == b)] for b in range(n_bins)]
    return out


def _cdf_rows(samples_by_bin, n_points: int):
    probs = np.linspace(0.0, 1.0, n_points)
    sup = np.full((len(samples_by_bin), n_points), np.nan)
    cdf = np.full_like(sup, np.nan)
    for b, s in enumerate(samples_by_bin):
        if s.size:
            sup[b] = np.quantile(s, probs)
            cdf[b] = probs
    return sup, cdf


def _cycle_signatures(trace: PulseTrace) -> dict:
    """Map each (V_set, V_reset, width) signature to the cycles using it."""
    groups: dict = {}
    for c in np.unique(trace.cycle):
        m = trace.cycle == c
        pol, v, w = trace.polarity[m], trace.voltage[m], trace.width_ns[m]
        vs = v[pol > 0]
        vr = v[pol < 0]
        if np.unique(w).size > 1 or np.unique(vs).size > 1 or np.unique(vr).size > 1:
            raise FormatError(f"cycle {c} mixes pulse voltages or widths")
        key = (float(vs[0]) if vs.size else float("nan"), float(vr[0]) if vr.size else float("nan"),
               float(w[0]))
        groups.setdefault(key, []).append(c)
    return groups


def _subset(trace: PulseTrace, cycles) -> PulseTrace:
    m = np.isin(trace.cycle, cycles)
    return PulseTrace(trace.cycle[m], trace.pulse[m], trace.polarity[m], trace.voltage[m],
                      trace.width_ns[m], trace.conductance[m], trace.device_id)


def build_tables(trace: PulseTrace, n_bins: int = 64, samples_per_cdf: int = 101) -> dict:
    """One table per distinct (SET voltage, RESET voltage, width) cycle signature."""
    if samples_per_cdf < 2:
        raise DomainError("samples_per_cdf must be >= 2")
    if n_bins < 2:
        raise DomainError("n_bins must be >= 2")
    out = {}
    for key, cycles in _cycle_signatures(trace).items():
        sub = _subset(trace, cycles)
        edges = uniform_edges(sub.g_min_observed, sub.g_max_observed, n_bins)
        binned = binned_transitions(sub, edges)
        for p in (Polarity.SET, Polarity.RESET):
            if not any(s.size for s in binned[p]):
                raise DomainError(f"trace has no {p.name} transitions for pulse set {key}")
        ss, sc = _cdf_rows(binned[Polarity.SET], samples_per_cdf)
        rs, rc = _cdf_rows(binned[Polarity.RESET], samples_per_cdf)
        out[key] = ConductanceTable(
            range=ConductanceRange(float(edges[0]), float(edges[-1])),
            bin_edges=edges, set_support=ss, set_cdfs=sc, reset_support=rs, reset_cdfs=rc,
            pulse_voltage=(key[0], key[1]), pulse_width_ns=key[2],
        )
    return out


def build_table(trace: PulseTrace, n_bins: int = 64, samples_per_cdf: int = 101) -> ConductanceTable:
    """Delta-G-vs-G0 table for a trace that uses a single pulse configuration."""
    tables = build_tables(trace, n_bins, samples_per_cdf)
    if len(tables) != 1:
        raise DomainError(f"trace holds {len(tables)} pulse configurations; use build_tables")
    return next(iter(tables.values()))


# voltage response fit --------------------------------------------------------------


@dataclass
class FitReport:
    d1: float
    d2: float
    v_min_p: float
    v_min_n: float
    residuals: dict = field(default_factory=dict)
    n_points: dict = field(default_factory=dict)
    dead_zone: tuple = (float("nan"), float("nan"))

    @property
    def params(self) -> VoltageResponseParams:
        return VoltageResponseParams(self.d1, self.d2, self.v_min_p, self.v_min_n)

    def to_dict(self) -> dict:
        return {"d1": self.d1, "d2": self.d2, "v_min_p": self.v_min_p, "v_min_n": self.v_min_n,
                "residuals": self.residuals, "n_points": self.n_points,
                "dead_zone_estimate": [None if np.isnan(x) else x for x in self.dead_zone]}


def _line_fit(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef[0], coef[1], float(np.linalg.norm(resid))


def fit_voltage_response(points, dg_unit: float = 1.0, floor: float = 1e-6) -> FitReport:
    """Fit the exponential voltage response to (V, mean Delta-G) points.

    ``dg_unit`` divides the Delta-G values first, so data in siemens can be
    fitted against a reference step. Points whose normalised magnitude is at
    or below ``floor`` are treated as dead-zone points: they are excluded
    from the fit and used only for the dead-zone estimate. Residuals are
    Euclidean norms in log(1 + dG) space.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise DomainError("points must be (voltage, mean dG) pairs")
    if dg_unit <= 0:
        raise DomainError("dg_unit must be positive")
    v, dg = pts[:, 0], np.abs(pts[:, 1]) / dg_unit
    live = dg > floor
    pos, neg = live & (v > 0), live & (v < 0)
    if pos.sum() < 3 or neg.sum() < 3:
        raise DomainError(
            f"need >= 3 points outside the dead zone per polarity, got {int(pos.sum())} positive "
            f"and {int(neg.sum())} negative")
    s_p, c_p, r_p = _line_fit(v[pos], np.log1p(dg[pos]))
    s_n, c_n, r_n = _line_fit(v[neg], np.log1p(dg[neg]))
    d1, d2 = s_p, -s_n
    quiet = ~live
    dz_hi = float(v[quiet & (v > 0)].max()) if np.any(quiet & (v > 0)) else float("nan")
    dz_lo = float(v[quiet & (v < 0)].min()) if np.any(quiet & (v < 0)) else float("nan")
    return FitReport(
        d1=float(d1), d2=float(d2), v_min_p=float(-c_p / s_p), v_min_n=float(c_n / d2),
        residuals={"positive": r_p, "negative": r_n},
        n_points={"positive": int(pos.sum()), "negative": int(neg.sum())},
        dead_zone=(dz_lo, dz_hi),
    )


def parse_points(path) -> np.ndarray:
    """Read a ``voltage_V,mean_dg`` CSV of voltage-response points."""
    rows = []
    with _open_text(path) as fh:
        header = None
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            f = [x.strip() for x in line.split(",")]
            if header is None:
                if tuple(f) != POINTS_HEADER:
                    raise TraceParseError(f"expected header {','.join(POINTS_HEADER)}", lineno)
                header = f
                continue
            if len(f) != 2:
                raise TraceParseError(f"expected 2 fields, got {len(f)}", lineno)
            try:
                rows.append((float(f[0]), float(f[1])))
            except ValueError as exc:
                raise TraceParseError(str(exc), lineno) from None
    if not rows:
        raise TraceParseError("no voltage-response points")
    return np.array(rows)


def write_points(points, path) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(POINTS_HEADER) + "\n")
        for v, d in np.asarray(points, dtype=float).tolist():
            fh.write(f"{v!r},{d!r}\n")


def save_fit(report: FitReport, path) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=1))
