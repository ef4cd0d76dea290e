"""Single-cell ReRAM + select-device behaviour.

Conductances are in siemens, voltages in volts, pulse widths in ns. Every
stochastic function takes an explicit ``numpy.random.Generator`` and is
vectorised over its conductance argument.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Union

import numpy as np

from .errors import DomainError, FormatError


class Polarity(IntEnum):
    SET = 1
    RESET = -1


@dataclass(frozen=True)
class SelectDeviceParams:
    i0: float = 8.7e-18
    v0: float = 0.037

    def __post_init__(self):
        if self.i0 <= 0 or self.v0 <= 0:
            raise DomainError("select device needs i0 > 0 and v0 > 0")


@dataclass(frozen=True)
class VoltageResponseParams:
    """Exponential conductance-change response outside a voltage dead zone."""

    d1: float
    d2: float
    v_min_p: float
    v_min_n: float

    def __post_init__(self):
        if self.d1 <= 0 or self.d2 <= 0:
            raise DomainError("d1 and d2 must be positive")
        if self.v_min_p <= 0 or self.v_min_n >= 0:
            raise DomainError("need v_min_p > 0 and v_min_n < 0")


@dataclass(frozen=True)
class ConductanceRange:
    g_min: float = 1e-9
    g_max: float = 1e-8

    def __post_init__(self):
        if not 0 < self.g_min < self.g_max:
            raise DomainError("need 0 < g_min < g_max")

    @property
    def span(self) -> float:
        return self.g_max - self.g_min

    @property
    def mid(self) -> float:
        return 0.5 * (self.g_min + self.g_max)


@dataclass(frozen=True)
class IdealUpdateParams:
    """State-independent, noise-free update of ``step`` siemens per pulse."""

    step: float
    range: ConductanceRange = field(default_factory=ConductanceRange)

    def __post_init__(self):
        if self.step <= 0:
            raise DomainError("step must be positive")


@dataclass(frozen=True)
class AnalyticUpdateParams:
    """Exponential state dependence per polarity with multiplicative noise.

    Mean SET step is ``a_p * exp(-beta_p * (g - g_min) / span)`` and mean
    RESET step is ``-a_n * exp(-beta_n * (g_max - g) / span)``.
    """

    a_p: float
    a_n: float
    beta_p: float = 0.0
    beta_n: float = 0.0
    sigma_rel: float = 0.0
    range: ConductanceRange = field(default_factory=ConductanceRange)

    def __post_init__(self):
        if self.a_p <= 0 or self.a_n <= 0:
            raise DomainError("a_p and a_n must be positive")
        if self.beta_p < 0 or self.beta_n < 0 or self.sigma_rel < 0:
            raise DomainError("beta and sigma_rel must be non-negative")


@dataclass
class ConductanceTable:
    """Binned Delta-G distributions conditioned on the pre-pulse conductance.

    For each polarity, row ``b`` of ``*_support``/``*_cdfs`` holds a
    piecewise-linear CDF over Delta-G (siemens) for starting conductances in
    ``[bin_edges[b], bin_edges[b+1])``. A row of NaN marks an absent bin.
    ``pulse_voltage`` is the signed (SET, RESET) pulse amplitude pair.
    """

    range: ConductanceRange
    bin_edges: np.ndarray
    set_support: np.ndarray
    set_cdfs: np.ndarray
    reset_support: np.ndarray
    reset_cdfs: np.ndarray
    pulse_voltage: tuple[float, float] = (1.0, -1.0)
    pulse_width_ns: float = 10.0

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        for name in ("set_support", "set_cdfs", "reset_support", "reset_cdfs"):
            setattr(self, name, np.atleast_2d(np.asarray(getattr(self, name), dtype=float)))
        edges = self.bin_edges
        if edges.ndim != 1 or len(edges) < 2 or np.any(np.diff(edges) <= 0):
            raise DomainError("bin_edges must be strictly increasing with >= 2 entries")
        if not (np.isclose(edges[0], self.range.g_min, rtol=1e-9, atol=0)
                and np.isclose(edges[-1], self.range.g_max, rtol=1e-9, atol=0)):
            raise DomainError("bin_edges must span [g_min, g_max]")
        n_bins = len(edges) - 1
        for sup, cdf in ((self.set_support, self.set_cdfs), (self.reset_support, self.reset_cdfs)):
            if sup.shape != cdf.shape or sup.shape[0] != n_bins:
                raise DomainError("support/cdf matrices must be n_bins x n_points")
            for row_x, row_f in zip(sup, cdf):
                if np.all(np.isnan(row_f)):
                    continue
                if np.any(np.diff(row_f) < 0) or np.any(np.diff(row_x) < 0):
                    raise DomainError("CDF rows and their support must be nondecreasing")
                if not (np.isclose(row_f[0], 0.0) and np.isclose(row_f[-1], 1.0)):
                    raise DomainError("each CDF must run from 0 to 1")

    @property
    def n_bins(self) -> int:
        return len(self.bin_edges) - 1

    def _arrays(self, polarity: int):
        if polarity == Polarity.SET:
            return self.set_support, self.set_cdfs
        return self.reset_support, self.reset_cdfs

    def bin_index(self, g0) -> np.ndarray:
        idx = np.searchsorted(self.bin_edges, g0, side="right") - 1
        return np.clip(idx, 0, self.n_bins - 1)

    def present(self, polarity: int) -> np.ndarray:
        _, cdfs = self._arrays(polarity)
        return ~np.all(np.isnan(cdfs), axis=1)

    def bin_means(self, polarity: int) -> np.ndarray:
        """Mean Delta-G of every bin (NaN for absent bins)."""
        sup, cdf = self._arrays(polarity)
        dF = np.diff(cdf, axis=1)
        mids = 0.5 * (sup[:, 1:] + sup[:, :-1])
        return np.sum(mids * dF, axis=1)

    def bin_vars(self, polarity: int) -> np.ndarray:
        """Variance of Delta-G in every bin (NaN for absent bins)."""
        sup, cdf = self._arrays(polarity)
        dF = np.diff(cdf, axis=1)
        x0, x1 = sup[:, :-1], sup[:, 1:]
        m2 = np.sum(dF * (x0 * x0 + x0 * x1 + x1 * x1) / 3.0, axis=1)
        return np.maximum(m2 - self.bin_means(polarity) ** 2, 0.0)

    def sample(self, g0, polarity, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF draw of Delta-G for each entry of ``g0``."""
        g0 = np.asarray(g0, dtype=float)
        pol = np.broadcast_to(np.asarray(polarity), g0.shape)
        bins = self.bin_index(g0)
        u = rng.random(g0.shape)
        out = np.empty(g0.shape)
        for p in (Polarity.SET, Polarity.RESET):
            sel = pol == p
            if not np.any(sel):
                continue
            sup, cdf = self._arrays(p)
            b = bins[sel]
            if not np.all(self.present(p)[b]):
                raise DomainError(f"sampling from an absent {p.name} bin")
            F = cdf[b]
            X = sup[b]
            uu = u[sel]
            k = np.clip(np.sum(F <= uu[:, None], axis=1) - 1, 0, F.shape[1] - 2)
            rows = np.arange(len(b))
            f0, f1 = F[rows, k], F[rows, k + 1]
            x0, x1 = X[rows, k], X[rows, k + 1]
            dF = f1 - f0
            with np.errstate(invalid="ignore", divide="ignore"):
                frac = np.where(dF > 0, (uu - f0) / dF, 1.0)
            out[sel] = x0 + frac * (x1 - x0)
        return out

    # serialisation -------------------------------------------------------

    def to_dict(self) -> dict:
        def rows(a):
            return [None if np.all(np.isnan(r)) else [float(v) for v in r] for r in a]

        return {
            "pulse_voltage": [float(v) for v in self.pulse_voltage],
            "pulse_width_ns": float(self.pulse_width_ns),
            "g_min": float(self.range.g_min),
            "g_max": float(self.range.g_max),
            "bin_edges": [float(v) for v in self.bin_edges],
            "dg_support": {"set": rows(self.set_support), "reset": rows(self.reset_support)},
            "set_cdfs": rows(self.set_cdfs),
            "reset_cdfs": rows(self.reset_cdfs),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConductanceTable":
        try:
            edges = np.asarray(d["bin_edges"], dtype=float)
            width = None
            for r in (*d["set_cdfs"], *d["reset_cdfs"]):
                if r is not None:
                    width = len(r)
                    break
            if width is None:
                raise FormatError("table has no populated bins")

            def mat(rows):
                return np.array([[np.nan] * width if r is None else r for r in rows], dtype=float)

            return cls(
                range=ConductanceRange(float(d.get("g_min", edges[0])), float(d.get("g_max", edges[-1]))),
                bin_edges=edges,
                set_support=mat(d["dg_support"]["set"]),
                set_cdfs=mat(d["set_cdfs"]),
                reset_support=mat(d["dg_support"]["reset"]),
                reset_cdfs=mat(d["reset_cdfs"]),
                pulse_voltage=tuple(float(v) for v in d["pulse_voltage"]),
                pulse_width_ns=float(d["pulse_width_ns"]),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"malformed conductance table: {exc!r}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "ConductanceTable":
        return cls.from_dict(json.loads(Path(path).read_text()))


UpdateKind = Union[IdealUpdateParams, AnalyticUpdateParams, ConductanceTable]


@dataclass
class DeviceModel:
    kind: UpdateKind
    voltage_response: VoltageResponseParams | None = None
    select: SelectDeviceParams = field(default_factory=SelectDeviceParams)
    read_noise_rel: float = 0.0

    def __post_init__(self):
        if self.read_noise_rel < 0:
            raise DomainError("read_noise_rel must be >= 0")

    @property
    def range(self) -> ConductanceRange:
        return self.kind.range

    @property
    def is_ideal(self) -> bool:
        return isinstance(self.kind, IdealUpdateParams)

    @classmethod
    def ideal(cls, step: float, range: ConductanceRange | None = None, **kw) -> "DeviceModel":
        return cls(IdealUpdateParams(step, range or ConductanceRange()), **kw)


# deterministic characteristics -------------------------------------------


def select_current(v, p: SelectDeviceParams = SelectDeviceParams()):
    """Symmetrised-diode current through the select device."""
    v = np.asarray(v, dtype=float)
    return np.sign(v) * p.i0 * np.expm1(np.abs(v) / p.v0)


def delta_g_of_voltage(v, p: VoltageResponseParams):
    """Normalised conductance change produced by a pulse of amplitude ``v``."""
    v = np.asarray(v, dtype=float)
    up = np.expm1(p.d1 * np.maximum(v - p.v_min_p, 0.0))
    down = np.expm1(p.d2 * np.maximum(p.v_min_n - v, 0.0))
    return np.where(v > p.v_min_p, up, np.where(v < p.v_min_n, down, 0.0))


def voltage_for_delta_g(dg, p: VoltageResponseParams, polarity: int):
    """Inverse of :func:`delta_g_of_voltage` on the SET or RESET branch."""
    dg = np.asarray(dg, dtype=float)
    if np.any(dg < 0):
        raise DomainError("dg magnitude must be non-negative")
    if polarity == Polarity.SET:
        return p.v_min_p + np.log1p(dg) / p.d1
    return p.v_min_n - np.log1p(dg) / p.d2


# stochastic updates --------------------------------------------------------


def _check_range(g0, rng_: ConductanceRange):
    g0 = np.asarray(g0, dtype=float)
    tol = 1e-12 * rng_.g_max
    if np.any(g0 < rng_.g_min - tol) or np.any(g0 > rng_.g_max + tol):
        raise DomainError("g0 outside [g_min, g_max]")
    return g0


def mean_delta_g(g0, polarity, model: DeviceModel, scale=1.0) -> np.ndarray:
    """Expected signed Delta-G of a single pulse."""
    kind = model.kind
    g0 = np.asarray(g0, dtype=float)
    pol = np.asarray(polarity)
    if isinstance(kind, IdealUpdateParams):
        return pol * kind.step * scale * np.ones_like(g0)
    if isinstance(kind, AnalyticUpdateParams):
        r = kind.range
        up = kind.a_p * np.exp(-kind.beta_p * (g0 - r.g_min) / r.span)
        down = -kind.a_n * np.exp(-kind.beta_n * (r.g_max - g0) / r.span)
        return np.where(pol > 0, up, down) * scale
    bins = kind.bin_index(g0)
    return np.where(pol > 0, kind.bin_means(Polarity.SET)[bins], kind.bin_means(Polarity.RESET)[bins]) * scale


def average_step(model: DeviceModel, polarity: int) -> float:
    """Magnitude of the mean single-pulse step averaged uniformly over the range."""
    kind = model.kind
    if isinstance(kind, IdealUpdateParams):
        return kind.step
    if isinstance(kind, AnalyticUpdateParams):
        a, beta = (kind.a_p, kind.beta_p) if polarity == Polarity.SET else (kind.a_n, kind.beta_n)
        return a if beta == 0 else a * -np.expm1(-beta) / beta
    means = kind.bin_means(polarity)
    return float(np.nanmean(np.abs(means)))


def sample_update(g0, polarity, model: DeviceModel, rng: np.random.Generator, scale=1.0) -> np.ndarray:
    """Conductance after one write pulse, clipped to the device range.

    ``scale`` multiplies the drawn Delta-G; the crossbar uses it to express
    the effect of a non-reference pulse voltage.
    """
    rng_ = model.range
    g0 = _check_range(g0, rng_)
    kind = model.kind
    if isinstance(kind, IdealUpdateParams):
        dg = mean_delta_g(g0, polarity, model, scale)
    elif isinstance(kind, AnalyticUpdateParams):
        dg = mean_delta_g(g0, polarity, model, scale)
        if kind.sigma_rel > 0:
            dg = dg * (1.0 + kind.sigma_rel * rng.standard_normal(g0.shape))
    else:
        pol = np.broadcast_to(np.asarray(polarity), g0.shape)
        dg = kind.sample(g0, pol, rng) * scale
    return np.clip(g0 + dg, rng_.g_min, rng_.g_max)


def sample_pulse_train(g0, n_pulses, polarity, model: DeviceModel, rng: np.random.Generator,
                       scale=1.0, exact: bool = False) -> np.ndarray:
    """Conductance after ``n_pulses`` identical consecutive pulses.

    Ideal devices are exact. Analytic devices by default use the continuous
    limit of the mean trajectory, ``exp(beta*u)`` growing linearly in pulse
    count, with the per-pulse noise summed into one Gaussian of standard
    deviation ``sigma_rel * |mean change| / sqrt(n)``. Table devices by
    default follow their bin means through the bins in short chunks, each
    closed by one Gaussian carrying the chunk's summed variance. ``exact=True``
    steps any device pulse by pulse.
    """
    rng_ = model.range
    g0 = _check_range(g0, rng_)
    n = np.broadcast_to(np.asarray(n_pulses, dtype=np.int64), g0.shape)
    if np.any(n < 0):
        raise DomainError("pulse counts must be non-negative")
    pol = np.broadcast_to(np.asarray(polarity), g0.shape)
    scale_in = scale
    scale = np.broadcast_to(np.asarray(scale, dtype=float), g0.shape)
    kind = model.kind

    if isinstance(kind, IdealUpdateParams):
        return np.clip(g0 + pol * n * kind.step * scale, rng_.g_min, rng_.g_max)

    if isinstance(kind, AnalyticUpdateParams) and not exact:
        if np.ndim(polarity) == 0:
            # keep n and scale in their compact broadcastable shapes
            return _analytic_train(g0, np.asarray(n_pulses), int(polarity),
                                   np.asarray(scale_in, dtype=float), kind, rng)
        out = np.empty_like(g0)
        for p in (Polarity.SET, Polarity.RESET):
            sel = pol == p
            if np.any(sel):
                out[sel] = _analytic_train(g0[sel], n[sel], p, scale[sel], kind, rng)
        return out

    if isinstance(kind, ConductanceTable) and not exact:
        out = np.empty_like(g0)
        for p in (Polarity.SET, Polarity.RESET):
            sel = pol == p
            if np.any(sel):
                out[sel] = _table_train(g0[sel], n[sel].copy(), p, scale[sel], kind, rng)
        return out

    g = g0.copy()
    for k in range(int(n.max(initial=0))):
        act = n > k
        g[act] = sample_update(g[act], pol[act], model, rng, scale[act])
    return g


TABLE_CHUNKS = 4


def _table_maps(table: ConductanceTable, polarity: int):
    """Knots of the pulse-count and variance maps along the direction of motion.

    With ``y = polarity * g`` and the bin mean ``mu`` constant inside a bin,
    the pulses needed to reach ``y`` are ``T(y) = integral dy / mu`` and the
    variance picked up on the way is ``S(y) = integral var / mu dy``; both are
    piecewise linear in ``y``. Bins that are absent or do not push the state
    forward act as barriers. Returns knots ``y`` and ``T``, and per-bin
    slopes ``mu`` and ``var / mu``.
    """
    mu = polarity * table.bin_means(polarity)
    var = table.bin_vars(polarity)
    y = polarity * table.bin_edges
    if polarity < 0:
        y, mu, var = y[::-1], mu[::-1], var[::-1]
    good = np.isfinite(mu) & (mu > 0)
    floor = 1e-9 * (np.max(mu[good]) if np.any(good) else 1.0)
    mu_eff = np.where(good, mu, floor)
    s_rate = np.where(good, var, 0.0) / mu_eff
    T = np.r_[0.0, np.cumsum(np.diff(y) / mu_eff)]
    return y, T, mu_eff, s_rate


def _table_train(g0, n, polarity: int, scale, table: ConductanceTable, rng):
    """Drift-plus-diffusion pulse train for one polarity of a table device.

    The mean path follows the bin means exactly across bin edges (see
    :func:`_table_maps`). Each train is cut into ``TABLE_CHUNKS`` equal
    chunks, each closed by one Gaussian carrying the chunk's summed
    variance, so later drift sees the noisy state and the mean reversion of
    state-dependent steps survives.
    """
    y, T, mu, s_rate = _table_maps(table, polarity)
    last = len(mu) - 1
    r = table.range
    present = table.present(polarity)

    def check(gs):
        if not np.all(present[table.bin_index(gs)]):
            raise DomainError(f"sampling from an absent {Polarity(polarity).name} bin")

    g, left = g0.copy(), n.copy()
    check(g[left > 0])
    chunk = -(-n // TABLE_CHUNKS)
    while True:
        act = np.flatnonzero(left > 0)
        if act.size == 0:
            break
        m = np.minimum(left[act], chunk[act])
        sc = scale[act]
        y0 = np.clip(polarity * g[act], y[0], y[-1])
        k0 = np.clip(np.searchsorted(y, y0, side="right") - 1, 0, last)
        t1 = T[k0] + (y0 - y[k0]) / mu[k0] + m * sc
        k1 = np.clip(np.searchsorted(T, t1, side="right") - 1, 0, last)
        y1 = np.minimum(y[k1] + (t1 - T[k1]) * mu[k1], y[-1])
        # variance gathered between y0 and y1; whole bins in between via the knots
        s_knots = np.r_[0.0, np.cumsum(np.diff(y) * s_rate)]
        acc = sc * (s_knots[k1] + (y1 - y[k1]) * s_rate[k1] - s_knots[k0] - (y0 - y[k0]) * s_rate[k0])
        g1 = polarity * y1 + np.sqrt(np.maximum(acc, 0.0)) * rng.standard_normal(act.size)
        g[act] = np.clip(g1, r.g_min, r.g_max)
        left[act] -= m
    check(g[n > 0])
    return g


def _analytic_train(g0, n, polarity: int, scale, kind: AnalyticUpdateParams, rng):
    """Continuous-limit pulse train for one polarity (see sample_pulse_train)."""
    r = kind.range
    span = r.span
    if polarity > 0:
        u0, a, beta = (g0 - r.g_min) / span, kind.a_p / span, kind.beta_p
    else:
        u0, a, beta = (r.g_max - g0) / span, kind.a_n / span, kind.beta_n
    if beta == 0:
        du = a * scale * n
    else:
        with np.errstate(over="ignore"):
            du = np.log(np.exp(beta * u0) + a * beta * scale * n) / beta - u0
        if not np.all(n > 0):
            du = np.where(n > 0, du, 0.0)
    dmean = du * span
    if kind.sigma_rel > 0:
        z = rng.standard_normal(g0.shape)
        dmean = dmean * (1.0 + (kind.sigma_rel / np.sqrt(np.maximum(n, 1))) * z)
    return np.clip(g0 + polarity * dmean, r.g_min, r.g_max)


def apply_read_noise(g, model: DeviceModel, rng: np.random.Generator) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise DomainError("conductance must be non-negative")
    if model.read_noise_rel == 0:
        return g
    return np.maximum(g * (1.0 + model.read_noise_rel * rng.standard_normal(g.shape)), 0.0)


# serialisation of whole device models ---------------------------------------


def device_to_dict(model: DeviceModel) -> dict:
    kind = model.kind
    if isinstance(kind, IdealUpdateParams):
        k = {"type": "ideal", "step": kind.step, "g_min": kind.range.g_min, "g_max": kind.range.g_max}
    elif isinstance(kind, AnalyticUpdateParams):
        k = {"type": "analytic", "a_p": kind.a_p, "a_n": kind.a_n, "beta_p": kind.beta_p,
             "beta_n": kind.beta_n, "sigma_rel": kind.sigma_rel,
             "g_min": kind.range.g_min, "g_max": kind.range.g_max}
    else:
        k = {"type": "table", "table": kind.to_dict()}
    vr = model.voltage_response
    return {
        "kind": k,
        "voltage_response": None if vr is None else
        {"d1": vr.d1, "d2": vr.d2, "v_min_p": vr.v_min_p, "v_min_n": vr.v_min_n},
        "select": {"i0": model.select.i0, "v0": model.select.v0},
        "read_noise_rel": model.read_noise_rel,
    }


def device_from_dict(d: dict) -> DeviceModel:
    """Inverse of :func:`device_to_dict`; a bare table document is also accepted."""
    if "bin_edges" in d:
        return DeviceModel(ConductanceTable.from_dict(d))
    try:
        k = d["kind"]
        typ = k["type"]
        if typ == "table":
            kind = ConductanceTable.from_dict(k["table"])
        else:
            r = ConductanceRange(k["g_min"], k["g_max"])
            if typ == "ideal":
                kind = IdealUpdateParams(k["step"], r)
            elif typ == "analytic":
                kind = AnalyticUpdateParams(k["a_p"], k["a_n"], k.get("beta_p", 0.0), k.get("beta_n", 0.0),
                                            k.get("sigma_rel", 0.0), r)
            else:
                raise FormatError(f"unknown device kind {typ!r}")
        vr = d.get("voltage_response")
        sel = d.get("select") or {}
        return DeviceModel(
            kind,
            voltage_response=None if vr is None else VoltageResponseParams(**vr),
            select=SelectDeviceParams(**sel) if sel else SelectDeviceParams(),
            read_noise_rel=d.get("read_noise_rel", 0.0),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed device model: {exc!r}") from exc


def load_device(path) -> DeviceModel:
    return device_from_dict(json.loads(Path(path).read_text()))


def save_device(model: DeviceModel, path) -> None:
    Path(path).write_text(json.dumps(device_to_dict(model), indent=1))
