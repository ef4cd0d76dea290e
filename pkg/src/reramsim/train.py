"""MLP backpropagation on MNIST with float or crossbar-backed weights.

The network is a stack of sigmoid layers trained online (one sample, one
update) on a squared-error loss. Each weight matrix carries an extra row for
the bias, driven by a constant input of 1. The crossbar backend stores every
matrix in one or more :class:`~reramsim.xbar.CrossbarCore` objects and runs
the forward pass with ``vmm``, error back-propagation with ``mvm`` and the
weight update with ``outer_update``.
"""
from __future__ import annotations

import csv
import gzip
import io
import os
import struct
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .device import (
    AnalyticUpdateParams,
    ConductanceRange,
    ConductanceTable,
    DeviceModel,
    IdealUpdateParams,
    Polarity,
    apply_read_noise,
    average_step,
    mean_delta_g,
)
from .errors import ConfigError, FormatError
from .xbar import CodingConfig, CrossbarCore, mvm, outer_update, program_weights, vmm

MNIST_ENV = "RERAMSIM_MNIST"
MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


# data -------------------------------------------------------------------------


@dataclass
class Dataset:
    train_x: np.ndarray
    train_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray
    n_classes: int = 10

    def one_hot(self, labels) -> np.ndarray:
        return np.eye(self.n_classes)[np.asarray(labels)]

    @property
    def train_t(self) -> np.ndarray:
        return self.one_hot(self.train_y)

    @property
    def test_t(self) -> np.ndarray:
        return self.one_hot(self.test_y)

    def subset(self, n_train: int | None = None, n_test: int | None = None) -> "Dataset":
        return Dataset(self.train_x[:n_train], self.train_y[:n_train], self.test_x[:n_test],
                       self.test_y[:n_test], self.n_classes)


def read_idx(path) -> np.ndarray:
    """Parse an IDX file (gzip optional) into an array of unsigned bytes."""
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise FormatError(f"{path}: corrupt gzip stream ({exc})") from exc
    if len(raw) < 4:
        raise FormatError(f"{path}: file too short for an IDX header")
    zero, dtype, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or dtype != 0x08 or ndim not in (1, 3):
        raise FormatError(f"{path}: bad IDX magic number 0x{int.from_bytes(raw[:4], 'big'):08x}")
    hdr = 4 + 4 * ndim
    if len(raw) < hdr:
        raise FormatError(f"{path}: truncated IDX header")
    dims = struct.unpack(">" + "I" * ndim, raw[4:hdr])
    n = int(np.prod(dims))
    if len(raw) - hdr < n:
        raise FormatError(f"{path}: truncated, expected {n} data bytes, found {len(raw) - hdr}")
    return np.frombuffer(raw, dtype=np.uint8, count=n, offset=hdr).reshape(dims)


def _find(directory: Path, stem: str) -> Path:
    for name in (stem, stem + ".gz"):
        if (directory / name).exists():
            return directory / name
    raise FileNotFoundError(
        f"MNIST file {stem}[.gz] not found in {directory}; expected "
        + ", ".join(MNIST_FILES.values()) + f" (set ${MNIST_ENV} or pass the directory)")


def mnist_dir(directory=None) -> Path:
    if directory is not None:
        return Path(directory)
    if os.environ.get(MNIST_ENV):
        return Path(os.environ[MNIST_ENV])
    return Path("data/mnist")


def load_mnist(directory=None) -> Dataset:
    """Load the four standard MNIST IDX files with pixels scaled to [0, 1]."""
    d = mnist_dir(directory)
    arrs = {k: read_idx(_find(d, v)) for k, v in MNIST_FILES.items()}
    for split in ("train", "test"):
        imgs, labs = arrs[f"{split}_images"], arrs[f"{split}_labels"]
        if imgs.ndim != 3 or labs.ndim != 1 or len(imgs) != len(labs):
            raise FormatError(f"{split} images and labels do not match")
    flat = {k: v.reshape(len(v), -1).astype(np.float64) / 255.0
            for k, v in arrs.items() if k.endswith("images")}
    return Dataset(flat["train_images"], arrs["train_labels"].astype(np.int64),
                   flat["test_images"], arrs["test_labels"].astype(np.int64))


# configuration ------------------------------------------------------------------


class AblationMode(str, Enum):
    FULL = "full"
    NO_NOISE = "no-noise"
    LINEARIZED = "linearized"
    NUMERIC = "numeric"


@dataclass(frozen=True)
class NetworkConfig:
    layer_sizes: tuple = (784, 300, 10)
    learning_rate: float = 0.1
    epochs: int = 20
    seed: int = 0
    train_subset: int | None = None
    test_subset: int | None = None
    # initial weights are uniform in +/- init_scale / sqrt(fan_in)
    init_scale: float = 1.0

    def __post_init__(self):
        if len(self.layer_sizes) < 2 or any(int(n) < 1 for n in self.layer_sizes):
            raise ConfigError("layer_sizes needs >= 2 positive entries")
        if self.epochs < 0 or self.learning_rate <= 0:
            raise ConfigError("epochs must be >= 0 and learning_rate > 0")


@dataclass(frozen=True)
class CrossbarConfig:
    """How a network maps onto crossbar cores.

    ``weight_scale`` is the weight represented by a fully SET device (one
    value per layer, or a scalar). ``adc_range`` is the pre-activation at
    which the forward ADC saturates; ``backprop_range`` is the transpose-read
    saturation level in units of ``weight_scale * max|delta|``.
    """

    coding: CodingConfig = field(default_factory=CodingConfig)
    weight_scale: tuple | float = (1.0, 1.0)
    adc_range: tuple | float = 16.0
    backprop_range: float = 1.0
    stochastic_rounding: bool = False
    # nominal device step used to size update pulses: "range-average" or "midpoint"
    step_calibration: str = "range-average"

    def per_layer(self, name: str, n_layers: int) -> list[float]:
        v = getattr(self, name)
        if np.isscalar(v):
            return [float(v)] * n_layers
        v = [float(x) for x in v]
        if len(v) != n_layers:
            raise ConfigError(f"{name} has {len(v)} entries for {n_layers} layers")
        return v


@dataclass(frozen=True)
class PeriodicCarryConfig:
    devices_per_weight: int = 3
    base: float = 8.0
    carry_interval: int = 1000
    # fraction of the half range (measured from midpoint) that triggers a carry
    carry_threshold: float = 0.8
    program_tolerance: float = 0.02
    program_pulse_scale: float = 0.1
    program_max_pulses: int = 5000

    def __post_init__(self):
        if self.devices_per_weight < 1:
            raise ConfigError("devices_per_weight must be >= 1")
        if self.devices_per_weight > 1 and self.base < 2:
            raise ConfigError("base must be >= 2")
        if self.carry_interval < 1 or not 0 <= self.carry_threshold <= 1:
            raise ConfigError("carry_interval must be >= 1 and carry_threshold in [0, 1]")


# devices used by the ablation study ------------------------------------------------


def reference_device(beta: float = 2.0, sigma_rel: float = 0.5, levels: float = 100.0) -> DeviceModel:
    """Analytic TaOx-like cell: one nominal pulse moves ``1/levels`` of the range."""
    r = ConductanceRange()
    a = r.span / levels
    return DeviceModel(AnalyticUpdateParams(a, a, beta, beta, sigma_rel, r))


def strong_nonlinear_device() -> DeviceModel:
    return reference_device(beta=5.0, sigma_rel=0.3)


def ideal_device(levels: float = 1000.0) -> DeviceModel:
    r = ConductanceRange()
    return DeviceModel.ideal(r.span / levels, r)


def _table_noise_rel(table: ConductanceTable) -> float:
    """Pooled relative spread of Delta-G across populated bins."""
    rel = []
    for p in (Polarity.SET, Polarity.RESET):
        sup, cdf = table._arrays(p)
        means = table.bin_means(p)
        for b in np.flatnonzero(table.present(p)):
            mids = 0.5 * (sup[b, 1:] + sup[b, :-1])
            w = np.diff(cdf[b])
            var = np.sum(w * (mids - means[b]) ** 2)
            if means[b] != 0:
                rel.append(np.sqrt(var) / abs(means[b]))
    return float(np.mean(rel)) if rel else 0.0


def _mean_table(table: ConductanceTable) -> ConductanceTable:
    def collapse(sup, cdf, means):
        s = np.where(np.isnan(cdf), np.nan, means[:, None] * np.ones_like(sup))
        return s, cdf.copy()

    ss, sc = collapse(table.set_support, table.set_cdfs, table.bin_means(Polarity.SET))
    rs, rc = collapse(table.reset_support, table.reset_cdfs, table.bin_means(Polarity.RESET))
    return ConductanceTable(table.range, table.bin_edges, ss, sc, rs, rc, table.pulse_voltage,
                            table.pulse_width_ns)


def ablation_device(device: DeviceModel, mode: AblationMode | str) -> DeviceModel:
    """Device seen by the network under an ablation mode.

    NO_NOISE drops write stochasticity. LINEARIZED drops the state
    dependence, keeping each polarity's range-averaged mean step and the
    write noise. NUMERIC gives an ideal linear device.
    """
    mode = AblationMode(mode)
    kind = device.kind
    if mode == AblationMode.FULL:
        return device
    if mode == AblationMode.NUMERIC:
        return replace(device, kind=IdealUpdateParams(average_step(device, Polarity.SET), device.range),
                       read_noise_rel=0.0)
    if isinstance(kind, IdealUpdateParams):
        return device
    if mode == AblationMode.NO_NOISE:
        if isinstance(kind, AnalyticUpdateParams):
            return replace(device, kind=replace(kind, sigma_rel=0.0))
        return replace(device, kind=_mean_table(kind))
    sigma = kind.sigma_rel if isinstance(kind, AnalyticUpdateParams) else _table_noise_rel(kind)
    lin = AnalyticUpdateParams(average_step(device, Polarity.SET), average_step(device, Polarity.RESET),
                               0.0, 0.0, sigma, device.range)
    return replace(device, kind=lin)


# float network --------------------------------------------------------------------------


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _aug(a):
    a = np.asarray(a, dtype=float)
    one = np.ones(a.shape[:-1] + (1,))
    return np.concatenate([a, one], axis=-1)


def init_weights(sizes, rng: np.random.Generator, scale: float = 1.0) -> list[np.ndarray]:
    """One (fan_in + 1) x fan_out matrix per layer; the last row is the bias."""
    out = []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        lim = scale / np.sqrt(n_in)
        out.append(rng.uniform(-lim, lim, (n_in + 1, n_out)))
    return out


def forward(weights, x) -> list[np.ndarray]:
    """Activations of every layer, input first. Works on single samples or batches."""
    acts = [np.asarray(x, dtype=float)]
    for w in weights:
        acts.append(sigmoid(_aug(acts[-1]) @ w))
    return acts


def loss(weights, x, t) -> float:
    y = forward(weights, x)[-1]
    return 0.5 * float(np.sum((y - np.asarray(t)) ** 2))


def backprop(weights, x, t) -> list[np.ndarray]:
    """Gradient of the squared-error loss for one sample."""
    acts = forward(weights, x)
    deltas = _deltas(weights, acts, t)
    return [np.outer(_aug(a), d) for a, d in zip(acts[:-1], deltas)]


def _deltas(weights, acts, t):
    y = acts[-1]
    d = (y - t) * y * (1 - y)
    out = [d]
    for w, a in zip(weights[:0:-1], acts[-2:0:-1]):
        d = (w[:-1] @ d) * a * (1 - a)
        out.append(d)
    return out[::-1]


class NumericNet:
    def __init__(self, weights, lr: float):
        self.w = [w.copy() for w in weights]
        self.lr = lr

    def predict(self, X) -> np.ndarray:
        return forward(self.w, X)[-1]

    def step(self, x, t) -> np.ndarray:
        acts = forward(self.w, x)
        for w, a, d in zip(self.w, acts[:-1], _deltas(self.w, acts, t)):
            a1 = _aug(a)
            nz = np.flatnonzero(a1)
            w[nz] -= self.lr * np.outer(a1[nz], d)
        return acts[-1]

    def weights(self) -> list[np.ndarray]:
        return self.w


# crossbar network -----------------------------------------------------------------------


class CrossbarNet:
    """Network whose weight matrices live on crossbar cores.

    With ``k`` devices per weight, layer ``l`` uses cores ``c_0 .. c_{k-1}``
    and represents ``W = s_l * sum_i decode(c_i) / base**i``. Updates go to
    the least significant core; :meth:`carry` folds it upward.
    """

    def __init__(self, weights, device: DeviceModel, xcfg: CrossbarConfig, lr: float,
                 pc: PeriodicCarryConfig | None = None):
        self.pc = pc or PeriodicCarryConfig(devices_per_weight=1)
        self.k = self.pc.devices_per_weight
        self.base = self.pc.base
        self.xcfg = xcfg
        self.lr = lr
        self.coding = xcfg.coding
        n = len(weights)
        self.scale = xcfg.per_layer("weight_scale", n)
        adc = xcfg.per_layer("adc_range", n)
        if xcfg.step_calibration == "range-average":
            step_g = 0.5 * (average_step(device, Polarity.SET) + average_step(device, Polarity.RESET))
        elif xcfg.step_calibration == "midpoint":
            mid = device.range.mid
            step_g = 0.5 * float(np.abs(mean_delta_g(mid, Polarity.SET, device))
                                 + np.abs(mean_delta_g(mid, Polarity.RESET, device)))
        else:
            raise ConfigError(f"unknown step_calibration {xcfg.step_calibration!r}")
        self.cores = []
        for w, s, z_fs in zip(weights, self.scale, adc):
            n_in, n_out = w.shape
            frac = min(1.0, z_fs / (n_in * s))
            frac_t = min(1.0, xcfg.backprop_range / n_out)
            layer = [CrossbarCore(device, n_in, n_out, coding=self.coding, adc_saturation_fraction=frac,
                                  mvm_saturation_fraction=frac_t) for _ in range(self.k)]
            # weights start as a perfect program-and-verify would leave them
            layer[0].set_weights(np.clip(w / s, -1.0, 1.0))
            self.cores.append(layer)
        half = 0.5 * device.range.span
        self.step_w = step_g / half
        self.updates = 0
        self.carries = 0

    def _sig(self, i: int) -> float:
        return self.base ** (-i)

    def weights(self) -> list[np.ndarray]:
        return [s * sum(self._sig(i) * c.weights() for i, c in enumerate(layer))
                for s, layer in zip(self.scale, self.cores)]

    def _quantize(self, v, levels: int, rng) -> np.ndarray:
        if self.xcfg.stochastic_rounding and rng is not None:
            return np.floor(v * levels + rng.random(np.shape(v))).astype(np.int64)
        return np.rint(v * levels).astype(np.int64)

    def _layer_forward(self, li: int, a, rng):
        t_max = self.coding.t_max
        code = np.rint(_aug(a) * t_max).astype(np.int64)
        layer = self.cores[li]
        z = sum(self._sig(i) * vmm(c, code, rng) * c.output_lsb() for i, c in enumerate(layer))
        return z * self.scale[li] / t_max

    def _read_rng(self, rng):
        return rng if self.cores[0][0].device.read_noise_rel else None

    def predict(self, X, rng=None) -> np.ndarray:
        a = np.asarray(X, dtype=float)
        for li in range(len(self.cores)):
            a = sigmoid(self._layer_forward(li, a, self._read_rng(rng)))
        return a

    def step(self, x, t, rng) -> np.ndarray:
        rr = self._read_rng(rng)
        acts = [np.asarray(x, dtype=float)]
        for li in range(len(self.cores)):
            acts.append(sigmoid(self._layer_forward(li, acts[-1], rr)))
        y = acts[-1]
        d = (y - t) * y * (1 - y)
        deltas = [d]
        t_max = self.coding.t_max
        for li in range(len(self.cores) - 1, 0, -1):
            m = np.max(np.abs(d))
            if m == 0:
                back = np.zeros(self.cores[li][0].n_rows)
            else:
                code = self._quantize(d / m, t_max, rng)
                back = sum(self._sig(i) * mvm(c, code, rr) * c.output_lsb(transpose=True)
                           for i, c in enumerate(self.cores[li]))
                back = back * self.scale[li] * m / t_max
            a = acts[li]
            d = back[:-1] * a * (1 - a)
            deltas.append(d)
        deltas.reverse()
        for li, (a, d) in enumerate(zip(acts[:-1], deltas)):
            self._update(li, _aug(a), d, rng)
        self.updates += 1
        if self.k > 1 and self.updates % self.pc.carry_interval == 0:
            self.carry(rng)
        return y

    def _update(self, li: int, x, d, rng):
        mx, md = np.max(np.abs(x)), np.max(np.abs(d))
        if mx == 0 or md == 0:
            return
        c = self.coding
        xc = self._quantize(x / mx, c.t_max, rng)
        sc = self._quantize(-d / md, c.v_levels, rng)
        lsb = self.k - 1
        w_unit = self.scale[li] * self._sig(lsb) * self.step_w
        amplitude = self.lr * mx * md / (c.t_max * w_unit)
        outer_update(self.cores[li][lsb], xc, sc, rng, amplitude=amplitude)

    def carry(self, rng) -> None:
        """Fold saturating low-significance devices into the next core up."""
        pc = self.pc
        for layer in self.cores:
            for i in range(self.k - 1, 0, -1):
                lo, hi = layer[i], layer[i - 1]
                g_read = apply_read_noise(lo.g_pos, lo.device, rng)
                v = (g_read - lo.g_ref) / lo.half_span
                rows, cols = np.nonzero(np.abs(v) >= pc.carry_threshold)
                if rows.size == 0:
                    continue
                target = np.clip(hi.weights()[rows, cols] + v[rows, cols] / self.base, -1.0, 1.0)
                kw = dict(tolerance=pc.program_tolerance, max_pulses=pc.program_max_pulses,
                          pulse_scale=pc.program_pulse_scale)
                program_weights(hi, rows, cols, target, rng, **kw)
                program_weights(lo, rows, cols, np.zeros(rows.size), rng, **kw)
        self.carries += 1


# training loops -----------------------------------------------------------------------


@dataclass
class TrainResult:
    history: list = field(default_factory=list)  # (epoch, train_acc, test_acc)
    initial_test_acc: float = 0.0
    weights: list = field(default_factory=list)
    net: object = None

    @property
    def final_test_acc(self) -> float:
        return self.history[-1][2] if self.history else self.initial_test_acc

    def summary(self) -> dict:
        return {"epochs": len(self.history), "initial_test_acc": self.initial_test_acc,
                "final_test_acc": self.final_test_acc,
                "best_test_acc": max([h[2] for h in self.history], default=self.initial_test_acc)}


def _streams(seed: int):
    """Independent generators for initialisation, sample order, device noise and evaluation."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(4)]


def _accuracy(net, X, labels, rng=None, batch: int = 2000) -> float:
    hits = 0
    for i in range(0, len(X), batch):
        y = net.predict(X[i:i + batch], rng) if isinstance(net, CrossbarNet) else net.predict(X[i:i + batch])
        hits += int(np.sum(np.argmax(y, axis=1) == labels[i:i + batch]))
    return hits / max(len(X), 1)


def _check_shape(cfg: NetworkConfig, data: Dataset):
    if data.train_x.shape[1] != cfg.layer_sizes[0]:
        raise ConfigError(f"first layer has {cfg.layer_sizes[0]} inputs but samples have {data.train_x.shape[1]}")
    if cfg.layer_sizes[-1] != data.n_classes:
        raise ConfigError(f"output layer has {cfg.layer_sizes[-1]} units for {data.n_classes} classes")


def _run(net, cfg: NetworkConfig, data: Dataset, order_rng, dev_rng, eval_rng, progress=None) -> TrainResult:
    data = data.subset(cfg.train_subset, cfg.test_subset)
    T = data.train_t
    res = TrainResult(initial_test_acc=_accuracy(net, data.test_x, data.test_y, eval_rng), net=net)
    crossbar = isinstance(net, CrossbarNet)
    for ep in range(1, cfg.epochs + 1):
        hits = 0
        for idx in order_rng.permutation(len(data.train_x)):
            y = net.step(data.train_x[idx], T[idx], dev_rng) if crossbar else net.step(data.train_x[idx], T[idx])
            hits += int(np.argmax(y) == data.train_y[idx])
        test_acc = _accuracy(net, data.test_x, data.test_y, eval_rng)
        res.history.append((ep, hits / len(data.train_x), test_acc))
        if progress:
            progress(ep, res.history[-1])
    res.weights = [w.copy() for w in net.weights()]
    return res


def train_numeric(cfg: NetworkConfig, data: Dataset, progress=None) -> TrainResult:
    """Plain online SGD with float weights."""
    _check_shape(cfg, data)
    init, order, dev, ev = _streams(cfg.seed)
    net = NumericNet(init_weights(cfg.layer_sizes, init, cfg.init_scale), cfg.learning_rate)
    return _run(net, cfg, data, order, dev, ev, progress)


def train_crossbar(cfg: NetworkConfig, data: Dataset, device: DeviceModel,
                   mode: AblationMode | str = AblationMode.FULL, xcfg: CrossbarConfig | None = None,
                   progress=None) -> TrainResult:
    """Train with one core per weight matrix; NUMERIC mode falls back to float weights."""
    mode = AblationMode(mode)
    if mode == AblationMode.NUMERIC:
        return train_numeric(cfg, data, progress)
    return train_periodic_carry(cfg, data, ablation_device(device, mode),
                                PeriodicCarryConfig(devices_per_weight=1), xcfg, progress)


def train_periodic_carry(cfg: NetworkConfig, data: Dataset, device: DeviceModel, pc: PeriodicCarryConfig,
                         xcfg: CrossbarConfig | None = None, progress=None) -> TrainResult:
    """Train with ``pc.devices_per_weight`` cores per weight matrix."""
    _check_shape(cfg, data)
    xcfg = xcfg or CrossbarConfig()
    init, order, dev, ev = _streams(cfg.seed)
    w0 = init_weights(cfg.layer_sizes, init, cfg.init_scale)
    net = CrossbarNet(w0, device, xcfg, cfg.learning_rate, pc)
    return _run(net, cfg, data, order, dev, ev, progress)


def history_csv(result: TrainResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["epoch", "train_acc", "test_acc"])
    for ep, tr, te in result.history:
        w.writerow([ep, f"{tr:.6f}", f"{te:.6f}"])
    return buf.getvalue()
