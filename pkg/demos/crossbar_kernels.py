"""The three crossbar kernels on a small core, checked against float maths.

A 6x4 core holds random weights. A forward read (vmm) and a transpose
read (mvm) are compared with dense matrix products in ADC steps, then a
rank-one update is applied and compared with the float outer product.

    python demos/crossbar_kernels.py
"""
import numpy as np

from reramsim.device import ConductanceRange, DeviceModel
from reramsim.xbar import CodingConfig, CrossbarCore, mvm, outer_update, vmm

rng = np.random.default_rng(1)
r = ConductanceRange()
step = r.span / 1000
core = CrossbarCore(DeviceModel.ideal(step, r), 6, 4, CodingConfig.preset(8), adc_saturation_fraction=0.25)
core.set_weights(rng.uniform(-1, 1, (6, 4)))
W = core.weights()

x = rng.integers(-127, 128, 6)
print("vmm codes  ", vmm(core, x))
print("float/LSB  ", np.round(x @ W / core.output_lsb(), 2))
y = rng.integers(-127, 128, 4)
print("mvm codes  ", mvm(core, y))
print("float/LSB  ", np.round(W @ y / core.output_lsb(transpose=True), 2))
print(f"(reads saturate at +-{core.coding.adc_max} ADC steps)")

a, b = rng.uniform(-1, 1, 6), rng.uniform(-1, 1, 4)
c = core.coding
before = core.weights()
outer_update(core, np.rint(a * c.t_max).astype(int), np.rint(b * c.v_levels).astype(int), rng)
got = (core.weights() - before) / (step / core.half_span * c.t_max)
print("\nupdate error vs float outer product, largest:", f"{np.max(np.abs(got - np.outer(a, b))):.4f}")
print("(the 3-bit voltage code dominates: half a level is", f"{0.5 / c.v_levels:.4f})")
