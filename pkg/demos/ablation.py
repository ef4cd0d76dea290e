"""Which write nonideality costs the most accuracy?

Trains the float network and crossbar networks with progressively less
ideal devices on an MNIST subset (one pass), then shows periodic carry on
a strongly nonlinear device. Needs scripts/fetch_mnist.sh first. With
``--full`` it uses all 60k images, which takes about 15 minutes.

    python demos/ablation.py [--full]
"""
import sys
import time

from reramsim import train

full = "--full" in sys.argv
data = train.load_mnist()
cfg = train.NetworkConfig(epochs=1, seed=0, train_subset=None if full else 10000,
                          test_subset=None if full else 2000)
ref, strong = train.reference_device(), train.strong_nonlinear_device()
mid = train.CrossbarConfig(step_calibration="midpoint")
carry = train.PeriodicCarryConfig(3, 8, carry_interval=10, carry_threshold=0.1, program_tolerance=0.01)

runs = [
    ("numeric", lambda: train.train_numeric(cfg, data)),
    ("ideal devices", lambda: train.train_crossbar(cfg, data, train.ideal_device())),
    ("linearized", lambda: train.train_crossbar(cfg, data, ref, "linearized")),
    ("no noise", lambda: train.train_crossbar(cfg, data, ref, "no-noise")),
    ("full device", lambda: train.train_crossbar(cfg, data, ref, "full")),
    ("strong nonlinearity", lambda: train.train_crossbar(cfg, data, strong, "full", mid)),
    ("  + periodic carry", lambda: train.train_periodic_carry(cfg, data, strong, carry, mid)),
]
for name, fn in runs:
    t = time.perf_counter()
    res = fn()
    print(f"{name:<22s} test accuracy {res.final_test_acc:.4f}   ({time.perf_counter() - t:.0f} s)", flush=True)
