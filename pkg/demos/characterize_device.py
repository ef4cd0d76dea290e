"""From a pulse trace to a device model and back.

A synthetic trace is drawn from an analytic device, binned into a
Delta-G-vs-G0 table, and the table's per-bin means are compared with the
closed form. A voltage-response fit closes the loop on (V, mean Delta-G)
points.

    python demos/characterize_device.py [trace.csv]
"""
import sys

import numpy as np

from reramsim import charlab
from reramsim.device import (AnalyticUpdateParams, ConductanceRange, DeviceModel, Polarity,
                             VoltageResponseParams, mean_delta_g)

rng = np.random.default_rng(0)
r = ConductanceRange()
src = DeviceModel(AnalyticUpdateParams(1e-10, 1e-10, 3.0, 3.0, 0.3, r))

if len(sys.argv) > 1:
    trace = charlab.parse_trace(sys.argv[1])
else:
    trace = charlab.synthesize_trace(src, 200, 400, rng)
print(f"{len(trace.conductance)} pulses, {np.unique(trace.cycle).size} cycles")

table = charlab.build_table(trace, n_bins=16)
mids = 0.5 * (table.bin_edges[1:] + table.bin_edges[:-1])
print("\n  G0 (nS)   SET table  SET model   RESET table  RESET model   (Delta-G, pS)")
for g, ms, mr, present_r in zip(mids, table.bin_means(Polarity.SET), table.bin_means(Polarity.RESET),
                                table.present(Polarity.RESET)):
    es = float(mean_delta_g(g, 1, src))
    er = float(mean_delta_g(g, -1, src))
    rs = f"{mr * 1e12:11.1f}" if present_r else "        n/a"
    print(f"  {g * 1e9:7.2f}  {ms * 1e12:9.1f}  {es * 1e12:9.1f}   {rs}  {er * 1e12:11.1f}")

p = VoltageResponseParams(d1=3.0, d2=2.5, v_min_p=0.8, v_min_n=-0.9)
v = np.r_[np.linspace(-1.8, -1.0, 9), np.linspace(-0.8, 0.7, 4), np.linspace(0.9, 1.8, 9)]
dg = np.where(v > p.v_min_p, np.expm1(p.d1 * (v - p.v_min_p)),
              np.where(v < p.v_min_n, -np.expm1(p.d2 * (p.v_min_n - v)), 0.0))
fit = charlab.fit_voltage_response(np.column_stack([v, dg]))
print(f"\nfit: d1={fit.d1:.6f} d2={fit.d2:.6f} v_min_p={fit.v_min_p:.6f} v_min_n={fit.v_min_n:.6f}")
print("dead zone estimate from the zero points:", fit.dead_zone)
