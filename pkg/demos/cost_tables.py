"""Print the area, latency and energy tables for every variant and bit width,
then the headline ratios of the analog core over its digital rivals.

    python demos/cost_tables.py
"""
from reramsim import perfmodel as pm


def show(rep):
    print(f"\n== {rep.variant}, {rep.bits}-bit ==")
    for table, unit in (("area", "um2"), ("latency", "ns"), ("energy", "nJ")):
        print(f"  {table} ({unit})")
        for r in getattr(rep, table):
            print(f"    {r.name:<50s} {r.value:12.4g}")
    print(f"  total: {rep.total_area_um2:,.0f} um2, {rep.total_latency_ns / 1000:.3f} us, "
          f"{rep.total_energy_nj:.4g} nJ")


reports = pm.all_reports()
for rep in reports.values():
    show(rep)

print("\nheadline ratios (analog / rival)")
for bits in pm.BITS:
    r = pm.headline_ratios(reports[("analog-reram", bits)], reports[("digital-reram", bits)],
                           reports[("sram", bits)])
    print(f"  {bits}-bit: energy {r['energy_vs_digital_reram']:.0f}x vs ReRAM, {r['energy_vs_sram']:.0f}x vs SRAM; "
          f"latency {r['latency_vs_digital_reram']:.0f}x / {r['latency_vs_sram']:.0f}x; "
          f"{r['analog_energy_per_mac_fj']:.1f} fJ per MAC")

chk = pm.constraint_report()
em = chk["electromigration"]
print(f"\nelectromigration: at most {em['i_nudge_max'] * 1e9:.1f} nA per device, "
      f"so R_on >= {em['r_on_min'] / 1e6:.0f} MOhm")
for e in chk["endurance"]:
    print(f"endurance for {e['pulses_per_cycle']:.0f} pulses at {e['update_rate_hz']:.0e} Hz, duty {e['duty']}: "
          f"{e['required_endurance']:.1e} updates ({'ok' if e['passed'] else 'exceeds'} {e['literature_updates']:.0e})")
