import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reramsim import perfmodel as pm
from reramsim.errors import ConfigError

CFG8 = pm.make_config(8)


def cfg(bits=8, **over):
    return pm.make_config(bits, over)


# analog array ------------------------------------------------------------------


def test_array_area():
    assert pm.analog_array_area(CFG8) == pytest.approx(8600, rel=0.01)
    assert pm.analog_array_area(cfg(n_rows=1, n_cols=1)) == pytest.approx(2 * 0.064**2)
    assert pm.analog_array_area(cfg(n_rows=512, n_cols=512)) == pm.analog_array_area(CFG8) / 4


def test_read_energy_closed_form():
    c_line = 1024 * (200e-18 * 0.064 + 35e-18)
    dyn = 0.5 * 2 * 7 * 1024 * c_line * 0.785**2
    static = 0.5 * 1024 * 1024 * 1e-9 * 0.785 * 1e-9 * 127
    assert pm.analog_read_energy(CFG8) == pytest.approx(dyn + static, rel=1e-12)
    assert pm.analog_read_energy(CFG8, n_bits_t=1) == 0.0
    assert pm.analog_read_energy(CFG8, v_read=0.0) == 0.0


def test_write_energy_terms():
    s, t, iv = pm.analog_write_energy_terms(CFG8)
    assert s * 1e9 == pytest.approx(0.14, rel=0.05)
    assert t * 1e9 == pytest.approx(0.27, rel=0.05)
    assert iv * 1e9 == pytest.approx(1.23, rel=0.05)
    assert pm.analog_write_energy(CFG8) * 1e9 == pytest.approx(1.66, rel=0.15)
    assert pm.analog_write_energy(CFG8, v_write=0.0) == 0.0
    assert pm.analog_write_energy(cfg(4)) * 1e9 == pytest.approx(0.31, rel=0.40)
    # the printed pulse-count variant overshoots the reference by far
    printed = pm.analog_write_energy(CFG8, printed_pulse_count=True) * 1e9
    assert printed > 1.66 * 1.5


def test_analog_component_examples():
    rep = pm.cost_report("analog-reram", CFG8)
    assert rep.row("energy", "Read: ADC") == pytest.approx(1024 * 20e-6 * 1.8 * 256e-9 * 1e9, rel=1e-12)
    assert rep.row("energy", "Read: ADC") == pytest.approx(9.4, rel=0.05)
    assert rep.row("energy", "Read: Integrator") == pytest.approx(2.81, rel=0.05)
    assert rep.row("area", "Temporal Driver Analog Transistors") == pytest.approx(7180, rel=0.02)


def test_adc_latency_rule():
    assert [pm.adc_latency_ns(pm.make_config(b)) for b in (8, 4, 2)] == [256, 16, 3]


# digital variants ---------------------------------------------------------------------------


def test_binary_reram_derivations():
    lat = pm.binary_reram_read_latency(CFG8)
    assert lat["r_load_ohm"] == pytest.approx(math.sqrt(1e6 * 1e7))
    assert lat["r_load_ohm"] == pytest.approx(3.162e6, rel=1e-3)
    assert lat["r_line_ohm"] == pytest.approx(1966.08)
    assert lat["c_line_ff"] == pytest.approx(48.9472)
    assert lat["r_parallel_ohm"] == pytest.approx(0.76e6, rel=0.01)
    # frozen from an independent hand evaluation of 2.2 * RC
    assert lat["read_latency_ns"] == pytest.approx(81.918, rel=1e-4)
    assert pm.binary_reram_parallelism(CFG8) == (64, 512)


def test_digital_reram_rows():
    rep = pm.cost_report("digital-reram", CFG8)
    assert rep.row("latency", "Write: 1MB ReRAM") == 164_000  # printed in whole microseconds
    exact = pm.cost_report("digital-reram", cfg(latency_mode="exact"))
    assert exact.row("latency", "Write: 1MB ReRAM") == 1024 * 1024 / 64 * 10
    assert rep.details["read_latency_used_ns"] == 86.0
    derived = pm.cost_report("digital-reram", cfg(binary_reram={"read_latency_ns": None}))
    assert derived.details["read_latency_used_ns"] == pytest.approx(81.918, rel=1e-4)


def test_sram_rows():
    rep = pm.cost_report("sram", CFG8)
    bits = 8 * 2**20
    assert rep.row("energy", "Read: 64 128kb SRAMs") == pytest.approx(bits * 34e-15 * 1e9, rel=0.002)
    assert rep.row("energy", "Read: 64 128kb SRAMs") == pytest.approx(286, rel=0.02)
    assert rep.row("energy", "Write: 64 128kb SRAMs") == pytest.approx(385, rel=0.02)
    assert rep.row("latency", "Read Transpose: 1MB SRAM") == 32000


def test_mac_and_comm():
    for v in ("digital-reram", "sram"):
        rep = pm.cost_report(v, CFG8)
        assert rep.row("energy", "Multiply and Accumulate (1M operations)") == pytest.approx(2**20 * 1.46e-3)
        assert rep.row("latency", "Multiply and Accumulate (256 in parallel)") == 4000
    sram = pm.cost_report("sram", CFG8)
    oracle = math.sqrt(836_000) * 200e-18 * 0.8**2 * 8 * 2**20 * 1e9
    assert sram.row("energy", "Digital SRAM Cross Core Communication") == pytest.approx(oracle, rel=0.01)
    assert oracle == pytest.approx(1065, rel=0.15)
    analog = pm.cost_report("analog-reram", CFG8)
    assert analog.row("energy", "Analog Cross Core Communication") == pytest.approx(0.08, rel=0.25)


def test_kernel_composition_examples():
    a = pm.cost_report("analog-reram", CFG8)
    assert a.kernel_latency_ns() == {"vmm": 384, "mvm": 384, "update": 512}
    assert a.total_latency_ns == 1280
    s = pm.cost_report("sram", CFG8)
    assert s.total_latency_ns == 44000
    d = pm.cost_report("digital-reram", CFG8)
    k = d.kernel_energy_nj()
    assert k["vmm"] == pytest.approx(2140, rel=0.10)
    assert k["update"] == pytest.approx(3250, rel=0.10)
    assert d.total_energy_nj == pytest.approx(7520, rel=0.10)


# invariants ---------------------------------------------------------------------------------


@pytest.mark.parametrize("variant", pm.VARIANTS)
@pytest.mark.parametrize("bits", pm.BITS)
def test_totals_are_sums_of_rows(variant, bits):
    rep = pm.cost_report(variant, pm.make_config(bits))
    for table, kern in (("energy", rep.kernel_energy_nj()), ("latency", rep.kernel_latency_ns())):
        for i, k in enumerate(pm.KERNELS):
            assert kern[k] == pytest.approx(sum(r.value * r.weights[i] for r in getattr(rep, table)), rel=1e-12)
    assert rep.total_energy_nj == pytest.approx(sum(rep.kernel_energy_nj().values()), rel=1e-12)
    for r in rep.area + rep.latency + rep.energy:
        assert r.value > 0


@given(st.sampled_from(pm.VARIANTS), st.integers(6, 11), st.integers(6, 11))
def test_monotone_in_array_size(variant, lr, lc):
    small = pm.cost_report(variant, cfg(n_rows=2**lr, n_cols=2**lc))
    big = pm.cost_report(variant, cfg(n_rows=2 ** (lr + 1), n_cols=2**lc))
    assert big.total_energy_nj >= small.total_energy_nj
    assert big.total_latency_ns >= small.total_latency_ns
    assert big.total_area_um2 >= small.total_area_um2


@pytest.mark.parametrize("variant", pm.VARIANTS)
def test_monotone_in_bits(variant):
    reps = [pm.cost_report(variant, pm.make_config(b)) for b in (2, 4, 8)]
    for lo, hi in zip(reps, reps[1:]):
        assert hi.total_energy_nj >= lo.total_energy_nj
        assert hi.total_latency_ns >= lo.total_latency_ns
        assert hi.total_area_um2 >= lo.total_area_um2


def test_headline_ratios_frozen():
    r = pm.headline_ratios(*[pm.cost_report(v, CFG8) for v in pm.VARIANTS])
    assert r["latency_vs_digital_reram"] == pytest.approx(692 / 1.28)
    assert r["latency_vs_sram"] == pytest.approx(44 / 1.28)
    assert r["energy_vs_digital_reram"] == pytest.approx(278.10, rel=1e-4)
    assert r["energy_vs_sram"] == pytest.approx(424.89, rel=1e-4)
    assert r["analog_energy_per_mac_fj"] == pytest.approx(27.6704 / (3 * 2**20) * 1e6, rel=1e-4)


def test_latency_mode_exact_differs_only_in_rounding():
    exact = pm.cost_report("digital-reram", cfg(latency_mode="exact"))
    assert exact.total_latency_ns == pytest.approx(692_000, rel=0.01)


# config handling ------------------------------------------------------------------------------


def test_overrides_and_errors(tmp_path):
    c = pm.make_config(8, {"tech": {"m1_full_pitch_nm": 32.0}})
    assert pm.analog_array_area(c) == pytest.approx(pm.analog_array_area(CFG8) / 4)
    with pytest.raises(ConfigError):
        pm.make_config(8, {"tech": {"nope": 1}})
    with pytest.raises(ConfigError):
        pm.make_config(8, {"tech": 3})
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert pm.load_overrides(empty) == {}
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        pm.load_overrides(bad)


def test_config_dict_is_json_ready():
    d = pm.config_to_dict(CFG8)
    assert json.loads(json.dumps(d)) == d
    assert pm.make_config(8, d).n_rows == 1024


# constraints ---------------------------------------------------------------------------------


def test_electromigration_examples():
    em = pm.electromigration_check(1024)
    assert em.i_nudge_max == pytest.approx(32.2e-9, rel=0.01)
    assert em.r_on_min == pytest.approx(31e6, rel=0.05)
    assert em.passed
    assert pm.electromigration_check(1).i_nudge_max == 33e-6
    assert pm.electromigration_check(512).i_nudge_max == pytest.approx(64.5e-9, rel=0.01)
    assert not pm.electromigration_check(1024, i_nudge=50e-9).passed


def test_endurance_examples():
    assert pm.endurance_requirement(256, 1e5).required_endurance == pytest.approx(8.1e14, rel=0.01)
    assert pm.endurance_requirement(128, 1e5, 0.1).required_endurance == pytest.approx(4e13, rel=0.02)
    zero = pm.endurance_requirement(256, 0.0)
    assert zero.required_endurance == 0 and zero.passed
    assert pm.endurance_requirement(1, 1).literature_updates == 2e12


def test_constraint_report_overrides():
    rep = pm.constraint_report({"endurance": {"pulses_per_cycle": 256, "rate_hz": 0}})
    assert rep["passed"]
    with pytest.raises(ConfigError):
        pm.constraint_report({"thermal": {}})
