import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reramsim.device import (
    AnalyticUpdateParams,
    ConductanceRange,
    DeviceModel,
    VoltageResponseParams,
)
from reramsim.errors import DomainError
from reramsim.xbar import (
    CodingConfig,
    CrossbarCore,
    calibrate_offset_row,
    decode_weight,
    encode_weight,
    mvm,
    outer_update,
    program_weights,
    serial_read,
    serial_write,
    temporal_encode,
    vmm,
)

R = ConductanceRange()
STEP = 9e-12
IDEAL = DeviceModel.ideal(STEP, R)
# dead zone wider than V_write / 3 = 0.6 V on both sides
VR_SAFE = VoltageResponseParams(d1=3.0, d2=3.0, v_min_p=0.8, v_min_n=-0.8)
NOISY = DeviceModel(AnalyticUpdateParams(1e-10, 1e-10, 3.0, 3.0, 0.3, R), voltage_response=VR_SAFE)


def make_core(n_rows=4, n_cols=4, device=IDEAL, frac=0.05, bits=8, w=None, rng=None):
    core = CrossbarCore(device, n_rows, n_cols, CodingConfig.preset(bits), adc_saturation_fraction=frac)
    if w is None and rng is not None:
        w = rng.uniform(-1, 1, (n_rows, n_cols))
    if w is not None:
        core.set_weights(w)
    return core


def oracle_codes(core, x, transpose=False):
    """Dense float matmul on decoded weights, expressed in ADC steps (unrounded)."""
    W = decode_weight(core.g_pos, core.g_ref, core)
    y = (W @ x) if transpose else (x @ W)
    return y / core.output_lsb(transpose)


def check_within_lsb(core, x, got, transpose=False):
    ref = oracle_codes(core, x, transpose)
    m = core.coding.adc_max
    clipped = np.clip(ref, -m, m)
    assert np.all(np.abs(got - clipped) <= 1.0), (got, ref)


# encoding --------------------------------------------------------------------------


def test_encode_endpoints():
    core = make_core()
    assert encode_weight(0.0, core) == pytest.approx(R.mid)
    assert encode_weight(1.0, core) == pytest.approx(R.g_max)
    assert encode_weight(-1.0, core) == pytest.approx(R.g_min)
    with pytest.raises(DomainError):
        encode_weight(1.01, core)


def test_encode_decode_round_trip_on_grid():
    core = make_core()
    w = np.linspace(-1, 1, 2049)
    back = decode_weight(encode_weight(w, core), R.mid, core)
    assert np.max(np.abs(back - w)) <= 4 * np.finfo(float).eps


def test_reference_array_initialised_to_midpoint():
    core = make_core(3, 5)
    assert np.all(core.g_ref == R.mid) and np.all(core.offset_row == R.mid)


def test_temporal_encode():
    c = CodingConfig()
    lengths, signs = temporal_encode(np.array([0, 127, -5]), c)
    assert lengths.tolist() == [0, 127, 5] and signs.tolist() == [0, 1, -1]
    with pytest.raises(DomainError):
        temporal_encode(np.array([128]), c)
    two = CodingConfig.preset(2)
    assert temporal_encode(np.array([1]), two)[0].tolist() == [7.0]


def test_coding_presets():
    assert (CodingConfig.preset(8).t_max, CodingConfig.preset(8).v_levels) == (127, 7)
    assert (CodingConfig.preset(4).t_max, CodingConfig.preset(4).v_levels) == (7, 1)
    assert (CodingConfig.preset(2).t_max, CodingConfig.preset(2).v_levels) == (1, 1)
    with pytest.raises(DomainError):
        CodingConfig(n_bits_t=1)


# read kernels -----------------------------------------------------------------------------


def test_zero_input_gives_zero(rng):
    core = make_core(rng=rng)
    assert not vmm(core, np.zeros(4, int)).any()
    assert not mvm(core, np.zeros(4, int)).any()


def test_vmm_mvm_4x4_oracle(rng):
    for _ in range(50):
        core = make_core(rng=rng, frac=rng.uniform(0.02, 1.0))
        x = rng.integers(-127, 128, 4)
        check_within_lsb(core, x, vmm(core, x))
        check_within_lsb(core, x, mvm(core, x), transpose=True)


def test_single_row_read_is_quantised_weight_row(rng):
    core = make_core(rng=rng, frac=1.0 / 32)
    expect = np.clip(np.rint(core.weights()[2] * 127 / core.output_lsb()), -127, 127)
    assert np.array_equal(serial_read(core, 2), expect)


def test_symmetric_core_mvm_equals_vmm(rng):
    a = rng.uniform(-1, 1, (6, 6))
    core = make_core(6, 6, w=(a + a.T) / 2)
    for _ in range(20):
        x = rng.integers(-127, 128, 6)
        assert np.array_equal(vmm(core, x), mvm(core, x))


def test_length_mismatch_is_domain_error(rng):
    core = make_core(rng=rng)
    with pytest.raises(DomainError):
        vmm(core, np.zeros(5, int))
    with pytest.raises(DomainError):
        mvm(core, np.zeros(3, int))


def test_batched_vmm_matches_rows(rng):
    core = make_core(5, 3, rng=rng, frac=0.2)
    X = rng.integers(-127, 128, (7, 5))
    assert np.array_equal(vmm(core, X), np.stack([vmm(core, x) for x in X]))


def test_read_noise_perturbs_reads_reproducibly(rng):
    dev = DeviceModel.ideal(STEP, R, read_noise_rel=0.05)
    core = make_core(8, 8, device=dev, rng=rng, frac=0.3)
    x = rng.integers(-127, 128, 8)
    a = vmm(core, x, np.random.default_rng(1))
    assert np.array_equal(a, vmm(core, x, np.random.default_rng(1)))
    outs = {tuple(vmm(core, x, np.random.default_rng(s))) for s in range(20)}
    assert len(outs) > 1


# outer update -------------------------------------------------------------------------------


def test_zero_update_vectors_leave_core_unchanged(rng):
    core = make_core(rng=rng, device=NOISY)
    g = core.g_pos.copy()
    outer_update(core, np.zeros(4, int), rng.integers(-7, 8, 4), rng)
    outer_update(core, rng.integers(-127, 128, 4), np.zeros(4, int), rng)
    assert np.array_equal(core.g_pos, g)


def test_phase_partition_2x2(rng):
    core = make_core(2, 2, w=np.zeros((2, 2)))
    recs = outer_update(core, np.array([3, -2]), np.array([1, -4]), rng)
    assert [r.signs for r in recs] == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    cells = [(int(i), int(j)) for r in recs for i in r.rows for j in r.cols]
    assert sorted(cells) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_exhaustive_code_pairs_ideal_device(rng):
    """Every (x, s) code pair at once: the update is exactly proportional to x*s."""
    c = CodingConfig.preset(8)
    x = np.arange(-c.t_max, c.t_max + 1)
    s = np.arange(-c.v_levels, c.v_levels + 1)
    core = make_core(len(x), len(s), w=np.zeros((len(x), len(s))))
    outer_update(core, x, s, rng)
    dw = core.weights()
    step_w = STEP / core.half_span
    assert np.allclose(dw, np.outer(x, s) * step_w / c.v_levels, rtol=1e-9, atol=1e-15)

    # coding error against the float outer product of real inputs in [-1, 1]:
    # grid bound from rounding each factor to its code
    a = x / c.t_max
    b = s / c.v_levels
    ideal = np.outer(a, b)
    coded = dw / (step_w * c.t_max)
    assert np.allclose(coded, ideal, atol=1e-12)
    bound = 0.5 / c.t_max + 0.5 / c.v_levels + 0.25 / (c.t_max * c.v_levels)
    for _ in range(200):
        ra, rb = rng.uniform(-1, 1, 2)
        qa, qb = np.rint(ra * c.t_max) / c.t_max, np.rint(rb * c.v_levels) / c.v_levels
        assert abs(ra * rb - qa * qb) <= bound


def test_voltage_coded_levels_are_proportional(rng):
    dev = DeviceModel.ideal(STEP, R, voltage_response=VR_SAFE)
    core = make_core(1, 7, device=dev, w=np.zeros((1, 7)))
    recs = outer_update(core, np.array([10]), np.arange(1, 8), rng)
    assert np.allclose(core.weights()[0], 10 * np.arange(1, 8) / 7 * STEP / core.half_span, rtol=1e-9)
    v = recs[0].voltages
    assert v[-1] == pytest.approx(core.v_write) and np.all(np.diff(v) > 0)


def test_half_selected_devices_exactly_unchanged(rng):
    core = make_core(6, 6, device=NOISY, rng=rng)
    g = core.g_pos.copy()
    ref = core.g_ref.copy()
    x = np.array([50, 0, -20, 0, 127, 0])
    s = np.array([0, 3, -7, 0, 1, 0])
    outer_update(core, x, s, rng)
    sel = np.outer(x != 0, s != 0)
    assert np.array_equal(core.g_pos[~sel], g[~sel])
    assert np.all(core.g_pos[sel] != g[sel])
    assert np.array_equal(core.g_ref, ref)


def test_half_select_disturbs_when_threshold_is_low(rng):
    leaky = VoltageResponseParams(d1=3.0, d2=3.0, v_min_p=0.3, v_min_n=-0.3)
    dev = DeviceModel(AnalyticUpdateParams(1e-10, 1e-10, 0.0, 0.0, 0.0, R), voltage_response=leaky)
    core = make_core(3, 3, device=dev, w=np.zeros((3, 3)))
    outer_update(core, np.array([20, 0, 0]), np.array([7, 0, 0]), rng)
    assert core.g_pos[0, 1] > R.mid and core.g_pos[1, 0] > R.mid and core.g_pos[1, 1] == R.mid


def test_precision_mismatch_rejected(rng):
    core = make_core()
    with pytest.raises(DomainError):
        outer_update(core, np.zeros(4, int), np.array([8, 0, 0, 0]), rng)
    with pytest.raises(DomainError):
        outer_update(core, np.zeros(3, int), np.zeros(4, int), rng)


@given(st.integers(0, 2 ** 31), st.integers(1, 6), st.integers(1, 6))
def test_conductances_stay_in_range(seed, n, m):
    rng = np.random.default_rng(seed)
    dev = DeviceModel(AnalyticUpdateParams(8e-10, 8e-10, 2.0, 1.0, 1.0, R), voltage_response=VR_SAFE)
    core = make_core(n, m, device=dev, rng=rng)
    for _ in range(5):
        outer_update(core, rng.integers(-127, 128, n), rng.integers(-7, 8, m), rng)
        assert np.all((core.g_pos >= R.g_min) & (core.g_pos <= R.g_max))
    assert np.all(core.g_ref == R.mid)


def test_update_is_deterministic_given_seed(rng):
    w = rng.uniform(-1, 1, (5, 4))
    x, s = rng.integers(-127, 128, 5), rng.integers(-7, 8, 4)
    outs = []
    for _ in range(2):
        core = make_core(5, 4, device=NOISY, w=w)
        outer_update(core, x, s, np.random.default_rng(9))
        outs.append(core.g_pos.copy())
    assert np.array_equal(outs[0], outs[1])


# serial access and calibration --------------------------------------------------------------


def test_serial_write_ideal_pulse_count(rng):
    core = make_core(2, 2, w=np.zeros((2, 2)))
    res = serial_write(core, 0, 1, 0.5, max_pulses=10_000, tolerance=1e-6, rng=rng)
    assert res.converged
    assert res.pulses == int(np.ceil(0.5 * core.half_span / STEP - 1e-9))


def test_serial_write_target_already_stored(rng):
    core = make_core(2, 2, w=np.full((2, 2), 0.25))
    assert serial_write(core, 1, 1, 0.25, 100, 0.01, rng).pulses == 0


def test_serial_write_nonideal_converges_over_seeds():
    hits = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        core = make_core(1, 1, device=NOISY, w=np.zeros((1, 1)))
        target = rng.uniform(-0.9, 0.9)
        res = serial_write(core, 0, 0, target, max_pulses=10_000, tolerance=0.01, rng=rng, pulse_scale=0.25)
        hits += abs(core.weights()[0, 0] - target) <= 0.01
    assert hits >= 99


def test_serial_write_unreachable_reports_residual(rng):
    core = make_core(1, 1, w=np.zeros((1, 1)))
    res = serial_write(core, 0, 0, 0.9, max_pulses=10, tolerance=1e-3, rng=rng)
    assert not res.converged and res.pulses == 10 and res.residual > 0.5


def test_program_weights_index_checks(rng):
    core = make_core()
    with pytest.raises(DomainError):
        program_weights(core, [4], [0], [0.1], rng)
    with pytest.raises(DomainError):
        program_weights(core, [0], [0], [1.5], rng)


def test_calibration_constant_offset(rng):
    core = make_core(8, 8, w=np.zeros((8, 8)))
    core.column_offset[:] = 2e-16
    resid = calibrate_offset_row(core, rng)
    assert np.all(np.abs(resid) <= 0.5)
    assert not vmm(core, np.zeros(8, int)).any()


def test_calibration_without_offset_is_noop(rng):
    core = make_core(8, 8, rng=rng)
    calibrate_offset_row(core, rng)
    assert np.all(core.offset_row == R.mid)


def test_calibration_random_offsets(rng):
    for _ in range(10):
        core = make_core(8, 8, rng=rng)
        core.column_offset[:] = rng.uniform(-3e-16, 3e-16, 8)
        resid = calibrate_offset_row(core, rng)
        assert np.all(np.abs(resid) <= 1.0)


# snapshots ------------------------------------------------------------------------------------------


def test_snapshot_round_trip_exact(tmp_path, rng):
    core = make_core(3, 5, device=NOISY, rng=rng)
    outer_update(core, rng.integers(-127, 128, 3), rng.integers(-7, 8, 5), rng)
    core.column_offset[:] = rng.normal(0, 1e-17, 5)
    core.save(tmp_path / "core.json")
    back = CrossbarCore.load(tmp_path / "core.json")
    for name in ("g_pos", "g_ref", "offset_row", "column_offset"):
        assert np.array_equal(getattr(back, name), getattr(core, name))
    assert back.to_dict() == core.to_dict()
