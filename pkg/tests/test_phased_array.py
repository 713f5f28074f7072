import math

import numpy as np
import pytest

from oirskit import (
    FieldGrid,
    GaussianBeam,
    InfeasibleTargetError,
    OpticalSetup,
    PhasedArray,
    RetrievalConfig,
    SamplingError,
    build_reflectance,
    fraunhofer,
    gaussian_incident,
    inverse_fraunhofer,
    load_phase_csv,
    non_adjustable_field,
    opa_efficiency,
    retrieve_phase,
    save_phase_csv,
    uniform_incident,
)
from oirskit.phased_array import gap_reflectance, sample_structure

SETUP = OpticalSetup(532e-9, 0.25)


def focal_spacing(incident):
    return SETUP.wavelength * SETUP.focal_length / (incident.nx * incident.dx)


class TestPhasedArrayType:
    def test_phase_wrapped_on_construction(self):
        arr = PhasedArray(np.array([[7.0, -1.0], [0.5, 2 * math.pi]]), 1e-5, 1e-5)
        assert np.all(arr.phase >= 0.0) and np.all(arr.phase < 2 * math.pi)
        assert arr.phase[0, 1] == pytest.approx(2 * math.pi - 1.0)

    def test_fill_factor(self):
        arr = PhasedArray.uniform(4, 4, 1e-5, fill_factor=0.957)
        assert arr.fill_factor == pytest.approx(0.957, rel=1e-12)

    def test_active_above_pitch_rejected(self):
        with pytest.raises(ValueError):
            PhasedArray(np.zeros((2, 2)), 1e-5, 2e-5)


class TestBuildReflectance:
    def test_unity_everything(self):
        # no gaps, zero phase, unit illumination: t = 1 on the aperture
        arr = PhasedArray.uniform(4, 4, 1e-5)
        inc = uniform_incident(arr, samples_per_pitch=8, pad_factor=2)
        t = build_reflectance(arr, inc)
        struct = sample_structure(arr, inc)
        assert np.allclose(t.values[struct.aperture], 1.0, atol=1e-15)
        assert np.all(t.values[~struct.aperture] == 0.0)

    def test_experiment_fill_factor_quantization(self):
        # 95.7% fill: at 92 samples per pitch the sampled gap area lands on
        # 4.3% up to one sample row per pixel side
        arr = PhasedArray.uniform(8, 8, 5e-6, fill_factor=0.957)
        inc = uniform_incident(arr, samples_per_pitch=92)
        struct = sample_structure(arr, inc)
        gap_fraction = 1.0 - struct.active.sum() / struct.aperture.sum()
        assert gap_fraction == pytest.approx(0.043, abs=4.0 / 92)
        assert gap_fraction == pytest.approx(0.043, abs=0.001)  # measured layout

    def test_checkerboard_alternates_sign(self):
        rows = cols = 4
        phase = np.indices((rows, cols)).sum(axis=0) % 2 * math.pi
        arr = PhasedArray(phase, 1e-5, 1e-5)
        inc = uniform_incident(arr, samples_per_pitch=4)
        t = build_reflectance(arr, inc)
        # direct construction oracle: sample-by-sample expected factor
        expected = np.zeros_like(t.values)
        for i in range(rows):
            for j in range(cols):
                sign = 1.0 if (i + j) % 2 == 0 else -1.0
                expected[i * 4:(i + 1) * 4, j * 4:(j + 1) * 4] = sign
        assert np.allclose(t.values, expected, atol=1e-12)

    def test_non_integer_sampling_rejected(self):
        arr = PhasedArray.uniform(4, 4, 1e-5)
        bad = FieldGrid(np.ones((32, 32), dtype=complex), 1.1e-5 / 8, 1.1e-5 / 8)
        with pytest.raises(SamplingError):
            build_reflectance(arr, bad)

    def test_grid_smaller_than_aperture_rejected(self):
        arr = PhasedArray.uniform(8, 8, 1e-5)
        small = FieldGrid(np.ones((16, 16), dtype=complex), 1e-5 / 4, 1e-5 / 4)
        with pytest.raises(SamplingError):
            build_reflectance(arr, small)


class TestFraunhofer:
    def test_parseval_random_fields(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            v = rng.standard_normal((64, 64)) + 1j * rng.standard_normal((64, 64))
            grid = FieldGrid(v, 2e-6, 2e-6)
            far = fraunhofer(grid, SETUP)
            assert far.energy() == pytest.approx(grid.energy(), rel=1e-9)

    def test_zero_field_maps_to_zero(self):
        grid = FieldGrid.zeros(16, 16, 1e-6)
        far = fraunhofer(grid, SETUP)
        assert np.all(far.values == 0.0)

    def test_linearity(self):
        rng = np.random.default_rng(1)
        f = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        g = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        a, b = 1.7 - 0.3j, -0.4 + 2.2j
        left = fraunhofer(FieldGrid(a * f + b * g, 1e-6, 1e-6), SETUP).values
        right = (a * fraunhofer(FieldGrid(f, 1e-6, 1e-6), SETUP).values
                 + b * fraunhofer(FieldGrid(g, 1e-6, 1e-6), SETUP).values)
        assert np.allclose(left, right, atol=1e-10 * np.abs(left).max())

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(2)
        v = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
        grid = FieldGrid(v, 1e-6, 1e-6)
        back = inverse_fraunhofer(fraunhofer(grid, SETUP), SETUP)
        assert np.allclose(back.values, grid.values, atol=1e-12 * np.abs(v).max())
        assert back.dx == pytest.approx(grid.dx, rel=1e-12)

    def test_square_aperture_first_zero(self):
        # uniform square side L: first |T| zero at lambda f / L
        arr = PhasedArray.uniform(8, 8, 1e-5)
        inc = uniform_incident(arr, samples_per_pitch=8, pad_factor=4)
        far = fraunhofer(build_reflectance(arr, inc), SETUP)
        aperture = 8 * 1e-5
        predicted = SETUP.wavelength * SETUP.focal_length / aperture
        row = np.abs(far.values[far.ny // 2])  # row nearest the axis
        u = far.x
        positive = u > 0
        mags = row[positive]
        minima = np.nonzero((mags[1:-1] < mags[:-2]) & (mags[1:-1] < mags[2:]))[0] + 1
        first_zero = u[positive][minima[0]]
        assert abs(first_zero - predicted) <= far.dx / 2 * (1 + 1e-9)

    def test_linear_ramp_steering(self):
        # pixel-wise phase ramp 2 pi a x steers the peak to u = lambda f a
        arr = PhasedArray.uniform(16, 16, 1e-5)
        slope_cycles = 4.25 / (16 * 1e-5)  # cycles per meter across the aperture
        x_pixels = (np.arange(16) - 16 / 2 + 0.5) * 1e-5
        phase = np.tile(2 * math.pi * slope_cycles * x_pixels, (16, 1))
        ramped = arr.with_phase(phase)
        inc = uniform_incident(ramped, samples_per_pitch=8, pad_factor=2)
        far = fraunhofer(build_reflectance(ramped, inc), SETUP)
        predicted = SETUP.wavelength * SETUP.focal_length * slope_cycles
        peak_x, peak_y = far.intensity_map().argmax_xy()
        assert abs(peak_x - predicted) <= far.dx
        assert abs(peak_y) <= far.dy


class TestNonAdjustableField:
    def test_no_gap_means_zero(self):
        arr = PhasedArray.uniform(4, 4, 1e-5)  # active == pitch
        inc = uniform_incident(arr, samples_per_pitch=8)
        na = non_adjustable_field(arr, inc, SETUP)
        assert np.all(na.values == 0.0)

    def test_energy_bookkeeping_and_origin_peak(self):
        arr = PhasedArray.uniform(8, 8, 5e-6, fill_factor=0.957)
        inc = uniform_incident(arr, samples_per_pitch=92)
        na = non_adjustable_field(arr, inc, SETUP)
        total = fraunhofer(build_reflectance(arr, inc), SETUP)
        eta = opa_efficiency(arr, inc, SETUP)
        # active and gap samples are disjoint, so energies add exactly
        assert na.energy() / total.energy() == pytest.approx(1.0 - eta, rel=1e-12)
        peak_u, peak_v = na.intensity_map().argmax_xy()
        assert abs(peak_u) <= na.dx / 2 + 1e-15
        assert abs(peak_v) <= na.dy / 2 + 1e-15

    def test_gap_phase_constant_leaves_magnitude(self):
        arr0 = PhasedArray.uniform(6, 6, 5e-6, fill_factor=0.8, gap_phase=0.0)
        arr_pi = PhasedArray.uniform(6, 6, 5e-6, fill_factor=0.8, gap_phase=math.pi)
        inc = uniform_incident(arr0, samples_per_pitch=16)
        na0 = non_adjustable_field(arr0, inc, SETUP)
        na_pi = non_adjustable_field(arr_pi, inc, SETUP)
        scale = np.abs(na0.values).max()
        assert np.allclose(np.abs(na0.values), np.abs(na_pi.values), atol=1e-12 * scale)


class TestEfficiency:
    def test_full_fill_is_exactly_one(self):
        arr = PhasedArray.uniform(4, 4, 1e-5)
        inc = uniform_incident(arr, samples_per_pitch=8)
        assert opa_efficiency(arr, inc, SETUP) == 1.0

    def test_experiment_fill_bound(self):
        arr = PhasedArray.uniform(8, 8, 5e-6, fill_factor=0.957)
        inc = uniform_incident(arr, samples_per_pitch=92)
        eta = opa_efficiency(arr, inc, SETUP)
        assert 0.90 <= eta <= 1.0

    def test_half_area_gaps_energy_partition(self):
        # d/pitch = 1/sqrt(2): the active-area energy fraction is 1/2 up to
        # sample quantization; the far-field ratio equals the sampled
        # fraction exactly (Parseval)
        arr = PhasedArray.uniform(4, 4, 1e-5, fill_factor=0.5, gap_phase=0.3,
                                  phase=0.3)
        inc = uniform_incident(arr, samples_per_pitch=128)
        eta = opa_efficiency(arr, inc, SETUP)
        struct = sample_structure(arr, inc)
        sampled = struct.active.sum() / struct.aperture.sum()
        assert eta == pytest.approx(sampled, rel=1e-12)
        assert eta == pytest.approx(0.5, abs=4.0 / 128)

    def test_independent_of_constant_phase(self):
        inc = None
        values = []
        for phi in (0.0, 1.1, 4.0):
            arr = PhasedArray.uniform(4, 4, 1e-5, fill_factor=0.8, phase=phi)
            if inc is None:
                inc = uniform_incident(arr, samples_per_pitch=16)
            values.append(opa_efficiency(arr, inc, SETUP))
        assert values[0] == pytest.approx(values[1], abs=1e-12)
        assert values[0] == pytest.approx(values[2], abs=1e-12)


class TestGlobalPhase:
    def test_constant_phase_offset_leaves_magnitude(self):
        rng = np.random.default_rng(3)
        phase = rng.uniform(0, 2 * math.pi, (8, 8))
        arr = PhasedArray(phase, 1e-5, 1e-5)
        shifted = PhasedArray(phase + 1.234, 1e-5, 1e-5)
        inc = uniform_incident(arr, samples_per_pitch=8)
        far_a = fraunhofer(build_reflectance(arr, inc), SETUP)
        far_b = fraunhofer(build_reflectance(shifted, inc), SETUP)
        scale = np.abs(far_a.values).max()
        assert np.allclose(np.abs(far_a.values), np.abs(far_b.values), atol=1e-12 * scale)


class TestRetrieval:
    def fixed_point_setup(self):
        arr = PhasedArray.uniform(16, 16, 5e-6)
        beam = GaussianBeam(1.0, 16 * 5e-6 / 2)
        inc = gaussian_incident(arr, beam, samples_per_pitch=8)
        far0 = fraunhofer(build_reflectance(arr, inc), SETUP)
        target = FieldGrid(np.abs(far0.values), far0.dx, far0.dy)
        return arr, inc, target

    def test_fixed_point_recovers_constant_phase(self):
        arr, inc, target = self.fixed_point_setup()
        result = retrieve_phase(target, arr, inc, SETUP, RetrievalConfig(max_iters=30, seed=0))
        assert result.correlation >= 0.999
        relative = np.angle(np.exp(1j * (result.phase - result.phase[0, 0])))
        assert np.abs(relative).max() < 1e-6

    def test_quality_curve_non_decreasing(self):
        arr, inc, target = self.fixed_point_setup()
        result = retrieve_phase(target, arr, inc, SETUP,
                                RetrievalConfig(max_iters=30, tol=0.0, seed=0,
                                                init="random"))
        assert all(a <= b for a, b in zip(result.correlations, result.correlations[1:]))

    def test_off_axis_disk_lands_on_target(self):
        arr = PhasedArray.uniform(32, 32, 5e-6)
        beam = GaussianBeam(1.0, 32 * 5e-6 / 2)
        inc = gaussian_incident(arr, beam, samples_per_pitch=8)
        du = focal_spacing(inc)
        u0 = 10.25 * du
        xx, yy = np.meshgrid(
            (np.arange(inc.nx) - inc.nx / 2 + 0.5) * du,
            (np.arange(inc.ny) - inc.ny / 2 + 0.5) * du,
        )
        disk = (((xx - u0) ** 2 + yy**2) <= (4 * du) ** 2).astype(complex)
        target = FieldGrid(disk, du, du)
        result = retrieve_phase(target, arr, inc, SETUP,
                                RetrievalConfig(max_iters=60, seed=1))
        peak_x, peak_y = result.achieved.intensity_map().argmax_xy()
        assert abs(peak_x - u0) <= du
        assert abs(peak_y) <= du

    def test_deterministic_per_seed(self):
        arr, inc, target = self.fixed_point_setup()
        runs = [
            retrieve_phase(target, arr, inc, SETUP,
                           RetrievalConfig(max_iters=10, tol=0.0, seed=7, init="random"))
            for _ in range(2)
        ]
        assert np.array_equal(runs[0].phase, runs[1].phase)
        assert runs[0].correlations == runs[1].correlations
        other = retrieve_phase(target, arr, inc, SETUP,
                               RetrievalConfig(max_iters=10, tol=0.0, seed=8, init="random"))
        assert not np.array_equal(runs[0].phase, other.phase)

    def test_energy_budget_enforced(self):
        arr, inc, target = self.fixed_point_setup()
        oversized = FieldGrid(target.values * 10.0, target.dx, target.dy)
        with pytest.raises(InfeasibleTargetError):
            retrieve_phase(oversized, arr, inc, SETUP, rescale_target=False)
        # within budget: runs fine without rescaling
        result = retrieve_phase(FieldGrid(target.values * 0.5, target.dx, target.dy),
                                arr, inc, SETUP, RetrievalConfig(max_iters=5),
                                rescale_target=False)
        assert result.iterations >= 1

    def test_mismatched_target_grid_rejected(self):
        arr, inc, target = self.fixed_point_setup()
        wrong = FieldGrid(target.values[:64, :64], target.dx, target.dy)
        with pytest.raises(SamplingError):
            retrieve_phase(wrong, arr, inc, SETUP)


class TestPhaseCsv:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(4)
        arr = PhasedArray(rng.uniform(0, 2 * math.pi, (6, 9)), 5e-6,
                          5e-6 * math.sqrt(0.957), gap_phase=0.25)
        path = tmp_path / "phase.csv"
        save_phase_csv(path, arr, header_lines=("# extra",))
        text = path.read_text().splitlines()
        assert text[0] == "# extra"
        assert text[1].startswith("# opa-phase v1 9 6 ")
        back = load_phase_csv(path, gap_phase=0.25)
        assert np.array_equal(back.phase, arr.phase)
        assert back.pitch == arr.pitch
        assert back.active == arr.active

    def test_load_rejects_plain_csv(self, tmp_path):
        path = tmp_path / "not_phase.csv"
        path.write_text("1,2\n3,4\n")
        with pytest.raises(ValueError):
            load_phase_csv(path)
