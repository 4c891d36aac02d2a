"""
Tests for unit conversion, compression point, bandwidth, flux-tuning coverage and design comparison
"""
import math

import pytest

from bjpa.circuit import EffectiveModel, tuned_model
from bjpa.errors import (
    ConfigurationError,
    CoverageGapError,
    UndefinedBandwidthError,
    UnreachableGainError,
)
from bjpa.gain import gain_at
from bjpa.metrics import (
    PhysicalScale,
    band_coverage,
    bandwidth_3db,
    compare_designs,
    compression_point,
    dbm_to_watts,
    drive_from_power,
    gain_peak_coupling,
    matched_gain_p1db,
    photon_flux,
    pump_power_for_gain,
    pump_power_for_zeta,
    watts_to_dbm,
)
from bjpa.steady_state import CRITICAL_ZETA, PumpDrive, drive_for_coupling, operating_point
from conftest import REFERENCE_KAPPA, REFERENCE_OMEGA_P, make_design


def synthetic_model(kerr_k: float) -> EffectiveModel:
    return EffectiveModel(omega_eff=REFERENCE_OMEGA_P, kappa=REFERENCE_KAPPA, kerr_k=kerr_k, e_c=2.5e-25)


class TestPowerConversion:

    def test_dbm_round_trip_values(self):
        assert dbm_to_watts(0.0) == pytest.approx(1e-3)
        assert dbm_to_watts(-100.0) == pytest.approx(1e-13)
        assert watts_to_dbm(1e-13) == pytest.approx(-100.0)
        assert watts_to_dbm(0.0) == -math.inf

    def test_photon_flux_at_reference_pump(self, reference_scale):
        """-100 dBm at 6 GHz is about 2.515e10 photons/s, 400 per linewidth at kappa = 10 MHz"""
        flux = photon_flux(dbm_to_watts(-100.0), reference_scale)
        assert flux == pytest.approx(2.5154e10, rel=1e-4)
        assert flux / reference_scale.kappa == pytest.approx(400.3, rel=1e-3)

    def test_drive_from_power_scales_with_kerr(self, reference_scale):
        model = synthetic_model(-3.26e5)
        drive = drive_from_power(-100.0, reference_scale, model, delta=-0.8)
        expected = (model.kerr_k / REFERENCE_KAPPA) * photon_flux(1e-13, reference_scale) / REFERENCE_KAPPA
        assert drive.zeta == pytest.approx(expected, rel=1e-12)
        assert drive.delta == -0.8

    def test_pump_power_for_zeta_inverts_drive(self, reference_scale):
        model = synthetic_model(-3.26e5)
        power = pump_power_for_zeta(-0.1, reference_scale, model)
        assert power == pytest.approx(-113.2, abs=0.1)
        assert drive_from_power(power, reference_scale, model).zeta == pytest.approx(-0.1, rel=1e-10)

    def test_pump_power_for_zeta_rejects_wrong_sign(self, reference_scale):
        with pytest.raises(UnreachableGainError):
            pump_power_for_zeta(0.1, reference_scale, synthetic_model(-3.26e5))
        with pytest.raises(UnreachableGainError):
            pump_power_for_zeta(-0.1, reference_scale, synthetic_model(0.0))

    def test_scale_rejects_non_positive_values(self):
        with pytest.raises(ConfigurationError):
            PhysicalScale(omega_p=0.0, kappa=1.0)


class TestPumpPowerForGain:

    def test_reaches_target_gain(self, reference_scale):
        model = synthetic_model(-3.26e5)
        power = pump_power_for_gain(model, reference_scale, -0.8, 20.0)
        op = operating_point(drive_from_power(power, reference_scale, model, delta=-0.8))
        assert gain_at(op).g_signal_db == pytest.approx(20.0, abs=1e-6)
        weaker = operating_point(drive_from_power(power - 0.5, reference_scale, model, delta=-0.8))
        assert gain_at(weaker).g_signal_db < 20.0

    def test_target_above_maximum_is_unreachable(self, reference_scale):
        """At delta = -0.8 no pump exceeds about 23.4 dB"""
        with pytest.raises(UnreachableGainError):
            pump_power_for_gain(synthetic_model(-3.26e5), reference_scale, -0.8, 30.0)
        with pytest.raises(UnreachableGainError):
            pump_power_for_gain(synthetic_model(-3.26e5), reference_scale, -0.8, 23.6)
        pump_power_for_gain(synthetic_model(-3.26e5), reference_scale, -0.8, 23.2)

    def test_reaches_target_inside_narrow_peak(self, reference_scale):
        """Near delta = -sqrt(3)/2 the gain peak (about 44 dB) is a few 1e-3 wide in zeta"""
        model = synthetic_model(-3.26e5)
        power = pump_power_for_gain(model, reference_scale, -0.86, 25.0)
        drive = drive_from_power(power, reference_scale, model, delta=-0.86)
        assert -CRITICAL_ZETA < drive.zeta < -0.17
        assert gain_at(operating_point(drive)).g_signal_db == pytest.approx(25.0, abs=1e-4)
        weaker = operating_point(drive_from_power(power - 0.05, reference_scale, model, delta=-0.86))
        assert gain_at(weaker).g_signal_db < 25.0

    def test_peak_coupling_is_the_gain_maximum(self):
        u, unbounded = gain_peak_coupling(0.8)
        assert not unbounded
        zeta = -drive_for_coupling(u, 0.8)
        assert zeta == pytest.approx(-0.1717, abs=1e-4)
        peak = gain_at(operating_point(PumpDrive(delta=-0.8, zeta=zeta))).g_signal_db
        assert peak == pytest.approx(23.37, abs=0.01)
        for offset in (-1e-3, 1e-3):
            assert gain_at(operating_point(PumpDrive(delta=-0.8, zeta=zeta + offset))).g_signal_db < peak

    def test_bistable_detuning_has_unbounded_gain(self, reference_scale):
        u, unbounded = gain_peak_coupling(1.2)
        assert unbounded
        model = synthetic_model(-3.26e5)
        power = pump_power_for_gain(model, reference_scale, -1.2, 30.0)
        op = operating_point(drive_from_power(power, reference_scale, model, delta=-1.2))
        assert op.stable
        assert abs(op.coupling) < u
        assert gain_at(op).g_signal_db == pytest.approx(30.0, abs=1e-3)

    def test_non_positive_target_is_rejected(self, reference_scale):
        with pytest.raises(ConfigurationError):
            pump_power_for_gain(synthetic_model(-3.26e5), reference_scale, -0.8, 0.0)

    def test_linear_resonator_is_unreachable(self, reference_scale):
        with pytest.raises(UnreachableGainError):
            pump_power_for_gain(synthetic_model(0.0), reference_scale, -0.8, 20.0)


class TestCompressionPoint:

    def test_compresses_by_one_db(self, reference_scale):
        model = synthetic_model(-3.26e5)
        pump = pump_power_for_zeta(-0.165, reference_scale, model)
        result = compression_point(model, reference_scale, pump, -0.8)
        assert not result.open_ended
        assert result.converged
        assert result.gain_at_p1db_db == pytest.approx(result.small_signal_gain_db - 1.0, abs=0.01)
        assert pump - 80.0 < result.p1db_dbm < -60.0

    def test_inverse_kerr_scaling(self, reference_scale):
        """Same zeta, Kerr scaled by 0.9: P1dB rises by 10 log10(1/0.9) dB"""
        strong = synthetic_model(-3.26e5)
        weak = synthetic_model(-0.9 * 3.26e5)
        p_strong = compression_point(strong, reference_scale, pump_power_for_zeta(-0.165, reference_scale, strong), -0.8)
        p_weak = compression_point(weak, reference_scale, pump_power_for_zeta(-0.165, reference_scale, weak), -0.8)
        assert p_weak.p1db_dbm - p_strong.p1db_dbm == pytest.approx(10 * math.log10(1 / 0.9), abs=1e-6)

    def test_halving_kerr_adds_three_db(self, reference_scale):
        k8 = synthetic_model(-6.52e5)
        k16 = synthetic_model(-3.26e5)
        p8 = compression_point(k8, reference_scale, pump_power_for_zeta(-0.165, reference_scale, k8), -0.8)
        p16 = compression_point(k16, reference_scale, pump_power_for_zeta(-0.165, reference_scale, k16), -0.8)
        assert p16.p1db_dbm - p8.p1db_dbm == pytest.approx(10 * math.log10(2), abs=1e-6)

    def test_linear_resonator_never_compresses(self, reference_scale):
        result = compression_point(synthetic_model(0.0), reference_scale, -110.0, -0.8)
        assert result.open_ended
        assert result.to_dict()["p1db_dbm"] is None

    def test_ceiling_below_scan_is_open_ended(self, reference_scale):
        model = synthetic_model(-3.26e5)
        pump = pump_power_for_zeta(-0.165, reference_scale, model)
        result = compression_point(model, reference_scale, pump, -0.8, ceiling_dbm=pump - 90.0)
        assert result.open_ended


class TestBandwidth:

    def test_symmetric_about_signal_resonance(self):
        op = operating_point(PumpDrive(delta=-0.8, zeta=-0.16))
        result = bandwidth_3db(op)
        assert result.lower == pytest.approx(-result.upper, abs=1e-9)
        assert result.width > 0

    def test_gain_bandwidth_tradeoff(self):
        """More gain along the zeta ladder, narrower band"""
        results = [bandwidth_3db(operating_point(PumpDrive(delta=-0.8, zeta=z)))
                   for z in (-0.15, -0.16, -0.165, -0.17)]
        gains = [r.peak_gain_db for r in results]
        widths = [r.width for r in results]
        assert all(b > a for a, b in zip(gains, gains[1:]))
        assert all(b < a for a, b in zip(widths, widths[1:]))
        assert gains[0] == pytest.approx(5.1, abs=0.1)

    def test_edges_are_three_db_down(self):
        op = operating_point(PumpDrive(delta=-0.8, zeta=-0.165))
        result = bandwidth_3db(op)
        assert gain_at(op, result.upper).g_signal_db == pytest.approx(result.peak_gain_db - 3.0, abs=1e-6)

    def test_width_in_ghz(self, reference_scale):
        op = operating_point(PumpDrive(delta=-0.8, zeta=-0.16))
        result = bandwidth_3db(op, reference_scale)
        assert result.width_ghz == pytest.approx(result.width * 0.01, rel=1e-12)

    def test_undefined_without_gain(self):
        for zeta in (0.0, -0.1):
            with pytest.raises(UndefinedBandwidthError):
                bandwidth_3db(operating_point(PumpDrive(delta=-0.8, zeta=zeta)))


class TestBandCoverage:

    @pytest.fixture
    def tunable_design(self):
        """N=40, M=14 resonates near 13.7 GHz at zero flux"""
        return make_design(n_quartons=40, m_slaves=14)

    def test_covers_four_to_eight_ghz(self, tunable_design, reference_scale):
        curve = band_coverage(tunable_design, reference_scale, (4.0, 8.0), 5, delta=-0.8)
        assert curve.covered
        assert len(curve.points) == 5
        assert curve.points[0].omega_eff_ghz == pytest.approx(8.0, rel=1e-9)
        assert curve.points[-1].omega_eff_ghz == pytest.approx(4.0, rel=1e-9)
        for point in curve.points:
            assert point.gain_db == pytest.approx(20.0, abs=1e-6)
            assert point.band_low_ghz < point.band_high_ghz
        assert not curve.any_overlap
        biases = [p.flux_bias for p in curve.points]
        assert biases == sorted(biases)

    def test_dense_points_overlap(self, tunable_design, reference_scale):
        """Points 0.5 MHz apart with about 1 MHz of bandwidth overlap"""
        curve = band_coverage(tunable_design, reference_scale, (7.999, 8.0), 3, delta=-0.8)
        assert curve.overlaps == [True, True]

    def test_single_point_at_zero_flux(self, tunable_design, reference_scale):
        curve = band_coverage(tunable_design, reference_scale, (4.0, 8.0), 1, delta=-0.8)
        assert len(curve.points) == 1
        assert curve.points[0].flux_bias == 0.0
        assert not curve.covered

    def test_band_above_resonance_is_a_gap(self, tunable_design, reference_scale):
        with pytest.raises(CoverageGapError):
            band_coverage(tunable_design, reference_scale, (4.0, 20.0), 5, delta=-0.8)

    def test_band_below_reach_is_a_gap(self, tunable_design, reference_scale):
        with pytest.raises(CoverageGapError):
            band_coverage(tunable_design, reference_scale, (1.0, 8.0), 5, delta=-0.8)

    def test_rejects_inverted_band(self, tunable_design, reference_scale):
        with pytest.raises(ConfigurationError):
            band_coverage(tunable_design, reference_scale, (8.0, 4.0), 5, delta=-0.8)


class TestCompareDesigns:

    def test_identical_designs_differ_by_zero(self, reference_scale):
        design = make_design(n_quartons=10, m_slaves=4)
        record = compare_designs(design, design, reference_scale)
        assert record.difference_db == 0.0

    def test_blochnium_beats_equal_junction_array(self, reference_scale):
        """50 Quartons of 16 vs an 800-junction array: 10 log10(1/0.9) dB more P1dB"""
        bjpa = make_design(n_quartons=50, m_slaves=16, alpha_c=0.1)
        array = make_design(n_quartons=800, m_slaves=1, alpha_c=0.0)
        record = compare_designs(bjpa, array, reference_scale)
        assert record.difference_db == pytest.approx(10 * math.log10(1 / 0.9), abs=1e-6)
        assert record.to_dict()["error_a"] is None

    def test_more_slaves_raise_p1db(self, reference_scale):
        """N = 70: M = 16 compresses later than M = 8, by the Kerr ratio"""
        m16 = make_design(n_quartons=70, m_slaves=16)
        m8 = make_design(n_quartons=70, m_slaves=8)
        record = compare_designs(m16, m8, reference_scale)
        assert record.a.p1db.converged and record.b.p1db.converged
        assert record.difference_db > 0
        expected = 10 * math.log10(tuned_model(m8).kerr_k / tuned_model(m16).kerr_k)
        assert record.difference_db == pytest.approx(expected, abs=1e-6)

    def test_stronger_master_link_raises_p1db(self, reference_scale):
        """N = 40, M = 14: alpha_c = 0.5 compresses later than alpha_c = 0.1"""
        strong = make_design(n_quartons=40, m_slaves=14, alpha_c=0.5)
        weak = make_design(n_quartons=40, m_slaves=14, alpha_c=0.1)
        record = compare_designs(strong, weak, reference_scale)
        assert record.a.p1db.converged and record.b.p1db.converged
        assert record.difference_db > 0
        expected = 10 * math.log10(tuned_model(weak).kerr_k / tuned_model(strong).kerr_k)
        assert record.difference_db == pytest.approx(expected, abs=1e-6)

    def test_reference_design_reaches_25_db(self, reference_design, reference_scale):
        metric = matched_gain_p1db(reference_design, reference_scale, 25.0, -0.86)
        assert metric.error is None
        assert metric.p1db.small_signal_gain_db == pytest.approx(25.0, abs=1e-3)
        assert not metric.p1db.open_ended
        assert math.isfinite(metric.p1db_dbm)
        assert metric.p1db_dbm < -60.0

    def test_kerr_free_design_reports_error(self, reference_scale):
        quarton = make_design(n_quartons=10, m_slaves=4, alpha_c=1.0)
        record = compare_designs(quarton, make_design(n_quartons=10, m_slaves=4), reference_scale)
        assert record.difference_db is None
        assert record.a.error.exception_type == "UnreachableGainError"
        assert record.b.error is None

    def test_model_kerr_matches_reference(self, reference_design):
        model = tuned_model(reference_design)
        assert model.kerr_over_kappa == pytest.approx(-5.19e-3, rel=5e-3)
