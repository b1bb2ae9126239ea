from braggcascade.cmt import GratingSpec, peak_rejection_db
from braggcascade.fabnoise import (
    NoiseModel,
    EnsembleStats,
    TrialRecord,
    ar1_process,
    calibrate_sigma,
    compare_compositions,
    monte_carlo,
    sample_cascade,
    sample_link_offsets,
    sample_realization,
    sample_scattering,
    sample_width,
    saturation_curve,
    wafer_bias,
)
from braggcascade.modes import WaveguideGeometry
from braggcascade.spectra import OSA, MeasurementChain
from braggcascade.tmm import CascadeSpec
from braggcascade.tools import CalibrationFailed, InvalidInput
from .tools import *

SECTION = GratingSpec(kappa=1e-5, length=2e5, segment_periods=10)

PLATEAU_SECTION = GratingSpec(kappa=2e-5, length=3e5, segment_periods=2)
"""Section whose noiseless rejection, 46 dB, sits above a 40 dB plateau."""

STRONG_SECTION = GratingSpec(kappa=4e-5, length=5e4, segment_periods=2)
"""Short section rejecting 11.5 dB on its own."""


class TestNoiseModel(TestCase):
    def test_defaults_are_noiseless(self):
        self.assertTrue(NoiseModel().noiseless)
        self.assertFalse(NoiseModel(sigma_width=0.5).noiseless)
        self.assertFalse(NoiseModel(wafer_bias_sigma=0.5).noiseless)

    def test_invalid_parameters(self):
        with self.assertRaises(InvalidInput):
            NoiseModel(sigma_width=-1.0)
        with self.assertRaises(InvalidInput):
            NoiseModel(correlation_length=0.0)
        with self.assertRaises(InvalidInput):
            NoiseModel(seed=-3)
        with self.assertRaises(InvalidInput):
            NoiseModel(seed=1.5)

    def test_sensitivity_from_geometry(self):
        model = NoiseModel.for_geometry(WaveguideGeometry(), GratingSpec(), sigma_width=1.0)
        self.assertGreater(model.index_sensitivity, 0)
        self.assertEqual(model.sigma_width, 1.0)


class TestRealizations(TestCase):
    def test_noiseless_realization_is_zero(self):
        dn = sample_realization(NoiseModel(), SECTION, 3)
        self.assertSimilar(dn, np.zeros(SECTION.segment_count))

    def test_realizations_are_reproducible(self):
        model = NoiseModel(sigma_width=1.0, seed=17)
        first = sample_realization(model, SECTION, 5, 2)
        self.assertTrue(np.array_equal(first, sample_realization(model, SECTION, 5, 2)))
        self.assertFalse(np.array_equal(first, sample_realization(model, SECTION, 6, 2)))
        self.assertFalse(np.array_equal(first, sample_realization(model, SECTION, 5, 3)))
        other = model.replace(seed=18)
        self.assertFalse(np.array_equal(first, sample_realization(other, SECTION, 5, 2)))

    def test_ar1_statistics(self):
        step, correlation = 290.0, 2900.0
        w = ar1_process(100_000, step, 2.0, correlation, self.rng)
        self.assertAlmostEqual(np.std(w), 2.0, delta=0.1)
        rho = np.corrcoef(w[:-1], w[1:])[0, 1]
        self.assertAlmostEqual(rho, np.exp(-step / correlation), delta=0.02)

    def test_infinite_correlation_gives_constant(self):
        w = ar1_process(100, 290.0, 1.0, np.inf, self.rng)
        self.assertSimilar(w, np.full(100, w[0]))

    def test_wafer_bias_is_shared_by_sections(self):
        model = NoiseModel(wafer_bias_sigma=2.0, seed=4)
        cascade = CascadeSpec.uniform(SECTION, 3)
        dn = sample_cascade(model, cascade, 7)
        expected = model.index_sensitivity * wafer_bias(model, 7)
        for section in dn:
            self.assertSimilar(section, np.full(SECTION.segment_count, expected))
        self.assertNotEqual(wafer_bias(model, 7), wafer_bias(model, 8))

    def test_link_offsets(self):
        cascade = CascadeSpec.uniform(SECTION, 4, composition="coherent")
        self.assertSimilar(sample_link_offsets(NoiseModel(), cascade, 0), np.zeros(3))
        model = NoiseModel(sigma_width=1.0)
        offsets = sample_link_offsets(model, cascade, 0)
        self.assertEqual(offsets.shape, (3,))
        self.assertTrue(np.array_equal(offsets, sample_link_offsets(model, cascade, 0)))


class TestMonteCarlo(TestCase):
    cascade = CascadeSpec.uniform(SECTION, 2)
    model = NoiseModel(sigma_width=1.0, correlation_length=5000.0, seed=11)

    def ensemble(self, model, trials=6, **kwdargs):
        return monte_carlo(
            self.cascade,
            model,
            trials,
            self.grid(step=0.05),
            self.hybrid_dispersion(),
            reference_db=0.0,
            **kwdargs,
        )

    def test_results_do_not_depend_on_workers(self):
        serial = self.ensemble(self.model)
        threaded = self.ensemble(self.model, workers=3)
        self.assertEqual(serial.records, threaded.records)
        self.assertEqual(serial.percentiles, threaded.percentiles)
        self.assertEqual([r.trial_index for r in serial.records], list(range(6)))

    def test_noiseless_ensemble_has_no_spread(self):
        stats = self.ensemble(NoiseModel(), trials=5)
        expected = 2 * peak_rejection_db(SECTION.kappa, SECTION.length)
        self.assertAlmostEqual(stats.median_rejection, expected, delta=1e-6)
        self.assertSimilar(stats.percentiles, (stats.median_rejection,) * 4)
        self.assertEqual(stats.trials, 5)

    def test_noise_lowers_rejection(self):
        clean = self.ensemble(NoiseModel())
        noisy = self.ensemble(self.model.replace(sigma_width=5.0))
        self.assertLess(noisy.median_rejection, clean.median_rejection)

    def test_measurement_chain_caps_rejection(self):
        chain = MeasurementChain(source_power=0.0, detector_floor=-10.0)
        stats = self.ensemble(NoiseModel(), trials=2, chain=chain)
        record = stats.records[0]
        self.assertTrue(record.clipped)
        self.assertAlmostEqual(record.rejection_db, 10.0, delta=1e-9)
        self.assertGreater(record.true_rejection_db, 20.0)

    def test_keep_spectra(self):
        stats = self.ensemble(self.model, trials=2, keep_spectra=True)
        self.assertEqual(len(stats.spectra), 2)
        self.assertEqual(stats.spectra[1].metadata["realization"], 1)

    def test_invalid_trials(self):
        with self.assertRaises(InvalidInput):
            self.ensemble(self.model, trials=0)

    def test_ensemble_document(self):
        records = [
            TrialRecord(1, 20.0, np.nan, 1537.0, False, 20.0),
            TrialRecord(0, 10.0, 1.0, 1537.1, False, 10.0),
        ]
        stats = EnsembleStats.from_records(records)
        self.assertEqual([r.trial_index for r in stats.records], [0, 1])
        self.assertEqual(stats.median_rejection, 15.0)
        self.assertEqual(stats.median_bandwidth, 1.0)
        document = stats.to_document()
        self.assertIsNone(document["records"][1]["bandwidth_nm"])
        self.assertEqual(set(document["percentiles_db"]), {"p5", "p25", "p75", "p95"})


class TestSaturation(TestCase):
    def test_noiseless_single_section_follows_closed_form(self):
        lengths = [1e5, 2e5, 3e5]
        curve = saturation_curve(
            lengths,
            NoiseModel(),
            2,
            "single-section",
            SECTION.replace(segment_periods=20),
            self.grid(step=0.05),
            self.hybrid_dispersion(),
            reference_db=0.0,
        )
        self.assertEqual([L for L, _ in curve], lengths)
        for length, median in curve:
            self.assertAlmostEqual(
                median, peak_rejection_db(SECTION.kappa, length), delta=1e-6
            )

    def test_noiseless_fixed_sections_add(self):
        curve = saturation_curve(
            [1e5, 1.5e5],
            NoiseModel(),
            1,
            "incoherent-fixed-section",
            SECTION,
            self.grid(step=0.05),
            self.hybrid_dispersion(),
            section_length=5e4,
            reference_db=0.0,
        )
        single = peak_rejection_db(SECTION.kappa, 5e4)
        self.assertAlmostEqual(curve[0][1], 2 * single, delta=1e-6)
        self.assertAlmostEqual(curve[1][1], 3 * single, delta=1e-6)

    def test_invalid_curves(self):
        grid, dispersion = self.grid(), self.hybrid_dispersion()
        with self.assertRaises(InvalidInput):
            saturation_curve(
                [2e5, 1e5], NoiseModel(), 1, "single-section", SECTION, grid, dispersion
            )
        with self.assertRaises(InvalidInput):
            saturation_curve([1e5], NoiseModel(), 1, "coherent", SECTION, grid, dispersion)


class TestCalibration(TestCase):
    def calibrate(self, target, **kwdargs):
        return calibrate_sigma(
            target,
            2e5,
            SECTION,
            5,
            self.grid(step=0.05),
            self.hybrid_dispersion(),
            NoiseModel(correlation_length=5000.0, seed=3),
            reference_db=0.0,
            **kwdargs,
        )

    def test_noiseless_target_needs_no_noise(self):
        target = peak_rejection_db(SECTION.kappa, 2e5)
        self.assertEqual(self.calibrate(target, length_factors=(1.0,)).sigma_width, 0.0)

    def test_growing_rejection_is_not_a_plateau(self):
        target = peak_rejection_db(SECTION.kappa, 2e5)
        with self.assertRaises(CalibrationFailed):
            self.calibrate(target)

    def test_unreachable_target(self):
        with self.assertRaises(CalibrationFailed):
            self.calibrate(peak_rejection_db(SECTION.kappa, 2e5) + 5.0)

    def test_calibrated_noise_reaches_target(self):
        target = peak_rejection_db(SECTION.kappa, 2e5) - 3.0
        model = self.calibrate(target, length_factors=(1.0,))
        self.assertGreater(model.sigma_width, 0)
        self.assertEqual(model.seed, 3)
        stats = monte_carlo(
            CascadeSpec((SECTION,)),
            model,
            5,
            self.grid(step=0.05),
            self.hybrid_dispersion(),
            reference_db=0.0,
        )
        self.assertAlmostEqual(stats.median_rejection, target, delta=0.5)


class TestCompositions(TestCase):
    def test_same_sections_both_laws(self):
        coherent, incoherent = compare_compositions(
            SECTION,
            2,
            NoiseModel(sigma_width=1.0, seed=2),
            3,
            self.grid(step=0.05),
            self.hybrid_dispersion(),
            reference_db=0.0,
        )
        self.assertEqual(coherent.trials, 3)
        self.assertEqual(incoherent.trials, 3)
        self.assertNotEqual(coherent.records, incoherent.records)


class TestPlateau(TestCase):
    """Saturation of single sections at a reduced 300 µm onset."""

    model = NoiseModel(correlation_length=1000.0, seed=21)

    def plateau_grid(self):
        return self.grid(span=5.0, step=0.05)

    def calibrate(self, model):
        return calibrate_sigma(
            40.0,
            3e5,
            PLATEAU_SECTION,
            8,
            self.plateau_grid(),
            self.hybrid_dispersion(),
            model,
            reference_db=0.0,
        )

    def test_calibrated_noise_saturates_rejection(self):
        self.assertGreater(peak_rejection_db(PLATEAU_SECTION.kappa, 3e5), 45.0)
        model = self.calibrate(self.model)
        self.assertGreater(model.sigma_width, 0.0)
        self.assertLess(model.sigma_width, 10.0)
        curve = saturation_curve(
            [3e5, 4e5, 5e5],
            model,
            8,
            "single-section",
            PLATEAU_SECTION,
            self.plateau_grid(),
            self.hybrid_dispersion(),
            reference_db=0.0,
        )
        medians = [m for _, m in curve]
        for median in medians:
            self.assertGreater(median, 35.0)
            self.assertLess(median, 45.0)
        self.assertLess(max(medians) - min(medians), 3.0)

    def test_calibrated_cascade_of_ten_sections_exceeds_eighty_db(self):
        model = self.calibrate(self.model)
        section = PLATEAU_SECTION.replace(length=2.5e5)
        stats = monte_carlo(
            CascadeSpec.uniform(section, 10),
            model,
            4,
            self.grid(span=8.0, step=0.05),
            self.hybrid_dispersion(),
            chain=OSA,
            reference_db=0.0,
        )
        true_rejections = [r.true_rejection_db for r in stats.records]
        self.assertGreaterEqual(float(np.median(true_rejections)), 80.0)
        for record in stats.records:
            self.assertTrue(record.clipped or record.rejection_db >= 80.0)

    def test_phase_errors_alone_do_not_saturate(self):
        with self.assertRaises(CalibrationFailed):
            self.calibrate(self.model.replace(forward_scattering=0.0))

    def test_median_degrades_with_noise(self):
        medians = [
            monte_carlo(
                CascadeSpec((PLATEAU_SECTION,)),
                self.model.replace(sigma_width=sigma),
                6,
                self.plateau_grid(),
                self.hybrid_dispersion(),
                reference_db=0.0,
            ).median_rejection
            for sigma in (1.0, 2.0, 4.0)
        ]
        self.assertGreater(medians[0], medians[1])
        self.assertGreater(medians[1], medians[2])


class TestIndependenceDividend(TestCase):
    """Incoherent cascades outlast coherent ones under the same noise."""

    def test_incoherent_beats_coherent_under_noise(self):
        grid = self.grid(span=8.0, step=0.1)
        for sigma in (4.0, 8.0):
            model = NoiseModel(sigma_width=sigma, correlation_length=1000.0, seed=5)
            coherent, incoherent = compare_compositions(
                STRONG_SECTION, 4, model, 8, grid, self.hybrid_dispersion(), reference_db=0.0
            )
            self.assertGreater(incoherent.median_rejection, coherent.median_rejection + 3.0)
            wins = np.sum(incoherent.rejections > coherent.rejections)
            self.assertGreaterEqual(wins, 7)

    def test_incoherent_cascade_keeps_adding_under_noise(self):
        grid = self.grid(span=8.0, step=0.1)
        model = NoiseModel(sigma_width=4.0, correlation_length=1000.0, seed=6)
        cascade = CascadeSpec.uniform(STRONG_SECTION, 4)
        stats = monte_carlo(cascade, model, 6, grid, self.hybrid_dispersion(), reference_db=0.0)
        expected = 4 * peak_rejection_db(STRONG_SECTION.kappa, STRONG_SECTION.length)
        self.assertAlmostEqual(stats.median_rejection, expected, delta=0.15 * expected)


class TestNoiseStatistics(TestCase):
    def test_realization_variance_matches_sensitivity(self):
        spec = GratingSpec(length=2.9e7)
        self.assertEqual(spec.segment_count, 100_000)
        model = NoiseModel(sigma_width=2.0, correlation_length=290.0, seed=13)
        dn = sample_realization(model, spec, 0)
        expected = (model.sigma_width * model.index_sensitivity) ** 2
        self.assertAlmostEqual(np.var(dn) / expected, 1.0, delta=0.05)

    def test_scattering_follows_the_local_width(self):
        model = NoiseModel(sigma_width=2.0, wafer_bias_sigma=3.0, seed=4)
        cascade = CascadeSpec.uniform(SECTION, 2)
        rates = sample_scattering(model, cascade, 3)
        self.assertEqual(len(rates), 2)
        for i, alpha in enumerate(rates):
            width = sample_width(model, SECTION, 3, i)
            self.assertSimilar(alpha, model.forward_scattering * width**2)
        self.assertIsNone(sample_scattering(model.replace(forward_scattering=0.0), cascade, 3))
        self.assertIsNone(sample_scattering(NoiseModel(wafer_bias_sigma=3.0), cascade, 3))
        with self.assertRaises(InvalidInput):
            NoiseModel(forward_scattering=-1e-9)

    def test_same_seed_gives_same_ensemble(self):
        model = NoiseModel(sigma_width=2.0, correlation_length=5000.0, seed=77)
        runs = [
            monte_carlo(
                CascadeSpec.uniform(SECTION, 2),
                model,
                4,
                self.grid(step=0.05),
                self.hybrid_dispersion(),
                reference_db=0.0,
            )
            for _ in range(2)
        ]
        self.assertEqual(runs[0].records, runs[1].records)
        self.assertEqual(runs[0].median_rejection, runs[1].median_rejection)
        self.assertEqual(runs[0].percentiles, runs[1].percentiles)

    def test_wafer_bias_moves_the_notch_but_keeps_its_width(self):
        grid = self.grid(span=8.0, step=0.02)
        cascade = CascadeSpec((SECTION,))
        clean = monte_carlo(
            cascade, NoiseModel(), 1, grid, self.hybrid_dispersion(), reference_db=0.0
        )
        biased = monte_carlo(
            cascade,
            NoiseModel(wafer_bias_sigma=2.0, seed=8),
            6,
            grid,
            self.hybrid_dispersion(),
            reference_db=0.0,
        )
        width = clean.median_bandwidth
        for record in biased.records:
            self.assertAlmostEqual(record.bandwidth_nm / width, 1.0, delta=0.02)
        centers = [r.center_nm for r in biased.records]
        self.assertGreater(max(centers) - min(centers), 0.05)
