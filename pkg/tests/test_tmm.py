from hypothesis import given, settings, strategies as st
from braggcascade.cmt import GratingSpec, bragg_wavelength, uniform_grating_response
from braggcascade.spectra import extract_bandwidth_nm, extract_center_nm, extract_rejection_db
from braggcascade.tmm import (
    CascadeSpec,
    Segment,
    bypass_sweep,
    cascade_spectrum,
    chain_product,
    coherent_cascade,
    coupled_mode_matrix,
    grating_matrix,
    incoherent_cascade,
    link_phases,
    scattering,
    section_responses,
    segment_matrix,
)
from braggcascade.tools import CompositionMismatch, InvalidInput, SegmentationMismatch
from .tools import *


class TestSegmentMatrix(TestCase):
    def test_uncoupled_segment_is_pure_phase(self):
        dn, length = 0.01, HYBRID_LAMBDA0 / (2 * 0.01)
        segment = Segment(length, 0.0, dn)
        M = segment_matrix(segment, HYBRID_LAMBDA0, GratingSpec(), self.hybrid_dispersion())
        self.assertSimilar(M, np.diag([-1j, 1j]), atol=1e-12)

    def test_half_segments_compose_to_full_segment(self):
        for _ in range(20):
            kappa = self.rng.uniform(0, 2e-4)
            delta = self.rng.uniform(-4e-4, 4e-4)
            length = self.rng.uniform(100, 1.5e4)
            half = coupled_mode_matrix(kappa, delta, length / 2)
            full = coupled_mode_matrix(kappa, delta, length)
            self.assertSimilar(half @ half, full, rtol=0, atol=1e-12)

    def test_unit_determinant(self):
        kappa = self.rng.uniform(0, 1e-4, size=50)
        delta = self.rng.uniform(-3e-4, 3e-4, size=50)
        M = coupled_mode_matrix(kappa, delta, 2e4)
        self.assertTrue(np.all(np.abs(np.abs(np.linalg.det(M)) - 1) < 1e-10))

    def test_invalid_segment(self):
        with self.assertRaises(InvalidInput):
            Segment(0.0, 1e-4)

    def test_chain_product_order(self):
        stack = self.rng.normal(size=(7, 2, 2)) + 1j * self.rng.normal(size=(7, 2, 2))
        expected = np.eye(2)
        for A in stack:
            expected = A @ expected
        self.assertSimilar(chain_product(stack), expected)


class TestGratingMatrix(TestCase):
    spec = GratingSpec(kappa=1e-4, length=5e4)

    def test_single_segment_equals_closed_form(self):
        spec = self.spec.replace(segment_periods=1000)
        self.assertEqual(spec.segment_count, 1)
        dispersion = self.hybrid_dispersion()
        grid = self.grid(span=20.0, step=0.05)
        r, t = scattering(grating_matrix(spec, grid, None, dispersion))
        r0, t0 = uniform_grating_response(spec, np.pi * 5.3 / grid - np.pi / 290.0)
        self.assertSimilar(r, r0, rtol=0, atol=1e-12)
        self.assertSimilar(t, t0, rtol=0, atol=1e-12)

    def test_any_segmentation_reproduces_closed_form(self):
        dispersion = self.hybrid_dispersion()
        grid = self.grid(span=20.0, step=0.05)
        _, t0 = uniform_grating_response(self.spec, np.pi * 5.3 / grid - np.pi / 290.0)
        for periods in (1, 7, 50):
            spec = self.spec.replace(segment_periods=periods)
            _, t = scattering(grating_matrix(spec, grid, None, dispersion))
            self.assertSimilar(np.abs(t) ** 2, np.abs(t0) ** 2, rtol=0, atol=1e-10)

    def test_closed_form_fidelity_over_wide_grid(self):
        dispersion = self.hybrid_dispersion()
        grid = self.grid(span=20.0, step=0.01)
        self.assertEqual(grid.size, 4001)
        for kappa_length in (0.5, 2.0, 5.3):
            spec = GratingSpec(kappa=kappa_length / 5e4, length=5e4, segment_periods=10)
            _, t = scattering(grating_matrix(spec, grid, None, dispersion))
            _, t0 = uniform_grating_response(spec, np.pi * 5.3 / grid - np.pi / 290.0)
            self.assertLess(np.max(np.abs(np.abs(t) ** 2 - np.abs(t0) ** 2)), 1e-10)

    def test_scalar_wavelength(self):
        M = grating_matrix(self.spec, HYBRID_LAMBDA0, None, self.hybrid_dispersion())
        self.assertEqual(M.shape, (2, 2))

    def test_perturbed_grating_is_lossless(self):
        dispersion = self.hybrid_dispersion()
        dn = 1e-3 * self.rng.normal(size=self.spec.segment_count)
        r, t = scattering(grating_matrix(self.spec, self.grid(), dn, dispersion))
        self.assertSimilar(np.abs(r) ** 2 + np.abs(t) ** 2, np.ones(r.shape), rtol=0, atol=1e-10)

    def test_segmentation_mismatch(self):
        with self.assertRaises(SegmentationMismatch):
            grating_matrix(
                self.spec, self.grid(), np.zeros(3), self.hybrid_dispersion()
            )

    def test_uniform_offset_shifts_resonance(self):
        dispersion = self.hybrid_dispersion()
        spec = self.spec.replace(segment_periods=4)
        dn, s = 1e-3, sum(HYBRID_INDICES)
        grid = self.grid(span=10.0, step=0.005)
        perturbed = np.full(spec.segment_count, dn)
        _, t = scattering(grating_matrix(spec, grid, perturbed, dispersion))
        _, t0 = scattering(grating_matrix(spec, grid * s / (s + dn), None, dispersion))
        self.assertLess(np.max(np.abs(np.abs(t) ** 2 - np.abs(t0) ** 2)), 1e-6)
        shifted = bragg_wavelength(spec, dispersion.shifted(dn / 2)).lambda0
        center = extract_center_nm(
            cascade_spectrum(CascadeSpec((spec,)), grid, dispersion, [perturbed])
        )
        self.assertAlmostEqual(center, shifted, delta=0.01)
        self.assertAlmostEqual(shifted - HYBRID_LAMBDA0, 290.0 * dn, delta=1e-9)

    def test_phase_errors_degrade_peak_reflection(self):
        dispersion = self.hybrid_dispersion()
        blocks = np.repeat([1.0, -1.0], self.spec.segment_count // 2 + 1)
        dn = 2e-3 * blocks[: self.spec.segment_count]
        r, _ = scattering(grating_matrix(self.spec, self.grid(step=0.002), dn, dispersion))
        self.assertLess(np.max(np.abs(r) ** 2), np.tanh(5.0) ** 2)


class TestCascadeSpec(TestCase):
    def test_uniform_cascade(self):
        cascade = CascadeSpec.uniform(GratingSpec(), 10)
        self.assertEqual(len(cascade.sections), 10)
        self.assertEqual(len(cascade.link_lengths), 9)
        self.assertEqual(cascade.link_loss_db, (0.0,) * 9)
        self.assertEqual(cascade.link_phase_treatment, "ignored")
        self.assertAlmostEqual(cascade.total_length, 10 * 2.5e5 + 9 * 2e4)
        self.assertEqual(cascade.digest(), CascadeSpec.uniform(GratingSpec(), 10).digest())

    def test_invalid_cascades(self):
        with self.assertRaises(InvalidInput):
            CascadeSpec(())
        with self.assertRaises(InvalidInput):
            CascadeSpec((GratingSpec(), GratingSpec()), ())
        with self.assertRaises(InvalidInput):
            CascadeSpec((GratingSpec(), GratingSpec()), (2e4,), link_phases=(0.0,))
        with self.assertRaises(InvalidInput):
            CascadeSpec((GratingSpec(),), composition="partial")

    def test_link_phases(self):
        cascade = CascadeSpec.uniform(GratingSpec(), 3, 1000.0, "coherent", link_index=2.0)
        phases = link_phases(cascade, [1000.0, 2000.0])
        self.assertSimilar(phases, [[4 * np.pi, 2 * np.pi]] * 2)
        explicit = cascade.replace(link_phases=(0.5, 1.5))
        self.assertSimilar(link_phases(explicit, [1000.0, 2000.0]), [[0.5, 0.5], [1.5, 1.5]])


class TestCoherentCascade(TestCase):
    section = GratingSpec(kappa=4e-5, length=2.5e4, segment_periods=10)

    def test_single_section_equals_grating(self):
        cascade = CascadeSpec((self.section,), composition="coherent")
        grid, dispersion = self.grid(), self.hybrid_dispersion()
        T, R = coherent_cascade(cascade, grid, dispersion)
        r, t = scattering(grating_matrix(self.section, grid, None, dispersion))
        self.assertSimilar(T, np.abs(t) ** 2)
        self.assertSimilar(R, np.abs(r) ** 2)

    def test_requires_coherent_composition(self):
        with self.assertRaises(CompositionMismatch):
            coherent_cascade(
                CascadeSpec((self.section,)), self.grid(), self.hybrid_dispersion()
            )

    def test_transmission_depends_on_link_phase(self):
        cascade = CascadeSpec.uniform(self.section, 2, composition="coherent")
        dispersion = self.hybrid_dispersion()
        levels = []
        for phase in np.linspace(0, 2 * np.pi, 16, endpoint=False):
            T, R = coherent_cascade(cascade, [HYBRID_LAMBDA0], dispersion, phases=[phase])
            self.assertAlmostEqual(T[0] + R[0], 1.0, delta=1e-10)
            levels.append(10 * np.log10(T[0]))
        self.assertGreater(max(levels) - min(levels), 1.0)

    def test_no_coupling_transmits_everything(self):
        cascade = CascadeSpec.uniform(
            self.section.replace(kappa=0.0), 3, composition="coherent"
        )
        for phase in (0.0, 1.0, 2.0):
            T, _ = coherent_cascade(
                cascade, self.grid(), self.hybrid_dispersion(), phases=[phase, phase]
            )
            self.assertSimilar(T, np.ones(T.shape), rtol=0, atol=1e-12)

    def test_link_loss_attenuates_guided_light(self):
        lossless = CascadeSpec.uniform(self.section, 3, composition="coherent")
        lossy = lossless.replace(link_loss_db=(1.0, 2.0))
        grid, dispersion = self.grid(), self.hybrid_dispersion()
        open_links = lossy.replace(sections=(self.section.replace(kappa=0.0),) * 3)
        T, R = coherent_cascade(open_links, grid, dispersion, phases=[0.3, 1.1])
        self.assertSimilar(T, np.full(grid.size, 10**-0.3))
        self.assertSimilar(R, np.zeros(grid.size), atol=1e-20)
        T0, R0 = coherent_cascade(lossless, grid, dispersion, phases=[0.3, 1.1])
        T1, R1 = coherent_cascade(lossy, grid, dispersion, phases=[0.3, 1.1])
        self.assertTrue(np.all(T1 <= T0))
        self.assertTrue(np.all(T1 + R1 < 1.0))

    def test_sweep_agrees_with_matrix_product(self):
        cascade = CascadeSpec.uniform(
            self.section, 3, composition="coherent", link_loss_db=(0.5, 1.5)
        )
        grid, dispersion = self.grid(), self.hybrid_dispersion()
        dn = [1e-3 * self.rng.standard_normal(self.section.segment_count) for _ in range(3)]
        zero = [np.zeros(self.section.segment_count)] * 3
        T, R = coherent_cascade(cascade, grid, dispersion, dn, [0.4, 2.0])
        Ts, Rs = coherent_cascade(cascade, grid, dispersion, dn, [0.4, 2.0], zero)
        self.assertSimilar(Ts, T, rtol=1e-8, atol=1e-14)
        self.assertSimilar(Rs, R, rtol=1e-8, atol=1e-14)


class TestIncoherentCascade(TestCase):
    def test_rejections_add_in_db(self):
        T = incoherent_cascade([0.01, 0.01, 0.01])
        self.assertAlmostEqual(-10 * np.log10(T), 60.0, delta=1e-9)

    def test_transparent_section_is_identity(self):
        self.assertEqual(incoherent_cascade([0.3, 1.0, 0.2]), incoherent_cascade([0.3, 0.2]))

    def test_invalid_transmission(self):
        with self.assertRaises(InvalidInput):
            incoherent_cascade([0.5, 1.5])
        with self.assertRaises(InvalidInput):
            incoherent_cascade([0.5, -0.1])

    @settings(deadline=None, max_examples=50)
    @given(st.lists(st.floats(min_value=1e-12, max_value=1.0), min_size=1, max_size=20))
    def test_db_additivity(self, transmissions):
        total = -10 * np.log10(incoherent_cascade(transmissions))
        expected = sum(-10 * np.log10(t) for t in transmissions)
        self.assertAlmostEqual(total, expected, delta=1e-9 * max(1.0, expected))

    def test_leakage_recovers_power(self):
        T = np.array([[0.1, 0.5], [0.2, 0.9], [0.05, 1.0]])
        lossless = incoherent_cascade(T)
        leaky = incoherent_cascade(T, te1_leakage=0.3)
        self.assertTrue(np.all(leaky >= lossless))
        self.assertTrue(np.all(leaky <= 1.0))
        self.assertSimilar(incoherent_cascade(T, te1_leakage=0.0), np.prod(T, axis=0))
        a, b = 0.1, 0.2
        expected = a * b / (1 - 0.3 * (1 - a) * (1 - b))
        self.assertAlmostEqual(float(leaky[0]), expected * 0.05 / (1 - 0.3 * (1 - 0.05) * (
            (1 - b) + b * b * 0.3 * (1 - a) / (1 - 0.3 * (1 - a) * (1 - b))
        )), delta=1e-12)


class TestCascadeSpectrum(TestCase):
    section = GratingSpec(kappa=4e-5, length=5e4, segment_periods=10)

    def test_incoherent_sections_add_rejection(self):
        dispersion = self.hybrid_dispersion()
        grid = self.grid(span=10.0, step=0.01)
        single = cascade_spectrum(CascadeSpec((self.section,)), grid, dispersion)
        cascade = CascadeSpec.uniform(self.section, 10)
        total = cascade_spectrum(cascade, grid, dispersion)
        r1 = extract_rejection_db(single, reference_db=0.0).rejection_db
        r10 = extract_rejection_db(total, reference_db=0.0).rejection_db
        self.assertAlmostEqual(r10, 10 * r1, delta=1e-9)
        self.assertSimilar(total.reflection, single.reflection)
        self.assertEqual(total.metadata["composition"], "incoherent")
        self.assertEqual(total.metadata["cascade_hash"], cascade.digest())

    def test_section_responses(self):
        cascade = CascadeSpec.uniform(self.section, 3)
        T, R = section_responses(cascade, self.grid(), self.hybrid_dispersion())
        self.assertEqual(T.shape, (3, self.grid().size))
        self.assertSimilar(T + R, np.ones(T.shape), rtol=0, atol=1e-10)

    def test_bandwidth_barely_changes_with_section_count(self):
        section = GratingSpec(kappa=1e-4, length=2.5e4, segment_periods=10)
        dispersion = self.hybrid_dispersion()
        grid = self.grid(span=30.0, step=0.02)
        widths = [
            extract_bandwidth_nm(
                cascade_spectrum(CascadeSpec.uniform(section, k), grid, dispersion),
                reference_db=0.0,
            )
            for k in (4, 8, 16)
        ]
        self.assertLess(max(widths) / min(widths) - 1, 0.1)

    def test_shorter_sections_widen_the_notch(self):
        dispersion = self.hybrid_dispersion()
        grid = self.grid(span=15.0, step=0.02)
        widths = []
        for count in (16, 8, 4, 1):
            section = GratingSpec(kappa=1e-5, length=4e5 / count, segment_periods=10)
            spectrum = cascade_spectrum(CascadeSpec.uniform(section, count), grid, dispersion)
            widths.append(extract_bandwidth_nm(spectrum, reference_db=0.0))
        self.assertEqual(widths, sorted(widths, reverse=True))
        self.assertEqual(len(set(widths)), 4)

    def test_link_loss_and_leakage(self):
        dispersion, grid = self.hybrid_dispersion(), self.grid()
        base = CascadeSpec.uniform(self.section, 3)
        lossy = base.replace(link_loss_db=(1.0, 2.0))
        leaky = base.replace(te1_leakage=0.5)
        T = cascade_spectrum(base, grid, dispersion).transmission
        self.assertSimilar(
            cascade_spectrum(lossy, grid, dispersion).transmission, T * 10**-0.3
        )
        self.assertTrue(np.all(cascade_spectrum(leaky, grid, dispersion).transmission >= T))

    def test_grid_must_increase(self):
        with self.assertRaises(InvalidInput):
            cascade_spectrum(
                CascadeSpec((self.section,)), [1540.0, 1530.0], self.hybrid_dispersion()
            )


class TestBypassSweep(TestCase):
    section = GratingSpec(kappa=2e-5, length=2900.0 * 170, segment_periods=10)

    def uniform_rates(self, spec: GratingSpec, alpha: float) -> list:
        return [np.full(spec.segment_count, alpha)]

    def test_without_scattering_matches_transfer_matrix(self):
        grid, dispersion = self.grid(), self.hybrid_dispersion()
        dn = 1e-4 * self.rng.standard_normal(self.section.segment_count)
        response = bypass_sweep((self.section,), grid, dispersion, [dn])
        r, t = scattering(grating_matrix(self.section, grid, dn, dispersion))
        self.assertSimilar(response.transmission, np.abs(t) ** 2, rtol=1e-8, atol=1e-14)
        self.assertSimilar(response.reflection, np.abs(r) ** 2, rtol=1e-8, atol=1e-14)
        self.assertSimilar(response.bypass, np.zeros(grid.size), atol=1e-20)

    def test_long_grating_saturates_at_scattering_floor(self):
        dispersion, alpha = self.hybrid_dispersion(), 4e-9
        response = bypass_sweep(
            (self.section,),
            [HYBRID_LAMBDA0],
            dispersion,
            scattering_rates=self.uniform_rates(self.section, alpha),
        )
        floor = alpha / (2 * self.section.kappa)
        self.assertAlmostEqual(response.bypass[0] / floor, 1.0, delta=0.03)
        self.assertLess(response.transmission[0], 1e-2 * floor)
        longer = self.section.replace(length=2900.0 * 240)
        extended = bypass_sweep(
            (longer,),
            [HYBRID_LAMBDA0],
            dispersion,
            scattering_rates=self.uniform_rates(longer, alpha),
        )
        gain_db = 10 * np.log10(response.total[0] / extended.total[0])
        self.assertLess(abs(gain_db), 0.1)

    def test_scattered_power_is_accounted_for(self):
        grid, dispersion = self.grid(span=8.0, step=0.05), self.hybrid_dispersion()
        rates = [1e-8 * self.rng.random(self.section.segment_count)]
        response = bypass_sweep((self.section,), grid, dispersion, scattering_rates=rates)
        balance = response.transmission + response.reflection + response.bypass
        self.assertSimilar(balance, np.ones(grid.size), rtol=0, atol=1e-5)
        self.assertTrue(np.all(response.total <= 1.0))

    def test_incoherent_cascade_keeps_only_last_bypass(self):
        section = GratingSpec(kappa=4e-5, length=5e4, segment_periods=10)
        cascade = CascadeSpec.uniform(section, 3)
        grid, dispersion = self.grid(), self.hybrid_dispersion()
        rates = [1e-8 * self.rng.random(section.segment_count) for _ in range(3)]
        spectrum = cascade_spectrum(cascade, grid, dispersion, scattering_rates=rates)
        parts = [bypass_sweep((section,), grid, dispersion, [None], [a]) for a in rates]
        expected = np.prod([p.transmission for p in parts], axis=0)
        expected += parts[0].transmission * parts[1].transmission * parts[2].bypass
        self.assertSimilar(spectrum.transmission, expected)
