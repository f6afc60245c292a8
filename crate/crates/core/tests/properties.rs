mod common;

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use tms_core::model::{Excitation, ExcitationEntry, FrequencyGrid, PortLayout, DEFAULT_Z_REF};
use tms_core::modulation::{fourier_coefficient, LoadState, ModulationPlan, PortSchedule};
use tms_core::oracle::{compare, quasi_static_for, OffsetSpectrum};
use tms_core::solver::HarmonicSystem;

use common::{c, max_abs, rng};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn gammas(s: &PortSchedule) -> Vec<Complex64> {
    s.reflections(1, 1e9, DEFAULT_Z_REF).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn delay_multiplies_lines_by_a_phase(seed in any::<u64>(), q in 1usize..6, delta in -2.0f64..2.0, k in -40i64..40) {
        let s = common::random_schedule(&mut rng(seed), q);
        let g = gammas(&s);
        let expected = fourier_coefficient(&s, &g, k) * Complex64::from_polar(1.0, -2.0 * PI * k as f64 * delta);
        prop_assert!((fourier_coefficient(&s.shifted(delta), &g, k) - expected).norm() < 1e-12);
    }

    #[test]
    fn real_reflections_give_hermitian_lines(r in 0.0f64..1.0, duty in 0.01f64..0.99, lo in -1.0f64..1.0, hi in -1.0f64..1.0, k in 1i64..60) {
        let s = PortSchedule::two_state(r, duty, LoadState::reflection(c(lo, 0.0)), LoadState::reflection(c(hi, 0.0))).unwrap();
        let g = gammas(&s);
        prop_assert!((fourier_coefficient(&s, &g, -k) - fourier_coefficient(&s, &g, k).conj()).norm() < 1e-14);
    }

    #[test]
    fn lines_are_bounded_by_the_waveform(seed in any::<u64>(), q in 1usize..6, k in -200i64..200) {
        let s = common::random_schedule(&mut rng(seed), q);
        let g = gammas(&s);
        let peak = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(fourier_coefficient(&s, &g, k).norm() <= peak + 1e-15);
    }

    #[test]
    fn scattering_is_linear(seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0) {
        let mut r = rng(seed);
        let layout = PortLayout::new(3, 2, 5).unwrap();
        let blocks = common::dispersive_blocks(&mut r, layout, 0.3, false);
        let grid = FrequencyGrid::centered(2.4e9, 1e5, 5).unwrap();
        let plan = ModulationPlan::new(1e5, vec![common::random_schedule(&mut r, 3), common::random_schedule(&mut r, 2)]).unwrap();
        let sys = HarmonicSystem::build(&blocks, &plan, &grid).unwrap();
        let entry = |h, d, a_phi, a_theta| ExcitationEntry { harmonic: h, direction: d, a_phi, a_theta };
        let one = entry(3, 1, c(1.0, 0.0), c(0.0, 0.5));
        let two = entry(2, 3, c(0.0, 0.0), c(-0.3, 1.0));
        let scale = |e: ExcitationEntry, s: f64| entry(e.harmonic, e.direction, e.a_phi * s, e.a_theta * s);
        let b1 = sys.scatter(&Excitation::new(vec![one]).unwrap()).unwrap().b;
        let b2 = sys.scatter(&Excitation::new(vec![two]).unwrap()).unwrap().b;
        prop_assume!(alpha.abs() + beta.abs() > 1e-3);
        let both = sys.scatter(&Excitation::new(vec![scale(one, alpha), scale(two, beta)]).unwrap()).unwrap().b;
        let err = (both - (b1 * c(alpha, 0.0) + b2 * c(beta, 0.0))).camax();
        prop_assert!(err < 1e-12, "superposition error {err:e}");
    }

    #[test]
    fn common_delay_only_rotates_blocks(seed in any::<u64>(), delta in 0.0f64..1.0) {
        let mut r = rng(seed);
        let layout = PortLayout::new(2, 3, 5).unwrap();
        let blocks = common::flat_blocks(&mut r, layout, 0.3, false);
        let grid = FrequencyGrid::centered(2.4e9, 1e5, 5).unwrap();
        let plan = ModulationPlan::new(1e5, (0..3).map(|_| common::random_schedule(&mut r, 3)).collect()).unwrap();
        let base = HarmonicSystem::build(&blocks, &plan, &grid).unwrap().matrix();
        let moved = HarmonicSystem::build(&blocks, &plan.map_schedules(|s| s.shifted(delta)), &grid).unwrap().matrix();
        let w = 2 * layout.directions;
        let mut worst: f64 = 0.0;
        for i in 0..5 {
            for j in 0..5 {
                let phase = Complex64::from_polar(1.0, -2.0 * PI * (i as f64 - j as f64) * delta);
                let want = base.view((i * w, j * w), (w, w)) * phase;
                worst = worst.max(max_abs(&(moved.view((i * w, j * w), (w, w)) - want)));
            }
        }
        prop_assert!(worst < 1e-12, "block rotation error {worst:e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn oracle_is_independent_of_cell_count(seed in any::<u64>()) {
        let mut r = rng(seed);
        let layout = PortLayout::new(2, 3, 3).unwrap();
        let blocks = common::flat_blocks(&mut r, layout, 0.2, false);
        let grid = FrequencyGrid::centered(2.4e9, 1e5, 3).unwrap();
        let plan = ModulationPlan::new(1e5, (0..3).map(|_| common::random_schedule(&mut r, 3)).collect()).unwrap();
        let a = tms_core::model::CVector::from_fn(4, |_, _| common::disc(&mut r, 1.0));
        let coarse = quasi_static_for(&blocks, &plan, &grid, &a, 1 << 10).unwrap();
        let fine = quasi_static_for(&blocks, &plan, &grid, &a, 1 << 13).unwrap();
        for k in -20i64..=20 {
            let err = (coarse.at(k).unwrap() - fine.at(k).unwrap()).camax();
            prop_assert!(err < 1e-12, "k = {k}: {err:e}");
        }
    }

    #[test]
    fn uncoupled_model_matches_oracle(seed in any::<u64>()) {
        let mut r = rng(seed);
        let hh = 41;
        let layout = PortLayout::new(2, 3, hh).unwrap();
        let blocks = common::flat_blocks(&mut r, layout, 0.0, false);
        let grid = FrequencyGrid::centered(2.4e9, 1e5, hh).unwrap();
        let plan = ModulationPlan::new(1e5, (0..3).map(|_| common::random_schedule(&mut r, 4)).collect()).unwrap();
        let h_c = grid.center();
        let ex = Excitation::single(h_c, 2, tms_core::model::Polarization::Phi, c(0.7, -0.2)).unwrap();
        let res = HarmonicSystem::build(&blocks, &plan, &grid).unwrap().scatter(&ex).unwrap();
        let model = OffsetSpectrum::from_result(&res, h_c, 6).unwrap();
        let a = ex.to_vector(&layout).unwrap().rows((h_c - 1) * 4, 4).into_owned();
        let oracle = quasi_static_for(&blocks, &plan, &grid, &a, 1 << 12).unwrap();
        let report = compare(&model, &oracle, 1e-9).unwrap();
        prop_assert!(report.pass(), "max rel {:e}", report.max_rel());
    }
}
