//! Seeded random fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tms_core::model::{CMatrix, HarmonicBlocks, PortLayout, ScattererBlocks, DEFAULT_Z_REF};
use tms_core::modulation::{LoadSegment, LoadState, PortSchedule, Spectral};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Uniform in the disc of radius `r`.
pub fn disc(rng: &mut impl Rng, r: f64) -> Complex64 {
    let rad = r * rng.random::<f64>().sqrt();
    Complex64::from_polar(rad, rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
}

pub fn matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| disc(rng, scale))
}

fn symmetric(rng: &mut impl Rng, n: usize, scale: f64) -> CMatrix {
    let a = matrix(rng, n, n, scale);
    (&a + a.transpose()) * c(0.5, 0.0)
}

/// One harmonic's submatrices. `dd_scale` bounds the load coupling entries.
pub fn harmonic_blocks(rng: &mut impl Rng, m: usize, n: usize, dd_scale: f64, reciprocal: bool) -> HarmonicBlocks {
    if reciprocal {
        let cross = matrix(rng, m, m, 0.2);
        let fd_p = matrix(rng, m, n, 0.5);
        let fd_t = matrix(rng, m, n, 0.5);
        HarmonicBlocks {
            ff_pp: symmetric(rng, m, 0.3),
            ff_tp: cross.transpose(),
            ff_pt: cross,
            ff_tt: symmetric(rng, m, 0.3),
            df_p: fd_p.transpose(),
            df_t: fd_t.transpose(),
            fd_p,
            fd_t,
            dd: symmetric(rng, n, dd_scale),
        }
    } else {
        HarmonicBlocks {
            ff_pp: matrix(rng, m, m, 0.3),
            ff_tp: matrix(rng, m, m, 0.2),
            ff_pt: matrix(rng, m, m, 0.2),
            ff_tt: matrix(rng, m, m, 0.3),
            fd_p: matrix(rng, m, n, 0.5),
            fd_t: matrix(rng, m, n, 0.5),
            df_p: matrix(rng, n, m, 0.5),
            df_t: matrix(rng, n, m, 0.5),
            dd: matrix(rng, n, n, dd_scale),
        }
    }
}

/// Harmonic-dependent blocks for a random layout.
pub fn dispersive_blocks(rng: &mut impl Rng, layout: PortLayout, dd_scale: f64, reciprocal: bool) -> ScattererBlocks {
    let hs = (0..layout.harmonics)
        .map(|_| harmonic_blocks(rng, layout.directions, layout.loads, dd_scale, reciprocal))
        .collect();
    ScattererBlocks::new(layout, DEFAULT_Z_REF, hs).unwrap()
}

pub fn flat_blocks(rng: &mut impl Rng, layout: PortLayout, dd_scale: f64, reciprocal: bool) -> ScattererBlocks {
    let b = harmonic_blocks(rng, layout.directions, layout.loads, dd_scale, reciprocal);
    ScattererBlocks::frequency_flat(layout, DEFAULT_Z_REF, b).unwrap()
}

/// Random partition of the period into `q` segments with reflections in the unit disc.
pub fn random_schedule(rng: &mut impl Rng, q: usize) -> PortSchedule {
    let mut cuts: Vec<f64> = (0..q - 1).map(|_| rng.random::<f64>()).collect();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let segments = cuts
        .windows(2)
        .map(|w| LoadSegment {
            state: LoadState::reflection(disc(rng, 1.0)),
            duty: w[1] - w[0],
        })
        .collect();
    PortSchedule::new(segments).unwrap().shifted(rng.random::<f64>())
}

/// A static load whose impedance differs per harmonic.
pub fn static_dispersive_load(rng: &mut impl Rng, harmonics: usize) -> PortSchedule {
    let z = (0..harmonics)
        .map(|_| c(rng.random_range(1.0..200.0), rng.random_range(-300.0..300.0)))
        .collect();
    PortSchedule::constant(LoadState::Impedance(Spectral::PerHarmonic(z)))
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
