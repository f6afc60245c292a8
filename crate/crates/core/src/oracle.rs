//! Quasi-static time-domain reference for the harmonic model.
//!
//! Over one modulation period the loads are frozen at each instant and the
//! single-frequency loaded-scatterer matrix is applied to the incident tone.
//! The resulting piecewise-constant output is transformed to intermodulation
//! orders. For submatrices that do not vary across harmonics this is the
//! untruncated counterpart of the block model.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::Factorized;
use crate::model::{CMatrix, CVector, FrequencyGrid, HarmonicBlocks, ScatterResult, ScattererBlocks};
use crate::modulation::{cis_turns, ModulationPlan};

/// Offsets more than this factor below the spectrum peak are judged against the floor instead.
pub const RELATIVE_FLOOR: f64 = 1e-6;

/// Output vectors indexed by intermodulation order `k ∈ [-kmax, kmax]`.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetSpectrum {
    kmax: usize,
    values: Vec<CVector>,
}

impl OffsetSpectrum {
    pub fn new(kmax: usize, values: Vec<CVector>) -> Result<Self> {
        if values.len() != 2 * kmax + 1 {
            return Err(Error::validation(format!(
                "spectrum over |k| <= {kmax} needs {} entries, got {}",
                2 * kmax + 1,
                values.len()
            )));
        }
        Ok(OffsetSpectrum { kmax, values })
    }

    /// Model output for an excitation at harmonic `excited`, read out at `excited + k`.
    pub fn from_result(result: &ScatterResult, excited: usize, kmax: usize) -> Result<Self> {
        let values = (-(kmax as i64)..=kmax as i64)
            .map(|k| {
                let h = excited as i64 + k;
                if h < 1 || h > result.layout.harmonics as i64 {
                    return Err(Error::validation(format!(
                        "order {k} from harmonic {excited} leaves the window 1..={}",
                        result.layout.harmonics
                    )));
                }
                result.harmonic_block(h as usize)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(kmax, values)
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    pub fn at(&self, k: i64) -> Option<&CVector> {
        let i = k + self.kmax as i64;
        (i >= 0).then(|| self.values.get(i as usize)).flatten()
    }

    pub fn truncated(&self, kmax: usize) -> Result<Self> {
        if kmax > self.kmax {
            return Err(Error::validation(format!(
                "cannot widen spectrum from {} to {kmax}",
                self.kmax
            )));
        }
        let skip = self.kmax - kmax;
        Self::new(kmax, self.values[skip..skip + 2 * kmax + 1].to_vec())
    }

    pub fn orders(&self) -> impl Iterator<Item = i64> {
        -(self.kmax as i64)..=self.kmax as i64
    }
}

/// Single-frequency loaded scatterer `S_ff + S_fd·Γ·(I − S_dd·Γ)⁻¹·S_df` for diagonal `Γ`.
pub fn instantaneous_matrix(blocks: &HarmonicBlocks, gammas: &[Complex64]) -> Result<CMatrix> {
    let n = gammas.len();
    let gamma = CMatrix::from_diagonal(&CVector::from_column_slice(gammas));
    let inner = CMatrix::identity(n, n) - &blocks.dd * &gamma;
    let f = Factorized::new(inner, "I - S_dd*Gamma")?;
    Ok(blocks.structural() + blocks.radiation_from_load() * gamma * f.solve(&blocks.load_from_radiation()))
}

fn validate_samples(samples: usize) -> Result<()> {
    if samples < 1024 || !samples.is_power_of_two() {
        return Err(Error::validation(format!(
            "oracle samples must be a power of two >= 1024, got {samples}"
        )));
    }
    Ok(())
}

/// `∫_a^b e^{-j2πkt} dt`
fn kernel_integral(k: i64, a: f64, b: f64) -> Complex64 {
    if k == 0 {
        return Complex64::new(b - a, 0.0);
    }
    let kf = k as f64;
    (cis_turns(-kf * a) - cis_turns(-kf * b)) / Complex64::new(0.0, 2.0 * PI * kf)
}

/// Time-domain spectrum of the quasi-statically loaded scatterer.
///
/// `blocks` are the submatrices at the input tone, `a` the `2M` incident waves,
/// and segment reflections are evaluated at the grid's central harmonic. The
/// period is divided into `samples` uniform cells; each cell holds the exact
/// average of the output, the cells are Fourier transformed, and cells cut by
/// a switch instant are then corrected with their exact sub-cell integrals.
/// Returns orders `|k| ≤ samples/2 − 1`.
pub fn quasi_static_spectrum(
    blocks: &HarmonicBlocks,
    z_ref: Complex64,
    plan: &ModulationPlan,
    grid: &FrequencyGrid,
    a: &CVector,
    samples: usize,
) -> Result<OffsetSpectrum> {
    validate_samples(samples)?;
    let loads = blocks.dd.nrows();
    if plan.num_ports() != loads {
        return Err(Error::validation(format!(
            "plan has {} ports, scatterer has {loads} loads",
            plan.num_ports()
        )));
    }
    if a.len() != blocks.ff_pp.nrows() * 2 {
        return Err(Error::validation(format!(
            "incident vector has {} entries, expected {}",
            a.len(),
            blocks.ff_pp.nrows() * 2
        )));
    }
    let (h_c, f_c) = (grid.center(), grid.f_in());
    let gammas: Vec<Vec<Complex64>> = plan
        .schedules()
        .iter()
        .map(|s| s.reflections(h_c, f_c, z_ref))
        .collect::<Result<_>>()?;

    // union of switch instants over all ports
    let mut cuts: Vec<f64> = vec![0.0, 1.0];
    for s in plan.schedules() {
        for (start, end, _) in s.intervals() {
            cuts.push(start);
            cuts.push(end);
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // constant output over each piece between consecutive instants
    let pieces: Vec<(f64, f64, CVector)> = cuts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let g: Vec<Complex64> = plan
                .schedules()
                .iter()
                .zip(&gammas)
                .map(|(s, gs)| gs[s.segment_at(mid)])
                .collect();
            let s = instantaneous_matrix(blocks, &g).map_err(|e| match e {
                Error::SingularSystem { rcond, threshold, .. } => Error::SingularSystem {
                    context: format!("instantaneous loads at t = {:.9} T_m", w[0]),
                    rcond,
                    threshold,
                },
                other => other,
            })?;
            Ok((w[0], w[1], s * a))
        })
        .collect::<Result<_>>()?;

    let n = samples as f64;
    let dim = a.len();
    let kmax = samples / 2 - 1;

    // cells cut by an instant, with their sub-pieces
    let mut cut_cells: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut averages = vec![vec![Complex64::new(0.0, 0.0); samples]; dim];
    for (pi, (lo, hi, b)) in pieces.iter().enumerate() {
        let first = ((lo * n).floor() as usize).min(samples - 1);
        let last = ((hi * n).ceil() as usize).min(samples);
        for cell in first..last {
            let c_lo = (cell as f64 / n).max(*lo);
            let c_hi = ((cell + 1) as f64 / n).min(*hi);
            if c_hi <= c_lo {
                continue;
            }
            let weight = (c_hi - c_lo) * n;
            for (avg, v) in averages.iter_mut().zip(b.iter()) {
                avg[cell] += v * weight;
            }
            if weight < 1.0 {
                match cut_cells.last_mut() {
                    Some((c, list)) if *c == cell => list.push(pi),
                    _ => cut_cells.push((cell, vec![pi])),
                }
            }
        }
    }
    cut_cells.sort_by_key(|c| c.0);
    cut_cells.dedup_by(|b, a| {
        if a.0 == b.0 {
            a.1.append(&mut b.1);
            true
        } else {
            false
        }
    });

    let fft = FftPlanner::new().plan_fft_forward(samples);
    let columns: Vec<Vec<Complex64>> = averages
        .into_par_iter()
        .enumerate()
        .map(|(comp, mut buf)| {
            let cell_avg = buf.clone();
            fft.process(&mut buf);
            (-(kmax as i64)..=kmax as i64)
                .map(|k| {
                    let bin = k.rem_euclid(samples as i64) as usize;
                    let mut v = buf[bin] / n * cell_weight(k, samples);
                    for (cell, list) in &cut_cells {
                        let c0 = *cell as f64 / n;
                        let c1 = (*cell + 1) as f64 / n;
                        let exact: Complex64 = list
                            .iter()
                            .map(|&pi| {
                                let (lo, hi, b) = &pieces[pi];
                                b[comp] * kernel_integral(k, lo.max(c0), hi.min(c1))
                            })
                            .sum();
                        v += exact - cell_avg[*cell] * kernel_integral(k, c0, c1);
                    }
                    v
                })
                .collect()
        })
        .collect();

    let values = (0..2 * kmax + 1)
        .map(|i| CVector::from_iterator(dim, columns.iter().map(|col| col[i])))
        .collect();
    OffsetSpectrum::new(kmax, values)
}

/// Ratio of the exact cell integral to `e^{-j2πk·i/N}/N`.
fn cell_weight(k: i64, samples: usize) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let x = PI * k as f64 / samples as f64;
    cis_turns(-(k as f64) / (2.0 * samples as f64)) * (x.sin() / x)
}

/// Runs the oracle on the central-harmonic data of `blocks`.
pub fn quasi_static_for(
    blocks: &ScattererBlocks,
    plan: &ModulationPlan,
    grid: &FrequencyGrid,
    a: &CVector,
    samples: usize,
) -> Result<OffsetSpectrum> {
    quasi_static_spectrum(blocks.harmonic(grid.center())?, blocks.z_ref(), plan, grid, a, samples)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffsetError {
    pub k: i64,
    pub abs: f64,
    pub rel: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub tolerance: f64,
    pub rows: Vec<OffsetError>,
}

impl ComparisonReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn max_abs(&self) -> f64 {
        self.rows.iter().map(|r| r.abs).fold(0.0, f64::max)
    }

    pub fn max_rel(&self) -> f64 {
        self.rows.iter().map(|r| r.rel).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &OffsetError> {
        self.rows.iter().filter(|r| !r.pass)
    }
}

/// Per-order comparison of two spectra over the model's order range.
///
/// The relative error at order `k` is `‖model − oracle‖ / max(‖oracle‖, 1e-6·peak)`,
/// where `peak` is the largest oracle norm over the compared orders.
pub fn compare(model: &OffsetSpectrum, oracle: &OffsetSpectrum, tolerance: f64) -> Result<ComparisonReport> {
    if oracle.kmax < model.kmax {
        return Err(Error::validation(format!(
            "oracle covers |k| <= {}, model needs {}",
            oracle.kmax, model.kmax
        )));
    }
    let pairs: Vec<(i64, &CVector, &CVector)> = model
        .orders()
        .map(|k| (k, model.at(k).expect("in range"), oracle.at(k).expect("in range")))
        .collect();
    if let Some((k, m, o)) = pairs.iter().find(|(_, m, o)| m.len() != o.len()) {
        return Err(Error::validation(format!(
            "order {k}: model has {} entries, oracle {}",
            m.len(),
            o.len()
        )));
    }
    let peak = pairs.iter().map(|(_, _, o)| o.norm()).fold(0.0, f64::max);
    let floor = (RELATIVE_FLOOR * peak).max(f64::MIN_POSITIVE);
    let rows = pairs
        .into_iter()
        .map(|(k, m, o)| {
            let abs = (m - o).norm();
            let rel = abs / o.norm().max(floor);
            OffsetError {
                k,
                abs,
                rel,
                pass: rel <= tolerance,
            }
        })
        .collect();
    Ok(ComparisonReport { tolerance, rows })
}
