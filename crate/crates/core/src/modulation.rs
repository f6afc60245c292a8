//! Periodically switched loads: reflection waveforms, their Fourier
//! coefficients and the polyharmonic load matrix.
//!
//! Time inside one modulation period is normalized to `T_m`, so delays and
//! duties are fractions in `[0, 1]`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::model::{CMatrix, FrequencyGrid, ScattererBlocks};

/// Tolerance on `Σ R_q = 1`.
pub const DUTY_SUM_TOLERANCE: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `e^{j2πx}` with the argument reduced to the nearest whole turn first.
pub(crate) fn cis_turns(x: f64) -> Complex64 {
    let r = x - x.round();
    let (s, c) = (2.0 * PI * r).sin_cos();
    Complex64::new(c, s)
}

/// A complex quantity that may depend on frequency.
#[derive(Clone)]
pub enum Spectral {
    Constant(Complex64),
    /// One value per harmonic `1..=H` of the grid it is evaluated on.
    PerHarmonic(Vec<Complex64>),
    Function(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl Spectral {
    pub fn at(&self, h: usize, f_hz: f64) -> Result<Complex64> {
        match self {
            Spectral::Constant(v) => Ok(*v),
            Spectral::PerHarmonic(table) => table.get(h.wrapping_sub(1)).copied().ok_or_else(|| {
                Error::validation(format!(
                    "per-harmonic table has {} entries, harmonic {h} requested",
                    table.len()
                ))
            }),
            Spectral::Function(f) => Ok(f(f_hz)),
        }
    }
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spectral::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Spectral::PerHarmonic(t) => f.debug_tuple("PerHarmonic").field(t).finish(),
            Spectral::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl PartialEq for Spectral {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Spectral::Constant(a), Spectral::Constant(b)) => a == b,
            (Spectral::PerHarmonic(a), Spectral::PerHarmonic(b)) => a == b,
            (Spectral::Function(a), Spectral::Function(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// The termination engaged during one segment of the modulation period.
#[derive(Clone, Debug, PartialEq)]
pub enum LoadState {
    /// Load impedance in ohms.
    Impedance(Spectral),
    /// Reflection coefficient already normalized to `Z_ref`.
    Reflection(Spectral),
}

impl LoadState {
    pub fn impedance(z: Complex64) -> Self {
        LoadState::Impedance(Spectral::Constant(z))
    }

    pub fn reflection(gamma: Complex64) -> Self {
        LoadState::Reflection(Spectral::Constant(gamma))
    }

    /// Reflection coefficient at harmonic `h` (frequency `f_hz`).
    pub fn reflection_at(&self, h: usize, f_hz: f64, z_ref: Complex64) -> Result<Complex64> {
        match self {
            LoadState::Impedance(z) => reflection_of_impedance(z.at(h, f_hz)?, z_ref),
            LoadState::Reflection(g) => g.at(h, f_hz),
        }
    }
}

/// `γ = (Z − Z_ref*) / (Z + Z_ref)`
pub fn reflection_of_impedance(z: Complex64, z_ref: Complex64) -> Result<Complex64> {
    let den = z + z_ref;
    if den == ZERO {
        return Err(Error::SingularLoad {
            z: z.to_string(),
            z_ref: z_ref.to_string(),
        });
    }
    Ok((z - z_ref.conj()) / den)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LoadSegment {
    pub state: LoadState,
    /// Fraction of `T_m` the state stays engaged.
    pub duty: f64,
}

/// Delay and on-duty of a two-state (off/on) switching schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OnOffTiming {
    /// Normalized time at which the on state begins.
    pub delay: f64,
    pub duty_on: f64,
}

/// Ordered load states of one port over one modulation period.
#[derive(Clone, Debug, PartialEq)]
pub struct PortSchedule {
    segments: Vec<LoadSegment>,
    offset: f64,
    timing: Option<OnOffTiming>,
    label: Option<String>,
}

impl PortSchedule {
    pub fn new(segments: Vec<LoadSegment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::validation("schedule needs at least one segment"));
        }
        for (q, s) in segments.iter().enumerate() {
            if !(0.0..=1.0).contains(&s.duty) {
                return Err(Error::validation(format!(
                    "segment {} duty {} outside [0, 1]",
                    q + 1,
                    s.duty
                )));
            }
        }
        let total: f64 = segments.iter().map(|s| s.duty).sum();
        if (total - 1.0).abs() > DUTY_SUM_TOLERANCE {
            return Err(Error::validation(format!("segment duties sum to {total}, expected 1")));
        }
        Ok(PortSchedule {
            segments,
            offset: 0.0,
            timing: None,
            label: None,
        })
    }

    /// A load that never switches.
    pub fn constant(state: LoadState) -> Self {
        PortSchedule {
            segments: vec![LoadSegment { state, duty: 1.0 }],
            offset: 0.0,
            timing: None,
            label: None,
        }
    }

    /// Off/on/off schedule with the on state starting at `delay` for `duty_on`.
    ///
    /// An on interval running past the end of the period wraps to its start,
    /// giving on/off/on instead. Either way the first and last states agree.
    pub fn two_state(delay: f64, duty_on: f64, off: LoadState, on: LoadState) -> Result<Self> {
        if !(0.0..1.0).contains(&delay) {
            return Err(Error::validation(format!("on-state delay {delay} outside [0, 1)")));
        }
        if !(0.0..=1.0).contains(&duty_on) {
            return Err(Error::validation(format!("on-state duty {duty_on} outside [0, 1]")));
        }
        let end = delay + duty_on;
        let segments = if end <= 1.0 + DUTY_SUM_TOLERANCE {
            vec![
                LoadSegment { state: off.clone(), duty: delay },
                LoadSegment { state: on, duty: duty_on },
                LoadSegment { state: off, duty: (1.0 - end).max(0.0) },
            ]
        } else {
            vec![
                LoadSegment { state: on.clone(), duty: end - 1.0 },
                LoadSegment { state: off, duty: 1.0 - duty_on },
                LoadSegment { state: on, duty: 1.0 - delay },
            ]
        };
        let mut schedule = Self::new(segments)?;
        schedule.timing = Some(OnOffTiming { delay, duty_on });
        Ok(schedule)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn segments(&self) -> &[LoadSegment] {
        &self.segments
    }

    pub fn timing(&self) -> Option<OnOffTiming> {
        self.timing
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn is_static(&self) -> bool {
        self.segments.len() == 1
    }

    /// Same waveform delayed by `delta` periods.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.offset += delta;
        out
    }

    /// Normalized segment start times `r'_q`, beginning at the schedule offset.
    pub fn delays(&self) -> Vec<f64> {
        let mut r = self.offset;
        self.segments
            .iter()
            .map(|s| {
                let start = r;
                r += s.duty;
                start
            })
            .collect()
    }

    /// Per-segment reflection coefficients at harmonic `h`.
    pub fn reflections(&self, h: usize, f_hz: f64, z_ref: Complex64) -> Result<Vec<Complex64>> {
        self.segments
            .iter()
            .map(|s| s.state.reflection_at(h, f_hz, z_ref))
            .collect()
    }

    /// Nonempty `[start, end)` pieces inside `[0, 1)` with their segment index.
    pub fn intervals(&self) -> Vec<(f64, f64, usize)> {
        let base = self.offset.rem_euclid(1.0);
        let mut out = Vec::with_capacity(self.segments.len() + 1);
        let mut r = base;
        let last = self.segments.len() - 1;
        for (q, s) in self.segments.iter().enumerate() {
            let start = r;
            // the last segment closes the period exactly
            let end = if q == last { base + 1.0 } else { r + s.duty };
            r = end;
            if end <= start {
                continue;
            }
            if start >= 1.0 {
                out.push((start - 1.0, end - 1.0, q));
            } else if end > 1.0 {
                out.push((start, 1.0, q));
                if end - 1.0 > 0.0 {
                    out.push((0.0, end - 1.0, q));
                }
            } else {
                out.push((start, end, q));
            }
        }
        out.sort_by(|a, b| a.0.total_cmp(&b.0));
        out
    }

    /// Index of the segment engaged at normalized time `t`.
    pub fn segment_at(&self, t: f64) -> usize {
        let t = t.rem_euclid(1.0);
        let pieces = self.intervals();
        pieces
            .iter()
            .find(|(a, b, _)| *a <= t && t < *b)
            .or_else(|| pieces.last())
            .map(|p| p.2)
            .unwrap_or(0)
    }
}

/// Reflection coefficient at normalized time `t`, given per-segment values.
pub fn waveform_at(schedule: &PortSchedule, t: f64, gammas: &[Complex64]) -> Complex64 {
    gammas[schedule.segment_at(t)]
}

/// Closed-form Fourier coefficient `Γ_k` of a switched reflection waveform.
pub fn fourier_coefficient(schedule: &PortSchedule, gammas: &[Complex64], k: i64) -> Complex64 {
    debug_assert_eq!(gammas.len(), schedule.segments.len());
    if k == 0 {
        return schedule
            .segments
            .iter()
            .zip(gammas)
            .map(|(s, g)| g * s.duty)
            .sum();
    }
    let kf = k as f64;
    let sum: Complex64 = schedule
        .segments
        .iter()
        .zip(schedule.delays())
        .zip(gammas)
        .map(|((s, r), g)| g * cis_turns(-kf * r) * (cis_turns(-kf * s.duty) - 1.0))
        .sum();
    Complex64::new(0.0, 1.0 / (2.0 * PI * kf)) * sum
}

/// Cell averages of the reflection waveform on a uniform grid of `samples` cells.
fn cell_averages(schedule: &PortSchedule, gammas: &[Complex64], samples: usize) -> Vec<Complex64> {
    let n = samples as f64;
    let mut acc = vec![ZERO; samples];
    for (a, b, q) in schedule.intervals() {
        let g = gammas[q];
        let first = ((a * n).floor() as usize).min(samples - 1);
        let last = ((b * n).ceil() as usize).min(samples);
        for (i, cell) in acc.iter_mut().enumerate().take(last).skip(first) {
            let lo = (i as f64 / n).max(a);
            let hi = ((i + 1) as f64 / n).min(b);
            if hi > lo {
                *cell += g * ((hi - lo) * n);
            }
        }
    }
    acc
}

/// `(1/N)·∫_cell e^{-j2πkt}dt / e^{-j2πk·i/N}`, the per-cell kernel weight.
fn cell_kernel(k: i64, samples: usize) -> Complex64 {
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let x = PI * k as f64 / samples as f64;
    cis_turns(-(k as f64) / (2.0 * samples as f64)) * (x.sin() / x)
}

/// Fourier coefficient by direct quadrature of the waveform over one period.
///
/// The period is split into `samples` equal cells; each cell contributes its
/// exact waveform average times the exactly integrated kernel.
pub fn fourier_coefficient_numeric(
    schedule: &PortSchedule,
    gammas: &[Complex64],
    k: i64,
    samples: usize,
) -> Complex64 {
    assert!(samples >= 64, "quadrature needs at least 64 samples");
    let avg = cell_averages(schedule, gammas, samples);
    let n = samples as f64;
    let sum: Complex64 = avg
        .iter()
        .enumerate()
        .map(|(i, g)| g * cis_turns(-(k as f64) * (i as f64 / n)))
        .sum();
    sum / n * cell_kernel(k, samples)
}

/// Quadrature coefficients for all `|k| ≤ kmax`, ordered from `-kmax` to `kmax`.
pub fn fourier_spectrum_numeric(
    schedule: &PortSchedule,
    gammas: &[Complex64],
    kmax: usize,
    samples: usize,
) -> Vec<Complex64> {
    assert!(samples >= 64, "quadrature needs at least 64 samples");
    assert!(kmax < samples / 2, "kmax must stay below samples/2");
    let mut buf = cell_averages(schedule, gammas, samples);
    FftPlanner::new().plan_fft_forward(samples).process(&mut buf);
    let n = samples as f64;
    (-(kmax as i64)..=kmax as i64)
        .map(|k| {
            let bin = k.rem_euclid(samples as i64) as usize;
            buf[bin] / n * cell_kernel(k, samples)
        })
        .collect()
}

/// One schedule per load port, sharing a modulation clock.
#[derive(Clone, Debug, PartialEq)]
pub struct ModulationPlan {
    pub f_m: f64,
    schedules: Vec<PortSchedule>,
    pub name: Option<String>,
}

impl ModulationPlan {
    pub fn new(f_m: f64, schedules: Vec<PortSchedule>) -> Result<Self> {
        if !(f_m.is_finite() && f_m > 0.0) {
            return Err(Error::domain(format!("modulation frequency must be positive, got {f_m}")));
        }
        if schedules.is_empty() {
            return Err(Error::validation("plan needs at least one port schedule"));
        }
        Ok(ModulationPlan {
            f_m,
            schedules,
            name: None,
        })
    }

    /// Every port held at a fixed state.
    pub fn constant(f_m: f64, states: Vec<LoadState>) -> Result<Self> {
        Self::new(f_m, states.into_iter().map(PortSchedule::constant).collect())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn schedules(&self) -> &[PortSchedule] {
        &self.schedules
    }

    /// Schedule of 1-based port `d`.
    pub fn port(&self, d: usize) -> Result<&PortSchedule> {
        if d == 0 || d > self.schedules.len() {
            return Err(Error::Index {
                axis: "load port",
                value: d,
                max: self.schedules.len(),
            });
        }
        Ok(&self.schedules[d - 1])
    }

    pub fn num_ports(&self) -> usize {
        self.schedules.len()
    }

    pub fn is_static(&self) -> bool {
        self.schedules.iter().all(PortSchedule::is_static)
    }

    pub fn map_schedules(&self, f: impl Fn(&PortSchedule) -> PortSchedule) -> Self {
        ModulationPlan {
            f_m: self.f_m,
            schedules: self.schedules.iter().map(f).collect(),
            name: self.name.clone(),
        }
    }
}

/// The `HN×HN` load matrix; block `(i, j)` maps input harmonic `j` to output harmonic `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyharmonicLoadMatrix {
    harmonics: usize,
    loads: usize,
    matrix: CMatrix,
}

impl PolyharmonicLoadMatrix {
    pub fn zeros(harmonics: usize, loads: usize) -> Self {
        PolyharmonicLoadMatrix {
            harmonics,
            loads,
            matrix: CMatrix::zeros(harmonics * loads, harmonics * loads),
        }
    }

    /// Wraps a dense `HN×HN` matrix.
    pub fn from_matrix(harmonics: usize, loads: usize, matrix: CMatrix) -> Result<Self> {
        let dim = harmonics * loads;
        if matrix.shape() != (dim, dim) {
            return Err(Error::validation(format!(
                "load matrix is {}x{}, expected {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(PolyharmonicLoadMatrix {
            harmonics,
            loads,
            matrix,
        })
    }

    pub fn harmonics(&self) -> usize {
        self.harmonics
    }

    pub fn loads(&self) -> usize {
        self.loads
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    fn check_block(&self, i: usize, j: usize) -> Result<()> {
        for (axis, v) in [("block row", i), ("block column", j)] {
            if v == 0 || v > self.harmonics {
                return Err(Error::Index {
                    axis,
                    value: v,
                    max: self.harmonics,
                });
            }
        }
        Ok(())
    }

    /// `N×N` block at 1-based block row `i`, column `j`.
    pub fn block(&self, i: usize, j: usize) -> Result<CMatrix> {
        self.check_block(i, j)?;
        let n = self.loads;
        Ok(self.matrix.view(((i - 1) * n, (j - 1) * n), (n, n)).into_owned())
    }

    pub fn set_block(&mut self, i: usize, j: usize, block: &CMatrix) -> Result<()> {
        self.check_block(i, j)?;
        let n = self.loads;
        if block.shape() != (n, n) {
            return Err(Error::validation(format!(
                "block ({i},{j}) override is {}x{}, expected {n}x{n}",
                block.nrows(),
                block.ncols()
            )));
        }
        self.matrix.view_mut(((i - 1) * n, (j - 1) * n), (n, n)).copy_from(block);
        Ok(())
    }
}

/// Builds the load matrix from per-port Fourier coefficients.
///
/// Block `(i, j)` is diagonal with entries `Γ_{j, i−j, d}`; segment
/// reflections are evaluated at the input harmonic frequency `f_j`.
pub fn assemble_load_matrix(
    plan: &ModulationPlan,
    blocks: &ScattererBlocks,
    grid: &FrequencyGrid,
) -> Result<PolyharmonicLoadMatrix> {
    let layout = blocks.layout();
    if plan.num_ports() != layout.loads {
        return Err(Error::validation(format!(
            "plan has {} port schedules, scatterer has {} load ports",
            plan.num_ports(),
            layout.loads
        )));
    }
    if grid.num_harmonics() != layout.harmonics {
        return Err(Error::validation(format!(
            "grid has {} harmonics, scatterer has {}",
            grid.num_harmonics(),
            layout.harmonics
        )));
    }
    if (plan.f_m - grid.f_m()).abs() > 1e-9 * grid.f_m() {
        return Err(Error::validation(format!(
            "plan modulation frequency {} Hz differs from grid {} Hz",
            plan.f_m,
            grid.f_m()
        )));
    }
    let (hh, n) = (layout.harmonics, layout.loads);
    let mut out = PolyharmonicLoadMatrix::zeros(hh, n);
    for (d, schedule) in plan.schedules().iter().enumerate() {
        for j in 1..=hh {
            let f_j = grid.frequency_of(j)?;
            let gammas = schedule
                .reflections(j, f_j, blocks.z_ref())
                .map_err(|e| annotate_port(e, d + 1, j))?;
            for i in 1..=hh {
                let k = i as i64 - j as i64;
                out.matrix[((i - 1) * n + d, (j - 1) * n + d)] = fourier_coefficient(schedule, &gammas, k);
            }
        }
    }
    Ok(out)
}

fn annotate_port(err: Error, port: usize, h: usize) -> Error {
    match err {
        Error::Validation(msg) => Error::Validation(format!("port {port}, harmonic {h}: {msg}")),
        other => other,
    }
}

/// Replaces the named 1-based blocks with dense `N×N` matrices.
pub fn apply_load_coupling(
    matrix: &PolyharmonicLoadMatrix,
    overrides: &BTreeMap<(usize, usize), CMatrix>,
) -> Result<PolyharmonicLoadMatrix> {
    let mut out = matrix.clone();
    for (&(i, j), block) in overrides {
        out.set_block(i, j, block)?;
    }
    Ok(out)
}

/// Block-diagonal composition of per-tone load matrices.
pub fn combine_multitone(matrices: &[PolyharmonicLoadMatrix]) -> Result<PolyharmonicLoadMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::validation("no load matrices to combine"))?;
    let n = first.loads;
    if let Some(bad) = matrices.iter().find(|m| m.loads != n) {
        return Err(Error::validation(format!(
            "load matrices disagree on port count ({} vs {n})",
            bad.loads
        )));
    }
    let total: usize = matrices.iter().map(|m| m.harmonics).sum();
    let mut out = PolyharmonicLoadMatrix::zeros(total, n);
    let mut at = 0;
    for m in matrices {
        let dim = m.matrix.nrows();
        out.matrix.view_mut((at, at), (dim, dim)).copy_from(&m.matrix);
        at += dim;
    }
    Ok(out)
}
