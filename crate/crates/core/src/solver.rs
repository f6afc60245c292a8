//! Composite system matrix, scattered power waves, spectra and bistatic
//! cross sections.

use num_complex::Complex64;

use crate::assembly::NetworkMatrices;
use crate::error::{Error, Result};
use crate::linalg::Factorized;
use crate::model::{
    BcsContext, CMatrix, CVector, Excitation, FrequencyGrid, Polarization, PortLayout, ScatterResult,
    ScattererBlocks,
};
use crate::modulation::{assemble_load_matrix, combine_multitone, ModulationPlan, PolyharmonicLoadMatrix};

/// Floor for cross sections expressed in dBm².
pub const DBM2_FLOOR: f64 = -300.0;

/// Factored form of `C_sys = C_ff + C_fd·C_L·(I − C_dd·C_L)⁻¹·C_df`.
///
/// Keeps `(I − C_dd·C_L)` as an LU factorization so excitations can be
/// applied without forming the full `2HM×2HM` matrix.
pub struct LoadedSystem {
    ff: CMatrix,
    fd_cl: CMatrix,
    df: CMatrix,
    inner: Factorized,
}

impl LoadedSystem {
    pub fn new(nets: &NetworkMatrices, cl: &CMatrix) -> Result<Self> {
        let (r, l) = (nets.ff.nrows(), nets.dd.nrows());
        let shapes_ok = nets.ff.shape() == (r, r)
            && nets.fd.shape() == (r, l)
            && nets.df.shape() == (l, r)
            && nets.dd.shape() == (l, l)
            && cl.shape() == (l, l);
        if !shapes_ok {
            return Err(Error::validation(format!(
                "inconsistent shapes: C_ff {:?}, C_fd {:?}, C_df {:?}, C_dd {:?}, C_L {:?}",
                nets.ff.shape(),
                nets.fd.shape(),
                nets.df.shape(),
                nets.dd.shape(),
                cl.shape()
            )));
        }
        let inner = CMatrix::identity(l, l) - &nets.dd * cl;
        let inner = Factorized::new(inner, "I - C_dd*C_L")?;
        Ok(LoadedSystem {
            ff: nets.ff.clone(),
            fd_cl: &nets.fd * cl,
            df: nets.df.clone(),
            inner,
        })
    }

    /// Reciprocal 1-norm condition number of `(I − C_dd·C_L)`.
    pub fn rcond(&self) -> f64 {
        self.inner.rcond()
    }

    pub fn dim(&self) -> usize {
        self.ff.nrows()
    }

    /// `C_sys·a`
    pub fn apply(&self, a: &CVector) -> CVector {
        let x = self.inner.solve_vector(&(&self.df * a));
        &self.ff * a + &self.fd_cl * x
    }

    /// The full composite matrix.
    pub fn matrix(&self) -> CMatrix {
        let x = self.inner.solve(&self.df);
        &self.ff + &self.fd_cl * x
    }
}

/// `C_sys` from its constituent matrices, via a direct solve.
pub fn system_matrix(ff: &CMatrix, fd: &CMatrix, df: &CMatrix, dd: &CMatrix, cl: &CMatrix) -> Result<CMatrix> {
    let nets = NetworkMatrices {
        ff: ff.clone(),
        fd: fd.clone(),
        df: df.clone(),
        dd: dd.clone(),
    };
    Ok(LoadedSystem::new(&nets, cl)?.matrix())
}

/// `b = C_sys·a` for a dense composite matrix.
pub fn scatter(c_sys: &CMatrix, excitation: &Excitation, layout: PortLayout, grid: FrequencyGrid) -> Result<ScatterResult> {
    let a = excitation.to_vector(&layout)?;
    if c_sys.shape() != (a.len(), a.len()) {
        return Err(Error::validation(format!(
            "system matrix is {}x{}, layout needs {n}x{n}",
            c_sys.nrows(),
            c_sys.ncols(),
            n = a.len()
        )));
    }
    Ok(ScatterResult {
        b: c_sys * a,
        layout,
        grid,
    })
}

/// A scatterer with its loads, ready to scatter excitations.
pub struct HarmonicSystem {
    layout: PortLayout,
    grid: FrequencyGrid,
    system: LoadedSystem,
}

impl HarmonicSystem {
    /// Assembles every network block and the load matrix, then factors the system.
    pub fn build(blocks: &ScattererBlocks, plan: &ModulationPlan, grid: &FrequencyGrid) -> Result<Self> {
        let cl = assemble_load_matrix(plan, blocks, grid)?;
        Self::with_load_matrix(blocks, &cl, grid)
    }

    /// Same as [`HarmonicSystem::build`] with a caller-supplied load matrix.
    pub fn with_load_matrix(blocks: &ScattererBlocks, cl: &PolyharmonicLoadMatrix, grid: &FrequencyGrid) -> Result<Self> {
        let layout = blocks.layout();
        if grid.num_harmonics() != layout.harmonics {
            return Err(Error::validation(format!(
                "grid has {} harmonics, scatterer has {}",
                grid.num_harmonics(),
                layout.harmonics
            )));
        }
        let nets = NetworkMatrices::assemble(blocks);
        Ok(HarmonicSystem {
            layout,
            grid: *grid,
            system: LoadedSystem::new(&nets, cl.matrix())?,
        })
    }

    pub fn layout(&self) -> PortLayout {
        self.layout
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn system(&self) -> &LoadedSystem {
        &self.system
    }

    pub fn matrix(&self) -> CMatrix {
        self.system.matrix()
    }

    pub fn scatter(&self, excitation: &Excitation) -> Result<ScatterResult> {
        let a = excitation.to_vector(&self.layout)?;
        Ok(ScatterResult {
            b: self.system.apply(&a),
            layout: self.layout,
            grid: self.grid,
        })
    }
}

/// One input tone of a multitone run.
pub struct Tone<'a> {
    pub blocks: &'a ScattererBlocks,
    pub plan: &'a ModulationPlan,
    pub grid: &'a FrequencyGrid,
    pub excitation: &'a Excitation,
}

/// Solves several tones as one enlarged block system and slices the results back per tone.
pub fn solve_multitone(tones: &[Tone<'_>]) -> Result<Vec<ScatterResult>> {
    if tones.is_empty() {
        return Err(Error::validation("no tones to solve"));
    }
    let mut nets = Vec::with_capacity(tones.len());
    let mut loads = Vec::with_capacity(tones.len());
    let mut inputs = Vec::new();
    for t in tones {
        nets.push(NetworkMatrices::assemble(t.blocks));
        loads.push(assemble_load_matrix(t.plan, t.blocks, t.grid)?);
        inputs.extend(t.excitation.to_vector(&t.blocks.layout())?.iter().copied());
    }
    let stacked = NetworkMatrices::stack(&nets);
    let cl = combine_multitone(&loads)?;
    let system = LoadedSystem::new(&stacked, cl.matrix())?;
    let b = system.apply(&CVector::from_vec(inputs));

    let mut out = Vec::with_capacity(tones.len());
    let mut at = 0;
    for t in tones {
        let layout = t.blocks.layout();
        let len = layout.radiation_subports();
        out.push(ScatterResult {
            b: b.rows(at, len).into_owned(),
            layout,
            grid: *t.grid,
        });
        at += len;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectrumRow {
    pub h: usize,
    pub offset: i64,
    pub f_hz: f64,
    pub b_phi: Complex64,
    pub b_theta: Complex64,
    /// `|b_φ|² + |b_θ|²` in watts.
    pub power_w: f64,
}

/// Output waves toward direction `rho` at every harmonic, ordered by `h`.
pub fn harmonic_spectrum(result: &ScatterResult, rho: usize) -> Result<Vec<SpectrumRow>> {
    (1..=result.layout.harmonics)
        .map(|h| {
            let b_phi = result.wave(h, Polarization::Phi, rho)?;
            let b_theta = result.wave(h, Polarization::Theta, rho)?;
            Ok(SpectrumRow {
                h,
                offset: result.grid.offset_of(h),
                f_hz: result.grid.frequency_of(h)?,
                b_phi,
                b_theta,
                power_w: b_phi.norm_sqr() + b_theta.norm_sqr(),
            })
        })
        .collect()
}

/// Bistatic cross section in m² and dBm².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossSection {
    pub m2: f64,
    pub dbm2: f64,
}

impl CrossSection {
    pub fn from_m2(m2: f64) -> Self {
        let dbm2 = if m2 > 0.0 { (10.0 * m2.log10()).max(DBM2_FLOOR) } else { DBM2_FLOOR };
        CrossSection { m2, dbm2 }
    }
}

/// `σ = 64π³ s_t² s_r² / (λ_h² G_ρ(f_h) G_τ(f_c)) · P_b / P_a`
///
/// `P_b` is the power scattered toward `rho` at harmonic `h`; `P_a` the power
/// incident from `tau` at harmonic `h_c`.
pub fn bistatic_cross_section(
    scattered_power: f64,
    incident_power: f64,
    wavelength: f64,
    s_t: f64,
    s_r: f64,
    gain_rx: f64,
    gain_tx: f64,
) -> Result<f64> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(incident_power > 0.0) {
        return Err(Error::domain("incident power is zero; cross section undefined"));
    }
    if !(gain_rx > 0.0 && gain_tx > 0.0) {
        return Err(Error::domain(format!(
            "antenna gains must be positive (rx {gain_rx}, tx {gain_tx})"
        )));
    }
    let geometry = 64.0 * std::f64::consts::PI.powi(3) * s_t.powi(2) * s_r.powi(2);
    Ok(geometry / (wavelength.powi(2) * gain_rx * gain_tx) * (scattered_power / incident_power))
}

/// Cross section for harmonic `h` toward `rho`, excited from `tau` at `h_c`.
pub fn bcs(
    result: &ScatterResult,
    excitation: &Excitation,
    ctx: &BcsContext,
    h: usize,
    rho: usize,
    tau: usize,
    h_c: usize,
) -> Result<CrossSection> {
    let incident = excitation.entry(h_c, tau).map(|e| e.power()).unwrap_or(0.0);
    let f_h = result.grid.frequency_of(h)?;
    let f_c = result.grid.frequency_of(h_c)?;
    let g_rx = ctx
        .gain_rx
        .gain(rho, f_h)
        .ok_or_else(|| Error::domain(format!("no receive gain for direction {rho} at {f_h} Hz")))?;
    let g_tx = ctx
        .gain_tx
        .gain(tau, f_c)
        .ok_or_else(|| Error::domain(format!("no transmit gain for direction {tau} at {f_c} Hz")))?;
    let sigma = bistatic_cross_section(
        result.power(h, rho)?,
        incident,
        result.grid.wavelength_of(h)?,
        ctx.s_t,
        ctx.s_r,
        g_rx,
        g_tx,
    )?;
    Ok(CrossSection::from_m2(sigma))
}

/// A probed output: direction `rho` at intermodulation order `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Probe {
    pub rho: usize,
    pub k: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub harmonics: usize,
    /// `|b|` per probe; `None` where the window does not reach the probe order.
    pub values: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub probes: Vec<Probe>,
    pub rows: Vec<ConvergenceRow>,
    /// Per probe, the smallest `H` from which every later change stays below
    /// tolerance, or `None` if no change confirms it.
    pub settled: Vec<Option<usize>>,
}

impl ConvergenceTable {
    /// Smallest `H` at which every probe has settled.
    pub fn settled_all(&self) -> Option<usize> {
        self.settled
            .iter()
            .try_fold(0usize, |acc, s| s.map(|h| acc.max(h)))
    }
}

/// Magnitudes of probed outputs for growing harmonic windows.
///
/// `build(H)` must run the full pipeline on a window of `H` harmonics with the
/// input tone at the middle harmonic.
pub fn convergence_check(
    build: impl Fn(usize) -> Result<ScatterResult>,
    h_list: &[usize],
    probes: &[Probe],
    tol: f64,
) -> Result<ConvergenceTable> {
    if h_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::validation("harmonic counts must be strictly increasing"));
    }
    if let Some(h) = h_list.iter().find(|h| *h % 2 == 0) {
        return Err(Error::validation(format!("harmonic count {h} is even; use odd sizes")));
    }
    let mut rows = Vec::with_capacity(h_list.len());
    for &hh in h_list {
        let result = build(hh)?;
        if result.layout.harmonics != hh {
            return Err(Error::validation(format!(
                "pipeline for H={hh} returned {} harmonics",
                result.layout.harmonics
            )));
        }
        let values = probes
            .iter()
            .map(|p| match result.grid.harmonic_at_offset(p.k) {
                Some(h) => result.power(h, p.rho).map(|pw| Some(pw.sqrt())),
                None => Ok(None),
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ConvergenceRow { harmonics: hh, values });
    }
    let settled = (0..probes.len())
        .map(|pi| {
            let series: Vec<Option<f64>> = rows.iter().map(|r| r.values[pi]).collect();
            // the last size alone has no successor to confirm it
            (0..series.len().saturating_sub(1))
                .find(|&i| {
                    series[i].is_some()
                        && series[i..].windows(2).all(|w| match (w[0], w[1]) {
                            (Some(a), Some(b)) => (b - a).abs() < tol,
                            _ => false,
                        })
                })
                .map(|i| rows[i].harmonics)
        })
        .collect();
    Ok(ConvergenceTable {
        probes: probes.to_vec(),
        rows,
        settled,
    })
}
