//! Shared domain types and index conventions.
//!
//! Harmonic, direction and load-port indices are 1-based at the API surface.
//! Flat indices into assembled vectors and matrices are 0-based.
//!
//! Radiation subports are stacked per harmonic: the `φ` block of length `M`
//! followed by the `θ` block of length `M`, for harmonics `1..=H` in order.
//! Load subports are stacked per harmonic in blocks of length `N`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Default reference impedance, 50 Ω real.
pub const DEFAULT_Z_REF: Complex64 = Complex64::new(50.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarization {
    Phi,
    Theta,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::Phi, Polarization::Theta];

    fn offset(self) -> usize {
        match self {
            Polarization::Phi => 0,
            Polarization::Theta => 1,
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarization::Phi => f.write_str("phi"),
            Polarization::Theta => f.write_str("theta"),
        }
    }
}

impl std::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "phi" | "p" | "φ" => Ok(Polarization::Phi),
            "theta" | "t" | "θ" => Ok(Polarization::Theta),
            other => Err(Error::validation(format!(
                "unknown polarization '{other}', expected phi or theta"
            ))),
        }
    }
}

fn check_index(axis: &'static str, value: usize, max: usize) -> Result<()> {
    if value == 0 || value > max {
        Err(Error::Index { axis, value, max })
    } else {
        Ok(())
    }
}

/// Input tone, modulation clock and harmonic window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyGrid {
    f_in: f64,
    f_m: f64,
    num_harmonics: usize,
    center: usize,
}

impl FrequencyGrid {
    pub fn new(f_in: f64, f_m: f64, num_harmonics: usize, center: usize) -> Result<Self> {
        if !(f_in.is_finite() && f_in > 0.0) {
            return Err(Error::domain(format!("input frequency must be positive, got {f_in}")));
        }
        if !(f_m.is_finite() && f_m > 0.0) {
            return Err(Error::domain(format!(
                "modulation frequency must be positive, got {f_m}"
            )));
        }
        if f_m >= f_in {
            return Err(Error::domain(format!(
                "modulation frequency {f_m} Hz must be below the input frequency {f_in} Hz"
            )));
        }
        if num_harmonics == 0 {
            return Err(Error::domain("harmonic count must be positive"));
        }
        check_index("center harmonic", center, num_harmonics)?;
        let grid = FrequencyGrid {
            f_in,
            f_m,
            num_harmonics,
            center,
        };
        let lowest = grid.raw_frequency(1);
        if lowest <= 0.0 {
            return Err(Error::domain(format!(
                "harmonic 1 maps to nonpositive frequency {lowest} Hz"
            )));
        }
        Ok(grid)
    }

    /// Grid with the input tone at the middle harmonic `(H + 1) / 2`.
    pub fn centered(f_in: f64, f_m: f64, num_harmonics: usize) -> Result<Self> {
        Self::new(f_in, f_m, num_harmonics, num_harmonics.div_ceil(2).max(1))
    }

    pub fn f_in(&self) -> f64 {
        self.f_in
    }

    pub fn f_m(&self) -> f64 {
        self.f_m
    }

    pub fn num_harmonics(&self) -> usize {
        self.num_harmonics
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn modulation_period(&self) -> f64 {
        1.0 / self.f_m
    }

    fn raw_frequency(&self, h: usize) -> f64 {
        self.f_in + (h as f64 - self.center as f64) * self.f_m
    }

    pub fn frequency_of(&self, h: usize) -> Result<f64> {
        check_index("harmonic", h, self.num_harmonics)?;
        let f = self.raw_frequency(h);
        if f <= 0.0 {
            return Err(Error::domain(format!("harmonic {h} maps to nonpositive frequency {f} Hz")));
        }
        Ok(f)
    }

    pub fn wavelength_of(&self, h: usize) -> Result<f64> {
        Ok(SPEED_OF_LIGHT / self.frequency_of(h)?)
    }

    /// Intermodulation order of harmonic `h` relative to the input tone.
    pub fn offset_of(&self, h: usize) -> i64 {
        h as i64 - self.center as i64
    }

    /// Harmonic index holding intermodulation order `k`, if inside the window.
    pub fn harmonic_at_offset(&self, k: i64) -> Option<usize> {
        let h = self.center as i64 + k;
        (h >= 1 && h <= self.num_harmonics as i64).then_some(h as usize)
    }

    /// Non-`None` when the input tone is not within one harmonic of the window middle.
    pub fn center_warning(&self) -> Option<String> {
        let mid = (self.num_harmonics as f64 + 1.0) / 2.0;
        if (self.center as f64 - mid).abs() > 1.0 {
            Some(format!(
                "central harmonic {} is far from the middle ({mid}) of 1..={}; truncation error will be lopsided",
                self.center, self.num_harmonics
            ))
        } else {
            None
        }
    }
}

/// Counts of directions, load ports and harmonics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PortLayout {
    pub directions: usize,
    pub loads: usize,
    pub harmonics: usize,
}

impl PortLayout {
    pub fn new(directions: usize, loads: usize, harmonics: usize) -> Result<Self> {
        if directions == 0 || loads == 0 || harmonics == 0 {
            return Err(Error::validation(format!(
                "layout counts must be positive (M={directions}, N={loads}, H={harmonics})"
            )));
        }
        Ok(PortLayout {
            directions,
            loads,
            harmonics,
        })
    }

    /// `2·H·M`
    pub fn radiation_subports(&self) -> usize {
        2 * self.harmonics * self.directions
    }

    /// `H·N`
    pub fn load_subports(&self) -> usize {
        self.harmonics * self.loads
    }

    pub fn radiation_index(&self, h: usize, pol: Polarization, m: usize) -> Result<usize> {
        check_index("harmonic", h, self.harmonics)?;
        check_index("direction", m, self.directions)?;
        Ok((h - 1) * 2 * self.directions + pol.offset() * self.directions + (m - 1))
    }

    pub fn radiation_position(&self, flat: usize) -> Result<(usize, Polarization, usize)> {
        if flat >= self.radiation_subports() {
            return Err(Error::Index {
                axis: "radiation subport",
                value: flat,
                max: self.radiation_subports().saturating_sub(1),
            });
        }
        let per_h = 2 * self.directions;
        let h = flat / per_h + 1;
        let rem = flat % per_h;
        let pol = if rem < self.directions {
            Polarization::Phi
        } else {
            Polarization::Theta
        };
        Ok((h, pol, rem % self.directions + 1))
    }

    pub fn load_index(&self, h: usize, n: usize) -> Result<usize> {
        check_index("harmonic", h, self.harmonics)?;
        check_index("load port", n, self.loads)?;
        Ok((h - 1) * self.loads + (n - 1))
    }

    pub fn load_position(&self, flat: usize) -> Result<(usize, usize)> {
        if flat >= self.load_subports() {
            return Err(Error::Index {
                axis: "load subport",
                value: flat,
                max: self.load_subports().saturating_sub(1),
            });
        }
        Ok((flat / self.loads + 1, flat % self.loads + 1))
    }

    pub fn with_harmonics(&self, harmonics: usize) -> Result<Self> {
        Self::new(self.directions, self.loads, harmonics)
    }
}

/// Scattering submatrices of one harmonic.
///
/// `ff_tp` maps θ inputs to φ outputs (`S_ff^{θ→φ}`), `ff_pt` maps φ to θ.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicBlocks {
    pub ff_pp: CMatrix,
    pub ff_tp: CMatrix,
    pub ff_pt: CMatrix,
    pub ff_tt: CMatrix,
    /// `M×N`
    pub fd_p: CMatrix,
    pub fd_t: CMatrix,
    /// `N×M`
    pub df_p: CMatrix,
    pub df_t: CMatrix,
    /// `N×N`
    pub dd: CMatrix,
}

impl HarmonicBlocks {
    pub fn zeros(directions: usize, loads: usize) -> Self {
        let (m, n) = (directions, loads);
        HarmonicBlocks {
            ff_pp: CMatrix::zeros(m, m),
            ff_tp: CMatrix::zeros(m, m),
            ff_pt: CMatrix::zeros(m, m),
            ff_tt: CMatrix::zeros(m, m),
            fd_p: CMatrix::zeros(m, n),
            fd_t: CMatrix::zeros(m, n),
            df_p: CMatrix::zeros(n, m),
            df_t: CMatrix::zeros(n, m),
            dd: CMatrix::zeros(n, n),
        }
    }

    pub(crate) fn named(&self) -> [(&'static str, &CMatrix); 9] {
        [
            ("s_ff.pp", &self.ff_pp),
            ("s_ff.tp", &self.ff_tp),
            ("s_ff.pt", &self.ff_pt),
            ("s_ff.tt", &self.ff_tt),
            ("s_fd.p", &self.fd_p),
            ("s_fd.t", &self.fd_t),
            ("s_df.p", &self.df_p),
            ("s_df.t", &self.df_t),
            ("s_dd", &self.dd),
        ]
    }

    /// Checks shapes against `M` directions and `N` loads, and finiteness.
    pub fn validate(&self, directions: usize, loads: usize) -> Result<()> {
        let (m, n) = (directions, loads);
        let expected = [(m, m), (m, m), (m, m), (m, m), (m, n), (m, n), (n, m), (n, m), (n, n)];
        for ((name, mat), (rows, cols)) in self.named().into_iter().zip(expected) {
            if mat.shape() != (rows, cols) {
                return Err(Error::validation(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    mat.nrows(),
                    mat.ncols()
                )));
            }
            if mat.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::validation(format!("{name} has non-finite entries")));
            }
        }
        Ok(())
    }

    /// Unified `2M×2M` structural block `[[φ→φ, θ→φ], [φ→θ, θ→θ]]`.
    pub fn structural(&self) -> CMatrix {
        let m = self.ff_pp.nrows();
        let mut out = CMatrix::zeros(2 * m, 2 * m);
        out.view_mut((0, 0), (m, m)).copy_from(&self.ff_pp);
        out.view_mut((0, m), (m, m)).copy_from(&self.ff_tp);
        out.view_mut((m, 0), (m, m)).copy_from(&self.ff_pt);
        out.view_mut((m, m), (m, m)).copy_from(&self.ff_tt);
        out
    }

    /// `2M×N` radiation-from-load block `[fd_p; fd_t]`.
    pub fn radiation_from_load(&self) -> CMatrix {
        let (m, n) = self.fd_p.shape();
        let mut out = CMatrix::zeros(2 * m, n);
        out.view_mut((0, 0), (m, n)).copy_from(&self.fd_p);
        out.view_mut((m, 0), (m, n)).copy_from(&self.fd_t);
        out
    }

    /// `N×2M` load-from-radiation block `[df_p df_t]`.
    pub fn load_from_radiation(&self) -> CMatrix {
        let (n, m) = self.df_p.shape();
        let mut out = CMatrix::zeros(n, 2 * m);
        out.view_mut((0, 0), (n, m)).copy_from(&self.df_p);
        out.view_mut((0, m), (n, m)).copy_from(&self.df_t);
        out
    }
}

/// Per-harmonic scattering data of a multiport scatterer, normalized to one `Z_ref`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScattererBlocks {
    layout: PortLayout,
    z_ref: Complex64,
    harmonics: Vec<HarmonicBlocks>,
}

impl ScattererBlocks {
    pub fn new(layout: PortLayout, z_ref: Complex64, harmonics: Vec<HarmonicBlocks>) -> Result<Self> {
        if harmonics.len() != layout.harmonics {
            return Err(Error::validation(format!(
                "expected {} harmonic blocks, got {}",
                layout.harmonics,
                harmonics.len()
            )));
        }
        if !(z_ref.re.is_finite() && z_ref.im.is_finite()) {
            return Err(Error::validation("reference impedance must be finite"));
        }
        for (i, hb) in harmonics.iter().enumerate() {
            hb.validate(layout.directions, layout.loads)
                .map_err(|e| Error::validation(format!("harmonic {}: {e}", i + 1)))?;
        }
        Ok(ScattererBlocks {
            layout,
            z_ref,
            harmonics,
        })
    }

    /// Broadcasts a single harmonic block to every harmonic of `layout`.
    pub fn frequency_flat(layout: PortLayout, z_ref: Complex64, block: HarmonicBlocks) -> Result<Self> {
        let harmonics = vec![block; layout.harmonics];
        Self::new(layout, z_ref, harmonics)
    }

    pub fn layout(&self) -> PortLayout {
        self.layout
    }

    pub fn z_ref(&self) -> Complex64 {
        self.z_ref
    }

    pub fn harmonic(&self, h: usize) -> Result<&HarmonicBlocks> {
        check_index("harmonic", h, self.layout.harmonics)?;
        Ok(&self.harmonics[h - 1])
    }

    pub fn harmonics(&self) -> &[HarmonicBlocks] {
        &self.harmonics
    }

    /// True when every harmonic carries bit-identical submatrices.
    pub fn is_frequency_flat(&self) -> bool {
        self.harmonics.windows(2).all(|w| w[0] == w[1])
    }

    /// Same scatterer with every `S_dd` zeroed.
    pub fn without_load_coupling(&self) -> Self {
        let mut out = self.clone();
        for hb in &mut out.harmonics {
            hb.dd.fill(Complex64::new(0.0, 0.0));
        }
        out
    }

    /// Restricts to a window of `count` harmonics starting at `first`.
    pub fn window(&self, first: usize, count: usize) -> Result<Self> {
        if count == 0 || first == 0 || first + count - 1 > self.layout.harmonics {
            return Err(Error::validation(format!(
                "harmonic window {first}..{} outside 1..={}",
                first + count.saturating_sub(1),
                self.layout.harmonics
            )));
        }
        let layout = self.layout.with_harmonics(count)?;
        Self::new(
            layout,
            self.z_ref,
            self.harmonics[first - 1..first - 1 + count].to_vec(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcitationEntry {
    pub harmonic: usize,
    pub direction: usize,
    pub a_phi: Complex64,
    pub a_theta: Complex64,
}

impl ExcitationEntry {
    pub fn power(&self) -> f64 {
        self.a_phi.norm_sqr() + self.a_theta.norm_sqr()
    }
}

/// Incident power waves (√W) at selected (harmonic, direction) pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct Excitation {
    entries: Vec<ExcitationEntry>,
}

impl Excitation {
    pub fn new(entries: Vec<ExcitationEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if entries[..i]
                .iter()
                .any(|o| o.harmonic == e.harmonic && o.direction == e.direction)
            {
                return Err(Error::validation(format!(
                    "excitation repeats harmonic {} direction {}",
                    e.harmonic, e.direction
                )));
            }
        }
        if entries.iter().all(|e| e.power() == 0.0) {
            return Err(Error::validation("excitation has no nonzero amplitude"));
        }
        Ok(Excitation { entries })
    }

    /// One tone at one direction and polarization.
    pub fn single(harmonic: usize, direction: usize, pol: Polarization, amplitude: Complex64) -> Result<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let (a_phi, a_theta) = match pol {
            Polarization::Phi => (amplitude, zero),
            Polarization::Theta => (zero, amplitude),
        };
        Self::new(vec![ExcitationEntry {
            harmonic,
            direction,
            a_phi,
            a_theta,
        }])
    }

    pub fn entries(&self) -> &[ExcitationEntry] {
        &self.entries
    }

    pub fn entry(&self, harmonic: usize, direction: usize) -> Option<&ExcitationEntry> {
        self.entries
            .iter()
            .find(|e| e.harmonic == harmonic && e.direction == direction)
    }

    /// Scatters the entries into the flat `2HM` input vector.
    pub fn to_vector(&self, layout: &PortLayout) -> Result<CVector> {
        let mut a = CVector::zeros(layout.radiation_subports());
        for e in &self.entries {
            a[layout.radiation_index(e.harmonic, Polarization::Phi, e.direction)?] = e.a_phi;
            a[layout.radiation_index(e.harmonic, Polarization::Theta, e.direction)?] = e.a_theta;
        }
        Ok(a)
    }
}

/// Output power waves `b` of a solved system.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatterResult {
    pub b: CVector,
    pub layout: PortLayout,
    pub grid: FrequencyGrid,
}

impl ScatterResult {
    pub fn wave(&self, h: usize, pol: Polarization, m: usize) -> Result<Complex64> {
        Ok(self.b[self.layout.radiation_index(h, pol, m)?])
    }

    /// `|b_φ|² + |b_θ|²` at harmonic `h`, direction `m`.
    pub fn power(&self, h: usize, m: usize) -> Result<f64> {
        Ok(self.wave(h, Polarization::Phi, m)?.norm_sqr() + self.wave(h, Polarization::Theta, m)?.norm_sqr())
    }

    /// The `2M` output block at harmonic `h`.
    pub fn harmonic_block(&self, h: usize) -> Result<CVector> {
        check_index("harmonic", h, self.layout.harmonics)?;
        let len = 2 * self.layout.directions;
        Ok(self.b.rows((h - 1) * len, len).into_owned())
    }
}

/// Realized gain of a measurement antenna, queried by direction and frequency.
pub trait GainPattern: Send + Sync {
    /// Linear realized gain, or `None` when the pattern has no value there.
    fn gain(&self, direction: usize, f_hz: f64) -> Option<f64>;
}

impl<F> GainPattern for F
where
    F: Fn(usize, f64) -> Option<f64> + Send + Sync,
{
    fn gain(&self, direction: usize, f_hz: f64) -> Option<f64> {
        self(direction, f_hz)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantGain(pub f64);

impl GainPattern for ConstantGain {
    fn gain(&self, _direction: usize, _f_hz: f64) -> Option<f64> {
        Some(self.0)
    }
}

/// Gains tabulated at exact (direction, frequency) points.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GainTable {
    points: Vec<(usize, f64, f64)>,
}

impl GainTable {
    pub fn new(points: Vec<(usize, f64, f64)>) -> Self {
        GainTable { points }
    }
}

impl GainPattern for GainTable {
    fn gain(&self, direction: usize, f_hz: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|(d, f, _)| *d == direction && (f - f_hz).abs() <= 1e-12 * f_hz.abs())
            .map(|p| p.2)
    }
}

/// Link geometry and antenna gains for bistatic cross-section extraction.
#[derive(Clone)]
pub struct BcsContext {
    pub s_t: f64,
    pub s_r: f64,
    pub gain_tx: Arc<dyn GainPattern>,
    pub gain_rx: Arc<dyn GainPattern>,
}

impl BcsContext {
    pub fn new(s_t: f64, s_r: f64, gain_tx: Arc<dyn GainPattern>, gain_rx: Arc<dyn GainPattern>) -> Result<Self> {
        if !(s_t.is_finite() && s_t > 0.0 && s_r.is_finite() && s_r > 0.0) {
            return Err(Error::domain(format!(
                "distances must be positive, got s_t={s_t}, s_r={s_r}"
            )));
        }
        Ok(BcsContext {
            s_t,
            s_r,
            gain_tx,
            gain_rx,
        })
    }

    /// Unity gains at the given distances.
    pub fn isotropic(s_t: f64, s_r: f64) -> Result<Self> {
        Self::new(s_t, s_r, Arc::new(ConstantGain(1.0)), Arc::new(ConstantGain(1.0)))
    }
}

impl fmt::Debug for BcsContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BcsContext")
            .field("s_t", &self.s_t)
            .field("s_r", &self.s_r)
            .finish_non_exhaustive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(m: usize, n: usize, h: usize) -> PortLayout {
        PortLayout::new(m, n, h).unwrap()
    }

    #[test]
    fn radiation_index_examples() {
        let l = layout(3, 1, 2);
        assert_eq!(l.radiation_index(1, Polarization::Phi, 1).unwrap(), 0);
        assert_eq!(l.radiation_index(1, Polarization::Theta, 2).unwrap(), 4);
        assert_eq!(l.radiation_index(2, Polarization::Phi, 1).unwrap(), 6);
    }

    #[test]
    fn radiation_index_names_offending_axis() {
        let l = layout(3, 1, 2);
        match l.radiation_index(3, Polarization::Phi, 1) {
            Err(Error::Index { axis, .. }) => assert_eq!(axis, "harmonic"),
            other => panic!("unexpected {other:?}"),
        }
        match l.radiation_index(1, Polarization::Phi, 4) {
            Err(Error::Index { axis, .. }) => assert_eq!(axis, "direction"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(l.radiation_index(0, Polarization::Theta, 1).is_err());
    }

    #[test]
    fn load_index_examples() {
        let l = layout(1, 9, 3);
        assert_eq!(l.load_index(1, 1).unwrap(), 0);
        assert_eq!(l.load_index(1, 9).unwrap(), 8);
        assert_eq!(l.load_index(3, 2).unwrap(), 19);
        assert!(matches!(l.load_index(1, 10), Err(Error::Index { axis: "load port", .. })));
    }

    #[test]
    fn index_maps_are_bijections() {
        let l = layout(4, 3, 5);
        let mut seen = vec![false; l.radiation_subports()];
        for h in 1..=5 {
            for pol in Polarization::BOTH {
                for m in 1..=4 {
                    let i = l.radiation_index(h, pol, m).unwrap();
                    assert!(!seen[i]);
                    seen[i] = true;
                    assert_eq!(l.radiation_position(i).unwrap(), (h, pol, m));
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        for flat in 0..l.load_subports() {
            let (h, n) = l.load_position(flat).unwrap();
            assert_eq!(l.load_index(h, n).unwrap(), flat);
        }
    }

    #[test]
    fn frequency_of_examples() {
        let g = FrequencyGrid::new(2.4e9, 100e3, 25, 13).unwrap();
        assert_eq!(g.frequency_of(13).unwrap(), 2.4e9);
        assert!((g.frequency_of(12).unwrap() - 2.3999e9).abs() < 1e-3);
        assert!((g.frequency_of(25).unwrap() - 2.4012e9).abs() < 1e-3);
        assert!(g.frequency_of(26).is_err());
        assert!(g.center_warning().is_none());
    }

    #[test]
    fn frequency_of_is_affine_with_modulation_slope() {
        let g = FrequencyGrid::new(1.0e9, 12_345.0, 31, 16).unwrap();
        for h in 1..31 {
            let step = g.frequency_of(h + 1).unwrap() - g.frequency_of(h).unwrap();
            assert!((step - 12_345.0).abs() < 1e-6);
        }
    }

    #[test]
    fn grid_rejects_bad_inputs() {
        assert!(FrequencyGrid::new(1e9, 2e9, 5, 3).is_err());
        assert!(FrequencyGrid::new(1e9, 0.0, 5, 3).is_err());
        assert!(FrequencyGrid::new(1e9, 1e5, 5, 6).is_err());
        assert!(FrequencyGrid::new(1e9, 1e5, 0, 1).is_err());
        // harmonic 1 would sit below zero frequency
        assert!(FrequencyGrid::new(1e6, 4e5, 9, 5).is_err());
    }

    #[test]
    fn off_center_grid_warns() {
        let g = FrequencyGrid::new(1e9, 1e5, 25, 3).unwrap();
        assert!(g.center_warning().is_some());
        assert_eq!(g.harmonic_at_offset(-2), Some(1));
        assert_eq!(g.harmonic_at_offset(-3), None);
    }

    #[test]
    fn blocks_reject_dimension_mismatch() {
        let l = layout(2, 3, 2);
        let good = HarmonicBlocks::zeros(2, 3);
        let mut bad = good.clone();
        bad.fd_t = CMatrix::zeros(3, 2);
        let err = ScattererBlocks::new(l, DEFAULT_Z_REF, vec![good.clone(), bad]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("harmonic 2") && msg.contains("s_fd.t"), "{msg}");
        assert!(ScattererBlocks::new(l, DEFAULT_Z_REF, vec![good]).is_err());
    }

    #[test]
    fn excitation_validation() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let e = ExcitationEntry {
            harmonic: 1,
            direction: 1,
            a_phi: one,
            a_theta: zero,
        };
        assert!(Excitation::new(vec![e, e]).is_err());
        assert!(Excitation::new(vec![ExcitationEntry { a_phi: zero, ..e }]).is_err());
        let ex = Excitation::new(vec![e]).unwrap();
        let a = ex.to_vector(&layout(2, 1, 1)).unwrap();
        assert_eq!(a[0], one);
        assert_eq!(a.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }
}
