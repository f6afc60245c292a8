//! Regenerates the synthetic fixtures under `fixtures/`.
//!
//! The scatterer is a 3x3 grid of loaded monopoles observed in the azimuth
//! plane. Its submatrices come from a simple array-factor model, not from a
//! full-wave solver, and are reciprocal by construction (`S_df = S_fdᵀ`,
//! symmetric structural and coupling blocks).
//!
//!     cargo run -p tms-core --example make_fixtures [-- OUT_DIR]

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use tms_core::io::{write_bundle, Bundle};
use tms_core::model::{CMatrix, FrequencyGrid, HarmonicBlocks, PortLayout, ScattererBlocks, DEFAULT_Z_REF, SPEED_OF_LIGHT};

const F_IN: f64 = 2.4e9;
const F_M: f64 = 1e5;
/// Element spacing in free-space wavelengths at `F_IN`.
const SPACING: f64 = 0.35;
/// Scale of the mutual coupling between load ports.
const COUPLING: f64 = 1e-3;

const LABEL: &str = "synthetic 3x3 monopole array (array-factor model, not measured data)";

/// Diode port designations, one per load port.
const DIODES: [u32; 9] = [3, 6, 9, 12, 15, 18, 21, 24, 27];

/// Series R + L when forward biased, R + C when off, at 2.4 GHz.
const Z_ON: [f64; 2] = [2.0, 10.6];
const Z_OFF: [f64; 2] = [2.0, -331.6];

/// File stem, regime name and (r'_d, R_d^on) per diode.
type Regime = (&'static str, &'static str, [(f64, f64); 9]);

const REGIMES: [Regime; 5] = [
    ("o", "O", [(0.0, 0.5), (0.1, 0.5), (0.2, 0.5), (0.3, 0.5), (0.4, 0.5), (0.5, 0.5), (0.6, 0.5), (0.7, 0.5), (0.8, 0.5)]),
    ("ii", "II", [(0.23, 0.22), (0.43, 0.2), (0.32, 0.82), (0.69, 0.48), (0.51, 0.85), (0.43, 0.5), (0.55, 0.17), (0.64, 0.17), (0.56, 0.19)]),
    ("iii", "III", [(0.6, 0.7), (0.32, 0.28), (0.16, 0.73), (0.67, 0.35), (0.44, 0.83), (0.3, 0.31), (0.49, 0.24), (0.73, 0.22), (0.56, 0.71)]),
    ("iv", "IV", [(0.38, 0.54), (0.29, 0.54), (0.11, 0.62), (0.71, 0.41), (0.57, 0.43), (0.31, 0.5), (0.56, 0.42), (0.51, 0.53), (0.31, 0.48)]),
    ("v", "V", [(0.71, 0.73), (0.41, 0.3), (0.13, 0.74), (0.07, 0.19), (0.27, 0.31), (0.41, 0.29), (0.29, 0.25), (0.97, 0.28), (0.72, 0.72)]),
];

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn polar(r: f64, phase: f64) -> Complex64 {
    Complex64::from_polar(r, phase)
}

/// Element positions in metres, row-major, centred on the origin.
fn positions(wavelength: f64) -> Vec<(f64, f64)> {
    let d = SPACING * wavelength;
    (0..3)
        .flat_map(|row| (0..3).map(move |col| ((col as f64 - 1.0) * d, (1.0 - row as f64) * d)))
        .collect()
}

/// Azimuths of `m` equally spaced observation directions.
fn azimuths(m: usize) -> Vec<f64> {
    (0..m).map(|i| 2.0 * PI * i as f64 / m as f64).collect()
}

fn array_blocks(m: usize, coupling: f64) -> HarmonicBlocks {
    let wavelength = SPEED_OF_LIGHT / F_IN;
    let k0 = 2.0 * PI / wavelength;
    let pos = positions(wavelength);
    let phi = azimuths(m);
    let n = pos.len();

    // steering phase of element j seen from direction i
    let steer = |i: usize, j: usize| {
        let (x, y) = pos[j];
        polar(1.0, k0 * (x * phi[i].cos() + y * phi[i].sin()))
    };
    // monopoles radiate mostly θ; a small φ part from the feed asymmetry
    let fd_t = CMatrix::from_fn(m, n, |i, j| polar(0.25, 0.3) * steer(i, j));
    let fd_p = CMatrix::from_fn(m, n, |i, j| polar(0.04, -0.7) * steer(i, j) * (phi[i] - 0.2 * j as f64).cos());

    let pair = |i: usize, k: usize| (0..n).map(|j| steer(i, j) * steer(k, j)).sum::<Complex64>() / n as f64;
    let ff_tt = CMatrix::from_fn(m, m, |i, k| polar(0.05, 1.1) * pair(i, k));
    let ff_pp = CMatrix::from_fn(m, m, |i, k| polar(0.01, -0.4) * pair(i, k));
    let cross = CMatrix::from_fn(m, m, |i, k| polar(0.005, 0.2) * pair(i, k) * phi[i].cos());

    let dd = CMatrix::from_fn(n, n, |a, b| {
        if a == b {
            return c(0.0, 0.0);
        }
        let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
        let kd = k0 * dx.hypot(dy);
        polar(coupling / kd, -kd)
    });

    HarmonicBlocks {
        ff_pp,
        ff_tp: cross.transpose(),
        ff_pt: cross,
        ff_tt,
        df_p: fd_p.transpose(),
        df_t: fd_t.transpose(),
        fd_p,
        fd_t,
        dd,
    }
}

fn flat_bundle(m: usize, harmonics: usize, coupling: f64, label: &str) -> Bundle {
    let layout = PortLayout::new(m, 9, harmonics).unwrap();
    let grid = FrequencyGrid::centered(F_IN, F_M, harmonics).unwrap();
    let blocks = ScattererBlocks::frequency_flat(layout, DEFAULT_Z_REF, array_blocks(m, coupling)).unwrap();
    Bundle {
        blocks,
        grid,
        label: Some(label.to_string()),
        flat: true,
    }
}

/// Same array with radiation paths rotated in phase and scaled per harmonic,
/// far beyond any physical dispersion over a few f_m.
fn dispersive_bundle() -> Bundle {
    let harmonics = 11;
    let center = 6;
    let base = array_blocks(4, COUPLING);
    let blocks = (1..=harmonics)
        .map(|h| {
            let k = h as f64 - center as f64;
            let rot = polar(1.0 + 0.04 * k, 0.35 * k);
            let mut b = base.clone();
            b.fd_p *= rot;
            b.fd_t *= rot;
            b.df_p *= rot;
            b.df_t *= rot;
            b.ff_pp *= polar(1.0, -0.2 * k);
            b.ff_tt *= polar(1.0, -0.2 * k);
            b
        })
        .collect();
    let layout = PortLayout::new(4, 9, harmonics).unwrap();
    Bundle {
        blocks: ScattererBlocks::new(layout, DEFAULT_Z_REF, blocks).unwrap(),
        grid: FrequencyGrid::new(F_IN, F_M, harmonics, center).unwrap(),
        label: Some(format!("{LABEL}; deliberately dispersive")),
        flat: false,
    }
}

/// One direction, one load, no coupling. The k = +1 line sits at a 0.125 m
/// wavelength and a ±1 square wave scatters 1e-6 of the incident power into it.
fn single_port_bundle() -> Bundle {
    let layout = PortLayout::new(1, 1, 3).unwrap();
    let grid = FrequencyGrid::new(SPEED_OF_LIGHT / 0.125 - F_M, F_M, 3, 2).unwrap();
    let s = (PI / 2.0 * 1e-3).sqrt();
    let block = HarmonicBlocks {
        fd_p: CMatrix::from_element(1, 1, c(s, 0.0)),
        df_p: CMatrix::from_element(1, 1, c(s, 0.0)),
        ..HarmonicBlocks::zeros(1, 1)
    };
    Bundle {
        blocks: ScattererBlocks::frequency_flat(layout, DEFAULT_Z_REF, block).unwrap(),
        grid,
        label: Some("analytic single-port scatterer".into()),
        flat: true,
    }
}

fn pair(v: [f64; 2]) -> String {
    format!("[{:?}, {:?}]", v[0], v[1])
}

fn diode_plan(id: &str, timing: &[(f64, f64); 9]) -> String {
    let mut out = format!(
        "# Regime {id}: delays r_on and on-state duties per diode port.\n\
         # Diode states are synthetic series R-L / R-C values at 2.4 GHz.\n\
         format_version = 1\nf_m_hz = {F_M:?}\nname = \"{id}\"\n"
    );
    for (i, (r_on, duty_on)) in timing.iter().enumerate() {
        let _ = write!(
            out,
            "\n[[port]]\nindex = {}\nlabel = \"d{}\"\nr_on = {r_on:?}\nduty_on = {duty_on:?}\nz_on = {}\nz_off = {}\n",
            i + 1,
            DIODES[i],
            pair(Z_ON),
            pair(Z_OFF)
        );
    }
    out
}

fn ideal_plan(name: &str, timing: &[(f64, f64)]) -> String {
    let mut out = format!(
        "# Ideal switches: gamma = +1 while on, -1 while off.\nformat_version = 1\nf_m_hz = {F_M:?}\nname = \"{name}\"\n"
    );
    for (i, (r_on, duty_on)) in timing.iter().enumerate() {
        let _ = write!(
            out,
            "\n[[port]]\nindex = {}\nr_on = {r_on:?}\nduty_on = {duty_on:?}\ngamma_on = [1.0, 0.0]\ngamma_off = [-1.0, 0.0]\n",
            i + 1
        );
    }
    out
}

fn static_plan(name: &str, z: [f64; 2], ports: usize) -> String {
    let mut out = format!("format_version = 1\nf_m_hz = {F_M:?}\nname = \"{name}\"\n");
    for i in 1..=ports {
        let _ = write!(out, "\n[[port]]\nindex = {i}\n[[port.segment]]\nduty = 1.0\nz_ohms = {}\n", pair(z));
    }
    out
}

fn context(s: f64) -> String {
    format!(
        "# Isotropic measurement antennas.\nformat_version = 1\ns_t_m = {s:?}\ns_r_m = {s:?}\n\n[gain_tx]\nconstant = 1.0\n\n[gain_rx]\nconstant = 1.0\n"
    )
}

fn write(path: &Path, text: &str) {
    fs::write(path, text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    println!("wrote {}", path.display());
}

fn main() {
    let out: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    let plans = out.join("plans");
    fs::create_dir_all(&plans).unwrap();

    let bundles = [
        ("regime_o_flat.json", flat_bundle(12, 25, COUPLING, LABEL)),
        ("regime_o_flat_uncoupled.json", flat_bundle(12, 25, 0.0, &format!("{LABEL}; load coupling removed"))),
        ("dispersive.json", dispersive_bundle()),
        ("single_port.json", single_port_bundle()),
    ];
    for (name, b) in &bundles {
        let path = out.join(name);
        write_bundle(b, &path).unwrap();
        println!("wrote {}", path.display());
    }

    for (file, id, timing) in &REGIMES {
        write(&plans.join(format!("regime_{file}.toml")), &diode_plan(id, timing));
    }
    write(&plans.join("regime_o_ideal.toml"), &ideal_plan("O ideal", &REGIMES[0].2));
    write(&plans.join("square_single.toml"), &ideal_plan("square wave", &[(0.0, 0.5)]));
    write(&plans.join("static_matched.toml"), &static_plan("matched", [50.0, 0.0], 9));
    write(&plans.join("static_off.toml"), &static_plan("all diodes off", Z_OFF, 9));
    write(&out.join("ctx_chamber.toml"), &context(1.8));
    write(&out.join("ctx_unit.toml"), &context(1.0));
}
