//! Scatterer bundle: per-harmonic submatrices plus layout and grid, as JSON.
//!
//! ```json
//! {"format_version": 1, "label": "...",
//!  "layout": {"M": 12, "N": 9, "H": 25, "h_c": 13},
//!  "grid": {"f_in_hz": 2.4e9, "f_m_hz": 1e5},
//!  "z_ref": {"re": 50.0, "im": 0.0},
//!  "flat": true,
//!  "harmonics": [{"h": 1,
//!                 "s_ff": {"pp": M×M, "tp": M×M, "pt": M×M, "tt": M×M},
//!                 "s_fd": {"p": M×N, "t": M×N},
//!                 "s_df": {"p": N×M, "t": N×M},
//!                 "s_dd": N×N}]}
//! ```
//!
//! Matrices are row-major nested arrays of `[re, im]` pairs. `tp` maps θ
//! incidence to φ scattering, `pt` the reverse. A flat bundle gives one
//! harmonics entry that is broadcast to every harmonic.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{check_version, from_json, pair_to_complex, read_text, write_text, Pair, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::model::{CMatrix, FrequencyGrid, HarmonicBlocks, PortLayout, ScattererBlocks};

type MatrixDoc = Vec<Vec<Pair>>;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDoc {
    format_version: u32,
    #[serde(default)]
    label: Option<String>,
    layout: LayoutDoc,
    grid: GridDoc,
    z_ref: ZRefDoc,
    flat: bool,
    harmonics: Vec<HarmonicDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "H")]
    h: usize,
    h_c: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridDoc {
    f_in_hz: f64,
    f_m_hz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ZRefDoc {
    re: f64,
    im: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HarmonicDoc {
    #[serde(default)]
    h: Option<usize>,
    s_ff: StructuralDoc,
    s_fd: PolPairDoc,
    s_df: PolPairDoc,
    s_dd: MatrixDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StructuralDoc {
    pp: MatrixDoc,
    tp: MatrixDoc,
    pt: MatrixDoc,
    tt: MatrixDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolPairDoc {
    p: MatrixDoc,
    t: MatrixDoc,
}

/// A validated bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub blocks: ScattererBlocks,
    pub grid: FrequencyGrid,
    pub label: Option<String>,
    /// Whether the file declared a single broadcast harmonic block.
    pub flat: bool,
}

impl Bundle {
    pub fn layout(&self) -> PortLayout {
        self.blocks.layout()
    }
}

fn to_matrix(doc: &MatrixDoc, rows: usize, cols: usize, name: &str, h: usize) -> std::result::Result<CMatrix, String> {
    let shape_err = || {
        let got_cols = doc.iter().map(Vec::len).collect::<Vec<_>>();
        format!("harmonic {h}, block {name}: expected {rows}x{cols}, got {} rows with lengths {got_cols:?}", doc.len())
    };
    if doc.len() != rows || doc.iter().any(|r| r.len() != cols) {
        return Err(shape_err());
    }
    let mut m = CMatrix::zeros(rows, cols);
    for (r, row) in doc.iter().enumerate() {
        for (c, p) in row.iter().enumerate() {
            m[(r, c)] = pair_to_complex(*p, &format!("harmonic {h}, block {name}[{r}][{c}]"))?;
        }
    }
    Ok(m)
}

fn to_blocks(doc: &HarmonicDoc, m: usize, n: usize, h: usize) -> std::result::Result<HarmonicBlocks, String> {
    Ok(HarmonicBlocks {
        ff_pp: to_matrix(&doc.s_ff.pp, m, m, "s_ff.pp", h)?,
        ff_tp: to_matrix(&doc.s_ff.tp, m, m, "s_ff.tp", h)?,
        ff_pt: to_matrix(&doc.s_ff.pt, m, m, "s_ff.pt", h)?,
        ff_tt: to_matrix(&doc.s_ff.tt, m, m, "s_ff.tt", h)?,
        fd_p: to_matrix(&doc.s_fd.p, m, n, "s_fd.p", h)?,
        fd_t: to_matrix(&doc.s_fd.t, m, n, "s_fd.t", h)?,
        df_p: to_matrix(&doc.s_df.p, n, m, "s_df.p", h)?,
        df_t: to_matrix(&doc.s_df.t, n, m, "s_df.t", h)?,
        dd: to_matrix(&doc.s_dd, n, n, "s_dd", h)?,
    })
}

/// Parses bundle text; `origin` is only used in error messages.
pub fn parse_bundle(text: &str, origin: &Path) -> Result<Bundle> {
    let doc: BundleDoc = from_json(origin, text)?;
    check_version(origin, doc.format_version)?;
    let fail = |msg: String| Error::parse(origin, msg);
    let rewrap = |e: Error| match e {
        Error::Validation(m) | Error::Domain(m) => fail(m),
        Error::Index { axis, value, max } => fail(format!("{axis} {value} outside 1..={max}")),
        other => fail(other.to_string()),
    };

    let LayoutDoc { m, n, h: hh, h_c } = doc.layout;
    let layout = PortLayout::new(m, n, hh).map_err(rewrap)?;
    let grid = FrequencyGrid::new(doc.grid.f_in_hz, doc.grid.f_m_hz, hh, h_c).map_err(rewrap)?;
    let z_ref = pair_to_complex([doc.z_ref.re, doc.z_ref.im], "z_ref").map_err(fail)?;

    let blocks = if doc.flat {
        if doc.harmonics.len() != 1 {
            return Err(fail(format!(
                "flat bundle must give exactly one harmonics entry, found {}",
                doc.harmonics.len()
            )));
        }
        let entry = &doc.harmonics[0];
        if let Some(h) = entry.h {
            if h == 0 || h > hh {
                return Err(fail(format!("harmonic {h} outside 1..={hh}")));
            }
        }
        let block = to_blocks(entry, m, n, entry.h.unwrap_or(1)).map_err(fail)?;
        ScattererBlocks::frequency_flat(layout, z_ref, block).map_err(rewrap)?
    } else {
        let mut slots: Vec<Option<HarmonicBlocks>> = vec![None; hh];
        for (i, entry) in doc.harmonics.iter().enumerate() {
            let h = entry
                .h
                .ok_or_else(|| fail(format!("harmonics[{i}] has no \"h\" (required when flat is false)")))?;
            if h == 0 || h > hh {
                return Err(fail(format!("harmonics[{i}]: harmonic {h} outside 1..={hh}")));
            }
            if slots[h - 1].is_some() {
                return Err(fail(format!("harmonic {h} given more than once")));
            }
            slots[h - 1] = Some(to_blocks(entry, m, n, h).map_err(fail)?);
        }
        let harmonics = slots
            .into_iter()
            .enumerate()
            .map(|(i, s)| s.ok_or_else(|| fail(format!("harmonic {} absent", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        ScattererBlocks::new(layout, z_ref, harmonics).map_err(rewrap)?
    };

    Ok(Bundle {
        blocks,
        grid,
        label: doc.label,
        flat: doc.flat,
    })
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<Bundle> {
    let path = path.as_ref();
    parse_bundle(&read_text(path)?, path)
}

fn write_matrix(out: &mut String, m: &CMatrix) {
    out.push('[');
    for r in 0..m.nrows() {
        if r > 0 {
            out.push(',');
        }
        out.push('[');
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            let z: Complex64 = m[(r, c)];
            let _ = write!(out, "[{:e},{:e}]", z.re, z.im);
        }
        out.push(']');
    }
    out.push(']');
}

fn write_harmonic(out: &mut String, h: Option<usize>, b: &HarmonicBlocks) {
    out.push_str("    {");
    if let Some(h) = h {
        let _ = write!(out, "\"h\": {h}, ");
    }
    let named: [(&str, &CMatrix); 4] = [("pp", &b.ff_pp), ("tp", &b.ff_tp), ("pt", &b.ff_pt), ("tt", &b.ff_tt)];
    out.push_str("\"s_ff\": {");
    for (i, (k, m)) in named.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "\"{k}\": ");
        write_matrix(out, m);
    }
    out.push_str("},\n     \"s_fd\": {\"p\": ");
    write_matrix(out, &b.fd_p);
    out.push_str(", \"t\": ");
    write_matrix(out, &b.fd_t);
    out.push_str("},\n     \"s_df\": {\"p\": ");
    write_matrix(out, &b.df_p);
    out.push_str(", \"t\": ");
    write_matrix(out, &b.df_t);
    out.push_str("},\n     \"s_dd\": ");
    write_matrix(out, &b.dd);
    out.push('}');
}

/// Serializes a bundle. Flat bundles are written with their single block;
/// values use the shortest representation that reads back bit-exactly.
pub fn bundle_to_json(bundle: &Bundle) -> Result<String> {
    let layout = bundle.layout();
    if bundle.flat && !bundle.blocks.is_frequency_flat() {
        return Err(Error::validation("bundle marked flat but its harmonic blocks differ"));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{{\n  \"format_version\": {FORMAT_VERSION},");
    if let Some(label) = &bundle.label {
        let _ = writeln!(out, "  \"label\": {},", serde_json::to_string(label).expect("string serializes"));
    }
    let _ = writeln!(
        out,
        "  \"layout\": {{\"M\": {}, \"N\": {}, \"H\": {}, \"h_c\": {}}},",
        layout.directions,
        layout.loads,
        layout.harmonics,
        bundle.grid.center()
    );
    let _ = writeln!(
        out,
        "  \"grid\": {{\"f_in_hz\": {:e}, \"f_m_hz\": {:e}}},",
        bundle.grid.f_in(),
        bundle.grid.f_m()
    );
    let z = bundle.blocks.z_ref();
    let _ = writeln!(out, "  \"z_ref\": {{\"re\": {:e}, \"im\": {:e}}},", z.re, z.im);
    let _ = writeln!(out, "  \"flat\": {},", bundle.flat);
    out.push_str("  \"harmonics\": [\n");
    if bundle.flat {
        write_harmonic(&mut out, None, &bundle.blocks.harmonics()[0]);
        out.push('\n');
    } else {
        for (i, b) in bundle.blocks.harmonics().iter().enumerate() {
            write_harmonic(&mut out, Some(i + 1), b);
            out.push_str(if i + 1 < layout.harmonics { ",\n" } else { "\n" });
        }
    }
    out.push_str("  ]\n}\n");
    Ok(out)
}

pub fn write_bundle(bundle: &Bundle, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &bundle_to_json(bundle)?)
}
