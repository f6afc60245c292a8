//! Bistatic cross-section context, as TOML.
//!
//! ```toml
//! format_version = 1
//! s_t_m = 1.8
//! s_r_m = 1.8
//!
//! [gain_tx]
//! constant = 1.0
//!
//! [gain_rx]
//! per_direction = [1.0, 1.2, 0.9]
//! # or, at exact frequencies:
//! # [[gain_rx.table]]
//! # direction = 1
//! # f_hz = 2.4e9
//! # gain = 1.1
//! ```
//!
//! Gains are linear realized gains. Each antenna uses exactly one of the
//! three forms.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{check_version, from_toml, read_text};
use crate::error::{Error, Result};
use crate::model::{BcsContext, ConstantGain, GainPattern, GainTable};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ContextDoc {
    format_version: u32,
    s_t_m: f64,
    s_r_m: f64,
    gain_tx: GainDoc,
    gain_rx: GainDoc,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GainDoc {
    constant: Option<f64>,
    per_direction: Option<Vec<f64>>,
    table: Option<Vec<GainPointDoc>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GainPointDoc {
    direction: usize,
    f_hz: f64,
    gain: f64,
}

fn positive(g: f64, what: &str) -> std::result::Result<f64, String> {
    if g.is_finite() && g > 0.0 {
        Ok(g)
    } else {
        Err(format!("{what}: gain must be positive and finite, got {g}"))
    }
}

fn gain(doc: GainDoc, name: &str) -> std::result::Result<Arc<dyn GainPattern>, String> {
    match (doc.constant, doc.per_direction, doc.table) {
        (Some(g), None, None) => Ok(Arc::new(ConstantGain(positive(g, name)?))),
        (None, Some(v), None) => {
            if v.is_empty() {
                return Err(format!("{name}: per_direction is empty"));
            }
            for (i, g) in v.iter().enumerate() {
                positive(*g, &format!("{name} direction {}", i + 1))?;
            }
            Ok(Arc::new(move |d: usize, _f: f64| d.checked_sub(1).and_then(|i| v.get(i)).copied()))
        }
        (None, None, Some(t)) => {
            let mut points = Vec::with_capacity(t.len());
            for (i, p) in t.into_iter().enumerate() {
                let what = format!("{name}.table[{i}]");
                if p.direction == 0 || !(p.f_hz.is_finite() && p.f_hz > 0.0) {
                    return Err(format!("{what}: direction must be >= 1 and f_hz positive"));
                }
                if points.iter().any(|(d, f, _): &(usize, f64, f64)| *d == p.direction && *f == p.f_hz) {
                    return Err(format!("{what}: duplicate point (direction {}, f_hz {})", p.direction, p.f_hz));
                }
                points.push((p.direction, p.f_hz, positive(p.gain, &what)?));
            }
            Ok(Arc::new(GainTable::new(points)))
        }
        _ => Err(format!("{name}: give exactly one of constant, per_direction, table")),
    }
}

pub fn parse_context(text: &str, origin: &Path) -> Result<BcsContext> {
    let doc: ContextDoc = from_toml(origin, text)?;
    check_version(origin, doc.format_version)?;
    let fail = |msg: String| Error::parse(origin, msg);
    let tx = gain(doc.gain_tx, "gain_tx").map_err(fail)?;
    let rx = gain(doc.gain_rx, "gain_rx").map_err(fail)?;
    BcsContext::new(doc.s_t_m, doc.s_r_m, tx, rx).map_err(|e| fail(e.to_string()))
}

pub fn load_context(path: impl AsRef<Path>) -> Result<BcsContext> {
    let path = path.as_ref();
    parse_context(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<BcsContext> {
        parse_context(text, Path::new("ctx.toml"))
    }

    #[test]
    fn three_gain_forms() {
        let ctx = parse(
            r#"
format_version = 1
s_t_m = 1.8
s_r_m = 2.0
[gain_tx]
constant = 2.0
[gain_rx]
per_direction = [1.0, 3.0]
"#,
        )
        .unwrap();
        assert_eq!((ctx.s_t, ctx.s_r), (1.8, 2.0));
        assert_eq!(ctx.gain_tx.gain(7, 1e9), Some(2.0));
        assert_eq!(ctx.gain_rx.gain(2, 1e9), Some(3.0));
        assert_eq!(ctx.gain_rx.gain(3, 1e9), None);

        let ctx = parse(
            r#"
format_version = 1
s_t_m = 1
s_r_m = 1
[gain_tx]
constant = 1.0
[[gain_rx.table]]
direction = 1
f_hz = 2.4e9
gain = 1.5
"#,
        )
        .unwrap();
        assert_eq!(ctx.gain_rx.gain(1, 2.4e9), Some(1.5));
        assert_eq!(ctx.gain_rx.gain(1, 2.4001e9), None);
    }

    #[test]
    fn ambiguous_or_bad_gain_rejected() {
        let base = "format_version = 1\ns_t_m = 1\ns_r_m = 1\n[gain_tx]\nconstant = 1.0\n";
        let err = parse(&format!("{base}[gain_rx]\nconstant = 1.0\nper_direction = [1.0]\n"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("exactly one"), "{err}");
        assert!(parse(&format!("{base}[gain_rx]\nconstant = -1.0\n")).is_err());
        let err = parse(&format!("{base}[gain_rx]\nconstant = 1.0\n").replace("s_t_m = 1", "s_t_m = 0"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("positive"), "{err}");
    }
}
