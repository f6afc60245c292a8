//! Modulation plan, as TOML.
//!
//! ```toml
//! format_version = 1
//! f_m_hz = 1e5
//! name = "regime II"
//!
//! [[port]]
//! index = 1
//! label = "d3"
//! r_on = 0.23          # two-state form
//! duty_on = 0.22
//! z_on = [2.0, 10.6]
//! z_off = [2.0, -331.6]
//!
//! [[port]]
//! index = 2
//! [[port.segment]]     # general form, in time order
//! duty = 0.5
//! gamma = [1.0, 0.0]
//! [[port.segment]]
//! duty = 0.5
//! z_ohms = { 1 = [5.0, 0.0], 2 = [5.0, 1.0], 3 = [5.0, 2.0] }
//! ```
//!
//! A value is either one `[re, im]` pair, an array of pairs indexed by
//! harmonic `1..=H`, or a table keyed by harmonic number.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use super::{check_version, from_toml, pair_to_complex, read_text, Pair};
use crate::error::{Error, Result};
use crate::modulation::{LoadSegment, LoadState, ModulationPlan, PortSchedule, Spectral};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    format_version: u32,
    f_m_hz: f64,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    port: Vec<PortDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PortDoc {
    index: usize,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    segment: Vec<SegmentDoc>,
    r_on: Option<f64>,
    duty_on: Option<f64>,
    z_on: Option<ValueDoc>,
    z_off: Option<ValueDoc>,
    gamma_on: Option<ValueDoc>,
    gamma_off: Option<ValueDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    duty: f64,
    z_ohms: Option<ValueDoc>,
    gamma: Option<ValueDoc>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ValueDoc {
    Single(Pair),
    List(Vec<Pair>),
    Table(BTreeMap<String, Pair>),
}

impl ValueDoc {
    fn to_spectral(&self, what: &str) -> std::result::Result<Spectral, String> {
        match self {
            ValueDoc::Single(p) => Ok(Spectral::Constant(pair_to_complex(*p, what)?)),
            ValueDoc::List(ps) => {
                if ps.is_empty() {
                    return Err(format!("{what}: empty per-harmonic list"));
                }
                let vals = ps
                    .iter()
                    .enumerate()
                    .map(|(i, p)| pair_to_complex(*p, &format!("{what}, harmonic {}", i + 1)))
                    .collect::<std::result::Result<Vec<Complex64>, _>>()?;
                Ok(Spectral::PerHarmonic(vals))
            }
            ValueDoc::Table(map) => {
                let mut by_h = BTreeMap::new();
                for (k, p) in map {
                    let h: usize = k
                        .parse()
                        .ok()
                        .filter(|h| *h >= 1)
                        .ok_or_else(|| format!("{what}: key \"{k}\" is not a harmonic number"))?;
                    by_h.insert(h, pair_to_complex(*p, &format!("{what}, harmonic {h}"))?);
                }
                if let Some(gap) = (1..=by_h.len()).find(|h| !by_h.contains_key(h)) {
                    return Err(format!("{what}: harmonic {gap} absent from per-harmonic table"));
                }
                Ok(Spectral::PerHarmonic(by_h.into_values().collect()))
            }
        }
    }
}

fn state(z: Option<&ValueDoc>, gamma: Option<&ValueDoc>, what: &str, z_key: &str, g_key: &str) -> std::result::Result<LoadState, String> {
    match (z, gamma) {
        (Some(_), Some(_)) => Err(format!("{what}: both {z_key} and {g_key} given")),
        (Some(z), None) => Ok(LoadState::Impedance(z.to_spectral(what)?)),
        (None, Some(g)) => Ok(LoadState::Reflection(g.to_spectral(what)?)),
        (None, None) => Err(format!("{what}: needs {z_key} or {g_key}")),
    }
}

fn port_schedule(p: &PortDoc) -> std::result::Result<PortSchedule, String> {
    let name = match &p.label {
        Some(l) => format!("port {} ({l})", p.index),
        None => format!("port {}", p.index),
    };
    let two_state = p.r_on.is_some()
        || p.duty_on.is_some()
        || p.z_on.is_some()
        || p.z_off.is_some()
        || p.gamma_on.is_some()
        || p.gamma_off.is_some();
    let schedule = match (two_state, p.segment.is_empty()) {
        (true, false) => return Err(format!("{name}: mixes [[port.segment]] with the two-state keys")),
        (false, true) => return Err(format!("{name}: no segments and no two-state keys")),
        (true, true) => {
            let r_on = p.r_on.ok_or_else(|| format!("{name}: two-state form needs r_on"))?;
            let duty_on = p.duty_on.ok_or_else(|| format!("{name}: two-state form needs duty_on"))?;
            let on = state(p.z_on.as_ref(), p.gamma_on.as_ref(), &format!("{name} on state"), "z_on", "gamma_on")?;
            let off = state(p.z_off.as_ref(), p.gamma_off.as_ref(), &format!("{name} off state"), "z_off", "gamma_off")?;
            PortSchedule::two_state(r_on, duty_on, off, on).map_err(|e| format!("{name}: {}", bare(e)))?
        }
        (false, false) => {
            let segments = p
                .segment
                .iter()
                .enumerate()
                .map(|(q, s)| {
                    let what = format!("{name} segment {}", q + 1);
                    Ok(LoadSegment {
                        state: state(s.z_ohms.as_ref(), s.gamma.as_ref(), &what, "z_ohms", "gamma")?,
                        duty: s.duty,
                    })
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            PortSchedule::new(segments).map_err(|e| format!("{name}: {}", bare(e)))?
        }
    };
    Ok(match &p.label {
        Some(l) => schedule.with_label(l.clone()),
        None => schedule,
    })
}

fn bare(e: Error) -> String {
    match e {
        Error::Validation(m) | Error::Domain(m) => m,
        other => other.to_string(),
    }
}

/// Parses plan text; `origin` is only used in error messages.
pub fn parse_plan(text: &str, origin: &Path) -> Result<ModulationPlan> {
    let doc: PlanDoc = from_toml(origin, text)?;
    check_version(origin, doc.format_version)?;
    let fail = |msg: String| Error::parse(origin, msg);
    if doc.port.is_empty() {
        return Err(fail("plan defines no [[port]] tables".into()));
    }
    let count = doc.port.len();
    let mut slots: Vec<Option<PortSchedule>> = vec![None; count];
    for p in &doc.port {
        if p.index == 0 || p.index > count {
            return Err(fail(format!(
                "unknown port index {} (the {count} ports must be numbered 1..={count})",
                p.index
            )));
        }
        if slots[p.index - 1].is_some() {
            return Err(fail(format!("port {} defined more than once", p.index)));
        }
        slots[p.index - 1] = Some(port_schedule(p).map_err(fail)?);
    }
    let schedules = slots.into_iter().map(|s| s.expect("indices are a permutation")).collect();
    let plan = ModulationPlan::new(doc.f_m_hz, schedules).map_err(|e| fail(bare(e)))?;
    Ok(match doc.name {
        Some(n) => plan.with_name(n),
        None => plan,
    })
}

pub fn load_plan(path: impl AsRef<Path>) -> Result<ModulationPlan> {
    let path = path.as_ref();
    parse_plan(&read_text(path)?, path)
}
