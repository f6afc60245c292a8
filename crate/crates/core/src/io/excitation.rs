//! Inline single-tone excitation, e.g. `tau=3,pol=phi,amp=1+0j,h=13`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::{Excitation, Polarization};

/// A parsed excitation whose harmonic may still default to the grid center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExcitationSpec {
    pub tau: usize,
    pub pol: Polarization,
    pub amp: Complex64,
    pub harmonic: Option<usize>,
}

impl ExcitationSpec {
    pub fn harmonic_or(&self, default: usize) -> usize {
        self.harmonic.unwrap_or(default)
    }

    pub fn to_excitation(&self, default_harmonic: usize) -> Result<Excitation> {
        Excitation::single(self.harmonic_or(default_harmonic), self.tau, self.pol, self.amp)
    }
}

/// Parses `key=value` pairs separated by commas. `tau` and `pol` are
/// required, `amp` defaults to 1 and accepts forms like `0.5-2j`.
pub fn parse_excitation(text: &str) -> Result<ExcitationSpec> {
    let bad = |msg: String| Error::validation(format!("excitation \"{text}\": {msg}"));
    let (mut tau, mut pol, mut amp, mut harmonic) = (None, None, None, None);
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| bad(format!("\"{part}\" is not key=value")))?;
        let (key, value) = (key.trim(), value.trim());
        let dup = |set: bool| if set { Err(bad(format!("{key} given twice"))) } else { Ok(()) };
        match key {
            "tau" => {
                dup(tau.is_some())?;
                tau = Some(value.parse::<usize>().ok().filter(|v| *v >= 1).ok_or_else(|| bad(format!("tau \"{value}\" is not a direction index")))?);
            }
            "h" => {
                dup(harmonic.is_some())?;
                harmonic = Some(value.parse::<usize>().ok().filter(|v| *v >= 1).ok_or_else(|| bad(format!("h \"{value}\" is not a harmonic index")))?);
            }
            "pol" => {
                dup(pol.is_some())?;
                pol = Some(value.parse::<Polarization>().map_err(|_| bad(format!("pol \"{value}\" is not phi or theta")))?);
            }
            "amp" => {
                dup(amp.is_some())?;
                let z = value
                    .replace(' ', "")
                    .parse::<Complex64>()
                    .map_err(|_| bad(format!("amp \"{value}\" is not a complex number")))?;
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(bad(format!("amp \"{value}\" is not finite")));
                }
                amp = Some(z);
            }
            other => return Err(bad(format!("unknown key \"{other}\""))),
        }
    }
    Ok(ExcitationSpec {
        tau: tau.ok_or_else(|| bad("missing tau".into()))?,
        pol: pol.ok_or_else(|| bad("missing pol".into()))?,
        amp: amp.unwrap_or(Complex64::new(1.0, 0.0)),
        harmonic,
    })
}
