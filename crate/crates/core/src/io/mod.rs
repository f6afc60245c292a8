//! On-disk formats: scatterer bundles (JSON), modulation plans and BCS
//! contexts (TOML), and result records (CSV or JSON).
//!
//! Every file carries `format_version`; this build reads and writes version 1.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

pub mod bundle;
pub mod context;
pub mod excitation;
pub mod plan;
pub mod records;

pub use bundle::{load_bundle, parse_bundle, write_bundle, Bundle};
pub use context::{load_context, parse_context};
pub use excitation::parse_excitation;
pub use plan::{load_plan, parse_plan};
pub use records::{read_records, write_records, RecordFormat, ResultRecord};

pub const FORMAT_VERSION: u32 = 1;

/// Complex number on disk.
pub(crate) type Pair = [f64; 2];

pub(crate) fn pair_to_complex(p: Pair, what: &str) -> std::result::Result<Complex64, String> {
    if p.iter().all(|x| x.is_finite()) {
        Ok(Complex64::new(p[0], p[1]))
    } else {
        Err(format!("{what}: non-finite value [{}, {}]", p[0], p[1]))
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn check_version(path: &Path, found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::parse(
            path,
            format!("format_version {found} is not supported (expected {FORMAT_VERSION})"),
        ));
    }
    Ok(())
}

pub(crate) fn from_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let inner = e.inner();
        Error::parse(
            path,
            format!("line {}, column {}, at `{}`: {}", inner.line(), inner.column(), e.path(), inner),
        )
    })
}

pub(crate) fn from_toml<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T> {
    let de = toml::Deserializer::parse(text).map_err(|e| toml_error(path, text, &e))?;
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let inner = e.into_inner();
        let loc = toml_error(path, text, &inner);
        match loc {
            Error::Parse { path, message } => Error::parse(path, format!("at `{at}`: {message}")),
            other => other,
        }
    })
}

fn toml_error(path: &Path, text: &str, e: &toml::de::Error) -> Error {
    let loc = e
        .span()
        .map(|span| {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
            format!("line {line}, column {col}: ")
        })
        .unwrap_or_default();
    Error::parse(path, format!("{loc}{}", e.message()))
}
