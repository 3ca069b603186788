//! Run manifests: every output is accompanied by a document recording the
//! command, the full parameter set, the seed, and the input digest, from
//! which the run can be reproduced bit-identically.

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub seed: u64,
    /// sha256 of the raw input file bytes, when the command reads one.
    pub input_digest: Option<String>,
    pub parameters: serde_json::Value,
    /// Quantities implied by a scenario configuration (simulate only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derived: Option<DerivedTruths>,
}

#[derive(Debug, Serialize)]
pub struct DerivedTruths {
    pub p_co_as_or_pr: f64,
    pub p_coas_1: f64,
    pub p_copr_1: f64,
    pub true_late: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("sha256:{:x}", hasher.finalize())
}

impl RunManifest {
    pub fn render(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serialization cannot fail");
        text.push('\n');
        text
    }
}

/// Write the primary document and its manifest. With an output path the
/// manifest lands next to it as `<output>.manifest.json`; without one the
/// document goes to stdout and the manifest to stderr, keeping stdout
/// machine-clean.
pub fn emit(
    output: Option<&Path>,
    primary: &str,
    manifest: &RunManifest,
) -> Result<(), crate::error::CliError> {
    match output {
        Some(path) => {
            std::fs::write(path, primary).map_err(|e| crate::error::CliError::io(path, e))?;
            let manifest_path = Path::new(&format!("{}.manifest.json", path.display())).to_owned();
            std::fs::write(&manifest_path, manifest.render())
                .map_err(|e| crate::error::CliError::io(&manifest_path, e))?;
        }
        None => {
            print!("{primary}");
            eprint!("{}", manifest.render());
        }
    }
    Ok(())
}
