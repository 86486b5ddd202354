//! Run manifests: enough to re-run a command and check that it reproduced
//! its outputs.
//!
//! Schema (JSON, version 1):
//!
//! | key           | meaning                                                        |
//! |---------------|----------------------------------------------------------------|
//! | `schema`      | always 1                                                       |
//! | `tool`        | `"cpgame"`                                                     |
//! | `version`     | crate version that wrote it                                    |
//! | `command`     | subcommand name                                                |
//! | `args`        | full argument list without `--out`, with `--seed` made explicit |
//! | `seed`        | master seed actually used                                      |
//! | `config_hash` | SHA-256 over the scenario file and the CSVs it references (or over `args` when there is none) |
//! | `outputs`     | `[{file, sha256}]` for every file written, in write order       |
//!
//! Manifests carry no timestamps or absolute paths, so a replay writes a
//! byte-identical manifest.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::AppError;

pub const SCHEMA: u32 = 1;
pub const TOOL: &str = "cpgame";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub config_hash: String,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the inputs. Each part contributes its length and bytes so that
/// boundaries are unambiguous; paths are deliberately left out.
pub fn inputs_hash<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

impl Manifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn read(path: &Path) -> Result<Self, AppError> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        let m: Manifest = serde_json::from_str(&text)
            .map_err(|e| AppError::Validation(format!("{}: {e}", path.display())))?;
        if m.schema != SCHEMA || m.tool != TOOL {
            return Err(AppError::Validation(format!(
                "{}: not a {TOOL} manifest of schema {SCHEMA}",
                path.display()
            )));
        }
        Ok(m)
    }

    /// Hashes of the listed outputs as found in `dir`.
    pub fn digest_outputs(dir: &Path, files: &[String]) -> Result<Vec<OutputDigest>, AppError> {
        files
            .iter()
            .map(|f| {
                let path: PathBuf = dir.join(f);
                let bytes = std::fs::read(&path).map_err(|e| AppError::io(&path, e))?;
                Ok(OutputDigest {
                    file: f.clone(),
                    sha256: sha256_hex(&bytes),
                })
            })
            .collect()
    }
}

/// Drops `--out DIR` / `--out=DIR` from an argument list.
pub fn strip_out(args: &[String]) -> Vec<String> {
    let mut out = Vec::with_capacity(args.len());
    let mut skip = false;
    for a in args {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        out.push(a.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_reference() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn input_boundaries_matter() {
        assert_ne!(inputs_hash([&b"ab"[..], b"c"]), inputs_hash([&b"a"[..], b"bc"]));
    }

    #[test]
    fn out_is_stripped() {
        let args: Vec<String> = ["sim", "--out", "x", "--seed", "3", "--out=y"].iter().map(|s| s.to_string()).collect();
        assert_eq!(strip_out(&args), vec!["sim", "--seed", "3"]);
    }

    #[test]
    fn json_round_trip() {
        let m = Manifest {
            schema: SCHEMA,
            tool: TOOL.into(),
            version: "0.1.0".into(),
            command: "sweep".into(),
            args: vec!["sweep".into()],
            seed: 1,
            config_hash: inputs_hash([&b""[..]]),
            outputs: vec![OutputDigest {
                file: "a.csv".into(),
                sha256: sha256_hex(b""),
            }],
        };
        let back: Manifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
