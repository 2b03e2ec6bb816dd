//! Run manifests: a plain-text record of exactly what a subcommand ran with.
//!
//! Every subcommand builds a manifest from its resolved flags, the seed, and
//! SHA-256 digests of its input files, then writes it before producing any
//! other output. Identical invocations on identical inputs yield identical
//! manifests; nothing time- or host-dependent is recorded.

use crate::CliError;
use sha2::{Digest, Sha256};
use std::fmt::Display;
use std::fs;
use std::path::Path;

/// Everything needed to reproduce a run.
#[derive(Debug)]
pub struct RunManifest {
    subcommand: &'static str,
    seed: u64,
    flags: Vec<(String, String)>,
    inputs: Vec<(String, String, String)>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, seed: u64) -> RunManifest {
        RunManifest {
            subcommand,
            seed,
            flags: Vec::new(),
            inputs: Vec::new(),
        }
    }

    /// Records one resolved flag value.
    pub fn flag(&mut self, name: &str, value: impl Display) -> &mut Self {
        self.flags.push((name.to_string(), value.to_string()));
        self
    }

    /// Records an input file by role, hashing its bytes.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<&mut Self, CliError> {
        let bytes = fs::read(path).map_err(|e| {
            CliError::Runtime(anyhow::anyhow!("cannot read {} ({role}): {e}", path.display()))
        })?;
        let digest = hex::encode(Sha256::digest(&bytes));
        self.inputs
            .push((role.to_string(), path.display().to_string(), digest));
        Ok(self)
    }

    /// Renders the manifest as line-oriented text.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("manifest_version 1\n");
        out.push_str(&format!("toolkit egtsyn {}\n", env!("CARGO_PKG_VERSION")));
        out.push_str(&format!("subcommand {}\n", self.subcommand));
        out.push_str(&format!("seed {}\n", self.seed));
        for (name, value) in &self.flags {
            out.push_str(&format!("flag {name} {value}\n"));
        }
        for (role, path, digest) in &self.inputs {
            out.push_str(&format!("input {role} {path} sha256 {digest}\n"));
        }
        out
    }

    /// Writes the manifest into `dir/manifest.txt`, creating `dir` first.
    pub fn write_into(&self, dir: &Path) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("manifest.txt"), self.render())?;
        Ok(())
    }

    /// Emits the manifest to stderr for subcommands run without `--out`.
    pub fn emit_stderr(&self) {
        eprint!("{}", self.render());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn renders_in_declaration_order() {
        let mut m = RunManifest::new("train", 7);
        m.flag("variant", "EGTSyn").flag("epochs", 5);
        let text = m.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "manifest_version 1");
        assert!(lines[1].starts_with("toolkit egtsyn "));
        assert_eq!(lines[2], "subcommand train");
        assert_eq!(lines[3], "seed 7");
        assert_eq!(lines[4], "flag variant EGTSyn");
        assert_eq!(lines[5], "flag epochs 5");
    }

    #[test]
    fn input_digest_matches_sha256_of_bytes() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"drug_id,smiles\nD1,CCO\n").unwrap();
        let mut m = RunManifest::new("featurize", 0);
        m.input("drugs", f.path()).unwrap();
        let text = m.render();
        let expected = hex::encode(Sha256::digest(b"drug_id,smiles\nD1,CCO\n"));
        assert!(text.contains(&format!("sha256 {expected}")));
    }

    #[test]
    fn missing_input_is_a_runtime_error() {
        let mut m = RunManifest::new("featurize", 0);
        let err = m.input("drugs", Path::new("/nonexistent/drugs.csv")).unwrap_err();
        match err {
            CliError::Runtime(e) => assert!(e.to_string().contains("drugs")),
            other => panic!("expected runtime error, got {other:?}"),
        }
    }

    #[test]
    fn identical_builds_render_identically() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(b"x").unwrap();
        let build = || {
            let mut m = RunManifest::new("split", 3);
            m.flag("k", 5);
            m.input("synergy", f.path()).unwrap();
            m.render()
        };
        assert_eq!(build(), build());
    }
}
