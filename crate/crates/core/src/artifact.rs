//! Provenance helpers for output artifacts: tool version, content hashes,
//! and the single timestamp header line.
//!
//! Every text artifact starts with one `# generated_unix=…` line; all
//! remaining content is a deterministic function of inputs and seed, so
//! reruns are byte-identical from line 2 onward.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Crate version baked into reports.
pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// SHA-256 of a file's contents.
pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(sha256_hex(&bytes))
}

/// The one line allowed to differ between reruns.
pub fn timestamp_header() -> String {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# generated_unix={now}\n")
}

/// Compare two artifacts ignoring the timestamp header line.
pub fn equal_modulo_timestamp(a: &str, b: &str) -> bool {
    let strip = |s: &str| {
        s.lines()
            .filter(|l| !l.starts_with("# generated_unix="))
            .collect::<Vec<_>>()
            .join("\n")
    };
    strip(a) == strip(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn timestamp_comparison() {
        let a = "# generated_unix=1\nbody\n";
        let b = "# generated_unix=2\nbody\n";
        assert!(equal_modulo_timestamp(a, b));
        assert!(!equal_modulo_timestamp(a, "# generated_unix=1\nother\n"));
    }
}
