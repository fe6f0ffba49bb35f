//! Serialized result records with provenance, and their verification.

use bellgap::ga::{GaConfig, SearchConstraint, SearchSpace};
use bellgap::quantum::{self, EprConfiguration};
use bellgap::weights::WeightMatrix;
use bellgap::{Error, Result, SearchResult64};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Recomputation slack allowed when verifying a record's stored fitness.
pub const VERIFY_TOL: f64 = 1e-12;

/// Hex SHA-256 of a canonical configuration text.
pub fn config_hash(canonical_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical_text.as_bytes());
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// RFC 3339 UTC timestamp of the current instant.
pub fn now_timestamp() -> String {
    chrono::Utc::now().to_rfc3339()
}

/// A complete search run: provenance, the full problem statement, and the
/// result. JSON reals use the shortest representation that round-trips
/// exactly, so serialization is lossless.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchRecord {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    /// Present only when requested; omitted by default so reruns are
    /// byte-identical.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub timestamp: Option<String>,
    /// The weight matrix, row by row, so the record is self-contained.
    pub weight_rows: Vec<Vec<f64>>,
    pub space: SearchSpace,
    pub constraint: SearchConstraint,
    pub ga: GaConfig,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub target: Option<f64>,
    /// Whether `norm_bound_deviation <= target` (true when no target set).
    pub target_met: bool,
    pub result: SearchResult64,
}

/// Outcome of re-deriving a record's fitness from its stored configuration.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub stored_fitness: f64,
    pub recomputed_fitness: f64,
    pub deviation: f64,
    pub tolerance: f64,
    pub ok: bool,
}

impl SearchRecord {
    /// Rebuilds the weight matrix stored in the record.
    pub fn weight(&self) -> Result<WeightMatrix<f64>> {
        WeightMatrix::from_rows(&self.weight_rows)
    }

    /// Revalidates the stored configuration (deserialization bypasses
    /// constructors), reassembles the Bell operator, and compares its norm
    /// against the recorded fitness.
    pub fn verify(&self, tolerance: f64) -> Result<VerifyReport> {
        let w = self.weight()?;
        let config = EprConfiguration::new(
            self.result.best_config.alice().to_vec(),
            self.result.best_config.bob().to_vec(),
        )?;
        let s = quantum::assemble_bell_operator(&w, &config)?;
        let recomputed = quantum::bell_operator_norm(&s)?;
        let deviation = (recomputed - self.result.best_fitness).abs();
        Ok(VerifyReport {
            stored_fitness: self.result.best_fitness,
            recomputed_fitness: recomputed,
            deviation,
            tolerance,
            ok: deviation <= tolerance,
        })
    }
}

/// Parses a serialized [`SearchRecord`].
pub fn parse_record(text: &str, origin: &str) -> Result<SearchRecord> {
    serde_json::from_str(text)
        .map_err(|e| Error::InvalidInput(format!("{origin}: not a search record: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_is_stable_and_input_sensitive() {
        let h1 = config_hash("weight = chsh\nseed = 1\n");
        let h2 = config_hash("weight = chsh\nseed = 1\n");
        let h3 = config_hash("weight = chsh\nseed = 2\n");
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
        assert_eq!(h1.len(), 64);
        assert!(h1.chars().all(|c| c.is_ascii_hexdigit()));
    }

    #[test]
    fn sha256_matches_the_reference_vector() {
        // SHA-256("abc"), the standard test vector.
        assert_eq!(
            config_hash("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
