//! Persisted artifacts and run manifests.
//!
//! Vector artifacts (`fragile-vec/1`) hold steering vectors and sensitivity
//! subspaces as plain decimal float arrays with model and layer headers.
//! Results (`fragile-results/1`) and lens (`fragile-lens/1`) files embed the
//! manifest and its hash, so re-running a manifest reproduces them byte for
//! byte on the reference model.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Pole;
use crate::elicit::{PromptStyle, SamplingConfig};
use crate::error::{Error, Result};
use crate::lens::DirectionGapCurve;
use crate::metrics::{AggregateReport, TaggedOutcome};
use crate::valign::{Provenance, SensitivitySubspace, SteeringVector, PINNED_LAYERS};

pub const VEC_SCHEMA: &str = "fragile-vec/1";
pub const RESULTS_SCHEMA: &str = "fragile-results/1";
pub const LENS_SCHEMA: &str = "fragile-lens/1";
pub const MANIFEST_SCHEMA: &str = "fragile-manifest/1";

pub fn sha256_hex(data: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(data);
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(sha256_hex(&bytes))
}

// ---------------------------------------------------------------------------
// fragile-vec/1
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VecArtifact {
    pub schema: String,
    /// "steering_vector" or "sensitivity_subspace".
    pub kind: String,
    pub model_id: String,
    pub layer: usize,
    pub hidden_dim: usize,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explained_variance: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_framings: Option<Vec<Pole>>,
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
}

impl VecArtifact {
    pub fn from_steering(s: &SteeringVector) -> Self {
        VecArtifact {
            schema: VEC_SCHEMA.into(),
            kind: "steering_vector".into(),
            model_id: s.model_id.clone(),
            layer: s.layer,
            hidden_dim: s.w_hat.len(),
            vectors: vec![s.w_hat.clone()],
            explained_variance: None,
            source_framings: None,
            provenance: BTreeMap::from([
                ("anchor_sha256".to_string(), s.provenance.anchor_sha256.clone()),
                ("query_sha256".to_string(), s.provenance.query_sha256.clone()),
                (
                    "style_corpus_sha256".to_string(),
                    s.provenance.style_corpus_sha256.clone(),
                ),
            ]),
        }
    }

    pub fn from_subspace(s: &SensitivitySubspace) -> Self {
        VecArtifact {
            schema: VEC_SCHEMA.into(),
            kind: "sensitivity_subspace".into(),
            model_id: s.model_id.clone(),
            layer: s.layer,
            hidden_dim: s.basis.first().map(|b| b.len()).unwrap_or(0),
            vectors: s.basis.clone(),
            explained_variance: Some(s.explained_variance.clone()),
            source_framings: Some(s.source_framings.clone()),
            provenance: BTreeMap::new(),
        }
    }

    pub fn to_steering(&self) -> Result<SteeringVector> {
        if self.kind != "steering_vector" {
            return Err(Error::Config(format!(
                "artifact kind `{}` is not a steering vector",
                self.kind
            )));
        }
        let w_hat = self
            .vectors
            .first()
            .cloned()
            .ok_or_else(|| Error::Config("steering artifact has no vector".into()))?;
        Ok(SteeringVector {
            w_hat,
            layer: self.layer,
            model_id: self.model_id.clone(),
            provenance: Provenance {
                anchor_sha256: self.provenance.get("anchor_sha256").cloned().unwrap_or_default(),
                query_sha256: self.provenance.get("query_sha256").cloned().unwrap_or_default(),
                style_corpus_sha256: self
                    .provenance
                    .get("style_corpus_sha256")
                    .cloned()
                    .unwrap_or_default(),
            },
        })
    }

    pub fn to_subspace(&self) -> Result<SensitivitySubspace> {
        if self.kind != "sensitivity_subspace" {
            return Err(Error::Config(format!(
                "artifact kind `{}` is not a sensitivity subspace",
                self.kind
            )));
        }
        Ok(SensitivitySubspace {
            basis: self.vectors.clone(),
            layer: self.layer,
            model_id: self.model_id.clone(),
            explained_variance: self.explained_variance.clone().unwrap_or_default(),
            source_framings: self.source_framings.clone().unwrap_or_default(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let artifact: VecArtifact = read_json(path.as_ref())?;
        if artifact.schema != VEC_SCHEMA {
            return Err(Error::Parse {
                line: 1,
                message: format!("schema `{}`, expected `{VEC_SCHEMA}`", artifact.schema),
            });
        }
        for v in &artifact.vectors {
            if v.len() != artifact.hidden_dim {
                return Err(Error::Dimension {
                    what: "artifact vector".into(),
                    expected: artifact.hidden_dim,
                    got: v.len(),
                });
            }
        }
        Ok(artifact)
    }
}

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Defaults pinned by this build and echoed into every manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinnedDefaults {
    pub tau: f64,
    pub sampling: SamplingConfig,
    pub k: usize,
    pub layer_table: BTreeMap<String, usize>,
}

impl Default for PinnedDefaults {
    fn default() -> Self {
        PinnedDefaults {
            tau: crate::metrics::DEFAULT_TAU,
            sampling: SamplingConfig::default(),
            k: crate::valign::DEFAULT_K,
            layer_table: PINNED_LAYERS
                .iter()
                .map(|(name, layer)| (name.to_string(), *layer))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct InterventionDescriptor {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub artifact_hashes: BTreeMap<String, String>,
}

impl InterventionDescriptor {
    pub fn none() -> Self {
        InterventionDescriptor {
            kind: "none".into(),
            ..Default::default()
        }
    }
}

/// Everything needed to byte-reproduce a run on the reference model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub command: String,
    pub tool_version: String,
    pub model_id: String,
    pub corpus_path: String,
    pub corpus_sha256: String,
    pub sampling: SamplingConfig,
    pub style: PromptStyle,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_sha256: Option<String>,
    pub intervention: InterventionDescriptor,
    pub tau: f64,
    pub rng_seed: u64,
    pub defaults: PinnedDefaults,
}

impl RunManifest {
    pub fn new(
        command: impl Into<String>,
        model_id: impl Into<String>,
        corpus_path: impl Into<String>,
        corpus_sha256: impl Into<String>,
        sampling: SamplingConfig,
        style: PromptStyle,
        anchor_sha256: Option<String>,
        intervention: InterventionDescriptor,
        tau: f64,
    ) -> Self {
        RunManifest {
            schema: MANIFEST_SCHEMA.into(),
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            model_id: model_id.into(),
            corpus_path: corpus_path.into(),
            corpus_sha256: corpus_sha256.into(),
            rng_seed: sampling.rng_seed,
            sampling,
            style,
            anchor_sha256,
            intervention,
            tau,
            defaults: PinnedDefaults::default(),
        }
    }

    /// Hash of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("manifest serializes");
        sha256_hex(json.as_bytes())
    }
}

// ---------------------------------------------------------------------------
// Results and lens files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsFile {
    pub schema: String,
    pub manifest: RunManifest,
    pub manifest_hash: String,
    pub outcomes: Vec<TaggedOutcome>,
    pub aggregate: AggregateReport,
    /// Mean accuracy against gold labels per condition, when gold exists.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub accuracy: BTreeMap<String, f64>,
}

impl ResultsFile {
    pub fn new(
        manifest: RunManifest,
        outcomes: Vec<TaggedOutcome>,
        aggregate: AggregateReport,
        accuracy: BTreeMap<String, f64>,
    ) -> Self {
        let manifest_hash = manifest.hash();
        ResultsFile {
            schema: RESULTS_SCHEMA.into(),
            manifest,
            manifest_hash,
            outcomes,
            aggregate,
            accuracy,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: ResultsFile = read_json(path.as_ref())?;
        if file.schema != RESULTS_SCHEMA {
            return Err(Error::Parse {
                line: 1,
                message: format!("schema `{}`, expected `{RESULTS_SCHEMA}`", file.schema),
            });
        }
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensFileRecord {
    pub instance_id: String,
    pub dimension: crate::corpus::FramingDimension,
    pub d_base: String,
    pub d_alt: String,
    pub quadrant: crate::metrics::Quadrant,
    pub delta_dir: Vec<f64>,
    /// Per-layer top tokens of the framed condition, as (token text, logit).
    pub top_tokens: Vec<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensFile {
    pub schema: String,
    pub manifest: RunManifest,
    pub manifest_hash: String,
    pub records: Vec<LensFileRecord>,
    /// Per-dimension quadrant-conditioned curves.
    pub curves: BTreeMap<String, DirectionGapCurve>,
}

impl LensFile {
    pub fn new(
        manifest: RunManifest,
        records: Vec<LensFileRecord>,
        curves: BTreeMap<String, DirectionGapCurve>,
    ) -> Self {
        let manifest_hash = manifest.hash();
        LensFile {
            schema: LENS_SCHEMA.into(),
            manifest,
            manifest_hash,
            records,
            curves,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file: LensFile = read_json(path.as_ref())?;
        if file.schema != LENS_SCHEMA {
            return Err(Error::Parse {
                line: 1,
                message: format!("schema `{}`, expected `{LENS_SCHEMA}`", file.schema),
            });
        }
        Ok(file)
    }
}

fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut buf = serde_json::to_vec_pretty(value).expect("artifact serializes");
    buf.push(b'\n');
    std::fs::write(path, buf).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}
