//! Model adapter contract every evaluation and intervention path runs
//! through: prefill with last-token hidden-state capture, prefill-only
//! intervention hooks, nucleus sampling, and unembedding access.
//!
//! The crate ships a deterministic reference transformer small enough that
//! brute-force checks run in milliseconds; real-model adapters resolve
//! through the registry by model id.

mod reference;

pub use reference::{
    PlantedReference, ReferenceConfig, ReferenceModel, EOS_TOKEN, PLANTED_MODEL_ID,
};

use std::sync::{Arc, Mutex};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Capabilities {
    pub hidden_capture: bool,
    pub hook_injection: bool,
    pub unembedding_access: bool,
}

impl Capabilities {
    pub const ALL: Capabilities = Capabilities {
        hidden_capture: true,
        hook_injection: true,
        unembedding_access: true,
    };
}

/// Last-token hidden states for every layer (index 0 is the embedding
/// output, index `num_layers` the final block output) plus the final
/// position's logits.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefillTrace {
    pub hidden: Vec<Vec<f64>>,
    pub logits: Vec<f64>,
}

impl PrefillTrace {
    pub fn state(&self, layer: usize) -> &[f64] {
        &self.hidden[layer]
    }

    pub fn num_captured(&self) -> usize {
        self.hidden.len()
    }

    fn validate(&self, vocab_len: usize) -> Result<()> {
        if self.logits.len() != vocab_len {
            return Err(Error::Dimension {
                what: "trace logits".into(),
                expected: vocab_len,
                got: self.logits.len(),
            });
        }
        for (i, h) in self.hidden.iter().enumerate() {
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::Sampling(format!("non-finite hidden state at layer {i}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HookPhase {
    PrefillOnly,
}

/// A transform applied to the last-token hidden state at one layer's output
/// during the prefill pass only. Never invoked on decode steps.
#[derive(Clone)]
pub struct InterventionHook {
    pub layer: usize,
    pub phase: HookPhase,
    pub descriptor: String,
    transform: Arc<dyn Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync>,
}

impl InterventionHook {
    pub fn new(
        layer: usize,
        descriptor: impl Into<String>,
        transform: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) -> Self {
        InterventionHook {
            layer,
            phase: HookPhase::PrefillOnly,
            descriptor: descriptor.into(),
            transform: Arc::new(transform),
        }
    }

    pub fn identity(layer: usize) -> Self {
        InterventionHook::new(layer, "identity", |h| Ok(h.to_vec()))
    }

    /// Run the transform, enforcing dimension preservation.
    pub fn apply(&self, h: &[f64]) -> Result<Vec<f64>> {
        let out = (self.transform)(h)?;
        if out.len() != h.len() {
            return Err(Error::Hook(format!(
                "hook `{}` changed dimension {} -> {}",
                self.descriptor,
                h.len(),
                out.len()
            )));
        }
        Ok(out)
    }
}

impl std::fmt::Debug for InterventionHook {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InterventionHook")
            .field("layer", &self.layer)
            .field("phase", &self.phase)
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

/// Backend contract. Implementations must capture hidden states after any
/// hook transform at the hooked layer's last-token position.
pub trait ModelAdapter: Send + Sync {
    fn model_id(&self) -> &str;
    fn num_layers(&self) -> usize;
    fn hidden_dim(&self) -> usize;
    fn vocab(&self) -> &[String];
    fn capabilities(&self) -> Capabilities;
    /// Whether the model's final normalization is applied before the
    /// unembedding matrix. The lens honors this declaration.
    fn final_norm_before_unembed(&self) -> bool;
    /// Adapters that are safe to call concurrently declare themselves here;
    /// otherwise the handle serializes calls.
    fn reentrant(&self) -> bool {
        false
    }
    fn tokenize(&self, text: &str) -> Vec<TokenId>;
    fn detokenize(&self, token: TokenId) -> &str;
    fn prefill(&self, prompt: &[TokenId], hooks: &[InterventionHook]) -> Result<PrefillTrace>;
    fn unembed(&self, h: &[f64]) -> Result<Vec<f64>>;
}

/// Shareable, call-serializing wrapper around an adapter.
#[derive(Clone)]
pub struct ModelHandle {
    adapter: Arc<dyn ModelAdapter>,
    lock: Option<Arc<Mutex<()>>>,
}

impl ModelHandle {
    pub fn new(adapter: Arc<dyn ModelAdapter>) -> Self {
        let lock = if adapter.reentrant() {
            None
        } else {
            Some(Arc::new(Mutex::new(())))
        };
        ModelHandle { adapter, lock }
    }

    pub fn model_id(&self) -> &str {
        self.adapter.model_id()
    }

    pub fn num_layers(&self) -> usize {
        self.adapter.num_layers()
    }

    pub fn hidden_dim(&self) -> usize {
        self.adapter.hidden_dim()
    }

    pub fn vocab(&self) -> &[String] {
        self.adapter.vocab()
    }

    pub fn capabilities(&self) -> Capabilities {
        self.adapter.capabilities()
    }

    pub fn final_norm_before_unembed(&self) -> bool {
        self.adapter.final_norm_before_unembed()
    }

    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        self.adapter.tokenize(text)
    }

    pub fn detokenize(&self, token: TokenId) -> &str {
        self.adapter.detokenize(token)
    }

    pub fn token_id(&self, token: &str) -> Option<TokenId> {
        self.vocab().iter().position(|t| t == token)
    }

    /// Forward pass over the whole prompt with hooks applied at their
    /// layers' last-token positions. Hooks live only for this call.
    pub fn prefill(&self, prompt: &[TokenId], hooks: &[InterventionHook]) -> Result<PrefillTrace> {
        if prompt.is_empty() {
            return Err(Error::EmptyInput("prompt".into()));
        }
        if !hooks.is_empty() && !self.capabilities().hook_injection {
            return Err(Error::Capability {
                model_id: self.model_id().to_string(),
                capability: "hook_injection".into(),
            });
        }
        for hook in hooks {
            if hook.layer >= self.num_layers() {
                return Err(Error::Hook(format!(
                    "hook `{}` references layer {} of a {}-layer model",
                    hook.descriptor,
                    hook.layer,
                    self.num_layers()
                )));
            }
        }
        let _guard = self.lock.as_ref().map(|l| l.lock().expect("handle lock"));
        let trace = self.adapter.prefill(prompt, hooks)?;
        trace.validate(self.vocab().len())?;
        Ok(trace)
    }

    /// One token from the temperature-scaled, nucleus-truncated softmax of
    /// the trace's final logits. Deterministic given `rng_seed`.
    pub fn sample_next_token(
        &self,
        trace: &PrefillTrace,
        temperature: f64,
        top_p: f64,
        rng_seed: u64,
    ) -> Result<TokenId> {
        sample_from_logits(&trace.logits, temperature, top_p, rng_seed)
    }

    /// Project a hidden state to vocabulary logits, applying the model's
    /// declared final normalization.
    pub fn unembed(&self, h: &[f64]) -> Result<Vec<f64>> {
        if !self.capabilities().unembedding_access {
            return Err(Error::Capability {
                model_id: self.model_id().to_string(),
                capability: "unembedding_access".into(),
            });
        }
        if h.len() != self.hidden_dim() {
            return Err(Error::Dimension {
                what: "unembed input".into(),
                expected: self.hidden_dim(),
                got: h.len(),
            });
        }
        let _guard = self.lock.as_ref().map(|l| l.lock().expect("handle lock"));
        self.adapter.unembed(h)
    }
}

/// Nucleus sampling over raw logits. Ties in the probability ordering break
/// by token id so truncation is deterministic.
pub fn sample_from_logits(logits: &[f64], temperature: f64, top_p: f64, rng_seed: u64) -> Result<TokenId> {
    if temperature <= 0.0 || !temperature.is_finite() {
        return Err(Error::Config(format!("temperature {temperature} must be > 0")));
    }
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(Error::Config(format!("top_p {top_p} must be in (0, 1]")));
    }
    let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
    let max = scaled
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Sampling("all logits are non-finite".into()));
    }
    let weights: Vec<f64> = scaled
        .iter()
        .map(|&v| if v.is_finite() { (v - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::Sampling("softmax mass vanished".into()));
    }

    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        weights[b]
            .partial_cmp(&weights[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut nucleus = Vec::new();
    let mut mass = 0.0;
    for &idx in &order {
        nucleus.push(idx);
        mass += weights[idx] / total;
        if mass >= top_p {
            break;
        }
    }

    let nucleus_total: f64 = nucleus.iter().map(|&i| weights[i]).sum();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let u: f64 = rand::Rng::random::<f64>(&mut rng) * nucleus_total;
    let mut acc = 0.0;
    for &idx in &nucleus {
        acc += weights[idx];
        if u < acc {
            return Ok(idx);
        }
    }
    Ok(*nucleus.last().expect("nucleus non-empty"))
}

/// Stable per-sample seed derivation so sample `i` of a run is reproducible
/// independent of the other samples.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ (stream.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Autoregressive continuation. Hooks apply to the initial prefill only;
/// every decode-extension pass runs hook-free, so a counting transform sees
/// exactly one invocation per hooked layer.
pub fn generate(
    handle: &ModelHandle,
    prompt: &[TokenId],
    hooks: &[InterventionHook],
    max_new_tokens: usize,
    temperature: f64,
    top_p: f64,
    rng_seed: u64,
) -> Result<(Vec<TokenId>, PrefillTrace)> {
    let first = handle.prefill(prompt, hooks)?;
    let mut out = Vec::new();
    let mut current = prompt.to_vec();
    for step in 0..max_new_tokens {
        let tok = if step == 0 {
            handle.sample_next_token(&first, temperature, top_p, derive_seed(rng_seed, step as u64))?
        } else {
            let trace = handle.prefill(&current, &[])?;
            handle.sample_next_token(&trace, temperature, top_p, derive_seed(rng_seed, step as u64))?
        };
        out.push(tok);
        current.push(tok);
        if handle.detokenize(tok) == reference::EOS_TOKEN {
            break;
        }
    }
    Ok((out, first))
}

// ---------------------------------------------------------------------------
// Adapter registry
// ---------------------------------------------------------------------------

/// Environment variable listing extra directories searched for
/// `<model_id>.adapter.json` specs.
pub const ADAPTER_PATH_ENV: &str = "FRAGILE_ADAPTER_PATH";

#[derive(Debug, Deserialize)]
struct AdapterSpec {
    kind: String,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    num_layers: Option<usize>,
    #[serde(default)]
    hidden_dim: Option<usize>,
    #[serde(default)]
    final_norm: Option<bool>,
}

/// Resolve a model id to a handle: built-in reference family first, then
/// adapter spec files on the search path.
pub fn resolve(model_id: &str) -> Result<ModelHandle> {
    if model_id == "reference" {
        return Ok(ModelHandle::new(Arc::new(ReferenceModel::new(
            ReferenceConfig::default(),
        ))));
    }
    if let Some(seed) = model_id.strip_prefix("reference:") {
        let seed: u64 = seed
            .parse()
            .map_err(|_| Error::Config(format!("bad reference seed in `{model_id}`")))?;
        let cfg = ReferenceConfig {
            seed,
            model_id: model_id.to_string(),
            ..ReferenceConfig::default()
        };
        return Ok(ModelHandle::new(Arc::new(ReferenceModel::new(cfg))));
    }
    if model_id == PLANTED_MODEL_ID {
        return Ok(ModelHandle::new(Arc::new(PlantedReference::canonical())));
    }

    if let Ok(paths) = std::env::var(ADAPTER_PATH_ENV) {
        for dir in paths.split(':').filter(|p| !p.is_empty()) {
            let candidate = std::path::Path::new(dir).join(format!("{model_id}.adapter.json"));
            if candidate.exists() {
                let text = std::fs::read_to_string(&candidate)
                    .map_err(|e| Error::io(candidate.display().to_string(), e))?;
                let spec: AdapterSpec = serde_json::from_str(&text).map_err(|e| Error::Config(
                    format!("bad adapter spec {}: {e}", candidate.display()),
                ))?;
                return build_from_spec(model_id, &spec);
            }
        }
    }
    Err(Error::AdapterNotFound(model_id.to_string()))
}

fn build_from_spec(model_id: &str, spec: &AdapterSpec) -> Result<ModelHandle> {
    match spec.kind.as_str() {
        "reference" => {
            let mut cfg = ReferenceConfig {
                model_id: model_id.to_string(),
                ..ReferenceConfig::default()
            };
            if let Some(s) = spec.seed {
                cfg.seed = s;
            }
            if let Some(n) = spec.num_layers {
                cfg.num_layers = n;
            }
            if let Some(d) = spec.hidden_dim {
                cfg.hidden_dim = d;
            }
            if let Some(f) = spec.final_norm {
                cfg.final_norm = f;
            }
            Ok(ModelHandle::new(Arc::new(ReferenceModel::new(cfg))))
        }
        other => Err(Error::Config(format!("unknown adapter kind `{other}`"))),
    }
}
