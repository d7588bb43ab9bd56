//! The three-stage decision-stabilizing intervention: a self-report value
//! direction, a temporal-vividness sensitivity subspace, and the
//! prefill-time hook that steers toward the value direction and projects
//! the sensitivity subspace out of the hidden state.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::corpus::Pole;
use crate::error::{Error, Result};
use crate::modelio::{generate, InterventionHook, ModelHandle};
use crate::numerics::{pca_fit, project_out, unit_normalize, Matrix};

/// Provenance hashes tying an artifact to the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Provenance {
    pub anchor_sha256: String,
    pub query_sha256: String,
    pub style_corpus_sha256: String,
}

/// Unit-norm value direction at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringVector {
    pub w_hat: Vec<f64>,
    pub layer: usize,
    pub model_id: String,
    pub provenance: Provenance,
}

/// Orthonormal framing-sensitive basis at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivitySubspace {
    pub basis: Vec<Vec<f64>>,
    pub layer: usize,
    pub model_id: String,
    pub explained_variance: Vec<f64>,
    pub source_framings: Vec<Pole>,
}

/// Which intervention components are active and their knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValignConfig {
    pub layer: usize,
    pub alpha: f64,
    pub k: usize,
    pub text_anchor: bool,
    pub steering: bool,
    pub projection: bool,
}

impl ValignConfig {
    pub fn full(layer: usize) -> Self {
        ValignConfig {
            layer,
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
            text_anchor: true,
            steering: true,
            projection: true,
        }
    }
}

pub const DEFAULT_ALPHA: f64 = 1.0;
pub const DEFAULT_K: usize = 4;
/// Fraction of style-corpus variance removed from the raw value state.
pub const DEFAULT_STYLE_VARIANCE_FRACTION: f64 = 0.5;

/// The four option-text framings whose hidden-state deltas span the
/// sensitivity subspace.
pub const SUBSPACE_FRAMINGS: [Pole; 4] = [
    Pole::HighVividness,
    Pole::LowVividness,
    Pole::ShortTerm,
    Pole::LongTerm,
];

/// Pinned intervention layers for the published model family; anything else
/// goes through layer selection or explicit config.
pub const PINNED_LAYERS: [(&str, usize); 4] = [
    ("llama-3.1-8b-instruct", 22),
    ("mistral-7b-instruct-v0.3", 22),
    ("qwen2.5-7b-instruct", 18),
    ("llama-3.1-70b-instruct", 55),
];

/// Default intervention layer for a model id, by case-insensitive substring
/// match against the pinned table.
pub fn default_layer_for(model_id: &str) -> Option<usize> {
    let id = model_id.to_lowercase();
    PINNED_LAYERS
        .iter()
        .find(|(name, _)| id.contains(name))
        .map(|(_, layer)| *layer)
}

#[derive(Debug, Clone)]
pub struct Stage1Options {
    /// Tokens of self-report response to generate before re-encoding.
    pub response_tokens: usize,
    pub temperature: f64,
    pub top_p: f64,
    pub rng_seed: u64,
    pub style_variance_fraction: f64,
}

impl Default for Stage1Options {
    fn default() -> Self {
        Stage1Options {
            response_tokens: 24,
            temperature: 0.7,
            top_p: 0.95,
            rng_seed: 0,
            style_variance_fraction: DEFAULT_STYLE_VARIANCE_FRACTION,
        }
    }
}

fn sha256_hex(data: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(data.as_bytes());
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

fn layer_state(handle: &ModelHandle, layer: usize, text: &str) -> Result<Vec<f64>> {
    let toks = handle.tokenize(text);
    let trace = handle.prefill(&toks, &[])?;
    Ok(trace.state(layer + 1).to_vec())
}

/// Stage 1: elicit the model's self-reported decision values under the
/// anchor prompt, re-encode prompt plus response, take the layer-L
/// last-token state, strip the dominant style directions of the neutral
/// corpus, and unit-normalize.
pub fn extract_value_vector(
    handle: &ModelHandle,
    layer: usize,
    anchor_text: &str,
    elicitation_query: &str,
    style_corpus: &[&str],
    opts: &Stage1Options,
) -> Result<SteeringVector> {
    if style_corpus.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "style corpus needs at least 2 sentences, got {}",
            style_corpus.len()
        )));
    }
    if layer >= handle.num_layers() {
        return Err(Error::Config(format!(
            "layer {layer} out of range for {}-layer model",
            handle.num_layers()
        )));
    }
    if !handle.capabilities().hidden_capture {
        return Err(Error::Capability {
            model_id: handle.model_id().to_string(),
            capability: "hidden_capture".into(),
        });
    }

    let prompt_text = format!("System:\n{}\n\n{}", anchor_text.trim_end(), elicitation_query.trim_end());
    let prompt = handle.tokenize(&prompt_text);
    let (response, _) = generate(
        handle,
        &prompt,
        &[],
        opts.response_tokens,
        opts.temperature,
        opts.top_p,
        opts.rng_seed,
    )?;
    let mut full = prompt;
    full.extend(&response);
    let trace = handle.prefill(&full, &[])?;
    let w_raw = trace.state(layer + 1).to_vec();

    let style_states: Vec<Vec<f64>> = style_corpus
        .iter()
        .map(|s| layer_state(handle, layer, s))
        .collect::<Result<_>>()?;
    let style_dirs = style_directions(&style_states, opts.style_variance_fraction)?;

    let stripped = project_out(&w_raw, &style_dirs)?;
    let w_hat = unit_normalize(&stripped).map_err(|_| Error::Degenerate {
        what: "value vector after style removal".into(),
        norm: crate::numerics::norm(&stripped),
    })?;

    Ok(SteeringVector {
        w_hat,
        layer,
        model_id: handle.model_id().to_string(),
        provenance: Provenance {
            anchor_sha256: sha256_hex(anchor_text),
            query_sha256: sha256_hex(elicitation_query),
            style_corpus_sha256: sha256_hex(&style_corpus.join("\n")),
        },
    })
}

/// PCA components of the style states covering `fraction` of the corpus
/// variance: the smallest prefix whose cumulative explained variance
/// reaches the fraction.
fn style_directions(states: &[Vec<f64>], fraction: f64) -> Result<Vec<Vec<f64>>> {
    let x = Matrix::from_rows(states)?;
    let k_max = (x.rows() - 1).min(x.cols());
    let fit = pca_fit(&x, k_max)?;
    let total: f64 = fit.explained_variance.iter().sum();
    if total <= 0.0 {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut cum = 0.0;
    for (comp, var) in fit.components.iter().zip(&fit.explained_variance) {
        if cum >= fraction * total {
            break;
        }
        out.push(comp.clone());
        cum += var;
    }
    Ok(out)
}

/// One Stage-2 scenario: a base prompt and its four framed option rewrites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stage2Scenario {
    pub id: String,
    pub base_prompt: String,
    pub framed_prompts: BTreeMap<Pole, String>,
}

/// Stage 2: stack the layer-L last-token deltas of every framed prompt
/// against its base and take the top-k principal directions.
pub fn build_sensitivity_subspace(
    handle: &ModelHandle,
    layer: usize,
    scenarios: &[Stage2Scenario],
    framings: &[Pole],
    k: usize,
) -> Result<SensitivitySubspace> {
    if scenarios.len() < 2 {
        return Err(Error::EmptyInput(format!(
            "subspace construction needs at least 2 scenarios, got {}",
            scenarios.len()
        )));
    }
    let mut deltas: Vec<Vec<f64>> = Vec::new();
    for scenario in scenarios {
        let base = layer_state(handle, layer, &scenario.base_prompt)?;
        for pole in framings {
            let Some(framed_prompt) = scenario.framed_prompts.get(pole) else {
                return Err(Error::Config(format!(
                    "scenario `{}` is missing the {pole} framed prompt",
                    scenario.id
                )));
            };
            let framed = layer_state(handle, layer, framed_prompt)?;
            deltas.push(framed.iter().zip(&base).map(|(f, b)| f - b).collect());
        }
    }
    if deltas.len() < k + 1 {
        return Err(Error::RankDeficient {
            requested: k,
            available: deltas.len().saturating_sub(1),
        });
    }
    let x = Matrix::from_rows(&deltas)?;
    let fit = pca_fit(&x, k)?;
    if fit.rank_deficient || fit.components.len() < k {
        return Err(Error::RankDeficient {
            requested: k,
            available: fit.components.len(),
        });
    }
    Ok(SensitivitySubspace {
        basis: fit.components,
        layer,
        model_id: handle.model_id().to_string(),
        explained_variance: fit.explained_variance,
        source_framings: framings.to_vec(),
    })
}

/// The full hidden-state transformation: steer along the value direction,
/// then project the sensitivity subspace out of the steered state.
pub fn valign_transform(
    h: &[f64],
    w_hat: &[f64],
    basis: &[Vec<f64>],
    alpha: f64,
) -> Result<Vec<f64>> {
    let steered = steer(h, w_hat, alpha)?;
    project_out(&steered, basis)
}

/// Additive steering alone. `alpha == 0` is the bitwise identity.
pub fn steer(h: &[f64], w_hat: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if alpha == 0.0 {
        return Ok(h.to_vec());
    }
    if w_hat.len() != h.len() {
        return Err(Error::Dimension {
            what: "steering direction".into(),
            expected: h.len(),
            got: w_hat.len(),
        });
    }
    Ok(h.iter().zip(w_hat).map(|(x, w)| x + alpha * w).collect())
}

fn check_artifact(
    handle: &ModelHandle,
    what: &str,
    model_id: &str,
    dim: usize,
    layer: usize,
) -> Result<()> {
    if model_id != handle.model_id() {
        return Err(Error::ArtifactMismatch {
            field: format!("{what} model_id"),
            artifact: model_id.to_string(),
            handle: handle.model_id().to_string(),
        });
    }
    if dim != handle.hidden_dim() {
        return Err(Error::ArtifactMismatch {
            field: format!("{what} hidden_dim"),
            artifact: dim.to_string(),
            handle: handle.hidden_dim().to_string(),
        });
    }
    if layer >= handle.num_layers() {
        return Err(Error::Config(format!(
            "{what} layer {layer} out of range for {}-layer model",
            handle.num_layers()
        )));
    }
    Ok(())
}

/// Refuse to apply an artifact built for a different model or width.
pub fn validate_artifacts(
    handle: &ModelHandle,
    steering: Option<&SteeringVector>,
    subspace: Option<&SensitivitySubspace>,
) -> Result<()> {
    if let Some(s) = steering {
        check_artifact(handle, "steering vector", &s.model_id, s.w_hat.len(), s.layer)?;
    }
    if let Some(s) = subspace {
        let dim = s.basis.first().map(|b| b.len()).unwrap_or(0);
        check_artifact(handle, "sensitivity subspace", &s.model_id, dim, s.layer)?;
    }
    Ok(())
}

/// Build the prefill-only hook for the enabled components. Returns the hook
/// and whether the elicitation side should prepend the text anchor.
pub fn make_valign_hook(
    config: &ValignConfig,
    steering: Option<&SteeringVector>,
    subspace: Option<&SensitivitySubspace>,
) -> Result<(InterventionHook, bool)> {
    if config.steering && steering.is_none() {
        return Err(Error::Config(
            "steering enabled but no steering-vector artifact present".into(),
        ));
    }
    if config.projection && subspace.is_none() {
        return Err(Error::Config(
            "projection enabled but no subspace artifact present".into(),
        ));
    }
    let w = if config.steering {
        steering.map(|s| s.w_hat.clone()).unwrap_or_default()
    } else {
        Vec::new()
    };
    let alpha = if config.steering { config.alpha } else { 0.0 };
    let basis: Vec<Vec<f64>> = if config.projection {
        let s = subspace.expect("checked above");
        if config.k > s.basis.len() {
            return Err(Error::Config(format!(
                "k={} exceeds subspace size {}",
                config.k,
                s.basis.len()
            )));
        }
        s.basis[..config.k].to_vec()
    } else {
        Vec::new()
    };

    let descriptor = format!(
        "valign(layer={}, alpha={}, k={}, steering={}, projection={})",
        config.layer, alpha, config.k, config.steering, config.projection
    );
    let w_for_hook = w.clone();
    let hook = InterventionHook::new(config.layer, descriptor, move |h| {
        if alpha == 0.0 && basis.is_empty() {
            return Ok(h.to_vec());
        }
        if w_for_hook.is_empty() {
            project_out(h, &basis)
        } else {
            valign_transform(h, &w_for_hook, &basis, alpha)
        }
    });
    Ok((hook, config.text_anchor))
}

/// Intervention baselines sharing the hook mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineHookKind {
    /// Seeded isotropic noise of the given scale added to the state.
    GaussianNoise { layer: usize, scale: f64, seed: u64 },
    /// A fixed direction scaled by alpha added to the state; the shape of
    /// concept-vector activation steering.
    AdditiveVector {
        layer: usize,
        direction: Vec<f64>,
        alpha: f64,
    },
}

pub fn make_baseline_hook(kind: &BaselineHookKind) -> Result<InterventionHook> {
    match kind {
        BaselineHookKind::GaussianNoise { layer, scale, seed } => {
            if !scale.is_finite() {
                return Err(Error::Config(format!("noise scale {scale} is not finite")));
            }
            let (scale, seed) = (*scale, *seed);
            let descriptor = format!("gaussian_noise(scale={scale}, seed={seed})");
            Ok(InterventionHook::new(*layer, descriptor, move |h| {
                // Regenerated from the fixed seed on every call, so the
                // perturbation vector is identical across prefills.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                Ok(h.iter()
                    .map(|x| {
                        x + scale
                            * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng)
                    })
                    .collect())
            }))
        }
        BaselineHookKind::AdditiveVector {
            layer,
            direction,
            alpha,
        } => {
            if !alpha.is_finite() || direction.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("additive-vector params must be finite".into()));
            }
            let (dir, alpha) = (direction.clone(), *alpha);
            let descriptor = format!("additive_vector(alpha={alpha})");
            Ok(InterventionHook::new(*layer, descriptor, move |h| {
                steer(h, &dir, alpha)
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use crate::modelio::resolve;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
            .collect()
    }

    fn orthonormal(rng: &mut ChaCha8Rng, dim: usize, k: usize) -> Vec<Vec<f64>> {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < k {
            let v = rand_vec(rng, dim);
            let w = project_out(&v, &basis).unwrap();
            if let Ok(u) = unit_normalize(&w) {
                basis.push(u);
            }
        }
        basis
    }

    #[test]
    fn transform_identity_when_disabled() {
        let h = vec![1.0, -2.0, 3.0];
        let out = valign_transform(&h, &[], &[], 0.0).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn transform_projection_only_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basis = orthonormal(&mut rng, 8, 3);
        let h = rand_vec(&mut rng, 8);
        let out = valign_transform(&h, &[], &basis, 0.0).unwrap();
        for v in &basis {
            assert!(crate::numerics::dot(&out, v).abs() < 1e-10);
        }
    }

    #[test]
    fn transform_equals_steer_then_project() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let dim = 4 + (rand::Rng::random_range(&mut rng, 0..12usize));
            let k = 1 + rand::Rng::random_range(&mut rng, 0..(dim / 2));
            let basis = orthonormal(&mut rng, dim, k);
            let h = rand_vec(&mut rng, dim);
            let w = unit_normalize(&rand_vec(&mut rng, dim)).unwrap();
            let alpha = rand::Rng::random_range(&mut rng, -3.0..3.0);
            let fused = valign_transform(&h, &w, &basis, alpha).unwrap();
            let composed = project_out(&steer(&h, &w, alpha).unwrap(), &basis).unwrap();
            for (a, b) in fused.iter().zip(&composed) {
                assert!((a - b).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn norm_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let dim = 6;
            let basis = orthonormal(&mut rng, dim, 2);
            let h = rand_vec(&mut rng, dim);
            let w = unit_normalize(&rand_vec(&mut rng, dim)).unwrap();
            let alpha: f64 = rand::Rng::random_range(&mut rng, 0.0..2.0);
            let out = valign_transform(&h, &w, &basis, alpha).unwrap();
            assert!(
                crate::numerics::norm(&out) <= crate::numerics::norm(&h) + alpha + 1e-12
            );
        }
    }

    #[test]
    fn stage1_deterministic_and_orthogonal_style_noop() {
        let handle = resolve("reference").unwrap();
        let sentences = assets::style_corpus_sentences();
        let opts = Stage1Options::default();
        let a = extract_value_vector(
            &handle,
            2,
            assets::VALUE_ANCHOR,
            assets::VALUE_QUERY,
            &sentences,
            &opts,
        )
        .unwrap();
        let b = extract_value_vector(
            &handle,
            2,
            assets::VALUE_ANCHOR,
            assets::VALUE_QUERY,
            &sentences,
            &opts,
        )
        .unwrap();
        assert_eq!(a, b);
        assert!((crate::numerics::norm(&a.w_hat) - 1.0).abs() < 1e-10);
        assert_eq!(a.layer, 2);
        assert_eq!(a.provenance.anchor_sha256.len(), 64);
    }

    #[test]
    fn stage1_no_op_when_styles_orthogonal() {
        // Synthetic check of the removal rule: styles along axes 0 and 1,
        // raw value along axis 2 -> unchanged by projection.
        let states = vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0, 0.0],
        ];
        let dirs = style_directions(&states, 0.5).unwrap();
        assert!(!dirs.is_empty());
        let w_raw = vec![0.0, 0.0, 2.0, 0.0];
        let stripped = project_out(&w_raw, &dirs).unwrap();
        let w_hat = unit_normalize(&stripped).unwrap();
        assert!((w_hat[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stage1_degenerate_when_value_inside_style_subspace() {
        let states = vec![
            vec![2.0, 0.0],
            vec![-2.0, 0.0],
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
        ];
        let dirs = style_directions(&states, 0.99).unwrap();
        let w_raw = vec![3.0, 0.0];
        let stripped = project_out(&w_raw, &dirs).unwrap();
        assert!(matches!(
            unit_normalize(&stripped),
            Err(Error::Degenerate { .. })
        ));
    }

    fn planted_scenarios(n: usize) -> Vec<Stage2Scenario> {
        // Bodies differ in real vocabulary tokens so per-pole deltas vary
        // across scenarios instead of collapsing to four points.
        let bodies = [
            "save one of the five",
            "the five must save one",
            "you must save the one",
            "one of you must save five",
            "the one must save you",
            "five of the one save you",
        ];
        (0..n)
            .map(|i| {
                let base = bodies[i % bodies.len()].to_string();
                let mut framed = BTreeMap::new();
                framed.insert(Pole::HighVividness, format!("{base} now the one"));
                framed.insert(Pole::LowVividness, format!("{base} the"));
                framed.insert(Pole::ShortTerm, format!("{base} now"));
                framed.insert(Pole::LongTerm, format!("{base} five"));
                Stage2Scenario {
                    id: format!("s{i}"),
                    base_prompt: base,
                    framed_prompts: framed,
                }
            })
            .collect()
    }

    #[test]
    fn stage2_default_k_yields_orthonormal_basis() {
        let handle = resolve("reference").unwrap();
        let scenarios = planted_scenarios(4);
        let sub =
            build_sensitivity_subspace(&handle, 2, &scenarios, &SUBSPACE_FRAMINGS, DEFAULT_K)
                .unwrap();
        assert_eq!(sub.basis.len(), DEFAULT_K);
        crate::numerics::check_basis(handle.hidden_dim(), &sub.basis, 1e-8).unwrap();
        for w in sub.explained_variance.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn stage2_identical_prompts_is_rank_error() {
        let handle = resolve("reference").unwrap();
        let scenarios: Vec<Stage2Scenario> = (0..3)
            .map(|i| {
                let base = format!("save one {i}");
                Stage2Scenario {
                    id: format!("s{i}"),
                    base_prompt: base.clone(),
                    framed_prompts: SUBSPACE_FRAMINGS
                        .iter()
                        .map(|p| (*p, base.clone()))
                        .collect(),
                }
            })
            .collect();
        assert!(matches!(
            build_sensitivity_subspace(&handle, 2, &scenarios, &SUBSPACE_FRAMINGS, 2),
            Err(Error::RankDeficient { .. })
        ));
    }

    #[test]
    fn stage2_recovers_planted_plane() {
        // Deltas constructed on a known 2-plane; PCA with k=2 must span it.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let dim = 12;
        let plane = orthonormal(&mut rng, dim, 2);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| {
                let a: f64 = rand::Rng::random_range(&mut rng, -2.0..2.0);
                let b: f64 = rand::Rng::random_range(&mut rng, -2.0..2.0);
                (0..dim).map(|j| a * plane[0][j] + b * plane[1][j]).collect()
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let fit = pca_fit(&x, 2).unwrap();
        // Every recovered component lies in the plane: projecting out the
        // plane's basis leaves nothing.
        for comp in &fit.components {
            let residual = project_out(comp, &plane).unwrap();
            assert!(crate::numerics::norm(&residual) < 1e-6);
        }
    }

    #[test]
    fn stage2_determinism() {
        let handle = resolve("reference").unwrap();
        let scenarios = planted_scenarios(3);
        let a = build_sensitivity_subspace(&handle, 1, &scenarios, &SUBSPACE_FRAMINGS, 2).unwrap();
        let b = build_sensitivity_subspace(&handle, 1, &scenarios, &SUBSPACE_FRAMINGS, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hook_flags() {
        let handle = resolve("reference").unwrap();
        let cfg = ValignConfig {
            layer: 1,
            alpha: 1.0,
            k: 1,
            text_anchor: false,
            steering: false,
            projection: false,
        };
        let (hook, anchor) = make_valign_hook(&cfg, None, None).unwrap();
        assert!(!anchor);
        let h: Vec<f64> = (0..handle.hidden_dim()).map(|i| i as f64).collect();
        assert_eq!(hook.apply(&h).unwrap(), h);

        // Steering without an artifact is a configuration error.
        let cfg_bad = ValignConfig {
            steering: true,
            ..cfg.clone()
        };
        assert!(matches!(
            make_valign_hook(&cfg_bad, None, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn projection_only_hook_matches_project_out() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dim = 16;
        let basis = orthonormal(&mut rng, dim, 2);
        let sub = SensitivitySubspace {
            basis: basis.clone(),
            layer: 1,
            model_id: "reference".into(),
            explained_variance: vec![1.0, 0.5],
            source_framings: SUBSPACE_FRAMINGS.to_vec(),
        };
        let cfg = ValignConfig {
            layer: 1,
            alpha: 1.0,
            k: 2,
            text_anchor: false,
            steering: false,
            projection: true,
        };
        let (hook, _) = make_valign_hook(&cfg, None, Some(&sub)).unwrap();
        let h = rand_vec(&mut rng, dim);
        assert_eq!(hook.apply(&h).unwrap(), project_out(&h, &basis).unwrap());
    }

    #[test]
    fn artifact_mismatch_refused() {
        let handle = resolve("reference").unwrap();
        let sv = SteeringVector {
            w_hat: vec![1.0, 0.0],
            layer: 1,
            model_id: "other-model".into(),
            provenance: Provenance::default(),
        };
        assert!(matches!(
            validate_artifacts(&handle, Some(&sv), None),
            Err(Error::ArtifactMismatch { .. })
        ));
        let sv2 = SteeringVector {
            w_hat: vec![1.0, 0.0],
            layer: 1,
            model_id: "reference".into(),
            provenance: Provenance::default(),
        };
        assert!(matches!(
            validate_artifacts(&handle, Some(&sv2), None),
            Err(Error::ArtifactMismatch { .. })
        ));
    }

    #[test]
    fn gaussian_noise_hook_is_deterministic_and_zero_scale_is_identity() {
        let kind = BaselineHookKind::GaussianNoise {
            layer: 0,
            scale: 0.0,
            seed: 7,
        };
        let hook = make_baseline_hook(&kind).unwrap();
        let h = vec![1.0, 2.0, 3.0];
        assert_eq!(hook.apply(&h).unwrap(), h);

        let kind = BaselineHookKind::GaussianNoise {
            layer: 0,
            scale: 2.0,
            seed: 7,
        };
        let hook = make_baseline_hook(&kind).unwrap();
        let a = hook.apply(&h).unwrap();
        let b = hook.apply(&h).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, h);
    }

    #[test]
    fn additive_vector_matches_steering_only_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let w = unit_normalize(&rand_vec(&mut rng, 8)).unwrap();
        let kind = BaselineHookKind::AdditiveVector {
            layer: 0,
            direction: w.clone(),
            alpha: 1.0,
        };
        let hook = make_baseline_hook(&kind).unwrap();
        let h = rand_vec(&mut rng, 8);
        let expected = valign_transform(&h, &w, &[], 1.0).unwrap();
        assert_eq!(hook.apply(&h).unwrap(), expected);
    }

    #[test]
    fn non_finite_baseline_params_rejected() {
        assert!(matches!(
            make_baseline_hook(&BaselineHookKind::GaussianNoise {
                layer: 0,
                scale: f64::NAN,
                seed: 0
            }),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            make_baseline_hook(&BaselineHookKind::AdditiveVector {
                layer: 0,
                direction: vec![f64::INFINITY],
                alpha: 1.0
            }),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn pinned_layer_table() {
        assert_eq!(default_layer_for("meta-llama/Llama-3.1-8B-Instruct"), Some(22));
        assert_eq!(default_layer_for("Mistral-7B-Instruct-v0.3"), Some(22));
        assert_eq!(default_layer_for("Qwen2.5-7B-Instruct"), Some(18));
        assert_eq!(default_layer_for("Llama-3.1-70B-Instruct"), Some(55));
        assert_eq!(default_layer_for("reference"), None);
    }

    proptest! {
        #[test]
        fn alpha_zero_empty_basis_is_bitwise_identity(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = rand_vec(&mut rng, 12);
            let w = unit_normalize(&rand_vec(&mut rng, 12)).unwrap();
            let out = valign_transform(&h, &w, &[], 0.0).unwrap();
            for (a, b) in h.iter().zip(&out) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        #[test]
        fn projection_component_idempotent(seed in 0u64..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let basis = orthonormal(&mut rng, 10, 3);
            let h = rand_vec(&mut rng, 10);
            let once = valign_transform(&h, &[], &basis, 0.0).unwrap();
            let twice = valign_transform(&once, &[], &basis, 0.0).unwrap();
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
