//! Orchestration behind the CLI commands: evaluation runs, mitigation
//! condition sweeps, artifact building, layer selection, and lens dumps.
//! All runs are deterministic given their manifest; instance-level work is
//! parallelized and merged in corpus order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifact::{
    file_sha256, sha256_hex, InterventionDescriptor, LensFile, LensFileRecord, ResultsFile,
    RunManifest, VecArtifact,
};
use crate::corpus::{
    load_corpus, make_label_swap, Corpus, FramedVariant, FramingDimension, Pole, ScenarioInstance,
};
use crate::elicit::{accuracy, build_prompt, elicit_distribution, PromptStyle, SamplingConfig};
use crate::error::Error;
use crate::layersel::{
    circ_score, extract_value_vectors, gap_score, select_layer, LayerScoreTable, PairedStates,
    SchwartzCircle, ValueRecord,
};
use crate::lens::{build_lens_record, gap_curves, LensCondition};
use crate::metrics::{aggregate, FramingOutcome, TaggedOutcome, TiePolicy};
use crate::modelio::{resolve, InterventionHook, ModelHandle};
use crate::valign::{
    build_sensitivity_subspace, extract_value_vector, SensitivitySubspace, Stage1Options,
    Stage2Scenario, SteeringVector, SUBSPACE_FRAMINGS,
};

/// Error annotated with the pipeline stage and, when known, the instance.
#[derive(Debug)]
pub struct RunError {
    pub stage: &'static str,
    pub instance: Option<String>,
    pub source: Error,
}

impl RunError {
    fn new(stage: &'static str, source: Error) -> Self {
        RunError {
            stage,
            instance: None,
            source,
        }
    }

    fn with_instance(stage: &'static str, instance: &str, source: Error) -> Self {
        RunError {
            stage,
            instance: Some(instance.to_string()),
            source,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.instance {
            Some(id) => write!(f, "stage={} instance={} : {}", self.stage, id, self.source),
            None => write!(f, "stage={} : {}", self.stage, self.source),
        }
    }
}

pub type RunResult<T> = std::result::Result<T, RunError>;

/// Seed derived from the run seed and stable string parts, so each
/// elicitation is reproducible independent of scheduling.
pub fn stable_seed(base: u64, parts: &[&str]) -> u64 {
    let joined = parts.join("\x1f");
    let digest = sha256_hex(joined.as_bytes());
    let bytes: [u8; 8] = digest.as_bytes()[..8]
        .iter()
        .map(|b| *b)
        .collect::<Vec<u8>>()
        .try_into()
        .expect("8 bytes");
    base ^ u64::from_le_bytes(bytes)
}

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub corpus_path: PathBuf,
    pub model_id: String,
    pub style: PromptStyle,
    /// System-role anchor text, when the condition uses one.
    pub anchor: Option<String>,
    pub sampling: SamplingConfig,
    pub tau: f64,
    pub tie_policy: TiePolicy,
    /// Create label-swapped twins (with remapped variants) for base
    /// instances lacking one in the corpus.
    pub synthesize_swaps: bool,
    pub workers: usize,
    pub hooks: Vec<InterventionHook>,
    pub intervention: InterventionDescriptor,
    pub command: String,
}

impl EvaluateOptions {
    pub fn new(corpus_path: impl Into<PathBuf>, model_id: impl Into<String>) -> Self {
        EvaluateOptions {
            corpus_path: corpus_path.into(),
            model_id: model_id.into(),
            style: PromptStyle::Base,
            anchor: None,
            sampling: SamplingConfig::default(),
            tau: crate::metrics::DEFAULT_TAU,
            tie_policy: TiePolicy::default(),
            synthesize_swaps: false,
            workers: 1,
            hooks: Vec::new(),
            intervention: InterventionDescriptor::none(),
            command: "evaluate".into(),
        }
    }
}

/// Remap a variant onto the label-swapped twin: options reversed and
/// relabeled positionally, pole assignment following the options.
fn swap_variant(variant: &FramedVariant, twin_id: &str) -> FramedVariant {
    let mut options: Vec<_> = variant.options.iter().rev().cloned().collect();
    let labels = ["A", "B"];
    for (o, l) in options.iter_mut().zip(labels) {
        o.label = l.to_string();
    }
    let mut poles = BTreeMap::new();
    if let (Some(a), Some(b)) = (
        variant.pole_assignment.get("A"),
        variant.pole_assignment.get("B"),
    ) {
        poles.insert("A".to_string(), *b);
        poles.insert("B".to_string(), *a);
    }
    FramedVariant {
        id: Some(format!("{}#swap", variant.effective_id())),
        instance_id: twin_id.to_string(),
        dimension: variant.dimension,
        target: variant.target,
        pole_assignment: poles,
        scenario_text: variant.scenario_text.clone(),
        options,
        qc: variant.qc,
    }
}

/// The instance/variant pairs an evaluation run walks, swap twins included.
fn evaluation_jobs(
    corpus: &Corpus,
    synthesize_swaps: bool,
) -> Vec<(ScenarioInstance, Vec<FramedVariant>)> {
    let mut jobs: Vec<(ScenarioInstance, Vec<FramedVariant>)> = Vec::new();
    for inst in &corpus.instances {
        let variants: Vec<FramedVariant> =
            corpus.variants_of(&inst.id).into_iter().cloned().collect();
        jobs.push((inst.clone(), variants));
    }
    if synthesize_swaps {
        let mut synthesized = Vec::new();
        for inst in &corpus.instances {
            if inst.swap_of.is_some() || inst.options.len() != 2 {
                continue;
            }
            if corpus.swap_twin(&inst.id).is_some() {
                continue;
            }
            if let Ok(twin) = make_label_swap(inst) {
                let twin_variants: Vec<FramedVariant> = corpus
                    .variants_of(&inst.id)
                    .into_iter()
                    .map(|v| swap_variant(v, &twin.id))
                    .collect();
                synthesized.push((twin, twin_variants));
            }
        }
        jobs.extend(synthesized);
    }
    jobs
}

struct InstanceResult {
    outcomes: Vec<TaggedOutcome>,
    base_correct: Option<u32>,
    framed_correct: Vec<u32>,
}

fn evaluate_instance(
    handle: &ModelHandle,
    opts: &EvaluateOptions,
    instance: &ScenarioInstance,
    variants: &[FramedVariant],
) -> crate::error::Result<InstanceResult> {
    let anchor = opts.anchor.as_deref();
    let base_spec = build_prompt(instance.into(), anchor, opts.style)?;
    let base_cfg = SamplingConfig {
        rng_seed: stable_seed(opts.sampling.rng_seed, &[&instance.id, "base"]),
        ..opts.sampling
    };
    let base = elicit_distribution(handle, &base_spec, &base_cfg, &opts.hooks)?;

    let mut outcomes = Vec::new();
    let mut framed_correct = Vec::new();
    for variant in variants {
        let spec = build_prompt(variant.into(), anchor, opts.style)?;
        let cfg = SamplingConfig {
            rng_seed: stable_seed(opts.sampling.rng_seed, &[&instance.id, &variant.effective_id()]),
            ..opts.sampling
        };
        let framed = elicit_distribution(handle, &spec, &cfg, &opts.hooks)?;
        if let Some(gold) = &instance.gold_label {
            framed_correct.push(accuracy(&framed, gold)?);
        }
        outcomes.push(TaggedOutcome {
            model_id: opts.model_id.clone(),
            dataset: dataset_tag(instance),
            outcome: FramingOutcome::new(
                instance.id.clone(),
                variant.dimension,
                base.clone(),
                framed,
                opts.tau,
            ),
        });
    }
    let base_correct = match &instance.gold_label {
        Some(gold) => Some(accuracy(&base, gold)?),
        None => None,
    };
    Ok(InstanceResult {
        outcomes,
        base_correct,
        framed_correct,
    })
}

fn dataset_tag(instance: &ScenarioInstance) -> String {
    serde_json::to_value(instance.domain)
        .ok()
        .and_then(|v| v.as_str().map(|s| s.to_string()))
        .unwrap_or_else(|| "other".into())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool builds");
    pool.install(f)
}

/// Elicit base and framed distributions for every instance (and its
/// label-swapped twin), compute outcomes, and aggregate.
pub fn run_evaluate(opts: &EvaluateOptions) -> RunResult<ResultsFile> {
    let corpus = load_corpus(&opts.corpus_path).map_err(|e| RunError::new("load", e))?;
    let corpus_hash =
        file_sha256(&opts.corpus_path).map_err(|e| RunError::new("load", e))?;
    let handle = resolve(&opts.model_id).map_err(|e| RunError::new("resolve-model", e))?;

    let jobs = evaluation_jobs(&corpus, opts.synthesize_swaps);
    let results: Vec<crate::error::Result<InstanceResult>> = with_pool(opts.workers, || {
        jobs.par_iter()
            .map(|(inst, variants)| evaluate_instance(&handle, opts, inst, variants))
            .collect()
    });

    let mut outcomes = Vec::new();
    let mut base_correct = Vec::new();
    let mut framed_correct = Vec::new();
    for (job, result) in jobs.iter().zip(results) {
        let r = result.map_err(|e| RunError::with_instance("elicit", &job.0.id, e))?;
        outcomes.extend(r.outcomes);
        if let Some(b) = r.base_correct {
            base_correct.push(b);
        }
        framed_correct.extend(r.framed_correct);
    }

    let report = aggregate(&outcomes, opts.tie_policy);
    let mut acc = BTreeMap::new();
    if !base_correct.is_empty() {
        acc.insert(
            "base".to_string(),
            base_correct.iter().sum::<u32>() as f64 / base_correct.len() as f64,
        );
    }
    if !framed_correct.is_empty() {
        acc.insert(
            "framed".to_string(),
            framed_correct.iter().sum::<u32>() as f64 / framed_correct.len() as f64,
        );
    }

    let manifest = RunManifest::new(
        opts.command.clone(),
        opts.model_id.clone(),
        opts.corpus_path.display().to_string(),
        corpus_hash,
        opts.sampling,
        opts.style,
        opts.anchor.as_deref().map(|a| sha256_hex(a.as_bytes())),
        opts.intervention.clone(),
        opts.tau,
    );
    Ok(ResultsFile::new(manifest, outcomes, report, acc))
}

// ---------------------------------------------------------------------------
// Artifact building (Stages 1 and 2)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub corpus_path: PathBuf,
    pub model_id: String,
    pub layer: Option<usize>,
    pub k: usize,
    pub anchor: String,
    pub query: String,
    pub style_corpus: Vec<String>,
    pub stage1: Stage1Options,
}

/// Resolve the intervention layer: explicit, then the pinned per-model
/// table, then an error directing the caller to layer selection.
pub fn resolve_layer(handle: &ModelHandle, explicit: Option<usize>) -> crate::error::Result<usize> {
    if let Some(l) = explicit {
        if l >= handle.num_layers() {
            return Err(Error::Config(format!(
                "layer {l} out of range for {}-layer model",
                handle.num_layers()
            )));
        }
        return Ok(l);
    }
    if let Some(l) = crate::valign::default_layer_for(handle.model_id()) {
        return Ok(l);
    }
    Err(Error::Config(format!(
        "no pinned layer for model `{}`; pass --layer or run select-layer",
        handle.model_id()
    )))
}

/// Build Stage-2 scenarios from a corpus: the base prompt plus the four
/// uniform-pole option rewrites, matched by (dimension, pole) variants
/// whose every option carries the same pole.
pub fn stage2_scenarios_from_corpus(
    corpus: &Corpus,
) -> crate::error::Result<Vec<Stage2Scenario>> {
    let mut scenarios = Vec::new();
    for inst in &corpus.instances {
        let base_prompt = build_prompt(inst.into(), None, PromptStyle::Base)?.render();
        let mut framed = BTreeMap::new();
        for variant in corpus.variants_of(&inst.id) {
            let poles: Vec<Pole> = variant.pole_assignment.values().copied().collect();
            let uniform = poles.first().copied().filter(|p| poles.iter().all(|q| q == p));
            if let Some(pole) = uniform {
                if SUBSPACE_FRAMINGS.contains(&pole) {
                    framed.insert(pole, build_prompt(variant.into(), None, PromptStyle::Base)?.render());
                }
            }
        }
        if framed.is_empty() {
            continue;
        }
        let missing: Vec<String> = SUBSPACE_FRAMINGS
            .iter()
            .filter(|p| !framed.contains_key(p))
            .map(|p| p.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "instance `{}` is missing uniform-pole variants for: {}",
                inst.id,
                missing.join(", ")
            )));
        }
        scenarios.push(Stage2Scenario {
            id: inst.id.clone(),
            base_prompt,
            framed_prompts: framed,
        });
    }
    if scenarios.is_empty() {
        return Err(Error::EmptyInput(
            "corpus has no instances with uniform-pole framing variants".into(),
        ));
    }
    Ok(scenarios)
}

pub struct BuiltArtifacts {
    pub steering: SteeringVector,
    pub subspace: SensitivitySubspace,
    pub layer: usize,
}

pub fn run_valign_build(opts: &BuildOptions) -> RunResult<BuiltArtifacts> {
    let corpus = load_corpus(&opts.corpus_path).map_err(|e| RunError::new("load", e))?;
    let handle = resolve(&opts.model_id).map_err(|e| RunError::new("resolve-model", e))?;
    if !handle.capabilities().hidden_capture {
        return Err(RunError::new(
            "capability",
            Error::Capability {
                model_id: handle.model_id().to_string(),
                capability: "hidden_capture".into(),
            },
        ));
    }
    let layer = resolve_layer(&handle, opts.layer).map_err(|e| RunError::new("config", e))?;
    let style_refs: Vec<&str> = opts.style_corpus.iter().map(|s| s.as_str()).collect();
    let steering = extract_value_vector(
        &handle,
        layer,
        &opts.anchor,
        &opts.query,
        &style_refs,
        &opts.stage1,
    )
    .map_err(|e| RunError::new("stage1", e))?;
    let scenarios = stage2_scenarios_from_corpus(&corpus).map_err(|e| RunError::new("stage2", e))?;
    let subspace = build_sensitivity_subspace(&handle, layer, &scenarios, &SUBSPACE_FRAMINGS, opts.k)
        .map_err(|e| RunError::new("stage2", e))?;
    Ok(BuiltArtifacts {
        steering,
        subspace,
        layer,
    })
}

// ---------------------------------------------------------------------------
// Layer selection
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SelectLayerOptions {
    pub corpus_path: PathBuf,
    pub model_id: String,
    pub value_records: Vec<ValueRecord>,
    pub sampling: SamplingConfig,
    pub circle: SchwartzCircle,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerSelectionOutput {
    pub table: LayerScoreTable,
    pub gap_pairs: usize,
}

/// Score every layer on held-out flip/noflip hidden-state separation, value
/// separation, and circumplex structure, then pick the lowest rank sum.
pub fn run_select_layer(opts: &SelectLayerOptions) -> RunResult<LayerSelectionOutput> {
    let corpus = load_corpus(&opts.corpus_path).map_err(|e| RunError::new("load", e))?;
    let handle = resolve(&opts.model_id).map_err(|e| RunError::new("resolve-model", e))?;
    let layers = handle.num_layers();

    // Flip/noflip pairing per instance: mean framed-state per layer over
    // variants that flipped the modal decision vs those that did not.
    let mut flip_map: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let mut noflip_map: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for inst in &corpus.instances {
        let base_spec =
            build_prompt(inst.into(), None, PromptStyle::Base).map_err(|e| {
                RunError::with_instance("elicit", &inst.id, e)
            })?;
        let base_cfg = SamplingConfig {
            rng_seed: stable_seed(opts.sampling.rng_seed, &[&inst.id, "base"]),
            ..opts.sampling
        };
        let base = elicit_distribution(&handle, &base_spec, &base_cfg, &[])
            .map_err(|e| RunError::with_instance("elicit", &inst.id, e))?;

        let mut flip_states: Vec<Vec<Vec<f64>>> = Vec::new();
        let mut noflip_states: Vec<Vec<Vec<f64>>> = Vec::new();
        for variant in corpus.variants_of(&inst.id) {
            let spec = build_prompt(variant.into(), None, PromptStyle::Base)
                .map_err(|e| RunError::with_instance("elicit", &inst.id, e))?;
            let cfg = SamplingConfig {
                rng_seed: stable_seed(opts.sampling.rng_seed, &[&inst.id, &variant.effective_id()]),
                ..opts.sampling
            };
            let framed = elicit_distribution(&handle, &spec, &cfg, &[])
                .map_err(|e| RunError::with_instance("elicit", &inst.id, e))?;
            let trace = handle
                .prefill(&handle.tokenize(&spec.render()), &[])
                .map_err(|e| RunError::with_instance("capture", &inst.id, e))?;
            let states: Vec<Vec<f64>> = (0..layers).map(|l| trace.state(l + 1).to_vec()).collect();
            if framed.modal_label != base.modal_label {
                flip_states.push(states);
            } else {
                noflip_states.push(states);
            }
        }
        if flip_states.is_empty() || noflip_states.is_empty() {
            continue;
        }
        let mean = |group: &[Vec<Vec<f64>>]| -> Vec<Vec<f64>> {
            let n = group.len() as f64;
            (0..layers)
                .map(|l| {
                    let dim = group[0][l].len();
                    let mut acc = vec![0.0; dim];
                    for states in group {
                        for (a, s) in acc.iter_mut().zip(&states[l]) {
                            *a += s / n;
                        }
                    }
                    acc
                })
                .collect()
        };
        flip_map.insert(inst.id.clone(), mean(&flip_states));
        noflip_map.insert(inst.id.clone(), mean(&noflip_states));
    }

    let pairs = PairedStates::from_maps(flip_map, noflip_map)
        .map_err(|e| RunError::new("gap-score", e))?;
    if pairs.instance_ids.is_empty() {
        return Err(RunError::new(
            "gap-score",
            Error::EmptySet("no instance produced both flipped and unflipped variants".into()),
        ));
    }
    let gap = gap_score(&pairs).map_err(|e| RunError::new("gap-score", e))?;

    let mut sep = Vec::with_capacity(layers);
    let mut circ = Vec::with_capacity(layers);
    for layer in 0..layers {
        let set = extract_value_vectors(&handle, layer, &opts.value_records)
            .map_err(|e| RunError::new("value-vectors", e))?;
        sep.push(crate::layersel::sep_score(&set));
        circ.push(
            circ_score(&set, &opts.circle.adjacent, &opts.circle.opposing)
                .map_err(|e| RunError::new("circ-score", e))?,
        );
    }

    let table = select_layer(&gap, &sep, &circ).map_err(|e| RunError::new("select", e))?;
    Ok(LayerSelectionOutput {
        table,
        gap_pairs: pairs.instance_ids.len(),
    })
}

// ---------------------------------------------------------------------------
// Lens dump
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LensOptions {
    pub corpus_path: PathBuf,
    pub model_id: String,
    pub sampling: SamplingConfig,
    pub tau: f64,
    pub top_m: usize,
    pub workers: usize,
}

pub fn run_lens(opts: &LensOptions) -> RunResult<LensFile> {
    let corpus = load_corpus(&opts.corpus_path).map_err(|e| RunError::new("load", e))?;
    let corpus_hash = file_sha256(&opts.corpus_path).map_err(|e| RunError::new("load", e))?;
    let handle = resolve(&opts.model_id).map_err(|e| RunError::new("resolve-model", e))?;

    let mut records = Vec::new();
    for inst in &corpus.instances {
        if inst.options.len() != 2 {
            continue; // direction shift is a two-option margin
        }
        let labels: Vec<String> = inst.options.iter().map(|o| o.label.clone()).collect();
        let base_spec = build_prompt(inst.into(), None, PromptStyle::Base)
            .map_err(|e| RunError::with_instance("prompt", &inst.id, e))?;
        let base_cfg = SamplingConfig {
            rng_seed: stable_seed(opts.sampling.rng_seed, &[&inst.id, "base"]),
            ..opts.sampling
        };
        let base_dist = elicit_distribution(&handle, &base_spec, &base_cfg, &[])
            .map_err(|e| RunError::with_instance("elicit", &inst.id, e))?;
        let d_base = base_dist.modal_label.clone();
        if d_base == crate::elicit::TIE_LABEL {
            continue;
        }
        let d_alt = labels
            .iter()
            .find(|l| **l != d_base)
            .expect("two options")
            .clone();
        let base_trace = handle
            .prefill(&handle.tokenize(&base_spec.render()), &[])
            .map_err(|e| RunError::with_instance("capture", &inst.id, e))?;
        let base_record = build_lens_record(
            &handle,
            &base_trace,
            inst.id.clone(),
            LensCondition::Base,
            &labels,
            opts.top_m,
        )
        .map_err(|e| RunError::with_instance("lens", &inst.id, e))?;

        for variant in corpus.variants_of(&inst.id) {
            let spec = build_prompt(variant.into(), None, PromptStyle::Base)
                .map_err(|e| RunError::with_instance("prompt", &inst.id, e))?;
            let cfg = SamplingConfig {
                rng_seed: stable_seed(opts.sampling.rng_seed, &[&inst.id, &variant.effective_id()]),
                ..opts.sampling
            };
            let framed_dist = elicit_distribution(&handle, &spec, &cfg, &[])
                .map_err(|e| RunError::with_instance("elicit", &inst.id, e))?;
            let outcome = FramingOutcome::new(
                inst.id.clone(),
                variant.dimension,
                base_dist.clone(),
                framed_dist,
                opts.tau,
            );
            let framed_trace = handle
                .prefill(&handle.tokenize(&spec.render()), &[])
                .map_err(|e| RunError::with_instance("capture", &inst.id, e))?;
            let framed_record = build_lens_record(
                &handle,
                &framed_trace,
                inst.id.clone(),
                LensCondition::Framed,
                &labels,
                opts.top_m,
            )
            .map_err(|e| RunError::with_instance("lens", &inst.id, e))?;
            let dd = crate::lens::delta_dir(&base_record, &framed_record, &d_base, &d_alt)
                .map_err(|e| RunError::with_instance("lens", &inst.id, e))?;
            let top = framed_record
                .top_tokens
                .iter()
                .map(|layer| {
                    layer
                        .iter()
                        .map(|(tok, logit)| (handle.detokenize(*tok).to_string(), *logit))
                        .collect()
                })
                .collect();
            records.push(LensFileRecord {
                instance_id: inst.id.clone(),
                dimension: variant.dimension,
                d_base: d_base.clone(),
                d_alt: d_alt.clone(),
                quadrant: outcome.quadrant,
                delta_dir: dd,
                top_tokens: top,
            });
        }
    }

    if records.is_empty() {
        return Err(RunError::new(
            "lens",
            Error::EmptySet("no lens records produced".into()),
        ));
    }

    let mut curves = BTreeMap::new();
    let mut by_dim: BTreeMap<FramingDimension, Vec<(crate::metrics::Quadrant, Vec<f64>)>> =
        BTreeMap::new();
    for r in &records {
        by_dim
            .entry(r.dimension)
            .or_default()
            .push((r.quadrant, r.delta_dir.clone()));
    }
    for (dim, group) in by_dim {
        match gap_curves(&group) {
            Ok(c) => {
                curves.insert(dim.to_string(), c);
            }
            Err(Error::EmptySet(_)) => continue,
            Err(e) => return Err(RunError::new("lens", e)),
        }
    }

    let manifest = RunManifest::new(
        "lens",
        opts.model_id.clone(),
        opts.corpus_path.display().to_string(),
        corpus_hash,
        opts.sampling,
        PromptStyle::Base,
        None,
        InterventionDescriptor::none(),
        opts.tau,
    );
    Ok(LensFile::new(manifest, records, curves))
}

// ---------------------------------------------------------------------------
// Artifact loading for mitigation
// ---------------------------------------------------------------------------

pub fn load_steering(path: &Path) -> crate::error::Result<SteeringVector> {
    VecArtifact::load(path)?.to_steering()
}

pub fn load_subspace(path: &Path) -> crate::error::Result<SensitivitySubspace> {
    VecArtifact::load(path)?.to_subspace()
}
