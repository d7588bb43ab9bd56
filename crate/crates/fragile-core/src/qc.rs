//! Quality control for generated framed variants: judge-score thresholds,
//! best-per-item selection, and the regenerate-with-next-generator loop.
//! Text generation and judging go through a pluggable client; the crate
//! ships a scripted stub and a subprocess client.

use std::collections::VecDeque;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::assets;
use crate::corpus::{FramedVariant, FramingTarget, Pole, QcScores};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    StructuralIntegrity,
    FramingSalience,
    FramingPurity,
    Naturalness,
}

impl std::fmt::Display for Criterion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Criterion::StructuralIntegrity => "structural_integrity",
            Criterion::FramingSalience => "framing_salience",
            Criterion::FramingPurity => "framing_purity",
            Criterion::Naturalness => "naturalness",
        })
    }
}

/// Pass thresholds: structural integrity and framing purity need at least 3,
/// framing salience and naturalness at least 2. All four must hold.
pub fn apply_thresholds(scores: &QcScores) -> (bool, Vec<Criterion>) {
    let mut failed = Vec::new();
    if scores.structural_integrity < 3 {
        failed.push(Criterion::StructuralIntegrity);
    }
    if scores.framing_purity < 3 {
        failed.push(Criterion::FramingPurity);
    }
    if scores.framing_salience < 2 {
        failed.push(Criterion::FramingSalience);
    }
    if scores.naturalness < 2 {
        failed.push(Criterion::Naturalness);
    }
    (failed.is_empty(), failed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub variant_id: String,
    pub scores: QcScores,
    pub passed: bool,
    pub failed: Vec<Criterion>,
    pub judge_id: String,
}

impl JudgeVerdict {
    pub fn new(variant_id: impl Into<String>, scores: QcScores, judge_id: impl Into<String>) -> Self {
        let (passed, failed) = apply_thresholds(&scores);
        JudgeVerdict {
            variant_id: variant_id.into(),
            scores,
            passed,
            failed,
            judge_id: judge_id.into(),
        }
    }
}

/// Best-per-item orderings. Both published orderings are selectable; the
/// pinned default prefers salience before the total score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SelectionOrder {
    /// passed, then salience, then integrity+salience+purity, then integrity.
    #[default]
    PassSalienceTotalIntegrity,
    /// passed, then integrity+salience+purity, then integrity.
    PassTotalIntegrity,
}

fn total(s: &QcScores) -> u16 {
    s.structural_integrity as u16 + s.framing_salience as u16 + s.framing_purity as u16
}

/// Pick the best candidate under the given ordering; ties keep the earliest
/// input position, so the result is stable under permutation of non-tied
/// candidates.
pub fn select_best<'a>(
    candidates: &'a [(FramedVariant, JudgeVerdict)],
    order: SelectionOrder,
) -> Result<(&'a FramedVariant, &'a JudgeVerdict, SelectionOrder)> {
    if candidates.is_empty() {
        return Err(Error::EmptySet("no qc candidates".into()));
    }
    let key = |v: &JudgeVerdict| -> (u8, u16, u16, u16) {
        match order {
            SelectionOrder::PassSalienceTotalIntegrity => (
                v.passed as u8,
                v.scores.framing_salience as u16,
                total(&v.scores),
                v.scores.structural_integrity as u16,
            ),
            SelectionOrder::PassTotalIntegrity => (
                v.passed as u8,
                total(&v.scores),
                v.scores.structural_integrity as u16,
                0,
            ),
        }
    };
    let mut best = 0usize;
    for i in 1..candidates.len() {
        if key(&candidates[i].1) > key(&candidates[best].1) {
            best = i;
        }
    }
    Ok((&candidates[best].0, &candidates[best].1, order))
}

/// Generation knobs passed through to the client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub max_tokens: usize,
    pub top_p: f64,
    /// Generator model for this call, from the loop's heterogeneous list.
    pub model: Option<String>,
}

impl Default for GenerationParams {
    fn default() -> Self {
        GenerationParams {
            temperature: 0.1,
            max_tokens: 700,
            top_p: 0.95,
            model: None,
        }
    }
}

/// External text-model client. Pure pass-through: no retries, no policy.
pub trait GenerationClient: Send + Sync {
    fn id(&self) -> &str;
    fn generate(&self, prompt: &str, params: &GenerationParams) -> Result<String>;
    fn judge(&self, rubric: &str, variant_text: &str) -> Result<QcScores>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcLoopConfig {
    pub max_regens: usize,
    /// Generators cycled through on regeneration.
    pub generators: Vec<String>,
    pub params: GenerationParams,
    pub order: SelectionOrder,
}

impl Default for QcLoopConfig {
    fn default() -> Self {
        QcLoopConfig {
            max_regens: 2,
            generators: vec!["generator-a".into(), "generator-b".into()],
            params: GenerationParams::default(),
            order: SelectionOrder::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QcOutcome {
    Accepted {
        variant: FramedVariant,
        verdicts: Vec<JudgeVerdict>,
        attempts: usize,
    },
    Rejected {
        verdicts: Vec<JudgeVerdict>,
        attempts: usize,
    },
}

/// The text a judge sees for a variant: the rewritten scenario for
/// scenario-level framing, the rewritten options otherwise.
pub fn variant_judge_text(variant: &FramedVariant) -> String {
    match variant.target {
        FramingTarget::Scenario => variant.scenario_text.clone(),
        FramingTarget::OptionText => variant
            .options
            .iter()
            .map(|o| format!("- {}: {}", o.label, o.text))
            .collect::<Vec<_>>()
            .join("\n"),
    }
}

/// Prompt asking a generator for a fresh rewrite of the variant's framed
/// element(s), from the dimension/pole template assets.
pub fn regeneration_prompt(variant: &FramedVariant) -> Result<String> {
    match variant.target {
        FramingTarget::Scenario => {
            let pole = variant
                .pole_assignment
                .values()
                .find(|p| **p != Pole::Unchanged)
                .copied()
                .unwrap_or(Pole::TowardAltValue);
            let template = assets::generation_template(variant.dimension, pole)
                .ok_or_else(|| Error::Config(format!(
                    "no generation template for {} / {pole}",
                    variant.dimension
                )))?;
            let options = variant
                .options
                .iter()
                .map(|o| format!("- {}: {}", o.label, o.text))
                .collect::<Vec<_>>()
                .join("\n");
            Ok(assets::render_template(
                template,
                &[
                    ("scenario", variant.scenario_text.as_str()),
                    ("options", options.as_str()),
                    ("value_frame", "the latent value orientation of the alternative option"),
                ],
            ))
        }
        FramingTarget::OptionText => {
            let mut parts = Vec::new();
            for option in &variant.options {
                let pole = variant
                    .pole_assignment
                    .get(&option.label)
                    .copied()
                    .unwrap_or(Pole::Unchanged);
                if let Some(template) = assets::generation_template(variant.dimension, pole) {
                    parts.push(assets::render_template(
                        template,
                        &[("option", option.text.as_str())],
                    ));
                }
            }
            if parts.is_empty() {
                return Err(Error::Config(format!(
                    "variant `{}` has no framed options to regenerate",
                    variant.effective_id()
                )));
            }
            Ok(parts.join("\n---\n"))
        }
    }
}

fn apply_regenerated_text(variant: &FramedVariant, text: &str) -> FramedVariant {
    let mut out = variant.clone();
    match variant.target {
        FramingTarget::Scenario => out.scenario_text = text.trim().to_string(),
        FramingTarget::OptionText => {
            // One generated segment per framed option, in option order.
            let mut segments = text.split("\n---\n").map(str::trim);
            for option in out.options.iter_mut() {
                let pole = variant
                    .pole_assignment
                    .get(&option.label)
                    .copied()
                    .unwrap_or(Pole::Unchanged);
                if pole != Pole::Unchanged {
                    if let Some(seg) = segments.next() {
                        if !seg.is_empty() {
                            option.text = seg.to_string();
                        }
                    }
                }
            }
        }
    }
    out
}

/// Judge, and on failure regenerate with the next configured generator, up
/// to `max_regens` regenerations. Never exceeds `max_regens + 1` judge
/// calls per variant.
pub fn run_qc_loop(
    variant: &FramedVariant,
    client: &dyn GenerationClient,
    config: &QcLoopConfig,
) -> Result<QcOutcome> {
    if config.generators.is_empty() {
        return Err(Error::Config("qc loop needs at least one generator".into()));
    }
    let mut verdicts = Vec::new();
    let mut current = variant.clone();

    for attempt in 0..=config.max_regens {
        let rubric = assets::judge_rubric_for(current.dimension, &variant_judge_text(&current));
        let scores = client
            .judge(&rubric, &variant_judge_text(&current))
            .map_err(|e| transportify(e, attempt))?;
        scores.validate()?;
        let verdict = JudgeVerdict::new(current.effective_id(), scores, client.id());
        let passed = verdict.passed;
        verdicts.push(verdict);
        if passed {
            let mut accepted = current.clone();
            accepted.qc = Some(scores);
            return Ok(QcOutcome::Accepted {
                variant: accepted,
                verdicts,
                attempts: attempt + 1,
            });
        }
        if attempt == config.max_regens {
            break;
        }
        let mut params = config.params.clone();
        params.model = Some(config.generators[attempt % config.generators.len()].clone());
        let prompt = regeneration_prompt(&current)?;
        let text = client
            .generate(&prompt, &params)
            .map_err(|e| transportify(e, attempt))?;
        current = apply_regenerated_text(&current, &text);
    }

    let attempts = verdicts.len();
    Ok(QcOutcome::Rejected { verdicts, attempts })
}

fn transportify(e: Error, attempt: usize) -> Error {
    match e {
        Error::Transport { message, .. } => Error::Transport {
            retries: attempt,
            message,
        },
        other => other,
    }
}

// ---------------------------------------------------------------------------
// Clients
// ---------------------------------------------------------------------------

/// Scripted client for tests and dry runs: fixed queues of generations and
/// verdict scores.
pub struct ScriptedClient {
    id: String,
    generations: Mutex<VecDeque<String>>,
    verdicts: Mutex<VecDeque<QcScores>>,
}

impl ScriptedClient {
    pub fn new(
        id: impl Into<String>,
        generations: Vec<String>,
        verdicts: Vec<QcScores>,
    ) -> Self {
        ScriptedClient {
            id: id.into(),
            generations: Mutex::new(generations.into()),
            verdicts: Mutex::new(verdicts.into()),
        }
    }

    /// Load a script file: JSON with `generations: [text]` and
    /// `verdicts: [[si, sa, pu, na]]`.
    pub fn from_script(path: impl AsRef<std::path::Path>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Script {
            #[serde(default)]
            generations: Vec<String>,
            verdicts: Vec<[u8; 4]>,
        }
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let script: Script =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad qc script: {e}")))?;
        let verdicts = script
            .verdicts
            .into_iter()
            .map(|[si, sa, pu, na]| QcScores::new(si, sa, pu, na))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScriptedClient::new(
            format!("stub:{}", path.display()),
            script.generations,
            verdicts,
        ))
    }
}

impl GenerationClient for ScriptedClient {
    fn id(&self) -> &str {
        &self.id
    }

    fn generate(&self, _prompt: &str, _params: &GenerationParams) -> Result<String> {
        self.generations
            .lock()
            .expect("script lock")
            .pop_front()
            .ok_or_else(|| Error::Transport {
                retries: 0,
                message: "scripted client ran out of generations".into(),
            })
    }

    fn judge(&self, _rubric: &str, _variant: &str) -> Result<QcScores> {
        self.verdicts
            .lock()
            .expect("script lock")
            .pop_front()
            .ok_or_else(|| Error::Transport {
                retries: 0,
                message: "scripted client ran out of verdicts".into(),
            })
    }
}

/// Client that shells out to an external program: mode (`generate` or
/// `judge`) as argv[1], prompt on stdin, completion on stdout. Credentials
/// reach the program through the environment.
pub struct CommandClient {
    program: String,
}

impl CommandClient {
    pub fn new(program: impl Into<String>) -> Self {
        CommandClient {
            program: program.into(),
        }
    }

    fn run(&self, mode: &str, input: &str) -> Result<String> {
        use std::io::Write;
        use std::process::{Command, Stdio};
        let mut child = Command::new(&self.program)
            .arg(mode)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Transport {
                retries: 0,
                message: format!("spawn `{}`: {e}", self.program),
            })?;
        child
            .stdin
            .as_mut()
            .expect("piped stdin")
            .write_all(input.as_bytes())
            .map_err(|e| Error::Transport {
                retries: 0,
                message: format!("write to `{}`: {e}", self.program),
            })?;
        let out = child.wait_with_output().map_err(|e| Error::Transport {
            retries: 0,
            message: format!("wait on `{}`: {e}", self.program),
        })?;
        if !out.status.success() {
            return Err(Error::Transport {
                retries: 0,
                message: format!("`{}` exited with {}", self.program, out.status),
            });
        }
        String::from_utf8(out.stdout).map_err(|e| Error::Transport {
            retries: 0,
            message: format!("non-utf8 output from `{}`: {e}", self.program),
        })
    }
}

impl GenerationClient for CommandClient {
    fn id(&self) -> &str {
        &self.program
    }

    fn generate(&self, prompt: &str, _params: &GenerationParams) -> Result<String> {
        self.run("generate", prompt)
    }

    fn judge(&self, rubric: &str, _variant: &str) -> Result<QcScores> {
        let text = self.run("judge", rubric)?;
        let scores: QcScores = serde_json::from_str(text.trim()).map_err(|e| Error::Transport {
            retries: 0,
            message: format!("judge output was not score JSON: {e}"),
        })?;
        scores.validate()?;
        Ok(scores)
    }
}
