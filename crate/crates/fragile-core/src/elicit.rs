//! Decision elicitation: prompt construction under the single-token output
//! contract, temperature multi-sampling, and empirical label distributions
//! with first-step confidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assets;
use crate::corpus::{DecisionOption, FramedVariant, ScenarioInstance};
use crate::error::{Error, Result};
use crate::modelio::{derive_seed, InterventionHook, ModelHandle};

pub const TIE_LABEL: &str = "tie";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub temperature: f64,
    pub top_p: f64,
    pub num_samples: usize,
    pub max_new_tokens: usize,
    pub rng_seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            temperature: 0.7,
            top_p: 0.95,
            num_samples: 10,
            max_new_tokens: 1,
            rng_seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 1 {
            return Err(Error::Config("num_samples must be >= 1".into()));
        }
        if self.temperature <= 0.0 {
            return Err(Error::Config("temperature must be > 0".into()));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::Config("top_p must be in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    Base,
    Instruction,
    Cot,
    ThirdPerson,
}

impl std::fmt::Display for PromptStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PromptStyle::Base => "base",
            PromptStyle::Instruction => "instruction",
            PromptStyle::Cot => "cot",
            PromptStyle::ThirdPerson => "third_person",
        };
        f.write_str(s)
    }
}

/// Which generated token carries the decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    FirstToken,
    /// CoT emits a rationale first; the decision is the final token.
    LastToken,
}

/// Max new tokens when the CoT style overrides the sampling default.
pub const COT_MAX_NEW_TOKENS: usize = 150;

/// A rendered decision prompt plus the contract needed to interpret output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub system: Option<String>,
    pub body: String,
    /// Option labels in order, excluding the tie label.
    pub labels: Vec<String>,
    pub style: PromptStyle,
    pub max_new_tokens_override: Option<usize>,
    pub decision_rule: DecisionRule,
}

impl PromptSpec {
    /// Full prompt text; the anchor, when present, occupies the system
    /// section verbatim.
    pub fn render(&self) -> String {
        match &self.system {
            Some(s) => format!("System:\n{}\n\n{}", s.trim_end(), self.body),
            None => self.body.clone(),
        }
    }

    pub fn allowed_decisions(&self) -> Vec<String> {
        let mut v = self.labels.clone();
        v.push(TIE_LABEL.to_string());
        v
    }
}

/// The scenario and option texts a prompt is built from. Framed variants
/// carry their own rewrites; base instances pass through unchanged.
#[derive(Debug, Clone, Copy)]
pub struct PromptInputs<'a> {
    pub scenario_text: &'a str,
    pub options: &'a [DecisionOption],
}

impl<'a> From<&'a ScenarioInstance> for PromptInputs<'a> {
    fn from(i: &'a ScenarioInstance) -> Self {
        PromptInputs {
            scenario_text: &i.scenario_text,
            options: &i.options,
        }
    }
}

impl<'a> From<&'a FramedVariant> for PromptInputs<'a> {
    fn from(v: &'a FramedVariant) -> Self {
        PromptInputs {
            scenario_text: &v.scenario_text,
            options: &v.options,
        }
    }
}

/// Assemble the decision prompt: optional style preamble, scenario context,
/// one `- {label}: {text}` line per option (resource constraints appended as
/// an extra sentence), then the strict output instruction listing the
/// allowed decisions.
pub fn build_prompt(
    inputs: PromptInputs<'_>,
    anchor: Option<&str>,
    style: PromptStyle,
) -> Result<PromptSpec> {
    if inputs.options.len() < 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: inputs.options.len(),
        });
    }
    let labels: Vec<String> = inputs.options.iter().map(|o| o.label.clone()).collect();

    let mut body = String::new();
    let preamble = match style {
        PromptStyle::Base => None,
        PromptStyle::Instruction => Some(assets::STYLE_INSTRUCTION),
        PromptStyle::Cot => Some(assets::STYLE_COT),
        PromptStyle::ThirdPerson => Some(assets::STYLE_THIRD_PERSON),
    };
    if let Some(p) = preamble {
        body.push_str(p.trim_end());
        body.push_str("\n\n");
    }
    body.push_str(inputs.scenario_text.trim_end());
    body.push_str("\n\n");
    for o in inputs.options {
        body.push_str("- ");
        body.push_str(&o.label);
        body.push_str(": ");
        body.push_str(o.text.trim_end());
        if let Some(c) = &o.resource_constraint {
            body.push(' ');
            body.push_str(c.trim_end());
        }
        body.push('\n');
    }
    body.push('\n');

    let mut allowed = labels.clone();
    allowed.push(TIE_LABEL.to_string());
    body.push_str("You must output ONLY one token/string from the allowed decisions.\n");
    body.push_str("Do NOT explain. Do NOT add punctuation. Do NOT add quotes.\n");
    body.push_str(&format!("Allowed decisions: {}\n", allowed.join(", ")));
    body.push_str("Output format: <DECISION>\n");

    Ok(PromptSpec {
        system: anchor.map(|a| a.trim_end().to_string()),
        body,
        labels,
        style,
        max_new_tokens_override: (style == PromptStyle::Cot).then_some(COT_MAX_NEW_TOKENS),
        decision_rule: if style == PromptStyle::Cot {
            DecisionRule::LastToken
        } else {
            DecisionRule::FirstToken
        },
    })
}

/// Empirical label probabilities from multi-sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionDistribution {
    /// Probability per label over the support `labels U {tie}`; sums to 1
    /// when any sample was valid.
    pub probs: BTreeMap<String, f64>,
    pub modal_label: String,
    /// True when the majority vote was tied and resolved by label order.
    pub modal_tied: bool,
    pub valid_samples: usize,
    pub discarded_samples: usize,
    /// Softmax mass at the first generation step, bare and space-prefixed
    /// token variants aggregated per label. Not renormalized.
    pub first_step_confidence: BTreeMap<String, f64>,
}

impl DecisionDistribution {
    pub fn prob(&self, label: &str) -> f64 {
        self.probs.get(label).copied().unwrap_or(0.0)
    }

    /// Support in vote-order: option labels first, tie last.
    pub fn support(&self) -> Vec<&str> {
        self.probs.keys().map(|s| s.as_str()).collect()
    }
}

fn match_label<'a>(token_text: &str, allowed: &'a [String]) -> Option<&'a str> {
    allowed
        .iter()
        .find(|l| token_text == l.as_str() || token_text == format!(" {l}"))
        .map(|l| l.as_str())
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Normalize raw per-sample decision texts into a distribution over the
/// allowed labels. Non-matching samples are discarded before normalization;
/// majority vote picks the modal label, ties resolving to the earlier label
/// in allowed order with the tie recorded.
pub fn distribution_from_decisions(
    decisions: &[String],
    allowed: &[String],
    first_step_confidence: BTreeMap<String, f64>,
) -> Result<DecisionDistribution> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut raw = Vec::new();
    let mut valid = 0usize;
    for text in decisions {
        match match_label(text, allowed) {
            Some(label) => {
                *counts.entry(label.to_string()).or_insert(0) += 1;
                valid += 1;
            }
            None => raw.push(text.clone()),
        }
    }
    let discarded = raw.len();
    if valid == 0 {
        return Err(Error::AllInvalid { raw });
    }

    let mut probs = BTreeMap::new();
    for l in allowed {
        let c = counts.get(l).copied().unwrap_or(0);
        probs.insert(l.clone(), c as f64 / valid as f64);
    }

    // Majority vote in allowed order: option labels first, tie last.
    let mut modal = allowed[0].clone();
    let mut best = counts.get(&modal).copied().unwrap_or(0);
    for l in &allowed[1..] {
        let c = counts.get(l).copied().unwrap_or(0);
        if c > best {
            best = c;
            modal = l.clone();
        }
    }
    let modal_tied = allowed
        .iter()
        .filter(|l| counts.get(*l).copied().unwrap_or(0) == best)
        .count()
        > 1;

    Ok(DecisionDistribution {
        probs,
        modal_label: modal,
        modal_tied,
        valid_samples: valid,
        discarded_samples: discarded,
        first_step_confidence,
    })
}

/// Draw `num_samples` decisions and fold them into a label distribution.
/// Hooks apply to the single shared prefill; decode extensions for
/// multi-token styles run hook-free.
pub fn elicit_distribution(
    handle: &ModelHandle,
    spec: &PromptSpec,
    config: &SamplingConfig,
    hooks: &[InterventionHook],
) -> Result<DecisionDistribution> {
    config.validate()?;
    let allowed = spec.allowed_decisions();
    let prompt = handle.tokenize(&spec.render());
    let trace = handle.prefill(&prompt, hooks)?;
    let max_new = spec.max_new_tokens_override.unwrap_or(config.max_new_tokens);

    let mut decisions = Vec::with_capacity(config.num_samples);
    for s in 0..config.num_samples {
        let sample_seed = derive_seed(config.rng_seed, s as u64);
        let decision_text: String = if max_new <= 1 {
            let tok =
                handle.sample_next_token(&trace, config.temperature, config.top_p, sample_seed)?;
            handle.detokenize(tok).to_string()
        } else {
            let toks = generate_continuation(
                handle,
                &prompt,
                &trace,
                max_new,
                config.temperature,
                config.top_p,
                sample_seed,
            )?;
            let pick = match spec.decision_rule {
                DecisionRule::FirstToken => toks.first(),
                DecisionRule::LastToken => toks.iter().rev().find(|&&t| {
                    let s = handle.detokenize(t);
                    !s.starts_with('<')
                }),
            };
            pick.map(|&t| handle.detokenize(t).to_string()).unwrap_or_default()
        };
        decisions.push(decision_text);
    }

    let sm = softmax(&trace.logits);
    let mut confidence = BTreeMap::new();
    for l in &allowed {
        let mut mass = 0.0;
        for variant in [l.clone(), format!(" {l}")] {
            if let Some(id) = handle.token_id(&variant) {
                mass += sm[id];
            }
        }
        confidence.insert(l.clone(), mass);
    }

    distribution_from_decisions(&decisions, &allowed, confidence)
}

/// Continue decoding from an already-computed (possibly hooked) prefill
/// trace. Every extension pass runs without hooks.
fn generate_continuation(
    handle: &ModelHandle,
    prompt: &[usize],
    first: &crate::modelio::PrefillTrace,
    max_new_tokens: usize,
    temperature: f64,
    top_p: f64,
    rng_seed: u64,
) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = prompt.to_vec();
    for step in 0..max_new_tokens {
        let tok = if step == 0 {
            handle.sample_next_token(first, temperature, top_p, derive_seed(rng_seed, step as u64))?
        } else {
            let trace = handle.prefill(&current, &[])?;
            handle.sample_next_token(&trace, temperature, top_p, derive_seed(rng_seed, step as u64))?
        };
        out.push(tok);
        current.push(tok);
        if handle.detokenize(tok) == crate::modelio::EOS_TOKEN {
            break;
        }
    }
    Ok(out)
}

/// 1 iff the modal label equals the gold label.
pub fn accuracy(dist: &DecisionDistribution, gold: &str) -> Result<u32> {
    if !dist.probs.contains_key(gold) {
        return Err(Error::InvalidLabel {
            label: gold.to_string(),
            context: "gold label outside the distribution support".into(),
        });
    }
    Ok(u32::from(dist.modal_label == gold))
}
