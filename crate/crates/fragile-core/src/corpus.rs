//! Scenario corpus: decision instances, framed variants, label-swapped
//! counterparts, and the asymmetric pole assignment that puts opposing
//! framing poles on the two options.
//!
//! Corpora are stored as UTF-8 line-delimited records with an explicit
//! `kind` field. Every non-empty file starts with a header record carrying
//! the schema version `fragile-corpus/1`.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, IntegrityViolation, Result};

pub const CORPUS_SCHEMA: &str = "fragile-corpus/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Moral,
    Triage,
    Legal,
    RoleConflict,
    Other,
}

/// Framing dimension. `Paraphrase` is the reserved lexical-variation-only
/// condition that rides along as a parallel baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramingDimension {
    ValueTinted,
    Temporal,
    Vividness,
    Paraphrase,
}

impl std::fmt::Display for FramingDimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FramingDimension::ValueTinted => "value_tinted",
            FramingDimension::Temporal => "temporal",
            FramingDimension::Vividness => "vividness",
            FramingDimension::Paraphrase => "paraphrase",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FramingTarget {
    Scenario,
    #[serde(rename = "option")]
    OptionText,
}

/// Pole of a framing manipulation applied to one option (or the scenario).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    ShortTerm,
    LongTerm,
    HighVividness,
    LowVividness,
    TowardAltValue,
    Unchanged,
}

impl std::fmt::Display for Pole {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Pole::ShortTerm => "short_term",
            Pole::LongTerm => "long_term",
            Pole::HighVividness => "high_vividness",
            Pole::LowVividness => "low_vividness",
            Pole::TowardAltValue => "toward_alt_value",
            Pole::Unchanged => "unchanged",
        };
        f.write_str(s)
    }
}

/// One decision option with its single-letter positional label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionOption {
    pub label: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resource_constraint: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioInstance {
    pub id: String,
    pub domain: Domain,
    pub scenario_text: String,
    pub options: Vec<DecisionOption>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase_of: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swap_of: Option<String>,
}

impl ScenarioInstance {
    pub fn labels(&self) -> Vec<&str> {
        self.options.iter().map(|o| o.label.as_str()).collect()
    }

    pub fn option(&self, label: &str) -> Option<&DecisionOption> {
        self.options.iter().find(|o| o.label == label)
    }
}

/// Judge scores attached to a framed variant, 1..=5 each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcScores {
    pub structural_integrity: u8,
    pub framing_salience: u8,
    pub framing_purity: u8,
    pub naturalness: u8,
}

impl QcScores {
    pub fn new(si: u8, sa: u8, pu: u8, na: u8) -> Result<Self> {
        let s = QcScores {
            structural_integrity: si,
            framing_salience: sa,
            framing_purity: pu,
            naturalness: na,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("structural_integrity", self.structural_integrity),
            ("framing_salience", self.framing_salience),
            ("framing_purity", self.framing_purity),
            ("naturalness", self.naturalness),
        ] {
            if !(1..=5).contains(&v) {
                return Err(Error::Config(format!("qc score {name}={v} outside 1..=5")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramedVariant {
    /// Optional stable id; defaults to `{instance_id}/{dimension}` on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub instance_id: String,
    pub dimension: FramingDimension,
    pub target: FramingTarget,
    /// Which pole each option label carries. Covers every label exactly once.
    pub pole_assignment: BTreeMap<String, Pole>,
    pub scenario_text: String,
    pub options: Vec<DecisionOption>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qc: Option<QcScores>,
}

impl FramedVariant {
    pub fn effective_id(&self) -> String {
        self.id
            .clone()
            .unwrap_or_else(|| format!("{}/{}", self.instance_id, self.dimension))
    }
}

/// Scenario-level or per-option pole assignment for one framing dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingAssignment {
    pub dimension: FramingDimension,
    pub target: FramingTarget,
    /// For scenario-level framing: the label whose latent value the rewrite
    /// leans toward.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario_toward: Option<String>,
    pub option_poles: BTreeMap<String, Pole>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub instances: Vec<ScenarioInstance>,
    pub variants: Vec<FramedVariant>,
}

impl Corpus {
    pub fn instance(&self, id: &str) -> Option<&ScenarioInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn variants_of(&self, instance_id: &str) -> Vec<&FramedVariant> {
        self.variants
            .iter()
            .filter(|v| v.instance_id == instance_id)
            .collect()
    }

    /// The label-swapped twin of `id`, when present in the corpus.
    pub fn swap_twin(&self, id: &str) -> Option<&ScenarioInstance> {
        self.instances
            .iter()
            .find(|i| i.swap_of.as_deref() == Some(id))
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Record {
    Header { schema: String },
    Instance(ScenarioInstance),
    Variant(FramedVariant),
}

/// Parse a corpus file, resolve cross-references, and collect every
/// invariant violation. A malformed line fails immediately with its line
/// number; integrity violations are gathered across the whole file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    load_corpus_reader(std::io::BufReader::new(file))
}

pub fn load_corpus_reader(reader: impl BufRead) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        match record {
            Record::Header { schema } => {
                if schema != CORPUS_SCHEMA {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("unsupported schema `{schema}`, expected `{CORPUS_SCHEMA}`"),
                    });
                }
                saw_header = true;
            }
            Record::Instance(inst) => {
                if !saw_header {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "record before schema header".into(),
                    });
                }
                corpus.instances.push(inst);
            }
            Record::Variant(var) => {
                if !saw_header {
                    return Err(Error::Parse {
                        line: line_no,
                        message: "record before schema header".into(),
                    });
                }
                corpus.variants.push(var);
            }
        }
    }
    let violations = check_integrity(&corpus);
    if violations.is_empty() {
        Ok(corpus)
    } else {
        Err(Error::Integrity(violations))
    }
}

/// Serialize back to the line-delimited format. `load(serialize(c)) == c`.
pub fn serialize_corpus(corpus: &Corpus, mut w: impl Write) -> Result<()> {
    let io_err = |e: std::io::Error| Error::io("<writer>", e);
    let header = serde_json::to_string(&Record::Header {
        schema: CORPUS_SCHEMA.to_string(),
    })
    .expect("header serializes");
    writeln!(w, "{header}").map_err(io_err)?;
    for inst in &corpus.instances {
        let line = serde_json::to_string(&Record::Instance(inst.clone())).expect("instance serializes");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    for var in &corpus.variants {
        let line = serde_json::to_string(&Record::Variant(var.clone())).expect("variant serializes");
        writeln!(w, "{line}").map_err(io_err)?;
    }
    Ok(())
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    serialize_corpus(corpus, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path.display().to_string(), e))
}

fn expected_labels(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| char::from(b'A' + i as u8).to_string())
        .collect()
}

fn check_integrity(corpus: &Corpus) -> Vec<IntegrityViolation> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    let push = |out: &mut Vec<IntegrityViolation>, record: &str, message: String| {
        out.push(IntegrityViolation {
            record: record.to_string(),
            message,
        });
    };

    for inst in &corpus.instances {
        if !ids.insert(inst.id.clone()) {
            push(&mut out, &inst.id, "duplicate instance id".into());
        }
        if inst.options.len() < 2 {
            push(&mut out, &inst.id, "fewer than 2 options".into());
        }
        let labels: Vec<String> = inst.options.iter().map(|o| o.label.clone()).collect();
        if labels != expected_labels(inst.options.len()) {
            push(
                &mut out,
                &inst.id,
                format!("option labels {labels:?} are not positional A, B, ..."),
            );
        }
        for o in &inst.options {
            if o.text.is_empty() {
                push(&mut out, &inst.id, format!("option {} has empty text", o.label));
            }
        }
        if let Some(gold) = &inst.gold_label {
            if inst.option(gold).is_none() {
                push(&mut out, &inst.id, format!("gold label `{gold}` not among options"));
            }
        }
    }

    let by_id: BTreeMap<&str, &ScenarioInstance> =
        corpus.instances.iter().map(|i| (i.id.as_str(), i)).collect();

    for inst in &corpus.instances {
        if let Some(src) = &inst.paraphrase_of {
            if !by_id.contains_key(src.as_str()) {
                push(&mut out, &inst.id, format!("dangling paraphrase_of `{src}`"));
            }
        }
        if let Some(src) = &inst.swap_of {
            match by_id.get(src.as_str()) {
                None => push(&mut out, &inst.id, format!("dangling swap_of `{src}`")),
                Some(base) => {
                    let mine: Vec<_> = inst
                        .options
                        .iter()
                        .map(|o| (&o.text, &o.resource_constraint))
                        .collect();
                    let mut theirs: Vec<_> = base
                        .options
                        .iter()
                        .map(|o| (&o.text, &o.resource_constraint))
                        .collect();
                    theirs.reverse();
                    if base.options.len() == 2 && mine != theirs {
                        push(
                            &mut out,
                            &inst.id,
                            format!("swap_of `{src}` options are not positionally exchanged"),
                        );
                    } else if base.options.len() != inst.options.len() {
                        push(&mut out, &inst.id, format!("swap_of `{src}` arity mismatch"));
                    }
                }
            }
        }
    }

    for var in &corpus.variants {
        let vid = var.effective_id();
        let Some(base) = by_id.get(var.instance_id.as_str()) else {
            push(&mut out, &vid, format!("dangling instance_id `{}`", var.instance_id));
            continue;
        };
        if let Some(qc) = &var.qc {
            if let Err(e) = qc.validate() {
                push(&mut out, &vid, e.to_string());
            }
        }
        let base_labels: BTreeSet<&str> = base.options.iter().map(|o| o.label.as_str()).collect();
        let assigned: BTreeSet<&str> = var.pole_assignment.keys().map(|s| s.as_str()).collect();
        if base_labels != assigned {
            push(
                &mut out,
                &vid,
                format!("pole_assignment labels {assigned:?} do not cover options {base_labels:?} exactly"),
            );
        }
        match var.dimension {
            FramingDimension::ValueTinted => {
                if var.target != FramingTarget::Scenario {
                    push(&mut out, &vid, "value_tinted variant must target the scenario".into());
                }
                if var.options != base.options {
                    push(
                        &mut out,
                        &vid,
                        "value_tinted variant must keep options identical to the base instance".into(),
                    );
                }
            }
            FramingDimension::Temporal | FramingDimension::Vividness => {
                if var.target != FramingTarget::OptionText {
                    push(
                        &mut out,
                        &vid,
                        format!("{} variant must target options", var.dimension),
                    );
                }
                if var.scenario_text != base.scenario_text {
                    push(
                        &mut out,
                        &vid,
                        format!("{} variant must keep the base scenario text", var.dimension),
                    );
                }
            }
            FramingDimension::Paraphrase => {}
        }
    }

    out
}

/// Positional label swap for a two-option instance. The returned twin keeps
/// the scenario text, reverses option positions, relabels them positionally
/// (first position = A), remaps the gold label to follow its option, and
/// links back through `swap_of`.
pub fn make_label_swap(instance: &ScenarioInstance) -> Result<ScenarioInstance> {
    if instance.options.len() != 2 {
        return Err(Error::UnsupportedArity {
            expected: 2,
            got: instance.options.len(),
        });
    }
    let labels = expected_labels(2);
    let mut options: Vec<DecisionOption> = instance.options.iter().rev().cloned().collect();
    for (o, l) in options.iter_mut().zip(&labels) {
        o.label = l.clone();
    }
    let gold_label = instance.gold_label.as_ref().map(|g| {
        if g == "A" {
            "B".to_string()
        } else {
            "A".to_string()
        }
    });
    Ok(ScenarioInstance {
        id: format!("{}#swap", instance.id),
        domain: instance.domain,
        scenario_text: instance.scenario_text.clone(),
        options,
        gold_label,
        paraphrase_of: instance.paraphrase_of.clone(),
        swap_of: Some(instance.id.clone()),
    })
}

/// Asymmetric pole assignment relative to the modal base response.
///
/// Temporal puts the short-term pole on the alternative and the long-term
/// pole on the base choice; vividness heightens only the alternative;
/// value tinting rewrites the scenario toward the alternative's latent value
/// and leaves both options untouched.
pub fn assign_framing_poles(
    instance: &ScenarioInstance,
    dimension: FramingDimension,
    base_choice: &str,
) -> Result<FramingAssignment> {
    if instance.option(base_choice).is_none() {
        return Err(Error::InvalidLabel {
            label: base_choice.to_string(),
            context: format!("not an option of instance `{}`", instance.id),
        });
    }
    let mut option_poles = BTreeMap::new();
    match dimension {
        FramingDimension::Temporal => {
            for o in &instance.options {
                let pole = if o.label == base_choice {
                    Pole::LongTerm
                } else {
                    Pole::ShortTerm
                };
                option_poles.insert(o.label.clone(), pole);
            }
            Ok(FramingAssignment {
                dimension,
                target: FramingTarget::OptionText,
                scenario_toward: None,
                option_poles,
            })
        }
        FramingDimension::Vividness => {
            for o in &instance.options {
                let pole = if o.label == base_choice {
                    Pole::Unchanged
                } else {
                    Pole::HighVividness
                };
                option_poles.insert(o.label.clone(), pole);
            }
            Ok(FramingAssignment {
                dimension,
                target: FramingTarget::OptionText,
                scenario_toward: None,
                option_poles,
            })
        }
        FramingDimension::ValueTinted => {
            let alt = instance
                .options
                .iter()
                .map(|o| o.label.as_str())
                .find(|l| *l != base_choice)
                .expect("at least two options");
            for o in &instance.options {
                let pole = if o.label == alt {
                    Pole::TowardAltValue
                } else {
                    Pole::Unchanged
                };
                option_poles.insert(o.label.clone(), pole);
            }
            Ok(FramingAssignment {
                dimension,
                target: FramingTarget::Scenario,
                scenario_toward: Some(alt.to_string()),
                option_poles,
            })
        }
        FramingDimension::Paraphrase => Err(Error::Config(
            "paraphrase is lexical variation only and has no pole assignment".into(),
        )),
    }
}
