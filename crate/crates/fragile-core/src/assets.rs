//! Prompt templates and fixed data shipped inside the binary.
//!
//! These are the operational definitions of each framing manipulation, the
//! judge rubric, the value-anchor prompt, and the neutral style corpus.

use crate::corpus::{FramingDimension, Pole};

pub const VALUE_ANCHOR: &str = include_str!("../assets/prompts/value_anchor.txt");
pub const VALUE_QUERY: &str = include_str!("../assets/prompts/value_query.txt");

pub const STYLE_INSTRUCTION: &str = include_str!("../assets/prompts/style_instruction.txt");
pub const STYLE_COT: &str = include_str!("../assets/prompts/style_cot.txt");
pub const STYLE_THIRD_PERSON: &str = include_str!("../assets/prompts/style_third_person.txt");

pub const VALUE_MINING: &str = include_str!("../assets/prompts/value_mining.txt");
pub const VALUE_REWRITE: &str = include_str!("../assets/prompts/value_rewrite.txt");
pub const VIVIDNESS_HIGH: &str = include_str!("../assets/prompts/vividness_high.txt");
pub const VIVIDNESS_LOW: &str = include_str!("../assets/prompts/vividness_low.txt");
pub const TEMPORAL_SHORT: &str = include_str!("../assets/prompts/temporal_short.txt");
pub const TEMPORAL_LONG: &str = include_str!("../assets/prompts/temporal_long.txt");

pub const JUDGE_RUBRIC: &str = include_str!("../assets/prompts/judge_rubric.txt");
pub const JUDGE_TEMPORAL: &str = include_str!("../assets/prompts/judge_temporal.txt");
pub const JUDGE_VIVIDNESS: &str = include_str!("../assets/prompts/judge_vividness.txt");
pub const JUDGE_VALUE_TINTED: &str = include_str!("../assets/prompts/judge_value_tinted.txt");
pub const JUDGE_PARAPHRASE: &str = include_str!("../assets/prompts/judge_paraphrase.txt");

pub const STYLE_CORPUS: &str = include_str!("../assets/style_corpus.txt");
pub const SCHWARTZ_CIRCLE_JSON: &str = include_str!("../assets/schwartz_circle.json");

/// The 30 neutral sentences used for stylistic-variance removal.
pub fn style_corpus_sentences() -> Vec<&'static str> {
    STYLE_CORPUS.lines().filter(|l| !l.trim().is_empty()).collect()
}

/// Generation template for a framing rewrite, keyed by dimension and pole.
/// `None` for poles that keep the text unchanged.
pub fn generation_template(dimension: FramingDimension, pole: Pole) -> Option<&'static str> {
    match (dimension, pole) {
        (FramingDimension::Temporal, Pole::ShortTerm) => Some(TEMPORAL_SHORT),
        (FramingDimension::Temporal, Pole::LongTerm) => Some(TEMPORAL_LONG),
        (FramingDimension::Vividness, Pole::HighVividness) => Some(VIVIDNESS_HIGH),
        (FramingDimension::Vividness, Pole::LowVividness) => Some(VIVIDNESS_LOW),
        (FramingDimension::ValueTinted, Pole::TowardAltValue) => Some(VALUE_REWRITE),
        _ => None,
    }
}

/// The judge rubric with the dimension-specific addendum and the variant
/// text substituted in.
pub fn judge_rubric_for(dimension: FramingDimension, variant_text: &str) -> String {
    let addendum = match dimension {
        FramingDimension::Temporal => JUDGE_TEMPORAL,
        FramingDimension::Vividness => JUDGE_VIVIDNESS,
        FramingDimension::ValueTinted => JUDGE_VALUE_TINTED,
        FramingDimension::Paraphrase => JUDGE_PARAPHRASE,
    };
    JUDGE_RUBRIC
        .replace("{addendum}", addendum.trim_end())
        .replace("{variant}", variant_text)
}

/// Fill a generation template's placeholders.
pub fn render_template(template: &str, fields: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (key, value) in fields {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}
