//! Intervention-layer selection: flip-sensitivity gap, value-vector
//! separation, and circumplex-structure scores per layer, aggregated by
//! rank sum.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modelio::ModelHandle;
use crate::numerics::{cosine, rank_aggregate, unit_normalize};

/// The ten basic human values in circular order.
pub const SCHWARTZ_VALUES: [&str; 10] = [
    "power",
    "achievement",
    "hedonism",
    "stimulation",
    "self_direction",
    "universalism",
    "benevolence",
    "tradition",
    "conformity",
    "security",
];

/// Adjacent/opposing value pairs derived from the circular order; shipped
/// as a data asset and overridable from config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchwartzCircle {
    pub order: Vec<String>,
    pub adjacent: Vec<(String, String)>,
    pub opposing: Vec<(String, String)>,
}

impl SchwartzCircle {
    pub fn builtin() -> Self {
        #[derive(Deserialize)]
        struct Raw {
            order: Vec<String>,
            adjacent: Vec<[String; 2]>,
            opposing: Vec<[String; 2]>,
        }
        let raw: Raw =
            serde_json::from_str(crate::assets::SCHWARTZ_CIRCLE_JSON).expect("builtin circle parses");
        SchwartzCircle {
            order: raw.order,
            adjacent: raw.adjacent.into_iter().map(|[a, b]| (a, b)).collect(),
            opposing: raw.opposing.into_iter().map(|[a, b]| (a, b)).collect(),
        }
    }
}

/// Ten unit-norm value directions at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueVectorSet {
    /// Keyed by value name; exactly the ten Schwartz values.
    pub vectors: BTreeMap<String, Vec<f64>>,
    pub layer: usize,
    pub method: String,
}

impl ValueVectorSet {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>, layer: usize, method: impl Into<String>) -> Result<Self> {
        if vectors.len() != SCHWARTZ_VALUES.len() {
            return Err(Error::Config(format!(
                "value vector set needs exactly {} entries, got {}",
                SCHWARTZ_VALUES.len(),
                vectors.len()
            )));
        }
        for name in SCHWARTZ_VALUES {
            let Some(v) = vectors.get(name) else {
                return Err(Error::Config(format!("missing value vector `{name}`")));
            };
            let n = crate::numerics::norm(v);
            if (n - 1.0).abs() > 1e-8 {
                return Err(Error::Config(format!(
                    "value vector `{name}` has norm {n:.9}, expected 1"
                )));
            }
        }
        Ok(ValueVectorSet {
            vectors,
            layer,
            method: method.into(),
        })
    }
}

/// One annotated example: response text, the value it expresses, and the
/// annotation's correlation strength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRecord {
    pub text: String,
    pub value: String,
    pub correlation: f64,
}

/// Load `(text, value, correlation)` records from line-delimited JSON.
pub fn load_value_records(path: impl AsRef<std::path::Path>) -> Result<Vec<ValueRecord>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ValueRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Correlation-weighted mean of last-token hidden states per value at one
/// layer, weights normalized to sum 1, then unit-normalized.
pub fn extract_value_vectors(
    handle: &ModelHandle,
    layer: usize,
    records: &[ValueRecord],
) -> Result<ValueVectorSet> {
    let mut grouped: BTreeMap<&str, Vec<&ValueRecord>> = BTreeMap::new();
    for r in records {
        grouped.entry(r.value.as_str()).or_default().push(r);
    }
    let mut vectors = BTreeMap::new();
    for name in SCHWARTZ_VALUES {
        let Some(group) = grouped.get(name) else {
            return Err(Error::Config(format!("no records for value `{name}`")));
        };
        let weight_sum: f64 = group.iter().map(|r| r.correlation).sum();
        if weight_sum.abs() < 1e-9 {
            return Err(Error::Degenerate {
                what: format!("correlation weights for `{name}`"),
                norm: weight_sum.abs(),
            });
        }
        let dim = handle.hidden_dim();
        let mut mean = vec![0.0; dim];
        for r in group.iter() {
            let toks = handle.tokenize(&r.text);
            let trace = handle.prefill(&toks, &[])?;
            let state = trace.state(layer + 1);
            let w = r.correlation / weight_sum;
            for (m, s) in mean.iter_mut().zip(state) {
                *m += w * s;
            }
        }
        vectors.insert(name.to_string(), unit_normalize(&mean)?);
    }
    ValueVectorSet::new(vectors, layer, "correlation_weighted_mean")
}

/// Per-instance flip/noflip hidden states across layers, paired by id.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedStates {
    pub instance_ids: Vec<String>,
    /// `flip[instance][layer]` last-token states.
    pub flip: Vec<Vec<Vec<f64>>>,
    pub noflip: Vec<Vec<Vec<f64>>>,
}

impl PairedStates {
    /// Join two id-keyed maps; an id present on only one side is a pairing
    /// error.
    pub fn from_maps(
        flip: BTreeMap<String, Vec<Vec<f64>>>,
        noflip: BTreeMap<String, Vec<Vec<f64>>>,
    ) -> Result<Self> {
        for id in flip.keys() {
            if !noflip.contains_key(id) {
                return Err(Error::Pairing {
                    instance: id.clone(),
                    context: "present in flip set only".into(),
                });
            }
        }
        for id in noflip.keys() {
            if !flip.contains_key(id) {
                return Err(Error::Pairing {
                    instance: id.clone(),
                    context: "present in noflip set only".into(),
                });
            }
        }
        let instance_ids: Vec<String> = flip.keys().cloned().collect();
        let flip_states = instance_ids.iter().map(|id| flip[id].clone()).collect();
        let noflip_states = instance_ids.iter().map(|id| noflip[id].clone()).collect();
        Ok(PairedStates {
            instance_ids,
            flip: flip_states,
            noflip: noflip_states,
        })
    }
}

/// Mean L2 distance between flip and noflip states per layer.
pub fn gap_score(pairs: &PairedStates) -> Result<Vec<f64>> {
    if pairs.instance_ids.is_empty() {
        return Err(Error::EmptyInput("gap_score pairs".into()));
    }
    let layers = pairs.flip[0].len();
    for (id, (f, n)) in pairs
        .instance_ids
        .iter()
        .zip(pairs.flip.iter().zip(&pairs.noflip))
    {
        if f.len() != layers || n.len() != layers {
            return Err(Error::Pairing {
                instance: id.clone(),
                context: "layer count mismatch between flip and noflip states".into(),
            });
        }
    }
    let n = pairs.instance_ids.len() as f64;
    Ok((0..layers)
        .map(|l| {
            pairs
                .flip
                .iter()
                .zip(&pairs.noflip)
                .map(|(f, nf)| {
                    f[l].iter()
                        .zip(&nf[l])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt()
                })
                .sum::<f64>()
                / n
        })
        .collect())
}

/// Mean pairwise L2 distance over the 45 unordered value pairs.
pub fn sep_score(values: &ValueVectorSet) -> f64 {
    let names: Vec<&String> = values.vectors.keys().collect();
    let mut total = 0.0;
    let mut count = 0usize;
    for i in 0..names.len() {
        for j in (i + 1)..names.len() {
            let a = &values.vectors[names[i]];
            let b = &values.vectors[names[j]];
            total += a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            count += 1;
        }
    }
    total / count as f64
}

/// Mean cosine over adjacent pairs minus mean cosine over opposing pairs.
pub fn circ_score(
    values: &ValueVectorSet,
    adjacency: &[(String, String)],
    opposition: &[(String, String)],
) -> Result<f64> {
    if adjacency.is_empty() || opposition.is_empty() {
        return Err(Error::Config("adjacency and opposition pair lists must be non-empty".into()));
    }
    let mean_cos = |pairs: &[(String, String)]| -> Result<f64> {
        let mut total = 0.0;
        for (a, b) in pairs {
            let va = values
                .vectors
                .get(a)
                .ok_or_else(|| Error::Config(format!("unknown value name `{a}` in pair list")))?;
            let vb = values
                .vectors
                .get(b)
                .ok_or_else(|| Error::Config(format!("unknown value name `{b}` in pair list")))?;
            total += cosine(va, vb)?;
        }
        Ok(total / pairs.len() as f64)
    };
    Ok(mean_cos(adjacency)? - mean_cos(opposition)?)
}

/// One row of the layer-selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScoreRow {
    pub layer: usize,
    pub gap_score: f64,
    pub sep_score: f64,
    pub circ_score: f64,
    pub gap_rank: f64,
    pub sep_rank: f64,
    pub circ_rank: f64,
    pub rank_sum: f64,
    pub selected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScoreTable {
    pub rows: Vec<LayerScoreRow>,
    pub selected_layer: usize,
    /// True when another layer tied the winning rank sum and lost on index.
    pub tie_broken: bool,
}

/// Rank all three criteria descending (higher score is better) and select
/// the layer with the lowest rank sum.
pub fn select_layer(gap: &[f64], sep: &[f64], circ: &[f64]) -> Result<LayerScoreTable> {
    let lists = [gap.to_vec(), sep.to_vec(), circ.to_vec()];
    let table = rank_aggregate(&lists, &[true, true, true])?;
    let rows = (0..gap.len())
        .map(|l| LayerScoreRow {
            layer: l,
            gap_score: gap[l],
            sep_score: sep[l],
            circ_score: circ[l],
            gap_rank: table.ranks[0][l],
            sep_rank: table.ranks[1][l],
            circ_rank: table.ranks[2][l],
            rank_sum: table.rank_sums[l],
            selected: l == table.selected,
        })
        .collect();
    Ok(LayerScoreTable {
        rows,
        selected_layer: table.selected,
        tie_broken: table.tied,
    })
}
