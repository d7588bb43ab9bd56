//! Layer-wise logit-lens diagnostics: per-layer vocabulary projections,
//! option-logit margins, the framing-induced choice-direction shift, and
//! quadrant-conditioned layer curves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::Quadrant;
use crate::modelio::{ModelHandle, PrefillTrace, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LensCondition {
    Base,
    Framed,
}

/// Per-layer option logits and top token projections for one prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensRecord {
    pub instance_id: String,
    pub condition: LensCondition,
    /// Option label -> per-layer logit, bare and space-prefixed token
    /// variants max-pooled.
    pub option_logits: BTreeMap<String, Vec<f64>>,
    /// Per-layer top-m `(token, logit)` pairs, descending.
    pub top_tokens: Vec<Vec<(TokenId, f64)>>,
}

/// Project every captured layer state to vocabulary logits under the
/// adapter's declared normalization convention.
pub fn lens_project(trace: &PrefillTrace, handle: &ModelHandle) -> Result<Vec<Vec<f64>>> {
    if !handle.capabilities().unembedding_access {
        return Err(Error::Capability {
            model_id: handle.model_id().to_string(),
            capability: "unembedding_access".into(),
        });
    }
    trace
        .hidden
        .iter()
        .map(|h| handle.unembed(h))
        .collect::<Result<Vec<_>>>()
}

/// The logit standing in for an option label at one layer: max over the
/// label's bare and space-prefixed token variants.
pub fn option_logit(handle: &ModelHandle, layer_logits: &[f64], label: &str) -> Result<f64> {
    let mut best: Option<f64> = None;
    for variant in [label.to_string(), format!(" {label}")] {
        if let Some(id) = handle.token_id(&variant) {
            let v = layer_logits[id];
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best.ok_or_else(|| {
        Error::TokenMapping(format!(
            "label `{label}` has no bare or space-prefixed token in the vocabulary"
        ))
    })
}

/// Build a lens record from a trace: per-layer option logits for the given
/// labels plus the top-m full-vocabulary projections.
pub fn build_lens_record(
    handle: &ModelHandle,
    trace: &PrefillTrace,
    instance_id: impl Into<String>,
    condition: LensCondition,
    labels: &[String],
    m: usize,
) -> Result<LensRecord> {
    let per_layer = lens_project(trace, handle)?;
    let mut option_logits: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for label in labels {
        let series = per_layer
            .iter()
            .map(|logits| option_logit(handle, logits, label))
            .collect::<Result<Vec<f64>>>()?;
        option_logits.insert(label.clone(), series);
    }
    let top = per_layer
        .iter()
        .map(|logits| top_tokens(logits, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(LensRecord {
        instance_id: instance_id.into(),
        condition,
        option_logits,
        top_tokens: top,
    })
}

/// Per-layer change in the logit margin of the base-preferred option over
/// the alternative, framed minus base.
pub fn delta_dir(
    base: &LensRecord,
    framed: &LensRecord,
    d_base: &str,
    d_alt: &str,
) -> Result<Vec<f64>> {
    if base.instance_id != framed.instance_id {
        return Err(Error::Pairing {
            instance: framed.instance_id.clone(),
            context: format!("lens records pair `{}` with `{}`", base.instance_id, framed.instance_id),
        });
    }
    let get = |rec: &LensRecord, label: &str| -> Result<Vec<f64>> {
        rec.option_logits.get(label).cloned().ok_or_else(|| {
            Error::TokenMapping(format!("label `{label}` missing from lens record"))
        })
    };
    let fb = get(framed, d_base)?;
    let fa = get(framed, d_alt)?;
    let bb = get(base, d_base)?;
    let ba = get(base, d_alt)?;
    let n = fb.len();
    for (name, v) in [("framed alt", &fa), ("base base", &bb), ("base alt", &ba)] {
        if v.len() != n {
            return Err(Error::Dimension {
                what: format!("lens layers ({name})"),
                expected: n,
                got: v.len(),
            });
        }
    }
    Ok((0..n)
        .map(|l| (fb[l] - fa[l]) - (bb[l] - ba[l]))
        .collect())
}

/// Per-layer mean direction-shift curves, grouped by behavioral quadrant,
/// plus the flip-vs-noflip gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionGapCurve {
    pub per_quadrant: BTreeMap<Quadrant, Vec<f64>>,
    pub counts: BTreeMap<Quadrant, usize>,
    /// Mean over flip records minus mean over noflip records, per layer.
    pub flip_noflip_gap: Vec<f64>,
    /// Quadrants that had no records and were excluded.
    pub warnings: Vec<String>,
}

/// Average the per-record direction shifts within each quadrant and take
/// the record-weighted flip-minus-noflip gap. Requires at least one record
/// on each side of the flip split.
pub fn gap_curves(records: &[(Quadrant, Vec<f64>)]) -> Result<DirectionGapCurve> {
    if records.is_empty() {
        return Err(Error::EmptyInput("gap_curves records".into()));
    }
    let layers = records[0].1.len();
    for (_, curve) in records {
        if curve.len() != layers {
            return Err(Error::Dimension {
                what: "direction curve length".into(),
                expected: layers,
                got: curve.len(),
            });
        }
    }

    let mut sums: BTreeMap<Quadrant, Vec<f64>> = BTreeMap::new();
    let mut counts: BTreeMap<Quadrant, usize> = BTreeMap::new();
    for (q, curve) in records {
        let s = sums.entry(*q).or_insert_with(|| vec![0.0; layers]);
        for (a, b) in s.iter_mut().zip(curve) {
            *a += b;
        }
        *counts.entry(*q).or_insert(0) += 1;
    }

    let mut per_quadrant = BTreeMap::new();
    for (q, s) in &sums {
        let n = counts[q] as f64;
        per_quadrant.insert(*q, s.iter().map(|v| v / n).collect::<Vec<f64>>());
    }
    let warnings = [Quadrant::FH, Quadrant::FL, Quadrant::NH, Quadrant::NL]
        .iter()
        .filter(|q| !counts.contains_key(q))
        .map(|q| format!("quadrant {q} has no records; excluded"))
        .collect();

    let is_flip = |q: Quadrant| matches!(q, Quadrant::FH | Quadrant::FL);
    let flip_n = records.iter().filter(|(q, _)| is_flip(*q)).count();
    let noflip_n = records.len() - flip_n;
    if flip_n == 0 || noflip_n == 0 {
        return Err(Error::EmptySet(
            "gap needs at least one flip and one noflip record".into(),
        ));
    }
    let mut flip_mean = vec![0.0; layers];
    let mut noflip_mean = vec![0.0; layers];
    for (q, curve) in records {
        let (target, n) = if is_flip(*q) {
            (&mut flip_mean, flip_n as f64)
        } else {
            (&mut noflip_mean, noflip_n as f64)
        };
        for (a, b) in target.iter_mut().zip(curve) {
            *a += b / n;
        }
    }
    let flip_noflip_gap = flip_mean
        .iter()
        .zip(&noflip_mean)
        .map(|(f, n)| f - n)
        .collect();

    Ok(DirectionGapCurve {
        per_quadrant,
        counts,
        flip_noflip_gap,
        warnings,
    })
}

/// The `m` highest-logit tokens at one layer, descending, ties by token id.
pub fn top_tokens(layer_logits: &[f64], m: usize) -> Result<Vec<(TokenId, f64)>> {
    if m > layer_logits.len() {
        return Err(Error::Dimension {
            what: "top_tokens m".into(),
            expected: layer_logits.len(),
            got: m,
        });
    }
    let mut idx: Vec<TokenId> = (0..layer_logits.len()).collect();
    idx.sort_by(|&a, &b| {
        layer_logits[b]
            .partial_cmp(&layer_logits[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    Ok(idx.into_iter().take(m).map(|i| (i, layer_logits[i])).collect())
}
