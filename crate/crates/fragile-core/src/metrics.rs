//! Behavioral framing-sensitivity metrics: flip rate, L1 distributional
//! shift, the FH/FL/NH/NL quadrant decomposition, and aggregation across
//! models, datasets, and framing dimensions with paraphrase baselines.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::FramingDimension;
use crate::elicit::{DecisionDistribution, TIE_LABEL};
use crate::error::{Error, Result};

/// High/low boundary on the L1 shift.
pub const DEFAULT_TAU: f64 = 0.3;

/// L1 is the plain sum of absolute differences, range [0, 2]. The halved
/// variant (total variation distance) is available for comparability audits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum L1Convention {
    Sum,
    Halved,
}

/// What to do with outcomes whose modal label is `tie`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Drop outcomes where either side's majority vote landed on `tie`.
    #[default]
    ExcludeTieModal,
    /// Keep them; a base-vs-framed modal change through `tie` counts as a flip.
    IncludeTieModal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Quadrant {
    FH,
    FL,
    NH,
    NL,
}

impl std::fmt::Display for Quadrant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Quadrant::FH => "FH",
            Quadrant::FL => "FL",
            Quadrant::NH => "NH",
            Quadrant::NL => "NL",
        })
    }
}

/// Paired base/framed elicitation result for one instance and dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramingOutcome {
    pub instance_id: String,
    pub dimension: FramingDimension,
    pub base: DecisionDistribution,
    pub framed: DecisionDistribution,
    pub flipped: bool,
    pub l1: f64,
    pub quadrant: Quadrant,
}

impl FramingOutcome {
    /// Build an outcome, deriving `flipped`, `l1`, and the quadrant.
    pub fn new(
        instance_id: impl Into<String>,
        dimension: FramingDimension,
        base: DecisionDistribution,
        framed: DecisionDistribution,
        tau: f64,
    ) -> Self {
        let flipped = base.modal_label != framed.modal_label;
        let l1 = l1_shift(&base, &framed);
        FramingOutcome {
            instance_id: instance_id.into(),
            dimension,
            flipped,
            l1,
            quadrant: classify_quadrant(flipped, l1, tau),
            base,
            framed,
        }
    }

    pub fn involves_tie(&self) -> bool {
        self.base.modal_label == TIE_LABEL || self.framed.modal_label == TIE_LABEL
    }
}

/// Sum of |p - q| over the union support, missing labels zero-filled.
pub fn l1_shift(p: &DecisionDistribution, q: &DecisionDistribution) -> f64 {
    l1_shift_with(p, q, L1Convention::Sum)
}

pub fn l1_shift_with(p: &DecisionDistribution, q: &DecisionDistribution, conv: L1Convention) -> f64 {
    let support: BTreeSet<&str> = p
        .probs
        .keys()
        .chain(q.probs.keys())
        .map(|s| s.as_str())
        .collect();
    let total: f64 = support
        .iter()
        .map(|label| (p.prob(label) - q.prob(label)).abs())
        .sum();
    match conv {
        L1Convention::Sum => total,
        L1Convention::Halved => total / 2.0,
    }
}

/// FH iff flipped with L1 >= tau (boundary inclusive), FL iff flipped below
/// tau, NH iff stable with L1 >= tau, NL otherwise.
pub fn classify_quadrant(flipped: bool, l1: f64, tau: f64) -> Quadrant {
    match (flipped, l1 >= tau) {
        (true, true) => Quadrant::FH,
        (true, false) => Quadrant::FL,
        (false, true) => Quadrant::NH,
        (false, false) => Quadrant::NL,
    }
}

fn apply_tie_policy<'a>(outcomes: &'a [FramingOutcome], policy: TiePolicy) -> Vec<&'a FramingOutcome> {
    match policy {
        TiePolicy::ExcludeTieModal => outcomes.iter().filter(|o| !o.involves_tie()).collect(),
        TiePolicy::IncludeTieModal => outcomes.iter().collect(),
    }
}

/// Fraction of outcomes whose modal decision changed under framing.
pub fn flip_rate(outcomes: &[FramingOutcome], policy: TiePolicy) -> Result<f64> {
    let kept = apply_tie_policy(outcomes, policy);
    if kept.is_empty() {
        return Err(Error::EmptySet(
            "no outcomes left after tie-exclusion policy".into(),
        ));
    }
    let flips = kept.iter().filter(|o| o.flipped).count();
    Ok(flips as f64 / kept.len() as f64)
}

/// Percentages and means for one report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n: usize,
    pub flip_pct: f64,
    pub fh_pct: f64,
    pub fl_pct: f64,
    pub nh_pct: f64,
    pub nl_pct: f64,
    pub mean_l1: f64,
}

impl CellStats {
    pub fn from_outcomes(outcomes: &[&FramingOutcome]) -> Option<CellStats> {
        if outcomes.is_empty() {
            return None;
        }
        let n = outcomes.len();
        let count = |q: Quadrant| outcomes.iter().filter(|o| o.quadrant == q).count();
        let pct = |c: usize| 100.0 * c as f64 / n as f64;
        let fh = count(Quadrant::FH);
        let fl = count(Quadrant::FL);
        let nh = count(Quadrant::NH);
        let nl = count(Quadrant::NL);
        Some(CellStats {
            n,
            flip_pct: pct(fh + fl),
            fh_pct: pct(fh),
            fl_pct: pct(fl),
            nh_pct: pct(nh),
            nl_pct: pct(nl),
            mean_l1: outcomes.iter().map(|o| o.l1).sum::<f64>() / n as f64,
        })
    }
}

/// Outcome tagged with the run keys used for grouping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaggedOutcome {
    pub model_id: String,
    pub dataset: String,
    pub outcome: FramingOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model_id: String,
    pub dimension: FramingDimension,
    pub dataset: String,
    pub framing: CellStats,
    /// Parallel paraphrase-condition column, when paraphrase outcomes exist
    /// for the same (model, dataset).
    pub paraphrase: Option<CellStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionAverage {
    pub model_id: String,
    pub dimension: FramingDimension,
    /// Unweighted mean over datasets.
    pub framing: CellStats,
    pub paraphrase: Option<CellStats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub rows: Vec<ReportRow>,
    pub dimension_averages: Vec<DimensionAverage>,
    pub warnings: Vec<String>,
}

fn mean_cells(cells: &[&CellStats]) -> CellStats {
    let k = cells.len() as f64;
    CellStats {
        n: cells.iter().map(|c| c.n).sum(),
        flip_pct: cells.iter().map(|c| c.flip_pct).sum::<f64>() / k,
        fh_pct: cells.iter().map(|c| c.fh_pct).sum::<f64>() / k,
        fl_pct: cells.iter().map(|c| c.fl_pct).sum::<f64>() / k,
        nh_pct: cells.iter().map(|c| c.nh_pct).sum::<f64>() / k,
        nl_pct: cells.iter().map(|c| c.nl_pct).sum::<f64>() / k,
        mean_l1: cells.iter().map(|c| c.mean_l1).sum::<f64>() / k,
    }
}

/// Group outcomes by (model, dimension, dataset), attach paraphrase columns,
/// and add unweighted per-dimension averages over datasets. Groups emptied
/// by the tie policy are omitted with a warning.
pub fn aggregate(outcomes: &[TaggedOutcome], policy: TiePolicy) -> AggregateReport {
    let mut groups: BTreeMap<(String, FramingDimension, String), Vec<&FramingOutcome>> =
        BTreeMap::new();
    let mut para_groups: BTreeMap<(String, String), Vec<&FramingOutcome>> = BTreeMap::new();
    let mut warnings = Vec::new();

    for t in outcomes {
        let kept = match policy {
            TiePolicy::ExcludeTieModal if t.outcome.involves_tie() => continue,
            _ => &t.outcome,
        };
        if kept.dimension == FramingDimension::Paraphrase {
            para_groups
                .entry((t.model_id.clone(), t.dataset.clone()))
                .or_default()
                .push(kept);
        } else {
            groups
                .entry((t.model_id.clone(), kept.dimension, t.dataset.clone()))
                .or_default()
                .push(kept);
        }
    }

    let mut rows = Vec::new();
    for ((model, dim, dataset), list) in &groups {
        match CellStats::from_outcomes(list) {
            Some(framing) => {
                let paraphrase = para_groups
                    .get(&(model.clone(), dataset.clone()))
                    .and_then(|p| CellStats::from_outcomes(p));
                rows.push(ReportRow {
                    model_id: model.clone(),
                    dimension: *dim,
                    dataset: dataset.clone(),
                    framing,
                    paraphrase,
                });
            }
            None => warnings.push(format!(
                "group ({model}, {dim}, {dataset}) empty after tie policy; row omitted"
            )),
        }
    }

    let mut dim_groups: BTreeMap<(String, FramingDimension), Vec<&ReportRow>> = BTreeMap::new();
    for row in &rows {
        dim_groups
            .entry((row.model_id.clone(), row.dimension))
            .or_default()
            .push(row);
    }
    let mut dimension_averages = Vec::new();
    for ((model, dim), group) in dim_groups {
        let cells: Vec<&CellStats> = group.iter().map(|r| &r.framing).collect();
        let para_cells: Vec<&CellStats> = group.iter().filter_map(|r| r.paraphrase.as_ref()).collect();
        dimension_averages.push(DimensionAverage {
            model_id: model,
            dimension: dim,
            framing: mean_cells(&cells),
            paraphrase: if para_cells.is_empty() {
                None
            } else {
                Some(mean_cells(&para_cells))
            },
        });
    }

    AggregateReport {
        rows,
        dimension_averages,
        warnings,
    }
}
