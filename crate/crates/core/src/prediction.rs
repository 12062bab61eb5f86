//! Estimating the next mapping change from the history of earlier ones:
//! Mapping-based Estimation (ME) and Impact-based Estimation (IE).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::DiffResult;
use crate::error::{Error, Result};
use crate::evolution::{impact_matrix, ImpactMatrix, MappingChange, MappingDiff, OntologyChange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Avg,
    Quadratic,
}

impl WeightKind {
    pub fn suffix(self) -> &'static str {
        match self {
            WeightKind::Avg => "avg",
            WeightKind::Quadratic => "w2",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub kind: WeightKind,
    /// Oldest transition first.
    pub weights: Vec<f64>,
}

impl WeightVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Uniform weights, or weights proportional to `i²` with `i = 1` for the
/// oldest of `n` transitions.
pub fn make_weights(n: usize, kind: WeightKind) -> Result<WeightVector> {
    if n == 0 {
        return Err(Error::Prediction(
            "weights need at least one transition".into(),
        ));
    }
    let weights = match kind {
        WeightKind::Avg => vec![1.0 / n as f64; n],
        WeightKind::Quadratic => {
            let total: f64 = (1..=n).map(|i| (i * i) as f64).sum();
            (1..=n).map(|i| (i * i) as f64 / total).collect()
        }
    };
    Ok(WeightVector { kind, weights })
}

/// Sizes of the Ext, Red and Rev sets of one transition, summed over both
/// ontologies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChangeCounts {
    pub ext: usize,
    pub red: usize,
    pub rev: usize,
}

impl ChangeCounts {
    pub fn new(ext: usize, red: usize, rev: usize) -> Self {
        ChangeCounts { ext, red, rev }
    }

    pub fn get(&self, o_ch: OntologyChange) -> usize {
        match o_ch {
            OntologyChange::Ext => self.ext,
            OntologyChange::Red => self.red,
            OntologyChange::Rev => self.rev,
        }
    }

    pub fn of_diffs(left: &DiffResult, right: &DiffResult) -> Self {
        ChangeCounts {
            ext: left.ext.len() + right.ext.len(),
            red: left.red.len() + right.red.len(),
            rev: left.rev.len() + right.rev.len(),
        }
    }
}

/// What was observed for one version transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub add_count: usize,
    pub del_count: usize,
    pub counts: ChangeCounts,
    /// Impact ratios as `[o_ch][m_ch]`; `None` where undefined.
    pub irs: [[Option<f64>; 2]; 3],
}

impl TransitionRecord {
    pub fn observe(left: &DiffResult, right: &DiffResult, md: &MappingDiff) -> Self {
        Self::from_matrix(md, &impact_matrix(left, right, md))
    }

    pub fn from_matrix(md: &MappingDiff, matrix: &ImpactMatrix) -> Self {
        let total = |o_ch| matrix.cell(o_ch, MappingChange::Add).total;
        TransitionRecord {
            add_count: md.add.len(),
            del_count: md.del.len(),
            counts: ChangeCounts::new(
                total(OntologyChange::Ext),
                total(OntologyChange::Red),
                total(OntologyChange::Rev),
            ),
            irs: matrix.ratios(),
        }
    }

    pub fn actual(&self, m_ch: MappingChange) -> usize {
        match m_ch {
            MappingChange::Add => self.add_count,
            MappingChange::Del => self.del_count,
        }
    }

    pub fn ir(&self, o_ch: OntologyChange, m_ch: MappingChange) -> Option<f64> {
        self.irs[o_ch.index()][m_ch.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionHistory {
    /// Oldest first.
    pub transitions: Vec<TransitionRecord>,
    /// Ontology change counts of the transition being predicted.
    pub current: ChangeCounts,
}

impl EvolutionHistory {
    pub fn new(transitions: Vec<TransitionRecord>, current: ChangeCounts) -> Self {
        EvolutionHistory {
            transitions,
            current,
        }
    }

    /// Window size in versions: `n` transitions span `n + 1` versions.
    pub fn h(&self) -> usize {
        self.transitions.len() + 1
    }

    fn check(&self, weights: &WeightVector) -> Result<()> {
        if self.transitions.is_empty() {
            return Err(Error::Prediction("history has no transitions".into()));
        }
        if weights.len() != self.transitions.len() {
            return Err(Error::Prediction(format!(
                "{} weights for {} transitions",
                weights.len(),
                self.transitions.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "ME")]
    Me,
    #[serde(rename = "IE")]
    Ie,
}

/// An estimator with its weighting, labelled `ME-avg`, `ME-w2`, `IE-w2`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Method {
    pub estimator: Estimator,
    pub weights: WeightKind,
}

impl Method {
    pub const ME_AVG: Method = Method {
        estimator: Estimator::Me,
        weights: WeightKind::Avg,
    };
    pub const ME_W2: Method = Method {
        estimator: Estimator::Me,
        weights: WeightKind::Quadratic,
    };
    pub const IE_W2: Method = Method {
        estimator: Estimator::Ie,
        weights: WeightKind::Quadratic,
    };
    pub const DEFAULTS: [Method; 3] = [Method::ME_AVG, Method::ME_W2, Method::IE_W2];

    pub fn predict(&self, history: &EvolutionHistory) -> Result<Prediction> {
        let weights = make_weights(history.transitions.len(), self.weights)?;
        match self.estimator {
            Estimator::Me => me_predict(history, &weights),
            Estimator::Ie => ie_predict(history, &weights),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let est = match self.estimator {
            Estimator::Me => "ME",
            Estimator::Ie => "IE",
        };
        write!(f, "{est}-{}", self.weights.suffix())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (est, w) = lower
            .split_once('-')
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method `{s}`")))?;
        let estimator = match est {
            "me" => Estimator::Me,
            "ie" => Estimator::Ie,
            _ => return Err(Error::InvalidConfig(format!("unknown method `{s}`"))),
        };
        let weights = match w {
            "avg" => WeightKind::Avg,
            "w2" | "w²" | "quadratic" => WeightKind::Quadratic,
            _ => return Err(Error::InvalidConfig(format!("unknown weighting in `{s}`"))),
        };
        Ok(Method { estimator, weights })
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub method: Estimator,
    pub weight_kind: WeightKind,
    pub h: usize,
    pub add_estimate: f64,
    pub del_estimate: f64,
    pub add_rounded: u64,
    pub del_rounded: u64,
    /// IE only; `None` for a side that fell back to ME.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_add: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_del: Option<f64>,
    /// IE only, as `[o_ch][m_ch]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregated_irs: Option<[[f64; 2]; 3]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Prediction {
    fn new(method: Estimator, weights: &WeightVector, h: usize, add: f64, del: f64) -> Self {
        let add = add.max(0.0);
        let del = del.max(0.0);
        Prediction {
            method,
            weight_kind: weights.kind,
            h,
            add_estimate: add,
            del_estimate: del,
            add_rounded: add.round() as u64,
            del_rounded: del.round() as u64,
            beta_add: None,
            beta_del: None,
            aggregated_irs: None,
            warnings: Vec::new(),
        }
    }

    pub fn estimate(&self, m_ch: MappingChange) -> f64 {
        match m_ch {
            MappingChange::Add => self.add_estimate,
            MappingChange::Del => self.del_estimate,
        }
    }

    pub fn rounded(&self, m_ch: MappingChange) -> u64 {
        match m_ch {
            MappingChange::Add => self.add_rounded,
            MappingChange::Del => self.del_rounded,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("prediction serializes")
    }
}

fn weighted_count(history: &EvolutionHistory, weights: &WeightVector, m_ch: MappingChange) -> f64 {
    history
        .transitions
        .iter()
        .zip(&weights.weights)
        .map(|(t, w)| w * t.actual(m_ch) as f64)
        .sum()
}

/// Weighted average of the historical Add and Del counts.
pub fn me_predict(history: &EvolutionHistory, weights: &WeightVector) -> Result<Prediction> {
    history.check(weights)?;
    Ok(Prediction::new(
        Estimator::Me,
        weights,
        history.h(),
        weighted_count(history, weights, MappingChange::Add),
        weighted_count(history, weights, MappingChange::Del),
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregatedIrs {
    /// `[o_ch][m_ch]`.
    pub values: [[f64; 2]; 3],
    /// Cells undefined in every transition; their value is 0.
    pub undefined: [[bool; 2]; 3],
}

impl AggregatedIrs {
    pub fn get(&self, o_ch: OntologyChange, m_ch: MappingChange) -> f64 {
        self.values[o_ch.index()][m_ch.index()]
    }
}

/// Per cell, the weighted average over the transitions where the cell is
/// defined, with the weights renormalized over those transitions.
pub fn ie_aggregate_irs(
    history: &EvolutionHistory,
    weights: &WeightVector,
) -> Result<AggregatedIrs> {
    history.check(weights)?;
    let mut out = AggregatedIrs {
        values: [[0.0; 2]; 3],
        undefined: [[false; 2]; 3],
    };
    for o_ch in OntologyChange::ALL {
        for m_ch in MappingChange::ALL {
            let (mut sum, mut mass) = (0.0, 0.0);
            for (t, w) in history.transitions.iter().zip(&weights.weights) {
                if let Some(ir) = t.ir(o_ch, m_ch) {
                    sum += w * ir;
                    mass += w;
                }
            }
            let (o, m) = (o_ch.index(), m_ch.index());
            if mass > 0.0 {
                out.values[o][m] = sum / mass;
            } else {
                out.undefined[o][m] = true;
            }
        }
    }
    Ok(out)
}

/// `Σ IR(o_ch, m_ch) · |o_ch|` with undefined ratios contributing nothing.
fn raw_estimate(irs: impl Fn(OntologyChange) -> f64, counts: &ChangeCounts) -> f64 {
    OntologyChange::ALL
        .iter()
        .map(|&o| irs(o) * counts.get(o) as f64)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaEstimate {
    /// Per transition, `actual / raw`; `None` where `raw` is 0.
    pub add_ratios: Vec<Option<f64>>,
    pub del_ratios: Vec<Option<f64>>,
    /// Mean of the defined ratios; `None` when there are none.
    pub add: Option<f64>,
    pub del: Option<f64>,
}

/// Error-correction factors for the Add and Del models, each the mean of
/// `actual / raw` over the transitions whose raw estimate is positive.
pub fn ie_beta(history: &EvolutionHistory) -> Result<BetaEstimate> {
    if history.transitions.is_empty() {
        return Err(Error::Prediction("history has no transitions".into()));
    }
    let ratios = |m_ch| -> Vec<Option<f64>> {
        history
            .transitions
            .iter()
            .map(|t| {
                let raw = raw_estimate(|o| t.ir(o, m_ch).unwrap_or(0.0), &t.counts);
                (raw > 0.0).then(|| t.actual(m_ch) as f64 / raw)
            })
            .collect()
    };
    let mean = |rs: &[Option<f64>]| {
        let defined: Vec<f64> = rs.iter().flatten().copied().collect();
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let add_ratios = ratios(MappingChange::Add);
    let del_ratios = ratios(MappingChange::Del);
    Ok(BetaEstimate {
        add: mean(&add_ratios),
        del: mean(&del_ratios),
        add_ratios,
        del_ratios,
    })
}

/// `β · Σ agg(IR(o_ch, m_ch)) · |o_ch|` over the current counts, for Add and
/// Del separately. A side without a defined β uses the ME estimate.
pub fn ie_predict(history: &EvolutionHistory, weights: &WeightVector) -> Result<Prediction> {
    let irs = ie_aggregate_irs(history, weights)?;
    let beta = ie_beta(history)?;
    let mut estimates = [0.0; 2];
    let mut warnings = Vec::new();
    for m_ch in MappingChange::ALL {
        let b = match m_ch {
            MappingChange::Add => beta.add,
            MappingChange::Del => beta.del,
        };
        estimates[m_ch.index()] = match b {
            Some(b) => b * raw_estimate(|o| irs.get(o, m_ch), &history.current),
            None => {
                warnings.push(format!(
                    "{m_ch}: no transition with a positive raw estimate, using ME"
                ));
                weighted_count(history, weights, m_ch)
            }
        };
    }
    for o_ch in OntologyChange::ALL {
        for m_ch in MappingChange::ALL {
            if irs.undefined[o_ch.index()][m_ch.index()] {
                warnings.push(format!(
                    "IR({o_ch},{m_ch}) undefined in every transition, using 0"
                ));
            }
        }
    }
    let mut p = Prediction::new(
        Estimator::Ie,
        weights,
        history.h(),
        estimates[0],
        estimates[1],
    );
    p.beta_add = beta.add;
    p.beta_del = beta.del;
    p.aggregated_irs = Some(irs.values);
    p.warnings = warnings;
    Ok(p)
}
