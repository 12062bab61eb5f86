//! Trigram-based ontology matching with Name, NameSyn and Context
//! strategies, threshold filtering and MaxDelta selection.

mod index;
mod similarity;
mod trigram;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapping::{Correspondence, Mapping};
use crate::ontology::OntologyVersion;

pub use index::{build_trigram_index, TrigramIndex};
pub use similarity::{concept_similarity, ConceptContext};
pub use trigram::{normalize, trigram_similarity, TrigramProfile};

use index::{Profiles, Scratch};
use similarity::best_profile_similarity;

pub const DEFAULT_THRESHOLD: f64 = 0.6;
pub const STRICT_THRESHOLD: f64 = 0.8;
pub const DEFAULT_MAX_DELTA: f64 = 0.02;

/// Slack for comparing a score against `best - max_delta`.
const DELTA_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Name,
    NameSyn,
    Context,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Name, Strategy::NameSyn, Strategy::Context];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Name => "name",
            Strategy::NameSyn => "namesyn",
            Strategy::Context => "context",
        }
    }

    fn title(self) -> &'static str {
        match self {
            Strategy::Name => "Name",
            Strategy::NameSyn => "NameSyn",
            Strategy::Context => "Context",
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "name" => Ok(Strategy::Name),
            "namesyn" => Ok(Strategy::NameSyn),
            "context" => Ok(Strategy::Context),
            other => Err(Error::InvalidConfig(format!("unknown strategy `{other}`"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    pub strategy: Strategy,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_max_delta")]
    pub max_delta: f64,
}

fn default_threshold() -> f64 {
    DEFAULT_THRESHOLD
}

fn default_max_delta() -> f64 {
    DEFAULT_MAX_DELTA
}

impl MatcherConfig {
    pub fn new(strategy: Strategy, threshold: f64) -> Self {
        MatcherConfig {
            strategy,
            threshold,
            max_delta: DEFAULT_MAX_DELTA,
        }
    }

    pub fn with_max_delta(mut self, max_delta: f64) -> Self {
        self.max_delta = max_delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if !in_unit(self.max_delta) {
            return Err(Error::InvalidConfig(format!(
                "max_delta {} outside [0, 1]",
                self.max_delta
            )));
        }
        Ok(())
    }

    /// Display label such as `NameSyn 0.8`.
    pub fn label(&self) -> String {
        format!("{} {}", self.strategy.title(), self.threshold)
    }

    /// File-name friendly label such as `namesyn-0.80`.
    pub fn slug(&self) -> String {
        let base = format!("{}-{:.2}", self.strategy, self.threshold);
        if (self.max_delta - DEFAULT_MAX_DELTA).abs() < 1e-12 {
            base
        } else {
            format!("{base}-d{:.3}", self.max_delta)
        }
    }
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig::new(Strategy::Name, DEFAULT_THRESHOLD)
    }
}

/// How left-side concepts are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing over left concepts; runs sequentially when the
    /// `parallel` feature is disabled.
    #[default]
    Parallel,
}

/// Scored candidate pair as (left index, right index, confidence).
type Candidate = (usize, usize, f64);

/// Matches `o1` against `o2` with the trigram index, in parallel when
/// available.
pub fn match_ontologies(
    o1: &OntologyVersion,
    o2: &OntologyVersion,
    config: &MatcherConfig,
) -> Result<Mapping> {
    match_with(o1, o2, config, Execution::default())
}

pub fn match_with(
    o1: &OntologyVersion,
    o2: &OntologyVersion,
    config: &MatcherConfig,
    execution: Execution,
) -> Result<Mapping> {
    config.validate()?;
    if config.threshold <= 0.0 {
        return match_exhaustive(o1, o2, config);
    }
    let left = Profiles::build(o1, config.strategy);
    let index = TrigramIndex::from_profiles(Profiles::build(o2, config.strategy), config.strategy);
    let per_left = score_indexed(&left, &index, config.threshold, execution);
    let candidates = per_left
        .into_iter()
        .enumerate()
        .flat_map(|(l, hits)| hits.into_iter().map(move |(r, s)| (l, r as usize, s)))
        .collect();
    Ok(finish(o1, o2, config, &left, &index.profiles, candidates))
}

#[cfg(feature = "parallel")]
fn score_indexed(
    left: &Profiles,
    index: &TrigramIndex,
    threshold: f64,
    execution: Execution,
) -> Vec<Vec<(u32, f64)>> {
    use rayon::prelude::*;
    match execution {
        Execution::Sequential => score_sequential(left, index, threshold),
        Execution::Parallel => left
            .per_concept
            .par_iter()
            .map_init(
                || Scratch::new(index),
                |scratch, query| index.candidates(query, threshold, scratch),
            )
            .collect(),
    }
}

#[cfg(not(feature = "parallel"))]
fn score_indexed(
    left: &Profiles,
    index: &TrigramIndex,
    threshold: f64,
    _execution: Execution,
) -> Vec<Vec<(u32, f64)>> {
    score_sequential(left, index, threshold)
}

fn score_sequential(left: &Profiles, index: &TrigramIndex, threshold: f64) -> Vec<Vec<(u32, f64)>> {
    let mut scratch = Scratch::new(index);
    left.per_concept
        .iter()
        .map(|query| index.candidates(query, threshold, &mut scratch))
        .collect()
}

/// Scores every pair of non-obsolete concepts; the reference the index path
/// must agree with.
pub fn match_exhaustive(
    o1: &OntologyVersion,
    o2: &OntologyVersion,
    config: &MatcherConfig,
) -> Result<Mapping> {
    config.validate()?;
    let left = Profiles::build(o1, config.strategy);
    let right = Profiles::build(o2, config.strategy);
    let mut candidates = Vec::new();
    for (l, lp) in left.per_concept.iter().enumerate() {
        for (r, rp) in right.per_concept.iter().enumerate() {
            let score = best_profile_similarity(lp, rp);
            if score >= config.threshold {
                candidates.push((l, r, score));
            }
        }
    }
    Ok(finish(o1, o2, config, &left, &right, candidates))
}

fn finish(
    o1: &OntologyVersion,
    o2: &OntologyVersion,
    config: &MatcherConfig,
    left: &Profiles,
    right: &Profiles,
    candidates: Vec<Candidate>,
) -> Mapping {
    let kept = max_delta_select(&candidates, left.len(), right.len(), config.max_delta);
    Mapping::new(
        (
            o1.ontology_id(),
            o1.version(),
            o2.ontology_id(),
            o2.version(),
        ),
        config.clone(),
        kept.into_iter().map(|(l, r, s)| {
            Correspondence::new(left.accessions[l].clone(), right.accessions[r].clone(), s)
        }),
    )
}

/// Keeps a pair when its score is within `max_delta` of the best score of
/// its left concept or of its right concept.
fn max_delta_select(
    candidates: &[Candidate],
    n_left: usize,
    n_right: usize,
    max_delta: f64,
) -> Vec<Candidate> {
    let mut best_left = vec![f64::NEG_INFINITY; n_left];
    let mut best_right = vec![f64::NEG_INFINITY; n_right];
    for &(l, r, s) in candidates {
        best_left[l] = best_left[l].max(s);
        best_right[r] = best_right[r].max(s);
    }
    let floor = |best: f64| best - max_delta - DELTA_EPSILON;
    candidates
        .iter()
        .copied()
        .filter(|&(l, r, s)| s >= floor(best_left[l]) || s >= floor(best_right[r]))
        .collect()
}
