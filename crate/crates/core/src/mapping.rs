//! Mappings between two ontology versions and their on-disk forms: a TSV of
//! correspondences plus a JSON sidecar with provenance.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::MatcherConfig;

pub const MAPPING_TSV_HEADER: &str = "left_accession\tright_accession\tconfidence";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub left: String,
    pub right: String,
    pub confidence: f64,
}

impl Correspondence {
    pub fn new(left: impl Into<String>, right: impl Into<String>, confidence: f64) -> Self {
        Correspondence {
            left: left.into(),
            right: right.into(),
            confidence,
        }
    }

    pub fn pair(&self) -> (&str, &str) {
        (&self.left, &self.right)
    }
}

/// Provenance stored next to the correspondence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingInfo {
    pub left_ontology: String,
    pub right_ontology: String,
    pub left_version: u32,
    pub right_version: u32,
    pub config: MatcherConfig,
    pub size: usize,
}

/// Set of correspondences, kept sorted by `(left, right)` with unique pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Mapping {
    pub left_ontology: String,
    pub right_ontology: String,
    pub left_version: u32,
    pub right_version: u32,
    pub config: MatcherConfig,
    correspondences: Vec<Correspondence>,
}

impl Mapping {
    /// Builds a mapping; a repeated pair keeps its highest confidence.
    pub fn new(
        info: (&str, u32, &str, u32),
        config: MatcherConfig,
        correspondences: impl IntoIterator<Item = Correspondence>,
    ) -> Self {
        let mut list: Vec<Correspondence> = correspondences.into_iter().collect();
        list.sort_by(|a, b| {
            a.pair()
                .cmp(&b.pair())
                .then(b.confidence.total_cmp(&a.confidence))
        });
        list.dedup_by(|a, b| a.pair() == b.pair());
        Mapping {
            left_ontology: info.0.to_string(),
            left_version: info.1,
            right_ontology: info.2.to_string(),
            right_version: info.3,
            config,
            correspondences: list,
        }
    }

    pub fn correspondences(&self) -> &[Correspondence] {
        &self.correspondences
    }

    pub fn len(&self) -> usize {
        self.correspondences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.correspondences.is_empty()
    }

    /// Correspondence identity: the accession pair, confidence excluded.
    pub fn pairs(&self) -> BTreeSet<(String, String)> {
        self.correspondences
            .iter()
            .map(|c| (c.left.clone(), c.right.clone()))
            .collect()
    }

    pub fn contains(&self, left: &str, right: &str) -> bool {
        self.correspondences
            .binary_search_by(|c| c.pair().cmp(&(left, right)))
            .is_ok()
    }

    pub fn info(&self) -> MappingInfo {
        MappingInfo {
            left_ontology: self.left_ontology.clone(),
            right_ontology: self.right_ontology.clone(),
            left_version: self.left_version,
            right_version: self.right_version,
            config: self.config.clone(),
            size: self.len(),
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.len() + 1));
        out.push_str(MAPPING_TSV_HEADER);
        out.push('\n');
        for c in &self.correspondences {
            let _ = writeln!(out, "{}\t{}\t{:.6}", c.left, c.right, c.confidence);
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.info()).expect("mapping info serializes")
    }

    pub fn from_tsv(tsv: &str, info: MappingInfo) -> Result<Self> {
        let mut lines = tsv.lines();
        match lines.next() {
            Some(h) if h.trim_end() == MAPPING_TSV_HEADER => {}
            other => {
                return Err(Error::format(
                    "mapping TSV",
                    format!("expected header `{MAPPING_TSV_HEADER}`, found {other:?}"),
                ))
            }
        }
        let mut list = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [left, right, conf] = cols[..] else {
                return Err(Error::format(
                    "mapping TSV",
                    format!("line {}: expected 3 columns", i + 2),
                ));
            };
            let confidence: f64 = conf.trim().parse().map_err(|_| {
                Error::format(
                    "mapping TSV",
                    format!("line {}: bad confidence `{conf}`", i + 2),
                )
            })?;
            list.push(Correspondence::new(left, right, confidence));
        }
        Ok(Mapping::new(
            (
                &info.left_ontology,
                info.left_version,
                &info.right_ontology,
                info.right_version,
            ),
            info.config,
            list,
        ))
    }

    /// Writes `<path>` (TSV) and its sidecar (`<path>` with a `.json` extension).
    pub fn write(&self, path: &Path) -> Result<PathBuf> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        std::fs::write(&sidecar, self.sidecar_json()).map_err(|e| Error::io(&sidecar, e))?;
        Ok(sidecar)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let tsv = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let sidecar = sidecar_path(path);
        let info_text = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let info: MappingInfo = serde_json::from_str(&info_text)?;
        Mapping::from_tsv(&tsv, info)
    }
}

pub fn sidecar_path(tsv: &Path) -> PathBuf {
    tsv.with_extension("json")
}
