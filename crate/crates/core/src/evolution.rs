//! Mapping diffs, the mapping change ratio and the impact of ontology
//! changes on mapping changes.

use std::collections::{BTreeSet, HashSet};
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::diff::DiffResult;
use crate::error::{Error, Result};
use crate::mapping::Mapping;

pub type Pair = (String, String);

pub const MAPPING_DIFF_TSV_HEADER: &str = "op\tleft_accession\tright_accession";

/// `mdiff(M_v, M_v+1)`: added and deleted correspondence pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingDiff {
    pub old_label: u32,
    pub new_label: u32,
    pub add: BTreeSet<Pair>,
    pub del: BTreeSet<Pair>,
    pub unchanged_count: usize,
}

/// Set differences over accession pairs; confidences are ignored.
pub fn mapping_diff(old: &Mapping, new: &Mapping) -> Result<MappingDiff> {
    if old.config != new.config {
        return Err(Error::ConfigMismatch(format!(
            "`{}` vs `{}`",
            old.config.label(),
            new.config.label()
        )));
    }
    if old.left_ontology != new.left_ontology || old.right_ontology != new.right_ontology {
        return Err(Error::ConfigMismatch(format!(
            "mappings connect {}/{} and {}/{}",
            old.left_ontology, old.right_ontology, new.left_ontology, new.right_ontology
        )));
    }
    let before = old.pairs();
    let after = new.pairs();
    Ok(MappingDiff {
        old_label: old.left_version,
        new_label: new.left_version,
        add: after.difference(&before).cloned().collect(),
        del: before.difference(&after).cloned().collect(),
        unchanged_count: before.intersection(&after).count(),
    })
}

impl MappingDiff {
    pub fn change_ratio(&self) -> f64 {
        mapping_change_ratio(self)
    }

    /// `(old \ del) ∪ add`.
    pub fn apply(&self, old: &BTreeSet<Pair>) -> BTreeSet<Pair> {
        old.difference(&self.del)
            .cloned()
            .chain(self.add.iter().cloned())
            .collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(MAPPING_DIFF_TSV_HEADER);
        out.push('\n');
        for (op, set) in [("ADD", &self.add), ("DEL", &self.del)] {
            for (l, r) in set {
                let _ = writeln!(out, "{op}\t{l}\t{r}");
            }
        }
        out
    }

    /// Reads the TSV form; labels and the unchanged count are not part of it.
    pub fn from_tsv(tsv: &str) -> Result<Self> {
        let mut lines = tsv.lines();
        if lines.next().map(str::trim_end) != Some(MAPPING_DIFF_TSV_HEADER) {
            return Err(Error::format(
                "mapping diff TSV",
                format!("expected header `{MAPPING_DIFF_TSV_HEADER}`"),
            ));
        }
        let mut diff = MappingDiff {
            old_label: 0,
            new_label: 0,
            add: BTreeSet::new(),
            del: BTreeSet::new(),
            unchanged_count: 0,
        };
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.split('\t').collect();
            let pair = match cols[..] {
                [_, l, r] => (l.to_string(), r.to_string()),
                _ => {
                    return Err(Error::format(
                        "mapping diff TSV",
                        format!("line {}: expected 3 columns", i + 2),
                    ))
                }
            };
            match cols[0] {
                "ADD" => diff.add.insert(pair),
                "DEL" => diff.del.insert(pair),
                other => {
                    return Err(Error::format(
                        "mapping diff TSV",
                        format!("line {}: unknown op `{other}`", i + 2),
                    ))
                }
            };
        }
        Ok(diff)
    }
}

/// `|Add ∪ Del| / |M_v ∪ M_v+1|`; zero when both mappings are empty.
pub fn mapping_change_ratio(d: &MappingDiff) -> f64 {
    let changed = d.add.len() + d.del.len();
    let union = changed + d.unchanged_count;
    if union == 0 {
        0.0
    } else {
        changed as f64 / union as f64
    }
}

/// Share of `o_ch` concepts that occur on either side of a pair in `m_ch`.
/// `None` when `o_ch` is empty.
pub fn impact_ratio<'a>(
    o_ch: impl IntoIterator<Item = &'a str>,
    m_ch: &BTreeSet<Pair>,
) -> Option<f64> {
    let touched: HashSet<&str> = m_ch
        .iter()
        .flat_map(|(l, r)| [l.as_str(), r.as_str()])
        .collect();
    let concepts: BTreeSet<&str> = o_ch.into_iter().collect();
    if concepts.is_empty() {
        return None;
    }
    let hit = concepts.iter().filter(|c| touched.contains(*c)).count();
    Some(hit as f64 / concepts.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OntologyChange {
    Ext,
    Red,
    Rev,
}

impl OntologyChange {
    pub const ALL: [OntologyChange; 3] = [
        OntologyChange::Ext,
        OntologyChange::Red,
        OntologyChange::Rev,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for OntologyChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OntologyChange::Ext => "Ext",
            OntologyChange::Red => "Red",
            OntologyChange::Rev => "Rev",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingChange {
    Add,
    Del,
}

impl MappingChange {
    pub const ALL: [MappingChange; 2] = [MappingChange::Add, MappingChange::Del];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MappingChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MappingChange::Add => "Add",
            MappingChange::Del => "Del",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactCell {
    pub o_ch: OntologyChange,
    pub m_ch: MappingChange,
    pub impacted: usize,
    pub total: usize,
    /// `None` when `total` is zero.
    pub ratio: Option<f64>,
}

/// Six impact ratios indexed by (Ext/Red/Rev) × (Add/Del).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactMatrix {
    pub cells: Vec<ImpactCell>,
}

impl ImpactMatrix {
    pub fn cell(&self, o_ch: OntologyChange, m_ch: MappingChange) -> &ImpactCell {
        &self.cells[o_ch.index() * 2 + m_ch.index()]
    }

    pub fn ratio(&self, o_ch: OntologyChange, m_ch: MappingChange) -> Option<f64> {
        self.cell(o_ch, m_ch).ratio
    }

    /// Ratios as `[o_ch][m_ch]`.
    pub fn ratios(&self) -> [[Option<f64>; 2]; 3] {
        let mut out = [[None; 2]; 3];
        for c in &self.cells {
            out[c.o_ch.index()][c.m_ch.index()] = c.ratio;
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("impact matrix serializes")
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("o_ch\tm_ch\timpacted\ttotal\tratio\n");
        for c in &self.cells {
            let ratio = c
                .ratio
                .map_or_else(|| "NA".to_string(), |r| format!("{r:.6}"));
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                c.o_ch, c.m_ch, c.impacted, c.total, ratio
            );
        }
        out
    }
}

fn change_set(diff: &DiffResult, o_ch: OntologyChange) -> BTreeSet<&str> {
    match o_ch {
        OntologyChange::Ext => diff.ext_accessions(),
        OntologyChange::Red => diff.red_accessions(),
        OntologyChange::Rev => diff.rev_accessions(),
    }
}

/// Impact matrix over the union of both ontologies' change sets.
///
/// Concepts of the left ontology are looked up among the left sides of the
/// changed pairs and right-ontology concepts among the right sides, so the
/// union stays disjoint even when the two ontologies share accessions.
pub fn impact_matrix(left: &DiffResult, right: &DiffResult, md: &MappingDiff) -> ImpactMatrix {
    let mut cells = Vec::with_capacity(6);
    for o_ch in OntologyChange::ALL {
        let left_changed = change_set(left, o_ch);
        let right_changed = change_set(right, o_ch);
        for m_ch in MappingChange::ALL {
            let pairs = match m_ch {
                MappingChange::Add => &md.add,
                MappingChange::Del => &md.del,
            };
            let lefts: HashSet<&str> = pairs.iter().map(|p| p.0.as_str()).collect();
            let rights: HashSet<&str> = pairs.iter().map(|p| p.1.as_str()).collect();
            let impacted = left_changed.iter().filter(|c| lefts.contains(*c)).count()
                + right_changed.iter().filter(|c| rights.contains(*c)).count();
            let total = left_changed.len() + right_changed.len();
            cells.push(ImpactCell {
                o_ch,
                m_ch,
                impacted,
                total,
                ratio: (total > 0).then(|| impacted as f64 / total as f64),
            });
        }
    }
    ImpactMatrix { cells }
}

/// Averages over several transitions: mean change-set sizes and mean
/// ratios per cell, skipping undefined cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactSummary {
    pub transitions: usize,
    pub mean_ext: f64,
    pub mean_red: f64,
    pub mean_rev: f64,
    pub mean_ratios: [[Option<f64>; 2]; 3],
}

pub fn summarize_impacts(matrices: &[ImpactMatrix]) -> ImpactSummary {
    let n = matrices.len();
    let mean_total = |o_ch| {
        if n == 0 {
            return 0.0;
        }
        matrices
            .iter()
            .map(|m| m.cell(o_ch, MappingChange::Add).total as f64)
            .sum::<f64>()
            / n as f64
    };
    let mut mean_ratios = [[None; 2]; 3];
    for o_ch in OntologyChange::ALL {
        for m_ch in MappingChange::ALL {
            let defined: Vec<f64> = matrices
                .iter()
                .filter_map(|m| m.ratio(o_ch, m_ch))
                .collect();
            if !defined.is_empty() {
                mean_ratios[o_ch.index()][m_ch.index()] =
                    Some(defined.iter().sum::<f64>() / defined.len() as f64);
            }
        }
    }
    ImpactSummary {
        transitions: n,
        mean_ext: mean_total(OntologyChange::Ext),
        mean_red: mean_total(OntologyChange::Red),
        mean_rev: mean_total(OntologyChange::Rev),
        mean_ratios,
    }
}
