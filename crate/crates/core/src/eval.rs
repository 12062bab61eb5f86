//! Sliding-window back-testing of the prediction methods over a version
//! series, with TSV and JSON reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::{diff, DiffResult};
use crate::error::{Error, Result};
use crate::evolution::{mapping_change_ratio, mapping_diff, MappingChange, MappingDiff};
use crate::mapping::Mapping;
use crate::ontology::OntologyVersion;
use crate::prediction::{ChangeCounts, EvolutionHistory, Method, TransitionRecord};

pub const REPORT_TSV_HEADER: &str =
    "scenario\tmatcher\tmethod\th\ttarget\tCR_add\tPR_add\tCR_del\tPR_del\terr_add\terr_del";
pub const SUMMARY_TSV_HEADER: &str = "method\th\tpredictions\ttargets\terr_sum\tavg_err_sum";
pub const SERIES_TSV_HEADER: &str =
    "scenario\tmatcher\tfrom\tto\tOCR_o1\tOCR_o2\tMCR\tmapping_size\tadd\tdel";

/// Everything the backtest needs about one version transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionObservation {
    pub from: u32,
    pub to: u32,
    pub record: TransitionRecord,
    pub ocr_left: f64,
    pub ocr_right: f64,
    pub mcr: f64,
    /// `|M_to|`.
    pub mapping_size: usize,
}

impl TransitionObservation {
    pub fn new(
        left: &DiffResult,
        right: &DiffResult,
        md: &MappingDiff,
        new_mapping: &Mapping,
    ) -> Self {
        TransitionObservation {
            from: left.old_version,
            to: left.new_version,
            record: TransitionRecord::observe(left, right, md),
            ocr_left: left.change_ratio(),
            ocr_right: right.change_ratio(),
            mcr: mapping_change_ratio(md),
            mapping_size: new_mapping.len(),
        }
    }
}

/// The observed transitions of one scenario under one matcher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesInput {
    pub scenario: String,
    pub matcher: String,
    pub transitions: Vec<TransitionObservation>,
}

/// Diffs consecutive versions and mappings of a series.
pub fn observe_series(
    left: &[OntologyVersion],
    right: &[OntologyVersion],
    mappings: &[Mapping],
) -> Result<Vec<TransitionObservation>> {
    if left.len() != right.len() || left.len() != mappings.len() {
        return Err(Error::InvalidConfig(format!(
            "series lengths differ: {} / {} versions, {} mappings",
            left.len(),
            right.len(),
            mappings.len()
        )));
    }
    let mut out = Vec::with_capacity(left.len().saturating_sub(1));
    for v in 1..left.len() {
        let d1 = diff(&left[v - 1], &left[v])?;
        let d2 = diff(&right[v - 1], &right[v])?;
        let md = mapping_diff(&mappings[v - 1], &mappings[v])?;
        out.push(TransitionObservation::new(&d1, &d2, &md, &mappings[v]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BacktestConfig {
    pub methods: Vec<Method>,
    /// Window sizes in versions; each must be at least 2.
    pub h_range: Vec<usize>,
    /// Number of predicted transitions at the end of the series.
    pub targets: usize,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        BacktestConfig {
            methods: Method::DEFAULTS.to_vec(),
            h_range: vec![2, 3, 4, 5],
            targets: 5,
        }
    }
}

impl BacktestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.h_range.is_empty() {
            return Err(Error::InvalidConfig(
                "backtest needs methods and window sizes".into(),
            ));
        }
        if let Some(h) = self.h_range.iter().find(|&&h| h < 2) {
            return Err(Error::InvalidConfig(format!(
                "window size h = {h} is below 2"
            )));
        }
        if self.targets == 0 {
            return Err(Error::InvalidConfig(
                "backtest needs at least one target".into(),
            ));
        }
        Ok(())
    }

    pub fn max_h(&self) -> usize {
        self.h_range.iter().copied().max().unwrap_or(2)
    }

    /// Versions needed: the largest window plus one per target.
    pub fn required_versions(&self) -> usize {
        self.max_h() + self.targets
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub scenario: String,
    pub matcher: String,
    pub method: Method,
    pub h: usize,
    /// Version label of the predicted mapping.
    pub target: u32,
    pub cr_add: u64,
    pub pr_add: u64,
    pub cr_del: u64,
    pub pr_del: u64,
    pub err_add: f64,
    pub err_del: f64,
}

impl ReportRow {
    pub fn abs_error(&self) -> u64 {
        self.cr_add.abs_diff(self.pr_add) + self.cr_del.abs_diff(self.pr_del)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: Method,
    pub h: usize,
    pub predictions: usize,
    pub targets: usize,
    pub err_sum: u64,
    pub avg_err_sum: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub rows: Vec<ReportRow>,
    pub summary: Vec<SummaryRow>,
}

impl EvaluationReport {
    /// Summary rows recomputed from `rows`, keyed by (method, h) in the order
    /// `methods` lists them.
    pub fn summarize(rows: &[ReportRow], methods: &[Method], targets: usize) -> Vec<SummaryRow> {
        let mut acc: BTreeMap<(usize, usize), (usize, u64)> = BTreeMap::new();
        for r in rows {
            let m = methods
                .iter()
                .position(|m| *m == r.method)
                .unwrap_or(methods.len());
            let e = acc.entry((m, r.h)).or_default();
            e.0 += 1;
            e.1 += r.abs_error();
        }
        acc.into_iter()
            .map(|((m, h), (predictions, err_sum))| SummaryRow {
                method: methods.get(m).copied().unwrap_or(rows[0].method),
                h,
                predictions,
                targets,
                err_sum,
                avg_err_sum: err_sum as f64 / targets as f64,
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell<'a> {
    series: &'a SeriesInput,
    method: Method,
    h: usize,
    target: usize,
}

fn evaluate(cell: Cell<'_>) -> Result<ReportRow> {
    let ts = &cell.series.transitions;
    let window = &ts[cell.target + 1 - cell.h..cell.target];
    let target = &ts[cell.target];
    let history = EvolutionHistory::new(
        window.iter().map(|t| t.record.clone()).collect(),
        target.record.counts,
    );
    let p = cell.method.predict(&history)?;
    let size = target.mapping_size.max(1) as f64;
    let cr_add = target.record.add_count as u64;
    let cr_del = target.record.del_count as u64;
    let pr_add = p.rounded(MappingChange::Add);
    let pr_del = p.rounded(MappingChange::Del);
    Ok(ReportRow {
        scenario: cell.series.scenario.clone(),
        matcher: cell.series.matcher.clone(),
        method: cell.method,
        h: cell.h,
        target: target.to,
        cr_add,
        pr_add,
        cr_del,
        pr_del,
        err_add: cr_add.abs_diff(pr_add) as f64 / size,
        err_del: cr_del.abs_diff(pr_del) as f64 / size,
    })
}

#[cfg(feature = "parallel")]
fn evaluate_all(cells: &[Cell<'_>]) -> Result<Vec<ReportRow>> {
    use rayon::prelude::*;
    cells.par_iter().map(|c| evaluate(*c)).collect()
}

#[cfg(not(feature = "parallel"))]
fn evaluate_all(cells: &[Cell<'_>]) -> Result<Vec<ReportRow>> {
    cells.iter().map(|c| evaluate(*c)).collect()
}

/// Predicts the last `targets` transitions of every series with every
/// method and window size. For window `h` the history of a target is the
/// `h − 1` transitions right before it.
pub fn backtest_transitions(
    series: &[SeriesInput],
    config: &BacktestConfig,
) -> Result<EvaluationReport> {
    config.validate()?;
    let mut cells = Vec::new();
    for s in series {
        let n = s.transitions.len();
        if n + 1 < config.required_versions() {
            return Err(Error::InsufficientHistory(format!(
                "{} / {}: {} versions, need {} for h = {} and {} targets",
                s.scenario,
                s.matcher,
                n + 1,
                config.required_versions(),
                config.max_h(),
                config.targets
            )));
        }
        for &method in &config.methods {
            for &h in &config.h_range {
                for target in n - config.targets..n {
                    cells.push(Cell {
                        series: s,
                        method,
                        h,
                        target,
                    });
                }
            }
        }
    }
    let rows = evaluate_all(&cells)?;
    let summary = EvaluationReport::summarize(&rows, &config.methods, config.targets);
    Ok(EvaluationReport { rows, summary })
}

/// Backtest of one scenario under one matcher, straight from the versions
/// and mappings.
pub fn run_backtest(
    scenario: &str,
    left: &[OntologyVersion],
    right: &[OntologyVersion],
    mappings: &[Mapping],
    config: &BacktestConfig,
) -> Result<EvaluationReport> {
    let matcher = mappings
        .first()
        .map(|m| m.config.label())
        .unwrap_or_default();
    let series = SeriesInput {
        scenario: scenario.to_string(),
        matcher,
        transitions: observe_series(left, right, mappings)?,
    };
    backtest_transitions(&[series], config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(ReportFormat::Tsv),
            "json" => Ok(ReportFormat::Json),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// A named output document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

/// TSV gives `backtest.tsv` and `backtest_summary.tsv`; JSON gives
/// `backtest.json`.
pub fn emit_report(report: &EvaluationReport, format: ReportFormat) -> Vec<Artifact> {
    match format {
        ReportFormat::Tsv => vec![
            Artifact {
                name: "backtest.tsv".into(),
                content: rows_tsv(&report.rows),
            },
            Artifact {
                name: "backtest_summary.tsv".into(),
                content: summary_tsv(&report.summary),
            },
        ],
        ReportFormat::Json => vec![Artifact {
            name: "backtest.json".into(),
            content: serde_json::to_string_pretty(report).expect("report serializes"),
        }],
    }
}

pub fn rows_tsv(rows: &[ReportRow]) -> String {
    let mut out = format!("{REPORT_TSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}",
            r.scenario,
            r.matcher,
            r.method,
            r.h,
            r.target,
            r.cr_add,
            r.pr_add,
            r.cr_del,
            r.pr_del,
            r.err_add,
            r.err_del
        );
    }
    out
}

pub fn summary_tsv(rows: &[SummaryRow]) -> String {
    let mut out = format!("{SUMMARY_TSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{:.6}",
            r.method, r.h, r.predictions, r.targets, r.err_sum, r.avg_err_sum
        );
    }
    out
}

/// Per-transition OCR/MCR time series.
pub fn series_tsv(series: &[SeriesInput]) -> String {
    let mut out = format!("{SERIES_TSV_HEADER}\n");
    for s in series {
        for t in &s.transitions {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                s.scenario,
                s.matcher,
                t.from,
                t.to,
                t.ocr_left,
                t.ocr_right,
                t.mcr,
                t.mapping_size,
                t.record.add_count,
                t.record.del_count
            );
        }
    }
    out
}

/// A transition with the given mapping change counts and no ontology data.
pub fn synthetic_transition(
    from: u32,
    add: usize,
    del: usize,
    mapping_size: usize,
) -> TransitionObservation {
    TransitionObservation {
        from,
        to: from + 1,
        record: TransitionRecord {
            add_count: add,
            del_count: del,
            counts: ChangeCounts::default(),
            irs: [[None; 2]; 3],
        },
        ocr_left: 0.0,
        ocr_right: 0.0,
        mcr: 0.0,
        mapping_size,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_series(k: u32) -> SeriesInput {
        SeriesInput {
            scenario: "s".into(),
            matcher: "Name 0.6".into(),
            transitions: (1..k)
                .map(|v| synthetic_transition(v, 10, 2, 100))
                .collect(),
        }
    }

    #[test]
    fn constant_process_is_predicted_exactly() {
        let report =
            backtest_transitions(&[constant_series(10)], &BacktestConfig::default()).unwrap();
        assert_eq!(report.rows.len(), 3 * 4 * 5);
        assert!(report.summary.iter().all(|s| s.err_sum == 0));
    }

    #[test]
    fn windows_follow_the_last_targets() {
        let config = BacktestConfig {
            methods: vec![Method::ME_AVG],
            h_range: vec![5],
            targets: 5,
        };
        let report = backtest_transitions(&[constant_series(10)], &config).unwrap();
        let targets: Vec<u32> = report.rows.iter().map(|r| r.target).collect();
        assert_eq!(targets, vec![6, 7, 8, 9, 10]);
        assert!(backtest_transitions(&[constant_series(9)], &config).is_err());
    }

    #[test]
    fn err_uses_target_mapping_size() {
        let mut s = constant_series(4);
        s.transitions[2] = synthetic_transition(3, 14, 2, 40);
        let config = BacktestConfig {
            methods: vec![Method::ME_AVG],
            h_range: vec![2],
            targets: 1,
        };
        let report = backtest_transitions(&[s], &config).unwrap();
        let row = &report.rows[0];
        assert_eq!((row.cr_add, row.pr_add), (14, 10));
        assert_eq!(row.err_add, 0.1);
        assert_eq!(report.summary[0].err_sum, 4);
    }

    #[test]
    fn empty_report_tsv_is_header_only() {
        let report = EvaluationReport {
            rows: vec![],
            summary: vec![],
        };
        let tsv = emit_report(&report, ReportFormat::Tsv);
        assert_eq!(tsv[0].content, format!("{REPORT_TSV_HEADER}\n"));
        assert!("xml".parse::<ReportFormat>().is_err());
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = BacktestConfig {
            h_range: vec![1],
            ..BacktestConfig::default()
        };
        assert!(c.validate().is_err());
        c.h_range = vec![];
        assert!(c.validate().is_err());
    }
}
