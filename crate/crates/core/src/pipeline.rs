//! End-to-end run over a version series described by a TOML file: diffs,
//! mappings, mapping diffs, impact matrices, the OCR/MCR series and the
//! prediction backtest, all recorded in a manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diff::{diff, DiffResult};
use crate::error::{Error, Result};
use crate::eval::{
    backtest_transitions, emit_report, series_tsv, BacktestConfig, ReportFormat, SeriesInput,
    TransitionObservation,
};
use crate::evolution::{impact_matrix, mapping_diff};
use crate::matcher::{match_ontologies, MatcherConfig};
use crate::obo::load_ontology;
use crate::ontology::OntologyVersion;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub scenario: String,
    pub output_dir: PathBuf,
    /// Versions of the first ontology, oldest first.
    pub o1: Vec<PathBuf>,
    /// Versions of the second ontology, paired with `o1` by position.
    pub o2: Vec<PathBuf>,
    /// Version labels; `1..=k` when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub versions: Option<Vec<u32>>,
    #[serde(rename = "matcher", default = "default_matchers")]
    pub matchers: Vec<MatcherConfig>,
    /// Backtest settings; no backtest when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<BacktestConfig>,
}

fn default_matchers() -> Vec<MatcherConfig> {
    vec![MatcherConfig::default()]
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.message().to_string()))
    }

    /// Reads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.output_dir = base.join(&config.output_dir);
        for p in config.o1.iter_mut().chain(config.o2.iter_mut()) {
            *p = base.join(&*p);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidConfig(m));
        if self.o1.len() != self.o2.len() {
            return invalid(format!(
                "series lengths differ: {} o1 versions, {} o2 versions",
                self.o1.len(),
                self.o2.len()
            ));
        }
        if self.o1.len() < 2 {
            return invalid("a series needs at least 2 versions".into());
        }
        if let Some(labels) = &self.versions {
            if labels.len() != self.o1.len() {
                return invalid(format!(
                    "{} version labels for {} versions",
                    labels.len(),
                    self.o1.len()
                ));
            }
            if labels.windows(2).any(|w| w[0] >= w[1]) {
                return invalid("version labels must be strictly increasing".into());
            }
        }
        if self.matchers.is_empty() {
            return invalid("no matcher configured".into());
        }
        for (i, m) in self.matchers.iter().enumerate() {
            m.validate()?;
            if self.matchers[..i].iter().any(|o| o.slug() == m.slug()) {
                return invalid(format!("matcher `{}` listed twice", m.label()));
            }
        }
        if let Some(p) = &self.prediction {
            p.validate()?;
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<u32> {
        self.versions
            .clone()
            .unwrap_or_else(|| (1..=self.o1.len() as u32).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub kind: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_stage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub notices: Vec<String>,
    pub artifacts: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// SHA-256 of the manifest JSON.
    pub fn digest(&self) -> String {
        sha256_hex(self.to_json().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

struct Run<'a> {
    config: &'a PipelineConfig,
    manifest: Manifest,
}

impl Run<'_> {
    fn write(&mut self, rel: &str, kind: &str, content: &str) -> Result<()> {
        let path = self.config.output_dir.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(&path, content).map_err(|e| Error::io(&path, e))?;
        self.manifest.artifacts.push(ManifestEntry {
            path: rel.to_string(),
            kind: kind.to_string(),
            sha256: sha256_hex(content.as_bytes()),
        });
        Ok(())
    }

    fn write_manifest(&self) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.config.output_dir)
            .map_err(|e| Error::io(&self.config.output_dir, e))?;
        let path = self.config.output_dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.manifest.to_json()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn in_stage<T>(stage: &'static str, input: impl FnOnce() -> String, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Stage { .. } => e,
        other => Error::Stage {
            stage,
            input: input(),
            source: Box::new(other),
        },
    })
}

/// Result of a completed run.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
    pub series: Vec<SeriesInput>,
}

/// Runs every stage. On failure the manifest is still written, marked
/// `FAILED` with the stage and error, and the error is returned.
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutcome> {
    config.validate()?;
    let mut run = Run {
        config,
        manifest: Manifest {
            scenario: config.scenario.clone(),
            status: RunStatus::Ok,
            failed_stage: None,
            error: None,
            notices: Vec::new(),
            artifacts: Vec::new(),
        },
    };
    match stages(&mut run) {
        Ok(series) => {
            let manifest_path = run.write_manifest()?;
            Ok(PipelineOutcome {
                manifest: run.manifest,
                manifest_path,
                series,
            })
        }
        Err(e) => {
            run.manifest.status = RunStatus::Failed;
            if let Error::Stage { stage, .. } = &e {
                run.manifest.failed_stage = Some(stage.to_string());
            }
            run.manifest.error = Some(e.to_string());
            run.write_manifest()?;
            Err(e)
        }
    }
}

fn load_series(paths: &[PathBuf], labels: &[u32]) -> Result<Vec<OntologyVersion>> {
    paths
        .iter()
        .zip(labels)
        .map(|(p, &v)| load_ontology(p).map(|o| o.with_version(v)))
        .collect()
}

fn diff_series(
    run: &mut Run<'_>,
    side: &str,
    versions: &[OntologyVersion],
) -> Result<Vec<DiffResult>> {
    let mut out = Vec::new();
    for w in versions.windows(2) {
        let (a, b) = (w[0].version(), w[1].version());
        let d = in_stage(
            "diff",
            || format!("{side} v{a} -> v{b}"),
            diff(&w[0], &w[1]),
        )?;
        log::info!("diff {side} v{a}->v{b}: {}", d.summary_line());
        run.write(
            &format!("diffs/{side}/v{a}-v{b}.json"),
            "ontology_diff",
            &d.to_json(),
        )?;
        out.push(d);
    }
    Ok(out)
}

fn stages(run: &mut Run<'_>) -> Result<Vec<SeriesInput>> {
    let config = run.config;
    let labels = config.labels();

    let started = Instant::now();
    let o1 = load_series(&config.o1, &labels)?;
    let o2 = load_series(&config.o2, &labels)?;
    let concepts: usize = o1.iter().chain(&o2).map(OntologyVersion::len).sum();
    log::info!(
        "parse: {} versions, {concepts} concepts in {:.3}s",
        o1.len() * 2,
        started.elapsed().as_secs_f64()
    );

    let started = Instant::now();
    let d1 = diff_series(run, "o1", &o1)?;
    let d2 = diff_series(run, "o2", &o2)?;
    log::info!("diff: {:.3}s", started.elapsed().as_secs_f64());

    let mut series = Vec::new();
    for matcher in &config.matchers {
        let slug = matcher.slug();
        let started = Instant::now();
        let mut mappings = Vec::with_capacity(o1.len());
        for (l, r) in o1.iter().zip(&o2) {
            let v = l.version();
            let m = in_stage(
                "match",
                || format!("{} v{v}", matcher.label()),
                match_ontologies(l, r, matcher),
            )?;
            run.write(&format!("mappings/{slug}/v{v}.tsv"), "mapping", &m.to_tsv())?;
            run.write(
                &format!("mappings/{slug}/v{v}.json"),
                "mapping_info",
                &m.sidecar_json(),
            )?;
            mappings.push(m);
        }
        let secs = started.elapsed().as_secs_f64();
        let matched: usize = o1.iter().chain(&o2).map(OntologyVersion::len).sum();
        log::info!(
            "match {}: {} mappings in {secs:.3}s ({:.0} concepts/s)",
            matcher.label(),
            mappings.len(),
            matched as f64 / secs.max(1e-9)
        );

        let mut transitions = Vec::new();
        for v in 1..mappings.len() {
            let (a, b) = (labels[v - 1], labels[v]);
            let md = in_stage(
                "mapdiff",
                || format!("{} v{a} -> v{b}", matcher.label()),
                mapping_diff(&mappings[v - 1], &mappings[v]),
            )?;
            run.write(
                &format!("mapdiffs/{slug}/v{a}-v{b}.tsv"),
                "mapping_diff",
                &md.to_tsv(),
            )?;
            let matrix = impact_matrix(&d1[v - 1], &d2[v - 1], &md);
            run.write(
                &format!("impact/{slug}/v{a}-v{b}.json"),
                "impact_matrix",
                &matrix.to_json(),
            )?;
            transitions.push(TransitionObservation::new(
                &d1[v - 1],
                &d2[v - 1],
                &md,
                &mappings[v],
            ));
        }
        series.push(SeriesInput {
            scenario: config.scenario.clone(),
            matcher: matcher.label(),
            transitions,
        });
    }
    run.write("series.tsv", "change_series", &series_tsv(&series))?;
    let series_json = serde_json::to_string_pretty(&series).expect("series serializes");
    run.write("series.json", "change_series", &series_json)?;

    if let Some(bt) = &config.prediction {
        if labels.len() < bt.required_versions() {
            let notice = format!(
                "prediction skipped: insufficient history ({} versions, need {} for h = {} and {} targets)",
                labels.len(),
                bt.required_versions(),
                bt.max_h(),
                bt.targets
            );
            log::warn!("{notice}");
            run.manifest.notices.push(notice);
        } else {
            let started = Instant::now();
            let report = in_stage(
                "backtest",
                || config.scenario.clone(),
                backtest_transitions(&series, bt),
            )?;
            for format in [ReportFormat::Tsv, ReportFormat::Json] {
                for a in emit_report(&report, format) {
                    run.write(
                        &format!("backtest/{}", a.name),
                        "backtest_report",
                        &a.content,
                    )?;
                }
            }
            log::info!(
                "backtest: {} predictions in {:.3}s",
                report.rows.len(),
                started.elapsed().as_secs_f64()
            );
        }
    }
    Ok(series)
}
