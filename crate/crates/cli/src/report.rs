use std::path::Path;
use std::time::Instant;

use fockgap::config::Scenario;
use fockgap::relations::{GramReport, IteratedSum, RelationReport};
use fockgap::spectra::GapReport;
use fockgap::symmetry::{AlgebraResiduals, KernelStructure};
use fockgap::{Error, SolverOptions, SpectralSummary, Statistics};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::output::Table;
use crate::Common;

pub const SCHEMA_VERSION: &str = "1.0.0";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NO_CONVERGENCE: u8 = 3;

#[derive(Serialize)]
pub struct ScenarioInfo {
    pub name: String,
    /// SHA-256 of the canonical JSON form of the scenario file.
    pub config_digest: String,
    pub spec_digest: String,
    pub sites: usize,
    pub statistics: Statistics,
    pub filling: Option<[usize; 2]>,
    pub n_range: Option<[usize; 2]>,
    pub solver: SolverOptions,
    pub slack_tolerance: f64,
    pub key_lemma_tolerance: f64,
}

impl ScenarioInfo {
    pub fn new(s: &Scenario, n_range: Option<[usize; 2]>, slack_tol: f64, key_tol: f64) -> Self {
        Self {
            name: s.name.clone(),
            config_digest: config_digest(s),
            spec_digest: s.spec.digest(),
            sites: s.spec.sites,
            statistics: s.spec.statistics,
            filling: s.filling.map(|f| [f.p, f.q]),
            n_range,
            solver: s.solver.clone(),
            slack_tolerance: slack_tol,
            key_lemma_tolerance: key_tol,
        }
    }
}

pub fn config_digest(s: &Scenario) -> String {
    let bytes = serde_json::to_vec(&s.config).expect("config serializes");
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Serialize)]
pub struct Skipped {
    pub check: String,
    pub n: Option<usize>,
    pub reason: String,
}

#[derive(Serialize)]
pub struct SymmetryRecord {
    pub n: usize,
    pub dim: usize,
    pub unitarity_t: f64,
    pub unitarity_u: f64,
    pub unitarity_v: f64,
    /// `max |T^L - 1|`
    pub translation_period: f64,
    /// `max |T† a_x T - a_{x-1}|`
    pub conjugation: f64,
    pub algebra: AlgebraResiduals,
    pub pass: bool,
}

#[derive(Serialize)]
pub struct KernelRecord {
    pub n_q: usize,
    pub structure: KernelStructure,
    pub failures: Vec<String>,
    pub periodicity: Option<String>,
}

#[derive(Serialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    pub sites: usize,
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub e0: Option<f64>,
    pub e1: Option<f64>,
    pub gap: Option<f64>,
    pub q_n: Option<usize>,
    pub kernel_dim: Option<usize>,
    pub norm_g: Option<f64>,
    pub norm_f: Option<f64>,
    pub slack_relation_i: Option<f64>,
    pub pass_relation_i: Option<bool>,
    pub slack_relation_ii: Option<f64>,
    pub pass_relation_ii: Option<bool>,
    /// `ok`, `fail` or `error`
    pub status: String,
    pub error: Option<String>,
    pub spec_digest: Option<String>,
}

#[derive(Serialize, Default)]
pub struct Status {
    pub exit_code: u8,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Serialize)]
pub struct ErrorRecord {
    /// `failed-checks`, `no-convergence`, `usage` or `numerical`
    pub kind: String,
    pub message: String,
    pub failed: Vec<String>,
}

#[derive(Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub scenario: Option<ScenarioInfo>,
    pub spectra: Vec<SpectralSummary>,
    pub gaps: Vec<GapReport>,
    pub symmetries: Vec<SymmetryRecord>,
    pub kernel: Option<KernelRecord>,
    pub relations: Vec<RelationReport>,
    pub skipped: Vec<Skipped>,
    pub iterated_sum: Option<IteratedSum>,
    pub gram: Vec<GramReport>,
    pub sweep: Vec<SweepRow>,
    pub status: Status,
    pub error: Option<ErrorRecord>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            scenario: None,
            spectra: Vec::new(),
            gaps: Vec::new(),
            symmetries: Vec::new(),
            kernel: None,
            relations: Vec::new(),
            skipped: Vec::new(),
            iterated_sum: None,
            gram: Vec::new(),
            sweep: Vec::new(),
            status: Status::default(),
            error: None,
        }
    }

    pub fn skip(&mut self, check: &str, n: Option<usize>, reason: String) {
        self.skipped.push(Skipped {
            check: check.to_string(),
            n,
            reason,
        });
    }

    /// Fills `status` and `error` from the collected verdicts and the run
    /// result, and returns the exit code.
    pub fn finish(&mut self, result: Result<(), Error>, failed: Vec<String>, passed: usize) -> u8 {
        self.status.passed = passed;
        self.status.failed = failed.len();
        self.status.skipped = self.skipped.len();
        let code = match result {
            Err(e) => {
                let (kind, code) = classify(&e);
                self.error = Some(ErrorRecord {
                    kind: kind.into(),
                    message: e.to_string(),
                    failed,
                });
                code
            }
            Ok(()) if !failed.is_empty() => {
                self.error = Some(ErrorRecord {
                    kind: "failed-checks".into(),
                    message: format!(
                        "{} of {} checks failed",
                        failed.len(),
                        failed.len() + passed
                    ),
                    failed,
                });
                EXIT_FAILED
            }
            Ok(()) => EXIT_OK,
        };
        self.status.exit_code = code;
        code
    }
}

pub fn classify(e: &Error) -> (&'static str, u8) {
    match e {
        Error::NoConvergence(_) => ("no-convergence", EXIT_NO_CONVERGENCE),
        Error::Config(_)
        | Error::InvalidArguments(_)
        | Error::NonHermitian { .. }
        | Error::DimensionMismatch(_) => ("usage", EXIT_USAGE),
        _ => ("numerical", EXIT_FAILED),
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: String,
    started_at: String,
    finished_at: String,
    elapsed_seconds: f64,
    threads: usize,
    exit_code: u8,
}

/// Writes `report.json`, `metadata.json` and the CSV tables.
pub fn write_outputs(
    common: &Common,
    report: &Report,
    tables: &[Table],
    started_at: chrono::DateTime<chrono::Utc>,
    clock: Instant,
) -> std::io::Result<()> {
    let dir = &common.out;
    std::fs::create_dir_all(dir)?;
    if common.format.json() {
        let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(dir.join("report.json"), text)?;
    }
    if common.format.csv() {
        for t in tables {
            t.write(&dir.join(format!("{}.csv", t.name)))?;
        }
    }
    let meta = Metadata {
        tool: "fockgap",
        version: env!("CARGO_PKG_VERSION"),
        command: &report.command,
        config: display(&common.config),
        started_at: started_at.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        threads: rayon::current_num_threads(),
        exit_code: report.status.exit_code,
    };
    let mut text = serde_json::to_string_pretty(&meta).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join("metadata.json"), text)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
