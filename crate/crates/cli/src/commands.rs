use std::sync::Arc;
use std::time::Instant;

use fockgap::config::Scenario;
use fockgap::relations::*;
use fockgap::second_quantization::identities::canonical_relation_residual;
use fockgap::symmetry::{
    conjugation_residual, kernel_structure, translation_matrix, translation_period_residual,
    unitarity_residual, uv_matrices, verify_symmetry_algebra,
};
use fockgap::{Error, Result, SectorBasis};

use crate::output::{self, Table};
use crate::report::*;
use crate::{Common, Tolerances};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Spectrum,
    Gaps,
    Symmetries,
    Relations,
    Gram,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Spectrum => "spectrum",
            Kind::Gaps => "gaps",
            Kind::Symmetries => "verify-symmetries",
            Kind::Relations => "verify-relations",
            Kind::Gram => "gram",
        }
    }
}

const DEFAULT_CHECKS: [RelationId; 5] = [
    RelationId::KeyLemma,
    RelationId::RelationI,
    RelationId::RelationII,
    RelationId::CorollaryCnGap,
    RelationId::ThmMain,
];

/// Tolerances after command-line overrides.
pub struct Settings {
    pub slack: f64,
    pub key_lemma: f64,
    pub symmetry: f64,
}

/// Loads the scenario and applies the tolerance overrides.
pub fn load(common: &Common) -> std::result::Result<(Scenario, Settings), String> {
    let mut s = Scenario::from_path(&common.config).map_err(|e| e.to_string())?;
    let t: &Tolerances = &common.tol;
    let o = &mut s.solver;
    o.residual_tol = t.tol_residual.unwrap_or(o.residual_tol);
    o.kernel_tol = t.tol_kernel.unwrap_or(o.kernel_tol);
    o.grouping_abs = t.tol_grouping_abs.unwrap_or(o.grouping_abs);
    o.grouping_rel = t.tol_grouping_rel.unwrap_or(o.grouping_rel);
    o.validate().map_err(|e| e.to_string())?;
    let settings = Settings {
        slack: t.tol_slack.unwrap_or(SLACK_TOL),
        key_lemma: t.tol_key_lemma.unwrap_or(KEY_LEMMA_TOL),
        symmetry: t.tol_symmetry.unwrap_or(1e-12),
    };
    for (name, v) in [
        ("slack", settings.slack),
        ("key-lemma", settings.key_lemma),
        ("symmetry", settings.symmetry),
    ] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(format!("--tol-{name} must be a non-negative number"));
        }
    }
    Ok((s, settings))
}

/// The particle numbers a command visits: the configured range, or one
/// derived from the filling.
pub fn n_range(s: &Scenario, kind: Kind) -> Result<[usize; 2]> {
    if let Some(r) = s.n_range {
        return Ok(r);
    }
    let Some(f) = s.filling else {
        return Err(Error::Config(
            "no [run] n range and no [filling] to derive one from".into(),
        ));
    };
    let n_q = f.n_q();
    let m1 = s.spec.max_order();
    Ok(match kind {
        Kind::Spectrum | Kind::Symmetries => [0, n_q + 1],
        Kind::Gaps => [1, n_q],
        Kind::Relations | Kind::Gram => [m1.min(n_q), n_q],
    })
}

pub fn run(kind: Kind, common: &Common) -> u8 {
    let started_at = chrono::Utc::now();
    let clock = Instant::now();
    let (scenario, settings) = match load(common) {
        Ok(v) => v,
        Err(e) => return usage_failure(common, kind.name(), e, started_at, clock),
    };
    let mut report = Report::new(kind.name());
    let range = n_range(&scenario, kind);
    report.scenario = Some(ScenarioInfo::new(
        &scenario,
        range.as_ref().ok().copied(),
        settings.slack,
        settings.key_lemma,
    ));
    let mut tally = Tally::default();
    let mut tables = Vec::new();
    let result = range.and_then(|range| {
        let analysis = Analysis::new(scenario.spec.clone(), scenario.solver.clone())?;
        match kind {
            Kind::Spectrum => spectrum(&analysis, range, &mut report),
            Kind::Gaps => gaps(&analysis, range, &mut report),
            Kind::Symmetries => symmetries(
                &scenario,
                &analysis,
                range,
                &settings,
                &mut report,
                &mut tally,
            ),
            Kind::Relations => relations(
                &scenario,
                &analysis,
                range,
                &settings,
                &mut report,
                &mut tally,
            ),
            Kind::Gram => gram(
                &scenario,
                &analysis,
                range,
                &settings,
                &mut report,
                &mut tally,
            ),
        }
    });
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    let code = report.finish(result, tally.failed, tally.passed);
    let sites = scenario.spec.sites;
    match kind {
        Kind::Spectrum => tables.push(output::spectra(&report.spectra)),
        Kind::Gaps => tables.push(output::gaps(sites, &report.gaps)),
        Kind::Symmetries => tables.push(output::symmetries(sites, &report.symmetries)),
        Kind::Relations => tables.push(output::relations(&report.relations)),
        Kind::Gram => {
            tables.push(output::gram(&report.gram));
            tables.push(output::relations(&report.relations));
        }
    }
    finish_io(common, &report, &tables, started_at, clock, code)
}

pub fn finish_io(
    common: &Common,
    report: &Report,
    tables: &[Table],
    started_at: chrono::DateTime<chrono::Utc>,
    clock: Instant,
    code: u8,
) -> u8 {
    if let Err(e) = write_outputs(common, report, tables, started_at, clock) {
        eprintln!("error: cannot write to {}: {e}", common.out.display());
        return EXIT_USAGE;
    }
    eprintln!(
        "{}: {} passed, {} failed, {} skipped; exit {code}",
        report.command, report.status.passed, report.status.failed, report.status.skipped
    );
    code
}

/// Writes a report carrying only the usage error.
pub fn usage_failure(
    common: &Common,
    command: &str,
    message: String,
    started_at: chrono::DateTime<chrono::Utc>,
    clock: Instant,
) -> u8 {
    eprintln!("error: {message}");
    let mut report = Report::new(command);
    report.status.exit_code = EXIT_USAGE;
    report.error = Some(ErrorRecord {
        kind: "usage".into(),
        message,
        failed: Vec::new(),
    });
    finish_io(common, &report, &[], started_at, clock, EXIT_USAGE)
}

#[derive(Default)]
pub struct Tally {
    pub passed: usize,
    pub failed: Vec<String>,
}

impl Tally {
    pub fn record(&mut self, label: String, pass: bool) {
        if pass {
            self.passed += 1;
        } else {
            self.failed.push(label);
        }
    }
}

fn spectrum(a: &Analysis, [lo, hi]: [usize; 2], report: &mut Report) -> Result<()> {
    let ns: Vec<usize> = (lo..=hi)
        .filter(|&n| a.max_particles().map_or(true, |m| n <= m))
        .collect();
    a.prefetch(&ns)?;
    for n in ns {
        report.spectra.push((*a.summary(n)?).clone());
    }
    Ok(())
}

fn gaps(a: &Analysis, [lo, hi]: [usize; 2], report: &mut Report) -> Result<()> {
    for n0 in lo.max(1)..=hi {
        if a.max_particles().is_some_and(|m| n0 + 1 > m) {
            report.skip(
                "gaps",
                Some(n0),
                format!("sector {} does not exist", n0 + 1),
            );
            continue;
        }
        let (l, m, u) = (a.summary(n0 - 1)?, a.summary(n0)?, a.summary(n0 + 1)?);
        report
            .gaps
            .push(fockgap::spectra::GapReport::from_summaries(&l, &m, &u));
    }
    Ok(())
}

fn symmetries(
    s: &Scenario,
    a: &Analysis,
    [lo, hi]: [usize; 2],
    settings: &Settings,
    report: &mut Report,
    tally: &mut Tally,
) -> Result<()> {
    let (l, stats) = (s.spec.sites, s.spec.statistics);
    for n in (lo..=hi).filter(|&n| a.max_particles().map_or(true, |m| n <= m)) {
        let sector = Arc::new(SectorBasis::new(l, n, stats, None)?);
        let t = translation_matrix(&sector)?;
        let (u, v) = uv_matrices(&sector);
        let algebra = verify_symmetry_algebra(l, n, stats)?;
        let mut rec = SymmetryRecord {
            n,
            dim: sector.dim(),
            unitarity_t: unitarity_residual(&t)?,
            unitarity_u: unitarity_residual(&u)?,
            unitarity_v: unitarity_residual(&v)?,
            translation_period: translation_period_residual(l, n, stats)?,
            conjugation: conjugation_residual(l, n, stats)?,
            algebra,
            pass: false,
        };
        let worst = [
            rec.unitarity_t,
            rec.unitarity_u,
            rec.unitarity_v,
            rec.translation_period,
            rec.conjugation,
            canonical_relation_residual(l, n, stats)?,
            algebra.max(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        rec.pass = worst <= settings.symmetry;
        tally.record(format!("symmetries n={n}"), rec.pass);
        report.symmetries.push(rec);
    }
    if let Some(f) = &s.filling {
        let n_q = f.n_q();
        let summary = a.summary(n_q)?;
        match kernel_structure(&summary.hamiltonian, &summary.ground_basis, f) {
            Ok(k) => {
                let failures = k.failures(1e-10);
                tally.record(format!("kernel structure n={n_q}"), failures.is_empty());
                let periodicity = k.periodicity_failure(1e-10);
                report.kernel = Some(KernelRecord {
                    n_q,
                    structure: k,
                    failures,
                    periodicity,
                });
            }
            Err(e @ Error::AssumptionViolated(_)) => {
                report.skip("kernel_structure", Some(n_q), e.to_string())
            }
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Runs one check, recording a skip for unmet hypotheses.
fn attempt(
    report: &mut Report,
    tally: &mut Tally,
    settings: &Settings,
    id: RelationId,
    n: Option<usize>,
    f: impl FnOnce() -> Result<RelationReport>,
) -> Result<()> {
    match f() {
        Ok(mut rep) => {
            match id {
                RelationId::KeyLemma => rep.set_tolerance(settings.key_lemma),
                _ => rep.set_tolerance(settings.slack),
            }
            let label = match n {
                Some(n) => format!("{id} n={n}"),
                None => id.to_string(),
            };
            tally.record(label, rep.passed());
            report.relations.push(rep);
            Ok(())
        }
        Err(
            e @ (Error::HypothesisViolated(_)
            | Error::AssumptionViolated(_)
            | Error::InvalidArguments(_)),
        ) => {
            report.skip(id.name(), n, e.to_string());
            Ok(())
        }
        Err(e) => Err(e),
    }
}

fn relations(
    s: &Scenario,
    a: &Analysis,
    [lo, hi]: [usize; 2],
    settings: &Settings,
    report: &mut Report,
    tally: &mut Tally,
) -> Result<()> {
    let checks: Vec<RelationId> = match &s.checks {
        Some(c) => c.clone(),
        None => DEFAULT_CHECKS
            .into_iter()
            .filter(|c| s.filling.is_some() || !c.needs_filling())
            .collect(),
    };
    let per_n = [
        RelationId::KeyLemma,
        RelationId::RelationI,
        RelationId::RelationII,
        RelationId::CorollaryCnGap,
        RelationId::LemmaGBound,
        RelationId::ThmMain,
    ];
    for n in lo..=hi {
        for &id in checks.iter().filter(|c| per_n.contains(c)) {
            let run = |id| -> Result<RelationReport> {
                match id {
                    RelationId::KeyLemma => verify_key_lemma(a, n),
                    RelationId::RelationI => verify_relation_i(a, n),
                    RelationId::RelationII => verify_relation_ii(a, n),
                    RelationId::CorollaryCnGap => verify_corollary_cngap(a, n),
                    RelationId::LemmaGBound => verify_lemma_gbound(a, n),
                    _ => verify_thm_main(a, s.filling.as_ref().expect("checked at load"), n),
                }
            };
            attempt(report, tally, settings, id, Some(n), || run(id))?;
        }
    }
    for &id in checks.iter().filter(|c| !per_n.contains(c)) {
        let f = s.filling.as_ref();
        attempt(report, tally, settings, id, None, || match id {
            RelationId::LemmaGFqhe => verify_lemma_gfqhe(a, f.expect("checked at load")),
            RelationId::Incompressibility => {
                verify_incompressibility(a, f.expect("checked at load"))
            }
            RelationId::GramBlocks => verify_gram_blocks(a, f.expect("checked at load")),
            RelationId::Weerasinghe => weerasinghe_bound(a, f.expect("checked at load")),
            _ => verify_iterated_sum(a, hi),
        })?;
        if id == RelationId::IteratedSum {
            report.iterated_sum = iterated_gap_sum(a, hi).ok();
        }
    }
    Ok(())
}

fn gram(
    s: &Scenario,
    a: &Analysis,
    [lo, hi]: [usize; 2],
    settings: &Settings,
    report: &mut Report,
    tally: &mut Tally,
) -> Result<()> {
    for n in lo..=hi {
        if a.max_particles().is_some_and(|m| n > m) {
            continue;
        }
        let mut g = gram_matrix(a, n)?;
        if let Some(f) = s.filling.as_ref().filter(|f| f.n_q() == n) {
            match gram_blocks(a, f) {
                Ok(b) => g.blocks = Some(b),
                Err(e @ Error::AssumptionViolated(_)) => {
                    report.skip("gram_blocks", Some(n), e.to_string())
                }
                Err(e) => return Err(e),
            }
            attempt(
                report,
                tally,
                settings,
                RelationId::GramBlocks,
                None,
                || verify_gram_blocks(a, f),
            )?;
            attempt(
                report,
                tally,
                settings,
                RelationId::LemmaGFqhe,
                None,
                || verify_lemma_gfqhe(a, f),
            )?;
        }
        report.gram.push(g);
    }
    Ok(())
}
