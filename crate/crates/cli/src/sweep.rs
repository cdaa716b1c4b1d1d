use std::time::Instant;

use fockgap::config::{Coefficient, Scenario, ScenarioConfig};
use fockgap::relations::{verify_relation_i, verify_relation_ii, Analysis, RelationReport};
use fockgap::{Error, Result};
use rayon::prelude::*;

use crate::commands::{finish_io, load, usage_failure, Tally};
use crate::output;
use crate::report::*;
use crate::SweepArgs;

#[derive(Clone, Debug, PartialEq)]
pub enum Axis {
    Sites(Vec<usize>),
    /// Pseudopotential coefficient keyed by `2k`.
    F {
        two_k: u32,
        values: Vec<f64>,
    },
}

impl Axis {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let (name, list) = text
            .split_once('=')
            .ok_or_else(|| format!("axis {text:?} must look like sites=6,8 or f:<2k>=v1,v2"))?;
        let items: Vec<&str> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect();
        if items.is_empty() {
            return Err(format!("axis {name:?} has no values"));
        }
        let name = name.trim();
        if name == "sites" {
            let mut v = items
                .iter()
                .map(|s| {
                    s.parse::<usize>()
                        .map_err(|_| format!("{s:?} is not a site count"))
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            if v.contains(&0) {
                return Err("site counts must be positive".into());
            }
            v.sort_unstable();
            return Ok(Axis::Sites(v));
        }
        if let Some(key) = name.strip_prefix("f:") {
            let two_k = key
                .trim()
                .parse::<u32>()
                .map_err(|_| format!("{key:?} is not the integer 2k"))?;
            let mut values = items
                .iter()
                .map(|s| match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(format!("{s:?} is not a finite number")),
                })
                .collect::<std::result::Result<Vec<_>, _>>()?;
            values.sort_by(f64::total_cmp);
            return Ok(Axis::F { two_k, values });
        }
        Err(format!("unknown axis {name:?}; use sites or f:<2k>"))
    }

    pub fn label(&self) -> String {
        match self {
            Axis::Sites(_) => "sites".into(),
            Axis::F { two_k, .. } => format!("f:{two_k}"),
        }
    }

    fn points(&self) -> Vec<f64> {
        match self {
            Axis::Sites(v) => v.iter().map(|&l| l as f64).collect(),
            Axis::F { values, .. } => values.clone(),
        }
    }

    /// The scenario file with the axis value substituted.
    fn apply(&self, base: &ScenarioConfig, value: f64) -> ScenarioConfig {
        let mut cfg = base.clone();
        match self {
            Axis::Sites(_) => cfg.sites = value as usize,
            Axis::F { two_k, .. } => {
                cfg.pseudopotential
                    .get_or_insert_with(Default::default)
                    .insert(two_k.to_string(), Coefficient::from(value));
            }
        }
        cfg
    }
}

struct Point {
    rows: Vec<SweepRow>,
    reports: Vec<RelationReport>,
    no_convergence: bool,
}

fn error_row(axis: &str, value: f64, sites: usize, n: Option<usize>, e: &Error) -> SweepRow {
    SweepRow {
        axis: axis.to_string(),
        value,
        sites,
        n,
        dim: None,
        e0: None,
        e1: None,
        gap: None,
        q_n: None,
        kernel_dim: None,
        norm_g: None,
        norm_f: None,
        slack_relation_i: None,
        pass_relation_i: None,
        slack_relation_ii: None,
        pass_relation_ii: None,
        status: "error".into(),
        error: Some(e.to_string()),
        spec_digest: None,
    }
}

fn run_point(axis: &Axis, base: &Scenario, value: f64, slack_tol: f64) -> Point {
    let label = axis.label();
    let cfg = axis.apply(&base.config, value);
    let mut point = Point {
        rows: Vec::new(),
        reports: Vec::new(),
        no_convergence: false,
    };
    let scenario = match cfg.scenario() {
        Ok(mut s) => {
            s.solver = base.solver.clone();
            s
        }
        Err(e) => {
            point
                .rows
                .push(error_row(&label, value, cfg.sites, None, &e));
            return point;
        }
    };
    let ns = match (base.n_range, scenario.filling) {
        (Some([lo, hi]), _) => (lo..=hi).collect::<Vec<_>>(),
        (None, Some(f)) => vec![f.n_q()],
        (None, None) => unreachable!("checked before the sweep"),
    };
    let analysis = match Analysis::new(scenario.spec.clone(), scenario.solver.clone()) {
        Ok(a) => a,
        Err(e) => {
            point
                .rows
                .push(error_row(&label, value, cfg.sites, None, &e));
            return point;
        }
    };
    for n in ns {
        match point_row(&analysis, &label, value, n, slack_tol, &mut point.reports) {
            Ok(row) => point.rows.push(row),
            Err(e) => {
                point.no_convergence |= matches!(e, Error::NoConvergence(_));
                point
                    .rows
                    .push(error_row(&label, value, cfg.sites, Some(n), &e));
            }
        }
    }
    point
}

fn point_row(
    a: &Analysis,
    axis: &str,
    value: f64,
    n: usize,
    slack_tol: f64,
    reports: &mut Vec<RelationReport>,
) -> Result<SweepRow> {
    let s = a.summary(n)?;
    let mut row = SweepRow {
        axis: axis.to_string(),
        value,
        sites: a.sites(),
        n: Some(n),
        dim: Some(s.dim),
        e0: Some(s.e0),
        e1: s.e1,
        gap: s.neutral_gap(),
        q_n: Some(s.q_n),
        kernel_dim: s.kernel_dim,
        norm_g: None,
        norm_f: None,
        slack_relation_i: None,
        pass_relation_i: None,
        slack_relation_ii: None,
        pass_relation_ii: None,
        status: "ok".into(),
        error: None,
        spec_digest: Some(a.digest().to_string()),
    };
    if a.max_particles().is_some_and(|m| n + 1 > m) || n < a.spec().max_order() {
        return Ok(row);
    }
    let o = a.overlap(n)?;
    row.norm_g = Some(o.norm_g);
    row.norm_f = Some(o.norm_f);
    let mut notes = Vec::new();
    for (i, check) in [verify_relation_i, verify_relation_ii]
        .into_iter()
        .enumerate()
    {
        match check(a, n) {
            Ok(mut rep) => {
                rep.set_tolerance(slack_tol);
                if i == 0 {
                    row.slack_relation_i = Some(rep.slack);
                    row.pass_relation_i = Some(rep.passed());
                } else {
                    row.slack_relation_ii = Some(rep.slack);
                    row.pass_relation_ii = Some(rep.passed());
                }
                if !rep.passed() {
                    row.status = "fail".into();
                }
                reports.push(rep);
            }
            Err(e @ (Error::HypothesisViolated(_) | Error::InvalidArguments(_))) => {
                notes.push(e.to_string())
            }
            Err(e) => return Err(e),
        }
    }
    if !notes.is_empty() {
        row.error = Some(notes.join("; "));
    }
    Ok(row)
}

pub fn run(args: &SweepArgs) -> u8 {
    let started_at = chrono::Utc::now();
    let clock = Instant::now();
    let common = &args.common;
    let fail = |msg: String| usage_failure(common, "sweep", msg, started_at, clock);
    let axis = match Axis::parse(&args.axis) {
        Ok(a) => a,
        Err(e) => return fail(e),
    };
    let (scenario, settings) = match load(common) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    if scenario.n_range.is_none() && scenario.filling.is_none() {
        return fail("a sweep needs a [run] n range or a [filling] table".into());
    }
    if matches!(axis, Axis::F { .. }) && scenario.spec.pseudopotential.is_none() {
        return fail("an f: axis needs a [pseudopotential] table".into());
    }
    let mut report = Report::new("sweep");
    report.scenario = Some(ScenarioInfo::new(
        &scenario,
        scenario.n_range,
        settings.slack,
        settings.key_lemma,
    ));
    let points: Vec<Point> = axis
        .points()
        .into_par_iter()
        .map(|v| run_point(&axis, &scenario, v, settings.slack))
        .collect();
    let mut tally = Tally::default();
    let mut no_convergence = false;
    for p in points {
        no_convergence |= p.no_convergence;
        for row in &p.rows {
            let label = format!("{}={} n={}", row.axis, row.value, output::opt(row.n));
            tally.record(label, row.status == "ok");
        }
        report.sweep.extend(p.rows);
        report.relations.extend(p.reports);
    }
    let result = if no_convergence {
        Err(Error::NoConvergence(
            "at least one sweep point did not converge".into(),
        ))
    } else {
        Ok(())
    };
    let code = report.finish(result, tally.failed, tally.passed);
    let tables = vec![
        output::sweep(&report.sweep),
        output::relations(&report.relations),
    ];
    finish_io(common, &report, &tables, started_at, clock, code)
}
