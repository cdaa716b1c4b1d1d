use std::path::Path;

use fockgap::relations::{GramReport, RelationReport, Verdict};
use fockgap::spectra::GapReport;
use fockgap::SpectralSummary;

use crate::report::{SweepRow, SymmetryRecord};

/// A CSV table written as `<name>.csv`.
pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Self {
        Self {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }
}

/// Shortest round-trip form, scientific outside `[1e-5, 1e16)`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn spectra(summaries: &[SpectralSummary]) -> Table {
    let mut t = Table::new(
        "spectrum",
        &[
            "sites",
            "n",
            "dim",
            "e0",
            "e1",
            "gap",
            "q_n",
            "kernel_dim",
            "degeneracy_ambiguous",
            "method",
        ],
    );
    for s in summaries {
        t.push(vec![
            s.sites.to_string(),
            s.n.to_string(),
            s.dim.to_string(),
            num(s.e0),
            opt_num(s.e1),
            opt_num(s.neutral_gap()),
            s.q_n.to_string(),
            opt(s.kernel_dim),
            s.degeneracy_ambiguous.to_string(),
            s.solver.method.clone(),
        ]);
    }
    t
}

pub fn gaps(sites: usize, reports: &[GapReport]) -> Table {
    let mut t = Table::new(
        "gaps",
        &[
            "sites",
            "n0",
            "e0_minus",
            "e0",
            "e0_plus",
            "delta_plus",
            "delta_minus",
            "charge_gap",
            "neutral_gap",
        ],
    );
    for g in reports {
        t.push(vec![
            sites.to_string(),
            g.n0.to_string(),
            num(g.ground_energies[0]),
            num(g.ground_energies[1]),
            num(g.ground_energies[2]),
            num(g.delta_plus),
            num(g.delta_minus),
            num(g.charge_gap),
            opt_num(g.neutral_gap),
        ]);
    }
    t
}

pub fn symmetries(sites: usize, records: &[SymmetryRecord]) -> Table {
    let mut t = Table::new(
        "symmetries",
        &[
            "sites",
            "n",
            "dim",
            "unitarity_t",
            "unitarity_u",
            "unitarity_v",
            "translation_period",
            "conjugation",
            "vt_utv",
            "ut_tu",
            "uv_vu",
            "pass",
        ],
    );
    for r in records {
        t.push(vec![
            sites.to_string(),
            r.n.to_string(),
            r.dim.to_string(),
            num(r.unitarity_t),
            num(r.unitarity_u),
            num(r.unitarity_v),
            num(r.translation_period),
            num(r.conjugation),
            num(r.algebra.vt_utv),
            num(r.algebra.ut_tu),
            num(r.algebra.uv_vu),
            r.pass.to_string(),
        ]);
    }
    t
}

pub fn relations(reports: &[RelationReport]) -> Table {
    let mut t = Table::new(
        "relations",
        &[
            "relation",
            "sites",
            "n",
            "lhs",
            "rhs",
            "slack",
            "tolerance",
            "verdict",
            "regime",
            "degeneracy_ambiguous",
            "alternate_slack",
            "failed_checks",
            "notes",
            "spec_digest",
        ],
    );
    for r in reports {
        let regime = serde_json::to_value(r.regime)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string));
        t.push(vec![
            r.relation_id.to_string(),
            r.inputs.sites.to_string(),
            r.inputs.n.to_string(),
            num(r.lhs),
            num(r.rhs),
            num(r.slack),
            num(r.tolerance),
            if r.verdict == Verdict::Pass {
                "pass"
            } else {
                "fail"
            }
            .to_string(),
            regime.unwrap_or_default(),
            r.degeneracy_ambiguous.to_string(),
            opt_num(r.alternate_slack),
            r.failed_checks.join("; "),
            r.notes.join("; "),
            r.inputs.spec_digest.clone(),
        ]);
    }
    t
}

pub fn gram(reports: &[GramReport]) -> Table {
    let mut t = Table::new(
        "gram",
        &[
            "sites",
            "n",
            "q_n",
            "norm_gram",
            "min_eigenvalue",
            "norm_g",
            "norm_f",
        ],
    );
    for g in reports {
        t.push(vec![
            g.sites.to_string(),
            g.n.to_string(),
            g.q_n.to_string(),
            num(g.norm_gram),
            opt_num(g.min_eigenvalue),
            opt_num(g.norm_g),
            opt_num(g.norm_f),
        ]);
    }
    t
}

pub fn sweep(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(
        "sweep",
        &[
            "axis",
            "value",
            "sites",
            "n",
            "dim",
            "e0",
            "e1",
            "gap",
            "q_n",
            "kernel_dim",
            "norm_g",
            "norm_f",
            "slack_relation_i",
            "pass_relation_i",
            "slack_relation_ii",
            "pass_relation_ii",
            "status",
            "error",
        ],
    );
    for r in rows {
        t.push(vec![
            r.axis.clone(),
            num(r.value),
            r.sites.to_string(),
            opt(r.n),
            opt(r.dim),
            opt_num(r.e0),
            opt_num(r.e1),
            opt_num(r.gap),
            opt(r.q_n),
            opt(r.kernel_dim),
            opt_num(r.norm_g),
            opt_num(r.norm_f),
            opt_num(r.slack_relation_i),
            opt(r.pass_relation_i),
            opt_num(r.slack_relation_ii),
            opt(r.pass_relation_ii),
            r.status.clone(),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    t
}
