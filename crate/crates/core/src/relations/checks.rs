use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::basis::FillingSpec;
use crate::second_quantization::identities::key_lemma_operator;
use crate::spectra::{self, SpectralSummary, Target};
use crate::{Error, Result, Statistics};

use super::gram::gram_blocks;
use super::Analysis;

/// Slack tolerance relative to the Hamiltonian scale.
pub const SLACK_TOL: f64 = 1e-8;
/// Tolerance for the key lemma operator inequality.
pub const KEY_LEMMA_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationId {
    #[serde(rename = "key_lemma")]
    KeyLemma,
    #[serde(rename = "relation_I")]
    RelationI,
    #[serde(rename = "relation_II")]
    RelationII,
    #[serde(rename = "corollary_cngap")]
    CorollaryCnGap,
    #[serde(rename = "thm_main")]
    ThmMain,
    #[serde(rename = "lemma_Gbound")]
    LemmaGBound,
    #[serde(rename = "lemma_GFQHE")]
    LemmaGFqhe,
    #[serde(rename = "incompressibility")]
    Incompressibility,
    #[serde(rename = "gram_blocks")]
    GramBlocks,
    #[serde(rename = "weerasinghe")]
    Weerasinghe,
    #[serde(rename = "iterated_sum")]
    IteratedSum,
}

impl RelationId {
    pub const ALL: [RelationId; 11] = [
        Self::KeyLemma,
        Self::RelationI,
        Self::RelationII,
        Self::CorollaryCnGap,
        Self::ThmMain,
        Self::LemmaGBound,
        Self::LemmaGFqhe,
        Self::Incompressibility,
        Self::GramBlocks,
        Self::Weerasinghe,
        Self::IteratedSum,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::KeyLemma => "key_lemma",
            Self::RelationI => "relation_I",
            Self::RelationII => "relation_II",
            Self::CorollaryCnGap => "corollary_cngap",
            Self::ThmMain => "thm_main",
            Self::LemmaGBound => "lemma_Gbound",
            Self::LemmaGFqhe => "lemma_GFQHE",
            Self::Incompressibility => "incompressibility",
            Self::GramBlocks => "gram_blocks",
            Self::Weerasinghe => "weerasinghe",
            Self::IteratedSum => "iterated_sum",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.name() == name)
    }

    /// Whether the check needs a filling fraction.
    pub fn needs_filling(self) -> bool {
        matches!(
            self,
            Self::ThmMain
                | Self::LemmaGFqhe
                | Self::Incompressibility
                | Self::GramBlocks
                | Self::Weerasinghe
        )
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// How a verdict should be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Every hypothesis of the statement was verified.
    Asserted,
    /// Some hypothesis does not hold at this size; the slack is recorded
    /// but the statement makes no claim.
    OutsideHypotheses,
    /// A quantity in the statement does not exist (e.g. no excited level).
    Vacuous,
    /// Diagnostic output without an inequality.
    Diagnostic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationInputs {
    pub spec_digest: String,
    pub sites: usize,
    pub statistics: Statistics,
    pub n: usize,
    /// Inclusive particle-number range for checks spanning several sectors.
    pub n_range: Option<[usize; 2]>,
    pub filling: Option<[usize; 2]>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sectors: Vec<usize>,
    pub methods: Vec<String>,
    /// Largest eigenpair residual among the spectra used.
    pub max_residual: f64,
    pub matvecs: usize,
}

impl Provenance {
    fn add(&mut self, s: &SpectralSummary) {
        if !self.sectors.contains(&s.n) {
            self.sectors.push(s.n);
            self.methods.push(s.solver.method.clone());
            self.max_residual = self.max_residual.max(s.solver.max_residual);
            self.matvecs += s.solver.matvecs;
        }
    }
}

/// Outcome of a check of `lhs >= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    pub relation_id: RelationId,
    pub inputs: RelationInputs,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`
    pub slack: f64,
    pub scale: f64,
    /// The verdict passes when `slack >= -tolerance` and no listed
    /// sub-check failed.
    pub tolerance: f64,
    pub verdict: Verdict,
    pub regime: Regime,
    pub notes: Vec<String>,
    pub failed_checks: Vec<String>,
    /// Named auxiliary quantities.
    pub values: BTreeMap<String, f64>,
    pub degeneracy_ambiguous: bool,
    /// Slack with the near-degenerate first excited level of `H_{n+1}`
    /// counted as ground.
    pub alternate_slack: Option<f64>,
    pub provenance: Provenance,
}

impl RelationReport {
    fn new(id: RelationId, analysis: &Analysis, n: usize) -> Self {
        Self {
            relation_id: id,
            inputs: RelationInputs {
                spec_digest: analysis.digest().to_string(),
                sites: analysis.sites(),
                statistics: analysis.statistics(),
                n,
                n_range: None,
                filling: None,
            },
            lhs: 0.0,
            rhs: 0.0,
            slack: 0.0,
            scale: 1.0,
            tolerance: 0.0,
            verdict: Verdict::Pass,
            regime: Regime::Asserted,
            notes: Vec::new(),
            failed_checks: Vec::new(),
            values: BTreeMap::new(),
            degeneracy_ambiguous: false,
            alternate_slack: None,
            provenance: Provenance::default(),
        }
    }

    fn with_filling(mut self, filling: &FillingSpec) -> Self {
        self.inputs.filling = Some([filling.p, filling.q]);
        self
    }

    fn value(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    /// Sets both sides and derives slack and verdict with tolerance
    /// `rel_tol * scale`.
    fn settle(&mut self, lhs: f64, rhs: f64, scale: f64, rel_tol: f64) {
        self.lhs = lhs;
        self.rhs = rhs;
        self.slack = lhs - rhs;
        self.scale = scale;
        self.tolerance = rel_tol * scale;
        self.verdict = if self.slack >= -self.tolerance && self.failed_checks.is_empty() {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    fn fail_check(&mut self, what: String) {
        self.failed_checks.push(what);
        self.verdict = Verdict::Fail;
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// Re-derives the verdict with tolerance `rel_tol * scale`. Reports with
    /// their own verdict rule (incompressibility, Gram blocks, iterated sum)
    /// are left as they are.
    pub fn set_tolerance(&mut self, rel_tol: f64) {
        if matches!(
            self.relation_id,
            RelationId::Incompressibility | RelationId::GramBlocks | RelationId::IteratedSum
        ) {
            return;
        }
        let (lhs, rhs, scale) = (self.lhs, self.rhs, self.scale);
        self.settle(lhs, rhs, scale, rel_tol);
    }

    /// Sort key of aggregate reports.
    pub fn sort_key(&self) -> (RelationId, usize, usize) {
        (self.relation_id, self.inputs.sites, self.inputs.n)
    }
}

fn require_upper(analysis: &Analysis, n: usize) -> Result<()> {
    if analysis.max_particles().is_some_and(|max| n + 1 > max) {
        return Err(Error::InvalidArguments(format!(
            "sector n + 1 = {} does not exist for fermions on L = {}",
            n + 1,
            analysis.sites()
        )));
    }
    Ok(())
}

/// Checks `H^(m) ⪰ 0` for every declared `m > above` on the given sectors.
fn check_positive_orders(analysis: &Analysis, above: usize, sectors: &[usize]) -> Result<()> {
    for m in analysis.spec().orders().into_iter().filter(|&m| m > above) {
        for &n in sectors.iter().filter(|&&n| n >= m) {
            let (min, scale) = analysis.order_min_eigenvalue(m, n)?;
            if min < -SLACK_TOL * scale {
                return Err(Error::HypothesisViolated(format!(
                    "H^({m}) is not positive on sector n = {n}: lowest eigenvalue {min:.6e}"
                )));
            }
        }
    }
    Ok(())
}

fn require_n_at_least_m1(analysis: &Analysis, n: usize) -> Result<()> {
    let m1 = analysis.spec().max_order();
    if n < m1 {
        return Err(Error::InvalidArguments(format!(
            "need n >= m_1 = {m1}, got n = {n}"
        )));
    }
    Ok(())
}

/// `H_{n+1} - (n + 1 - m_0)^{-1} Σ_x a_x† H_n a_x ⪰ 0` on sector `n + 1`.
pub fn verify_key_lemma(analysis: &Analysis, n: usize) -> Result<RelationReport> {
    require_n_at_least_m1(analysis, n)?;
    require_upper(analysis, n)?;
    let m0 = analysis.spec().min_order();
    check_positive_orders(analysis, m0, &[n, n + 1])?;
    let lower = analysis.summary(n)?;
    let upper = analysis.summary(n + 1)?;
    let scale = lower.scale.max(upper.scale);
    let raw = key_lemma_operator(analysis.spec(), n)?;
    let k = raw.add(&raw.adjoint())?.scaled(crate::C64::new(0.5, 0.0));
    let opts = analysis.options();
    let seed = opts.derived_seed(&[analysis.sites() as u64, n as u64, 3000]);
    let r = spectra::solve_with_scale(&k, scale, Target::Lowest, &[], opts, seed)?;
    let mut rep = RelationReport::new(RelationId::KeyLemma, analysis, n);
    rep.provenance.add(&lower);
    rep.provenance.add(&upper);
    rep.provenance.max_residual = rep
        .provenance
        .max_residual
        .max(r.residuals.first().copied().unwrap_or(0.0));
    rep.provenance.matvecs += r.info.matvecs;
    let min = r.values.first().copied().unwrap_or(0.0);
    rep.value("hermiticity_residual", raw.hermiticity_residual());
    rep.settle(min, 0.0, scale, KEY_LEMMA_TOL);
    if rep.values["hermiticity_residual"] > crate::second_quantization::HERMITICITY_TOL * scale {
        rep.fail_check("key lemma operator is not hermitian at the Hamiltonian scale".into());
    }
    Ok(rep)
}

/// Relation (I):
/// `E_{n+1}^(0) >= (n+1)/(n+1-m_0) E_n^(0) + Gap_n (n+1-‖G_n‖)/(n+1-m_0)`.
pub fn verify_relation_i(analysis: &Analysis, n: usize) -> Result<RelationReport> {
    require_n_at_least_m1(analysis, n)?;
    require_upper(analysis, n)?;
    let m0 = analysis.spec().min_order();
    check_positive_orders(analysis, m0, &[n, n + 1])?;
    let lower = analysis.summary(n)?;
    let upper = analysis.summary(n + 1)?;
    let ov = analysis.overlap(n)?;
    let mut rep = RelationReport::new(RelationId::RelationI, analysis, n);
    rep.provenance.add(&lower);
    rep.provenance.add(&upper);
    rep.provenance.matvecs += ov.matvecs;
    let d = (n + 1 - m0) as f64;
    let np1 = (n + 1) as f64;
    let gap = lower.neutral_gap().unwrap_or_else(|| {
        rep.notes
            .push(format!("sector {n} has a single level; gap term skipped"));
        0.0
    });
    let rhs_for = |norm_g: f64| np1 / d * lower.e0 + gap / d * (np1 - norm_g);
    rep.value("E0_n", lower.e0);
    rep.value("E0_n+1", upper.e0);
    rep.value("gap_n", gap);
    rep.value("norm_G", ov.norm_g);
    rep.value("m0", m0 as f64);
    rep.settle(
        upper.e0,
        rhs_for(ov.norm_g),
        lower.scale.max(upper.scale),
        SLACK_TOL,
    );
    if let Some(alt) = &ov.alternate {
        rep.degeneracy_ambiguous = true;
        rep.value("alternate_norm_G", alt.norm_g);
        rep.alternate_slack = Some(upper.e0 - rhs_for(alt.norm_g));
    }
    Ok(rep)
}

/// Relation (II): `E_{n+1}^(1) >= (n+1-‖F_n‖)/(n+1-m_0) E_n^(1)`.
pub fn verify_relation_ii(analysis: &Analysis, n: usize) -> Result<RelationReport> {
    require_n_at_least_m1(analysis, n)?;
    require_upper(analysis, n)?;
    let m0 = analysis.spec().min_order();
    check_positive_orders(analysis, m0, &[n, n + 1])?;
    let lower = analysis.summary(n)?;
    let upper = analysis.summary(n + 1)?;
    let mut rep = RelationReport::new(RelationId::RelationII, analysis, n);
    rep.provenance.add(&lower);
    rep.provenance.add(&upper);
    let scale = lower.scale.max(upper.scale);
    let (Some(e1_n), Some(e1_up)) = (lower.e1, upper.e1) else {
        rep.regime = Regime::Vacuous;
        rep.notes
            .push("no first excited level in one of the sectors".into());
        rep.settle(0.0, 0.0, scale, SLACK_TOL);
        return Ok(rep);
    };
    let ov = analysis.overlap(n)?;
    rep.provenance.matvecs += ov.matvecs;
    let d = (n + 1 - m0) as f64;
    let np1 = (n + 1) as f64;
    rep.value("E1_n", e1_n);
    rep.value("E1_n+1", e1_up);
    rep.value("norm_F", ov.norm_f);
    if let Some(f) = ov.norm_f_lowrank {
        rep.value("norm_F_lowrank", f);
    }
    rep.value("m0", m0 as f64);
    rep.value("E0_n", lower.e0);
    if lower.e0 < -SLACK_TOL * scale {
        rep.notes.push(format!(
            "E0_n = {:.6e} < 0: the stated bound drops the term E0_n ‖F_n‖ / (n+1-m_0)",
            lower.e0
        ));
        rep.value(
            "rhs_with_E0_term",
            (np1 * e1_n - (e1_n - lower.e0) * ov.norm_f) / d,
        );
    }
    rep.settle(e1_up, (np1 - ov.norm_f) / d * e1_n, scale, SLACK_TOL);
    if let Some(alt) = &ov.alternate {
        rep.degeneracy_ambiguous = true;
        rep.value("alternate_norm_F", alt.norm_f);
        if let Some(next) = upper.levels.get(2) {
            rep.alternate_slack = Some(next.value - (np1 - alt.norm_f) / d * e1_n);
        } else {
            rep.notes.push(
                "second excited level of H_{n+1} not resolved; alternate slack omitted".into(),
            );
        }
    }
    Ok(rep)
}

/// `Δ⁺_{n0} >= E_{n0}^(0)/n0 + (n0+1-‖G_{n0}‖)/n0 Gap_{n0}`.
pub fn verify_corollary_cngap(analysis: &Analysis, n0: usize) -> Result<RelationReport> {
    let m0 = analysis.spec().min_order();
    if m0 < 1 {
        return Err(Error::HypothesisViolated(
            "the corollary needs m_0 >= 1".into(),
        ));
    }
    if n0 == 0 {
        return Err(Error::InvalidArguments(
            "the corollary needs n0 >= 1".into(),
        ));
    }
    require_n_at_least_m1(analysis, n0)?;
    require_upper(analysis, n0)?;
    check_positive_orders(analysis, 1, &[n0, n0 + 1])?;
    let lower = analysis.summary(n0)?;
    let upper = analysis.summary(n0 + 1)?;
    let ov = analysis.overlap(n0)?;
    let mut rep = RelationReport::new(RelationId::CorollaryCnGap, analysis, n0);
    rep.provenance.add(&lower);
    rep.provenance.add(&upper);
    rep.provenance.matvecs += ov.matvecs;
    let n = n0 as f64;
    let gap = lower.neutral_gap().unwrap_or(0.0);
    let rhs_for = |norm_g: f64| lower.e0 / n + (n + 1.0 - norm_g) / n * gap;
    let delta_plus = upper.e0 - lower.e0;
    rep.value("delta_plus", delta_plus);
    rep.value("gap_n0", gap);
    rep.value("norm_G", ov.norm_g);
    rep.settle(
        delta_plus,
        rhs_for(ov.norm_g),
        lower.scale.max(upper.scale),
        SLACK_TOL,
    );
    if let Some(alt) = &ov.alternate {
        rep.degeneracy_ambiguous = true;
        rep.alternate_slack = Some(delta_plus - rhs_for(alt.norm_g));
    }
    Ok(rep)
}

/// Regime of a statement that needs a commensurate ring `L = ℓ q²` with
/// `ℓ >= 3`. For `p = 1, q = 2` commensurability may be dropped and
/// `L >= 3 q²` plays the role of `ℓ >= 3`.
fn commensurate_regime(filling: &FillingSpec, rep: &mut RelationReport) -> Result<()> {
    let q2 = filling.q * filling.q;
    match filling.ell() {
        Some(ell) => {
            rep.value("ell", ell as f64);
            if ell < 3 {
                rep.regime = Regime::OutsideHypotheses;
                rep.notes.push(format!("ell = {ell} < 3"));
            }
        }
        None if filling.p == 1 && filling.q == 2 => {
            rep.notes
                .push("commensurability dropped (p = 1, q = 2)".into());
            if filling.sites < 3 * q2 {
                rep.regime = Regime::OutsideHypotheses;
                rep.notes.push(format!("L = {} < 3 q^2", filling.sites));
            }
        }
        None => {
            return Err(Error::HypothesisViolated(format!(
                "L = {} is not a multiple of q^2 = {q2}",
                filling.sites
            )))
        }
    }
    Ok(())
}

fn require_kernel(
    analysis: &Analysis,
    filling: &FillingSpec,
) -> Result<std::sync::Arc<SpectralSummary>> {
    if filling.sites != analysis.sites() {
        return Err(Error::InvalidArguments(format!(
            "filling is for L = {}, spec has L = {}",
            filling.sites,
            analysis.sites()
        )));
    }
    let n_q = filling.n_q();
    let s = analysis.summary(n_q)?;
    let k = s.kernel_dim.unwrap_or(0);
    if k != filling.q || s.e0.abs() > analysis.options().kernel_tol * s.scale {
        return Err(Error::HypothesisViolated(format!(
            "kernel of H_{n_q} has dimension {k}, expected q = {}",
            filling.q
        )));
    }
    Ok(s)
}

/// Charge gap above maximal filling versus the neutral gap at it:
/// `E_{n+1}^(0) >= c Gap_{n_q}` with `c = n_q/(n_q+1-m_0)` for fermions and
/// `(n_q-p)/(n_q+1-m_0)` for bosons.
pub fn verify_thm_main(
    analysis: &Analysis,
    filling: &FillingSpec,
    n: usize,
) -> Result<RelationReport> {
    let n_q = filling.n_q();
    if n < n_q {
        return Err(Error::InvalidArguments(format!(
            "need n >= n_q = {n_q}, got n = {n}"
        )));
    }
    require_upper(analysis, n)?;
    let mut rep = RelationReport::new(RelationId::ThmMain, analysis, n).with_filling(filling);
    commensurate_regime(filling, &mut rep)?;
    let s = require_kernel(analysis, filling)?;
    let kernel = crate::symmetry::kernel_structure(&s.hamiltonian, &s.ground_basis, filling)?;
    let failures = kernel.failures(1e-10);
    if !failures.is_empty() {
        return Err(Error::HypothesisViolated(failures.join("; ")));
    }
    if let Some(f) = kernel.periodicity_failure(1e-10) {
        rep.regime = Regime::OutsideHypotheses;
        rep.notes.push(f);
    }
    let m0 = analysis.spec().min_order();
    let sectors: Vec<usize> = (n_q..=n + 1).collect();
    check_positive_orders(analysis, m0, &sectors)?;
    let upper = analysis.summary(n + 1)?;
    rep.provenance.add(&s);
    rep.provenance.add(&upper);
    let gap = s.neutral_gap().unwrap_or(0.0);
    let numerator = match analysis.statistics() {
        Statistics::Fermion => n_q as f64,
        Statistics::Boson => n_q as f64 - filling.p as f64,
    };
    let coefficient = numerator / (n_q + 1 - m0) as f64;
    rep.value("gap_nq", gap);
    rep.value("coefficient", coefficient);
    rep.value("E0_n+1", upper.e0);
    rep.settle(
        upper.e0,
        coefficient * gap,
        s.scale.max(upper.scale),
        SLACK_TOL,
    );
    Ok(rep)
}

/// Generic Gram bound `‖G^(n)‖ <= q_n` (fermions) or `n q_n` (bosons), with
/// the chain `‖G_n‖ <= ‖G^(n)‖`.
pub fn verify_lemma_gbound(analysis: &Analysis, n: usize) -> Result<RelationReport> {
    let gram = super::gram_matrix(analysis, n)?;
    let s = analysis.summary(n)?;
    let mut rep = RelationReport::new(RelationId::LemmaGBound, analysis, n);
    rep.provenance.add(&s);
    let q = s.q_n as f64;
    let bound = match analysis.statistics() {
        Statistics::Fermion => q,
        Statistics::Boson => n as f64 * q,
    };
    rep.value("q_n", q);
    rep.value("norm_gram", gram.norm_gram);
    if let Some(min) = gram.min_eigenvalue {
        rep.value("gram_min_eigenvalue", min);
        if min < -1e-10 {
            rep.fail_check(format!("Gram matrix has eigenvalue {min:.3e}"));
        }
    }
    if analysis.statistics() == Statistics::Boson {
        rep.value("bound_n_plus_1", (n + 1) as f64);
        rep.value(
            "bound_n_plus_L_times_q_n",
            (n + analysis.sites()) as f64 * q,
        );
    }
    if let Some(norm_g) = gram.norm_g {
        rep.value("norm_G", norm_g);
        if norm_g > gram.norm_gram + 1e-9 {
            rep.fail_check(format!(
                "‖G_n‖ = {norm_g} exceeds ‖G^(n)‖ = {}",
                gram.norm_gram
            ));
        }
    }
    rep.settle(bound, gram.norm_gram, 1.0, SLACK_TOL);
    Ok(rep)
}

/// Refined bound at maximal filling: `‖G^(n_q)‖ <= 1` (fermions) or `1 + p`
/// (bosons).
pub fn verify_lemma_gfqhe(analysis: &Analysis, filling: &FillingSpec) -> Result<RelationReport> {
    let n_q = filling.n_q();
    let mut rep = RelationReport::new(RelationId::LemmaGFqhe, analysis, n_q).with_filling(filling);
    commensurate_regime(filling, &mut rep)?;
    let s = require_kernel(analysis, filling)?;
    rep.provenance.add(&s);
    let gram = super::gram_matrix(analysis, n_q)?;
    let bound = match analysis.statistics() {
        Statistics::Fermion => 1.0,
        Statistics::Boson => 1.0 + filling.p as f64,
    };
    rep.value("norm_gram", gram.norm_gram);
    if let Some(g) = gram.norm_g {
        rep.value("norm_G", g);
    }
    rep.settle(bound, gram.norm_gram, 1.0, SLACK_TOL);
    Ok(rep)
}

/// No zero-energy states at `n = n_q + 1`.
///
/// The verdict is `kernel_dim = 0`, i.e. `E_{n_q+1}^(0) > kernel_tol·scale`;
/// `lhs` is that ground energy and `rhs` the kernel threshold.
pub fn verify_incompressibility(
    analysis: &Analysis,
    filling: &FillingSpec,
) -> Result<RelationReport> {
    if filling.sites != analysis.sites() {
        return Err(Error::InvalidArguments(
            "filling and spec disagree on L".into(),
        ));
    }
    let n = filling.n_q() + 1;
    require_upper(analysis, n - 1)?;
    let s = analysis.summary(n)?;
    let mut rep =
        RelationReport::new(RelationId::Incompressibility, analysis, n).with_filling(filling);
    rep.provenance.add(&s);
    let (p, q, l) = (filling.p, filling.q, filling.sites);
    let meets = match analysis.statistics() {
        Statistics::Boson => p * l >= (1 + p) * q * q,
        Statistics::Fermion => p * l >= q * q,
    };
    if !meets {
        rep.regime = Regime::OutsideHypotheses;
        rep.notes
            .push("ring too small for the incompressibility statement".into());
    }
    let threshold = analysis.options().kernel_tol * s.scale;
    let kernel_dim = s.kernel_dim.unwrap_or(0);
    rep.value("kernel_dim", kernel_dim as f64);
    rep.settle(s.e0, threshold, s.scale, 0.0);
    if kernel_dim != 0 || s.e0 <= threshold {
        rep.verdict = Verdict::Fail;
    }
    Ok(rep)
}

/// `E_n^(0)` for `n = 0..=n_q`; all vanish for a frustration-free model.
pub fn zero_energy_levels(analysis: &Analysis, filling: &FillingSpec) -> Result<Vec<(usize, f64)>> {
    let ns: Vec<usize> = (0..=filling.n_q()).collect();
    analysis.prefetch(&ns)?;
    ns.into_iter()
        .map(|n| analysis.summary(n).map(|s| (n, s.e0)))
        .collect()
}

/// Block structure of the Gram matrix at maximal filling. `lhs` is the
/// smallest eigenvalue of any `F(γ)`; the other block checks are listed as
/// sub-checks.
pub fn verify_gram_blocks(analysis: &Analysis, filling: &FillingSpec) -> Result<RelationReport> {
    let blocks = gram_blocks(analysis, filling)?;
    let mut rep =
        RelationReport::new(RelationId::GramBlocks, analysis, blocks.n_q).with_filling(filling);
    rep.provenance.add(&*analysis.summary(blocks.n_q)?);
    rep.value("off_block_residual", blocks.off_block_residual);
    rep.value("identity_residual", blocks.identity_residual);
    rep.value("max_G_eigenvalue", blocks.max_g_eigenvalue);
    if blocks.trace_checked {
        rep.value("max_trace_deviation", blocks.max_trace_deviation);
    } else {
        rep.notes
            .push("trace of F(γ) not checked (needs bosons on a commensurate ring)".into());
    }
    if let Some(f) = blocks.kernel.periodicity_failure(1e-10) {
        rep.notes.push(f);
    }
    for f in blocks.failures() {
        rep.fail_check(f);
    }
    rep.settle(blocks.min_f_eigenvalue, 0.0, 1.0, 1e-10);
    Ok(rep)
}

/// Upper bound `Gap_{n_q+1} <= 4p/(q ∓ p) Δ` with
/// `Δ = ¼ Σ_s Σ_k |F(k)|²`; `lhs` is the bound.
pub fn weerasinghe_bound(analysis: &Analysis, filling: &FillingSpec) -> Result<RelationReport> {
    let pp = analysis.spec().pseudopotential.as_ref().ok_or_else(|| {
        Error::InvalidArguments("the comparison needs a pseudopotential Hamiltonian".into())
    })?;
    if filling.sites != analysis.sites() {
        return Err(Error::InvalidArguments(
            "filling and spec disagree on L".into(),
        ));
    }
    let n_q = filling.n_q();
    require_upper(analysis, n_q)?;
    let delta = pp.weerasinghe_delta();
    let (p, q) = (filling.p as f64, filling.q as f64);
    let coefficient = match analysis.statistics() {
        Statistics::Fermion => 4.0 * p / (q - p),
        Statistics::Boson => 4.0 * p / (q + p),
    };
    let at = analysis.summary(n_q)?;
    let above = analysis.summary(n_q + 1)?;
    let mut rep =
        RelationReport::new(RelationId::Weerasinghe, analysis, n_q + 1).with_filling(filling);
    rep.provenance.add(&at);
    rep.provenance.add(&above);
    let gap = above.neutral_gap().unwrap_or_else(|| {
        rep.notes.push(format!(
            "sector {} has a single level; gap taken as 0",
            n_q + 1
        ));
        0.0
    });
    rep.value("delta", delta);
    rep.value("gap_nq+1", gap);
    if let Some(g) = at.neutral_gap() {
        rep.value("gap_nq", g);
    }
    rep.settle(
        coefficient * delta,
        gap,
        at.scale.max(above.scale),
        SLACK_TOL,
    );
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IteratedTerm {
    pub k: usize,
    pub norm_f: f64,
    /// `(‖F^(k)‖ - m_0)/(k+1)`
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IteratedSum {
    pub m0: usize,
    pub m1: usize,
    pub n_max: usize,
    pub terms: Vec<IteratedTerm>,
    pub sum: f64,
}

/// `Σ_{k=m_1}^{n_max} (‖F^(k)‖ - m_0)/(k+1)` with its per-k terms.
pub fn iterated_gap_sum(analysis: &Analysis, n_max: usize) -> Result<IteratedSum> {
    let m0 = analysis.spec().min_order();
    let m1 = analysis.spec().max_order();
    if n_max < m1 {
        return Err(Error::InvalidArguments(format!("need n_max >= m_1 = {m1}")));
    }
    require_upper(analysis, n_max)?;
    let ns: Vec<usize> = (m1..=n_max + 1).collect();
    analysis.prefetch(&ns)?;
    let mut terms = Vec::new();
    for k in m1..=n_max {
        let norm_f = analysis.overlap(k)?.norm_f;
        terms.push(IteratedTerm {
            k,
            norm_f,
            term: (norm_f - m0 as f64) / (k + 1) as f64,
        });
    }
    let sum = terms.iter().map(|t| t.term).sum();
    Ok(IteratedSum {
        m0,
        m1,
        n_max,
        terms,
        sum,
    })
}

/// Diagnostic report wrapping [`iterated_gap_sum`].
pub fn verify_iterated_sum(analysis: &Analysis, n_max: usize) -> Result<RelationReport> {
    let s = iterated_gap_sum(analysis, n_max)?;
    let mut rep = RelationReport::new(RelationId::IteratedSum, analysis, n_max);
    rep.inputs.n_range = Some([s.m1, n_max]);
    rep.regime = Regime::Diagnostic;
    for k in s.m1..=n_max + 1 {
        rep.provenance.add(&*analysis.summary(k)?);
    }
    for t in &s.terms {
        rep.value(&format!("norm_F_{}", t.k), t.norm_f);
    }
    rep.settle(s.sum, s.sum, 1.0, SLACK_TOL);
    Ok(rep)
}
