use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::basis::{FockState, SectorBasis, Statistics};
use crate::{Error, Result, C64};

use super::ladder::ladder_step;
use super::SparseOperator;

/// Hermiticity of assembled sector matrices is checked against this
/// fraction of the largest entry.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// One coefficient `W` of `a†_{x_1} ... a†_{x_m} a_{y_m} ... a_{y_1}`, with
/// `create = [x_1, ..., x_m]` and `annihilate = [y_1, ..., y_m]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub create: Vec<usize>,
    pub annihilate: Vec<usize>,
    pub coefficient: C64,
}

impl TermEntry {
    pub fn new(create: Vec<usize>, annihilate: Vec<usize>, coefficient: C64) -> Self {
        Self {
            create,
            annihilate,
            coefficient,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            create: self.annihilate.clone(),
            annihilate: self.create.clone(),
            coefficient: self.coefficient.conj(),
        }
    }
}

/// A homogeneous m-body operator `Σ W a†...a† a...a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MBodyTerm {
    pub order: usize,
    pub entries: Vec<TermEntry>,
}

impl MBodyTerm {
    pub fn new(order: usize, entries: Vec<TermEntry>) -> Result<Self> {
        let term = Self { order, entries };
        term.check_shape()?;
        Ok(term)
    }

    /// The zero operator of the given order.
    pub fn zero(order: usize) -> Self {
        Self {
            order,
            entries: Vec::new(),
        }
    }

    /// `N = Σ_x a_x† a_x`.
    pub fn number_operator(sites: usize) -> Self {
        let entries = (1..=sites)
            .map(|x| TermEntry::new(vec![x], vec![x], C64::new(1.0, 0.0)))
            .collect();
        Self { order: 1, entries }
    }

    fn check_shape(&self) -> Result<()> {
        for e in &self.entries {
            if e.create.len() != self.order || e.annihilate.len() != self.order {
                return Err(Error::InvalidArguments(format!(
                    "entry {:?} -> {:?} does not have order {}",
                    e.annihilate, e.create, self.order
                )));
            }
        }
        Ok(())
    }

    pub fn validate(&self, sites: usize) -> Result<()> {
        self.check_shape()?;
        for e in &self.entries {
            if let Some(&x) = e
                .create
                .iter()
                .chain(&e.annihilate)
                .find(|&&x| x == 0 || x > sites)
            {
                return Err(Error::InvalidArguments(format!(
                    "site {x} outside 1..={sites}"
                )));
            }
            if !e.coefficient.re.is_finite() || !e.coefficient.im.is_finite() {
                return Err(Error::InvalidArguments("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    pub fn adjoint(&self) -> Self {
        Self {
            order: self.order,
            entries: self.entries.iter().map(TermEntry::adjoint).collect(),
        }
    }

    /// `(A + A†) / 2`, with entries merged per index pair and sorted.
    pub fn hermitian_part(&self) -> Self {
        let mut merged: BTreeMap<(Vec<usize>, Vec<usize>), C64> = BTreeMap::new();
        for e in &self.entries {
            *merged
                .entry((e.create.clone(), e.annihilate.clone()))
                .or_default() += e.coefficient * 0.5;
            *merged
                .entry((e.annihilate.clone(), e.create.clone()))
                .or_default() += e.coefficient.conj() * 0.5;
        }
        let entries = merged
            .into_iter()
            .map(|((create, annihilate), coefficient)| TermEntry {
                create,
                annihilate,
                coefficient,
            })
            .collect();
        Self {
            order: self.order,
            entries,
        }
    }
}

/// Pair pseudopotential `H = Σ_s Q_s† Q_s` with
/// `Q_s = Σ_k F(k) a_{s-k} a_{s+k}` on a ring, `s, k` half-integers.
///
/// `coefficients` is keyed by `2k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudopotentialSpec {
    pub sites: usize,
    pub statistics: Statistics,
    pub coefficients: BTreeMap<u32, C64>,
}

impl PseudopotentialSpec {
    pub fn new(
        sites: usize,
        statistics: Statistics,
        coefficients: BTreeMap<u32, C64>,
    ) -> Result<Self> {
        let spec = Self {
            sites,
            statistics,
            coefficients,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Convenience constructor from `(2k, F(k))` pairs with real values.
    pub fn from_real(sites: usize, statistics: Statistics, table: &[(u32, f64)]) -> Result<Self> {
        let coefficients = table
            .iter()
            .map(|&(k2, f)| (k2, C64::new(f, 0.0)))
            .collect();
        Self::new(sites, statistics, coefficients)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::InvalidArguments(
                "ring needs at least one site".into(),
            ));
        }
        if let Some(&k2) = self
            .coefficients
            .keys()
            .find(|&&k2| k2 as usize > 2 * self.sites)
        {
            return Err(Error::InvalidArguments(format!(
                "pseudopotential key 2k={k2} outside [0, {}]",
                2 * self.sites
            )));
        }
        Ok(())
    }

    /// `(2k, F(k))` pairs contributing to `Q_s`, i.e. `2k ≡ 2s (mod 2)`.
    pub fn pair_terms(&self, two_s: u32) -> impl Iterator<Item = (u32, C64)> + '_ {
        self.coefficients
            .iter()
            .filter(move |(&k2, _)| k2 % 2 == two_s % 2)
            .map(|(&k2, &f)| (k2, f))
    }

    /// Site label of `(2s ± 2k) / 2`, reduced to `1..=L`.
    pub fn site(&self, two_t: i64) -> usize {
        debug_assert!(two_t % 2 == 0);
        ((two_t / 2 - 1).rem_euclid(self.sites as i64) + 1) as usize
    }

    /// `¼ Σ_s Σ_k |F(k)|²` over `2s ∈ [1, 2L]` and matching `k`.
    pub fn weerasinghe_delta(&self) -> f64 {
        (1..=2 * self.sites as u32)
            .map(|two_s| {
                self.pair_terms(two_s)
                    .map(|(_, f)| f.norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / 4.0
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.values().all(|f| *f == C64::new(0.0, 0.0))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hermiticity {
    /// Replace every m-body term by its hermitian part.
    #[default]
    Symmetrize,
    /// Reject terms whose assembled matrices are not hermitian.
    Strict,
}

/// A particle-conserving Hamiltonian `H = Σ_m H^(m)` on a ring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub sites: usize,
    pub statistics: Statistics,
    #[serde(default)]
    pub terms: Vec<MBodyTerm>,
    #[serde(default)]
    pub pseudopotential: Option<PseudopotentialSpec>,
    #[serde(default)]
    pub chemical_potential: Option<f64>,
    #[serde(default)]
    pub hermiticity: Hermiticity,
}

impl HamiltonianSpec {
    pub fn from_terms(sites: usize, statistics: Statistics, terms: Vec<MBodyTerm>) -> Result<Self> {
        let spec = Self {
            sites,
            statistics,
            terms,
            pseudopotential: None,
            chemical_potential: None,
            hermiticity: Hermiticity::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_pseudopotential(pseudopotential: PseudopotentialSpec) -> Result<Self> {
        let spec = Self {
            sites: pseudopotential.sites,
            statistics: pseudopotential.statistics,
            terms: Vec::new(),
            pseudopotential: Some(pseudopotential),
            chemical_potential: None,
            hermiticity: Hermiticity::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// `H = 0`, declared as an empty term of the given order.
    pub fn zero(sites: usize, statistics: Statistics, order: usize) -> Self {
        Self::from_terms(sites, statistics, vec![MBodyTerm::zero(order)])
            .expect("zero spec is valid")
    }

    /// `H = N`.
    pub fn number(sites: usize, statistics: Statistics) -> Self {
        Self::from_terms(sites, statistics, vec![MBodyTerm::number_operator(sites)])
            .expect("number operator spec is valid")
    }

    pub fn with_chemical_potential(mut self, mu: f64) -> Self {
        self.chemical_potential = Some(mu);
        self
    }

    pub fn with_hermiticity(mut self, hermiticity: Hermiticity) -> Self {
        self.hermiticity = hermiticity;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites == 0 {
            return Err(Error::InvalidArguments(
                "ring needs at least one site".into(),
            ));
        }
        if self.terms.is_empty() && self.pseudopotential.is_none() {
            return Err(Error::InvalidArguments(
                "a Hamiltonian needs m-body terms or a pseudopotential".into(),
            ));
        }
        for t in &self.terms {
            t.validate(self.sites)?;
        }
        if let Some(pp) = &self.pseudopotential {
            pp.validate()?;
            if pp.sites != self.sites || pp.statistics != self.statistics {
                return Err(Error::InvalidArguments(format!(
                    "pseudopotential is for {} {}s, Hamiltonian for {} {}s",
                    pp.sites, pp.statistics, self.sites, self.statistics
                )));
            }
        }
        if let Some(mu) = self.chemical_potential {
            if !mu.is_finite() {
                return Err(Error::InvalidArguments(
                    "non-finite chemical potential".into(),
                ));
            }
        }
        Ok(())
    }

    fn mu(&self) -> Option<f64> {
        self.chemical_potential.filter(|&mu| mu != 0.0)
    }

    /// Declared orders `m` with a (possibly zero) `H^(m)`. The pseudopotential
    /// counts as order 2 and a nonzero chemical potential as order 1.
    pub fn orders(&self) -> BTreeSet<usize> {
        let mut orders: BTreeSet<usize> = self.terms.iter().map(|t| t.order).collect();
        if self.pseudopotential.is_some() {
            orders.insert(2);
        }
        if self.mu().is_some() {
            orders.insert(1);
        }
        orders
    }

    /// `m_0`, the smallest declared order.
    pub fn min_order(&self) -> usize {
        *self
            .orders()
            .first()
            .expect("validated spec declares an order")
    }

    /// `m_1`, the largest declared order.
    pub fn max_order(&self) -> usize {
        *self
            .orders()
            .last()
            .expect("validated spec declares an order")
    }

    /// Hex SHA-256 of the canonical JSON serialization.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("spec serializes");
        Sha256::digest(bytes)
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// The spec restricted to declared order `m`.
    pub fn order_part(&self, m: usize) -> Self {
        Self {
            sites: self.sites,
            statistics: self.statistics,
            terms: self
                .terms
                .iter()
                .filter(|t| t.order == m)
                .cloned()
                .collect(),
            pseudopotential: self.pseudopotential.clone().filter(|_| m == 2),
            chemical_potential: self.chemical_potential.filter(|_| m == 1),
            hermiticity: self.hermiticity,
        }
    }

    /// `H` restricted to `sector`.
    pub fn assemble(&self, sector: &Arc<SectorBasis>) -> Result<SparseOperator> {
        assemble_mbody(self, sector)
    }

    /// `H^(m)` restricted to `sector`.
    pub fn assemble_order(&self, m: usize, sector: &Arc<SectorBasis>) -> Result<SparseOperator> {
        assemble_parts(&self.order_part(m), sector)
    }
}

// Entries grouped by their annihilation tuple, so each column applies every
// distinct annihilation string once.
struct PreparedTerm {
    groups: Vec<(Vec<usize>, Vec<(Vec<usize>, C64)>)>,
}

impl PreparedTerm {
    fn new(term: &MBodyTerm) -> Self {
        let mut groups: BTreeMap<Vec<usize>, Vec<(Vec<usize>, C64)>> = BTreeMap::new();
        for e in &term.entries {
            groups
                .entry(e.annihilate.clone())
                .or_default()
                .push((e.create.clone(), e.coefficient));
        }
        Self {
            groups: groups.into_iter().collect(),
        }
    }

    fn apply(&self, state: &FockState, out: &mut Vec<(FockState, C64)>) {
        for (annihilate, creators) in &self.groups {
            let Some((down, mid)) = annihilate_string(state, annihilate) else {
                continue;
            };
            for (create, w) in creators {
                if let Some((f, end)) = create_string(&mid, create, down) {
                    out.push((end, *w * f.value()));
                }
            }
        }
    }
}

/// Accumulated `sign * sqrt(weight)` of an operator string.
#[derive(Clone, Copy)]
struct Factor {
    sign: f64,
    weight: u64,
}

impl Factor {
    const ONE: Self = Self {
        sign: 1.0,
        weight: 1,
    };

    fn step(self, x: usize, state: &FockState, create: bool) -> Option<(Self, FockState)> {
        let (sign, weight, next) = ladder_step(x, state, create)?;
        Some((
            Self {
                sign: self.sign * sign,
                weight: self.weight * weight,
            },
            next,
        ))
    }

    fn value(self) -> f64 {
        self.sign * (self.weight as f64).sqrt()
    }
}

/// `a_{y_m} ... a_{y_1} |state>`: `a_{y_1}` acts first.
fn annihilate_string(state: &FockState, annihilate: &[usize]) -> Option<(Factor, FockState)> {
    let mut factor = Factor::ONE;
    let mut s = *state;
    for &y in annihilate {
        (factor, s) = factor.step(y, &s, false)?;
    }
    Some((factor, s))
}

/// `a†_{x_1} ... a†_{x_m} |state>`: `a†_{x_m}` acts first.
fn create_string(
    state: &FockState,
    create: &[usize],
    start: Factor,
) -> Option<(Factor, FockState)> {
    let mut factor = start;
    let mut s = *state;
    for &x in create.iter().rev() {
        (factor, s) = factor.step(x, &s, true)?;
    }
    Some((factor, s))
}

fn push_merged(list: &mut Vec<(FockState, C64)>, state: FockState, value: C64) {
    match list.iter_mut().find(|(s, _)| *s == state) {
        Some((_, v)) => *v += value,
        None => list.push((state, value)),
    }
}

fn apply_pseudopotential(
    pp: &PseudopotentialSpec,
    state: &FockState,
    out: &mut Vec<(FockState, C64)>,
) {
    let mut reduced: Vec<(FockState, C64)> = Vec::new();
    for two_s in 1..=2 * pp.sites as u32 {
        reduced.clear();
        // Q_s |state>, with a_{s+k} applied before a_{s-k}.
        for (k2, f) in pp.pair_terms(two_s) {
            let lo = pp.site(two_s as i64 - k2 as i64);
            let hi = pp.site(two_s as i64 + k2 as i64);
            let Some((down, end)) = annihilate_string(state, &[hi, lo]) else {
                continue;
            };
            push_merged(&mut reduced, end, f * down.value());
        }
        // Q_s† = Σ conj F(k) a†_{s+k} a†_{s-k}.
        for &(mid, amplitude) in &reduced {
            for (k2, f) in pp.pair_terms(two_s) {
                let lo = pp.site(two_s as i64 - k2 as i64);
                let hi = pp.site(two_s as i64 + k2 as i64);
                if let Some((up, end)) = create_string(&mid, &[hi, lo], Factor::ONE) {
                    out.push((end, f.conj() * amplitude * up.value()));
                }
            }
        }
    }
}

fn assemble_columns<F>(sector: &Arc<SectorBasis>, column: F) -> SparseOperator
where
    F: Fn(&FockState, &mut Vec<(FockState, C64)>) + Sync,
{
    let columns: Vec<Vec<(usize, C64)>> = sector
        .states()
        .par_iter()
        .map(|state| {
            let mut images = Vec::new();
            column(state, &mut images);
            // Images outside a dipole-restricted sector are dropped, so on
            // such sectors the compression of the operator is returned.
            images
                .into_iter()
                .filter_map(|(s, v)| sector.index_of(&s).map(|i| (i, v)))
                .collect()
        })
        .collect();
    SparseOperator::from_columns(sector.clone(), sector.clone(), columns)
}

fn check_sector(spec_sites: usize, stats: Statistics, sector: &SectorBasis) -> Result<()> {
    if sector.sites() != spec_sites || sector.statistics() != stats {
        return Err(Error::DimensionMismatch(format!(
            "operator on {spec_sites} {stats} sites applied to sector {:?}",
            sector.label()
        )));
    }
    Ok(())
}

/// Matrix of a single m-body term on `sector`, taken literally.
pub fn assemble_term(term: &MBodyTerm, sector: &Arc<SectorBasis>) -> Result<SparseOperator> {
    term.validate(sector.sites())?;
    let prepared = PreparedTerm::new(term);
    Ok(assemble_columns(sector, |s, out| prepared.apply(s, out)))
}

/// Matrix of `Σ_s Q_s† Q_s` on `sector`.
pub fn assemble_pseudopotential(
    spec: &PseudopotentialSpec,
    sector: &Arc<SectorBasis>,
) -> Result<SparseOperator> {
    spec.validate()?;
    check_sector(spec.sites, spec.statistics, sector)?;
    Ok(assemble_columns(sector, |s, out| {
        apply_pseudopotential(spec, s, out)
    }))
}

fn assemble_parts(spec: &HamiltonianSpec, sector: &Arc<SectorBasis>) -> Result<SparseOperator> {
    check_sector(spec.sites, spec.statistics, sector)?;
    let terms: Vec<PreparedTerm> = spec
        .terms
        .iter()
        .map(|t| match spec.hermiticity {
            Hermiticity::Symmetrize => PreparedTerm::new(&t.hermitian_part()),
            Hermiticity::Strict => PreparedTerm::new(t),
        })
        .collect();
    let mu = spec.mu();
    let op = assemble_columns(sector, |s, out| {
        for t in &terms {
            t.apply(s, out);
        }
        if let Some(pp) = &spec.pseudopotential {
            apply_pseudopotential(pp, s, out);
        }
        if let Some(mu) = mu {
            out.push((*s, C64::new(mu * s.number() as f64, 0.0)));
        }
    });
    let residual = op.hermiticity_residual();
    let scale = op.tolerance_scale();
    if residual > HERMITICITY_TOL * scale {
        return Err(Error::NonHermitian { residual, scale });
    }
    Ok(op)
}

/// Matrix of the full Hamiltonian (all terms, pseudopotential and `μN`) on
/// `sector`, checked to be hermitian.
pub fn assemble_mbody(spec: &HamiltonianSpec, sector: &Arc<SectorBasis>) -> Result<SparseOperator> {
    spec.validate()?;
    assemble_parts(spec, sector)
}
