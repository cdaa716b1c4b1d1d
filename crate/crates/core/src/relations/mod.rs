//! Overlap operators between neighbouring particle-number sectors and the
//! spectral relations built on them.
//!
//! With `P_n` the ground projection of `H_n` and `M = Σ_x a_x† P_n a_x` on
//! sector `n + 1`:
//!
//! * `G_n = P_{n+1} M P_{n+1}`,
//! * `F_n = P_{n+1}^⊥ M P_{n+1}^⊥`,
//! * `G^(n)_{αx,βy} = ⟨a_x† φ_α, a_y† φ_β⟩` is the many-body Gram matrix of
//!   the ground basis `φ_α` of `H_n`, and `‖G^(n)‖ = ‖M‖`.
//!
//! Every check produces a [`RelationReport`] asserting `lhs >= rhs` up to a
//! tolerance. An [`Analysis`] caches the sector spectra and overlap norms of
//! one Hamiltonian so that checks sharing sectors do not repeat solves.

mod checks;
mod gram;
mod overlap;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::second_quantization::HamiltonianSpec;
use crate::spectra::{self, SolverOptions, SpectralSummary, Target};
use crate::{Result, Statistics};

pub use checks::{
    iterated_gap_sum, verify_corollary_cngap, verify_gram_blocks, verify_incompressibility,
    verify_iterated_sum, verify_key_lemma, verify_lemma_gbound, verify_lemma_gfqhe,
    verify_relation_i, verify_relation_ii, verify_thm_main, weerasinghe_bound, zero_energy_levels,
    IteratedSum, IteratedTerm, Provenance, Regime, RelationId, RelationInputs, RelationReport,
    Verdict, KEY_LEMMA_TOL, SLACK_TOL,
};
pub use gram::{gram_blocks, gram_matrix, GramBlock, GramBlocks, GramReport};
pub use overlap::{overlap_norms, AlternateNorms, OverlapNorms};

/// Cached spectra and overlap norms of a single Hamiltonian.
pub struct Analysis {
    spec: HamiltonianSpec,
    opts: SolverOptions,
    digest: String,
    summaries: Mutex<BTreeMap<usize, Arc<SpectralSummary>>>,
    overlaps: Mutex<BTreeMap<usize, Arc<OverlapNorms>>>,
    order_minima: Mutex<BTreeMap<(usize, usize), (f64, f64)>>,
}

impl Analysis {
    pub fn new(spec: HamiltonianSpec, opts: SolverOptions) -> Result<Self> {
        spec.validate()?;
        opts.validate()?;
        let digest = spec.digest();
        Ok(Self {
            spec,
            opts,
            digest,
            summaries: Mutex::default(),
            overlaps: Mutex::default(),
            order_minima: Mutex::default(),
        })
    }

    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn sites(&self) -> usize {
        self.spec.sites
    }

    pub fn statistics(&self) -> Statistics {
        self.spec.statistics
    }

    /// Spectral summary of `H_n`.
    pub fn summary(&self, n: usize) -> Result<Arc<SpectralSummary>> {
        if let Some(s) = self.summaries.lock().expect("cache lock").get(&n) {
            return Ok(s.clone());
        }
        let s = Arc::new(spectra::spectral_summary(&self.spec, n, &self.opts)?);
        Ok(self
            .summaries
            .lock()
            .expect("cache lock")
            .entry(n)
            .or_insert(s)
            .clone())
    }

    /// Computes the summaries of several sectors in parallel.
    pub fn prefetch(&self, ns: &[usize]) -> Result<()> {
        ns.par_iter().try_for_each(|&n| self.summary(n).map(|_| ()))
    }

    /// Overlap norms between sectors `n` and `n + 1`.
    pub fn overlap(&self, n: usize) -> Result<Arc<OverlapNorms>> {
        if let Some(o) = self.overlaps.lock().expect("cache lock").get(&n) {
            return Ok(o.clone());
        }
        let o = Arc::new(overlap::compute(self, n)?);
        Ok(self
            .overlaps
            .lock()
            .expect("cache lock")
            .entry(n)
            .or_insert(o)
            .clone())
    }

    /// Lowest eigenvalue of `H^(m)` on sector `n`, with its tolerance scale.
    pub fn order_min_eigenvalue(&self, m: usize, n: usize) -> Result<(f64, f64)> {
        if let Some(&v) = self.order_minima.lock().expect("cache lock").get(&(m, n)) {
            return Ok(v);
        }
        let v = if self.spec.orders().len() == 1 {
            let s = self.summary(n)?;
            (s.e0, s.scale)
        } else {
            let sector = Arc::new(crate::SectorBasis::new(
                self.spec.sites,
                n,
                self.spec.statistics,
                None,
            )?);
            let h = self.spec.assemble_order(m, &sector)?;
            let seed = self
                .opts
                .derived_seed(&[self.spec.sites as u64, n as u64, 1000 + m as u64]);
            let r = spectra::solve(&h, Target::Lowest, &[], &self.opts, seed)?;
            (
                r.values.first().copied().unwrap_or(0.0),
                h.tolerance_scale(),
            )
        };
        self.order_minima
            .lock()
            .expect("cache lock")
            .insert((m, n), v);
        Ok(v)
    }

    /// Largest particle number with a nonempty sector.
    pub fn max_particles(&self) -> Option<usize> {
        match self.spec.statistics {
            Statistics::Fermion => Some(self.spec.sites),
            Statistics::Boson => None,
        }
    }
}
