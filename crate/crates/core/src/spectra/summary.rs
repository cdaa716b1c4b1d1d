use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{SectorBasis, Statistics};
use crate::second_quantization::{HamiltonianSpec, SparseOperator};
use crate::symmetry::{symmetry_block_decompose, vector_class};
use crate::{Error, Result, C64};

use super::vector::fix_phase;
use super::{complete_levels, solve, Method, SolverOptions, Target};

/// A distinct eigenvalue (the lowest member of its group) and its
/// multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Level {
    pub value: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverInfo {
    /// `dense`, `lanczos`, or `mixed` across dipole blocks.
    pub method: String,
    pub blocked: bool,
    pub blocks: usize,
    pub matvecs: usize,
    pub restarts: usize,
    /// Largest `‖Hv - λv‖` over the reported ground and excited vectors.
    pub max_residual: f64,
}

/// Bottom of the spectrum of `H_n`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralSummary {
    pub sites: usize,
    pub statistics: Statistics,
    pub n: usize,
    pub dim: usize,
    /// `E_n^(0)`
    pub e0: f64,
    /// `E_n^(1)`, absent when the sector has a single distinct level.
    pub e1: Option<f64>,
    /// Multiplicity of `E_n^(0)`.
    pub q_n: usize,
    /// Multiplicity of eigenvalue 0 (`|λ| <= kernel_tol * scale`); absent
    /// when the computed part of the spectrum does not decide it.
    pub kernel_dim: Option<usize>,
    /// Complete distinct levels found, ascending (at least two unless the
    /// sector has only one).
    pub levels: Vec<Level>,
    pub scale: f64,
    /// The first excited level is within `ambiguity_rel * scale` of the
    /// ground level.
    pub degeneracy_ambiguous: bool,
    /// Dipole class of each ground vector, when it has one.
    pub ground_classes: Vec<Option<usize>>,
    pub solver: SolverInfo,
    /// Orthonormal ground eigenvectors in the unrestricted sector basis.
    #[serde(skip)]
    pub ground_basis: Vec<Vec<C64>>,
    /// Orthonormal eigenvectors of the first excited level.
    #[serde(skip)]
    pub excited_basis: Vec<Vec<C64>>,
    #[serde(skip)]
    pub sector: Arc<SectorBasis>,
    #[serde(skip)]
    pub hamiltonian: Arc<SparseOperator>,
}

impl SpectralSummary {
    /// `Gap_n = E_n^(1) - E_n^(0)`.
    pub fn neutral_gap(&self) -> Option<f64> {
        self.e1.map(|e1| e1 - self.e0)
    }
}

struct Piece {
    value: f64,
    block: usize,
    vector: Vec<C64>,
    residual: f64,
}

/// Spectral summary of `H_n`, block-diagonalized by dipole class when `H`
/// commutes with `V`.
pub fn spectral_summary(
    spec: &HamiltonianSpec,
    n: usize,
    opts: &SolverOptions,
) -> Result<SpectralSummary> {
    let sector = Arc::new(SectorBasis::new(spec.sites, n, spec.statistics, None)?);
    let h = spec.assemble(&sector)?;
    summarize_operator(h, opts, &[spec.sites as u64, n as u64])
}

/// Spectral summary of an already assembled hermitian operator on an
/// unrestricted sector.
pub fn summarize_operator(
    h: SparseOperator,
    opts: &SolverOptions,
    seed_parts: &[u64],
) -> Result<SpectralSummary> {
    opts.validate()?;
    let sector = h.domain().clone();
    let dim = sector.dim();
    let scale = h.tolerance_scale();
    let gtol = opts.grouping_tolerance(scale);

    let blocks = if opts.dipole_blocking && sector.sites() > 1 {
        match symmetry_block_decompose(&h) {
            Ok(b) => Some(b),
            Err(Error::NotSymmetric { .. }) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    let mut pieces: Vec<Piece> = Vec::new();
    let mut threshold = f64::INFINITY;
    let mut infos = Vec::new();
    match &blocks {
        Some(blocks) => {
            let results: Vec<_> = blocks
                .par_iter()
                .filter(|b| !b.indices.is_empty())
                .map(|b| {
                    let mut parts = seed_parts.to_vec();
                    parts.push(b.class as u64);
                    let seed = opts.derived_seed(&parts);
                    solve(&b.operator, Target::Levels(2), &[], opts, seed).map(|r| (b, r))
                })
                .collect::<Result<_>>()?;
            for (b, r) in results {
                threshold = threshold.min(r.complete_below);
                infos.push(r.info.clone());
                for ((value, v), residual) in r.values.into_iter().zip(&r.vectors).zip(r.residuals)
                {
                    pieces.push(Piece {
                        value,
                        block: b.class,
                        vector: b.embed(v, dim),
                        residual,
                    });
                }
            }
        }
        None => {
            let r = solve(
                &h,
                Target::Levels(2),
                &[],
                opts,
                opts.derived_seed(seed_parts),
            )?;
            threshold = r.complete_below;
            infos.push(r.info.clone());
            for ((value, vector), residual) in r.values.into_iter().zip(r.vectors).zip(r.residuals)
            {
                pieces.push(Piece {
                    value,
                    block: 0,
                    vector,
                    residual,
                });
            }
        }
    }
    pieces.sort_by(|a, b| a.value.total_cmp(&b.value).then(a.block.cmp(&b.block)));
    let values: Vec<f64> = pieces.iter().map(|p| p.value).collect();
    let ranges = complete_levels(&values, threshold, gtol);
    if ranges.is_empty() || (ranges.len() < 2 && threshold.is_finite()) {
        return Err(Error::NoConvergence(format!(
            "could not resolve two complete levels in sector {:?}",
            sector.label()
        )));
    }
    let levels: Vec<Level> = ranges
        .iter()
        .map(|r| Level {
            value: values[r.start],
            multiplicity: r.len(),
        })
        .collect();
    let ktol = opts.kernel_tol * scale;
    let kernel_dim = (threshold > ktol).then(|| values.iter().filter(|v| v.abs() <= ktol).count());

    let ground = ranges[0].clone();
    let excited = ranges.get(1).cloned().unwrap_or(ground.end..ground.end);
    let max_residual = pieces[ground.start..excited.end]
        .iter()
        .map(|p| p.residual)
        .fold(0.0, f64::max);
    let mut methods: Vec<Method> = infos.iter().map(|i| i.method).collect();
    methods.dedup();
    let method = match methods.as_slice() {
        [Method::Dense] => "dense",
        [Method::Lanczos] => "lanczos",
        _ => "mixed",
    };
    let solver = SolverInfo {
        method: method.into(),
        blocked: blocks.is_some(),
        blocks: infos.len(),
        matvecs: infos.iter().map(|i| i.matvecs).sum(),
        restarts: infos.iter().map(|i| i.restarts).sum(),
        max_residual,
    };
    let gauge = |p: &Piece| {
        let mut v = p.vector.clone();
        fix_phase(&mut v);
        v
    };
    let ground_basis: Vec<Vec<C64>> = pieces[ground.clone()].iter().map(gauge).collect();
    let excited_basis: Vec<Vec<C64>> = pieces[excited].iter().map(gauge).collect();
    let ground_classes = ground_basis
        .iter()
        .map(|v| vector_class(&sector, v, 1e-8))
        .collect();
    let e0 = levels[0].value;
    let e1 = levels.get(1).map(|l| l.value);
    Ok(SpectralSummary {
        sites: sector.sites(),
        statistics: sector.statistics(),
        n: sector.particles(),
        dim,
        e0,
        e1,
        q_n: levels[0].multiplicity,
        kernel_dim,
        degeneracy_ambiguous: e1.is_some_and(|e1| e1 - e0 <= opts.ambiguity_rel * scale),
        levels,
        scale,
        ground_classes,
        solver,
        ground_basis,
        excited_basis,
        sector,
        hamiltonian: Arc::new(h),
    })
}

/// Charge and neutral gaps around `n0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub n0: usize,
    /// `E^(0)` at `n0 - 1`, `n0`, `n0 + 1`.
    pub ground_energies: [f64; 3],
    /// `Gap_{n0} = E_{n0}^(1) - E_{n0}^(0)`
    pub neutral_gap: Option<f64>,
    /// `Δ⁺ = E_{n0+1}^(0) - E_{n0}^(0)`
    pub delta_plus: f64,
    /// `Δ⁻ = E_{n0-1}^(0) - E_{n0}^(0)`
    pub delta_minus: f64,
    /// `Δ = Δ⁺ + Δ⁻`
    pub charge_gap: f64,
}

impl GapReport {
    pub fn from_summaries(
        lower: &SpectralSummary,
        mid: &SpectralSummary,
        upper: &SpectralSummary,
    ) -> Self {
        let delta_plus = upper.e0 - mid.e0;
        let delta_minus = lower.e0 - mid.e0;
        Self {
            n0: mid.n,
            ground_energies: [lower.e0, mid.e0, upper.e0],
            neutral_gap: mid.neutral_gap(),
            delta_plus,
            delta_minus,
            charge_gap: delta_plus + delta_minus,
        }
    }
}

pub fn gap_report(spec: &HamiltonianSpec, n0: usize, opts: &SolverOptions) -> Result<GapReport> {
    if n0 == 0 {
        return Err(Error::InvalidArguments("gap report needs n0 >= 1".into()));
    }
    let lower = spectral_summary(spec, n0 - 1, opts)?;
    let mid = spectral_summary(spec, n0, opts)?;
    let upper = spectral_summary(spec, n0 + 1, opts)?;
    Ok(GapReport::from_summaries(&lower, &mid, &upper))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::PseudopotentialSpec;

    #[test]
    fn number_operator_summary() {
        let spec = HamiltonianSpec::number(5, Statistics::Boson);
        let s = spectral_summary(&spec, 3, &SolverOptions::default()).unwrap();
        assert!((s.e0 - 3.0).abs() < 1e-12);
        assert_eq!(s.e1, None);
        assert_eq!(s.q_n, s.dim);
        assert_eq!(s.kernel_dim, Some(0));
        let g = gap_report(&spec, 2, &SolverOptions::default()).unwrap();
        assert!((g.delta_plus - 1.0).abs() < 1e-12);
        assert!((g.delta_minus + 1.0).abs() < 1e-12);
        assert!(g.charge_gap.abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_gaps_vanish() {
        let spec = HamiltonianSpec::zero(4, Statistics::Fermion, 2);
        let g = gap_report(&spec, 2, &SolverOptions::default()).unwrap();
        assert_eq!(
            (g.delta_plus, g.delta_minus, g.charge_gap, g.neutral_gap),
            (0.0, 0.0, 0.0, None)
        );
    }

    #[test]
    fn vacuum_is_in_the_kernel() {
        let pp =
            PseudopotentialSpec::from_real(8, Statistics::Boson, &[(0, 1.0), (1, 1.0), (2, 1.0)])
                .unwrap();
        let spec = HamiltonianSpec::from_pseudopotential(pp).unwrap();
        let s = spectral_summary(&spec, 0, &SolverOptions::default()).unwrap();
        assert_eq!((s.e0, s.q_n, s.kernel_dim), (0.0, 1, Some(1)));
    }
}
