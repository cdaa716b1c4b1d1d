//! Low-lying spectra of sector Hamiltonians.
//!
//! Sectors up to [`SolverOptions::dense_max_dim`] are diagonalized densely;
//! larger ones use restarted Lanczos with locking. Eigenvalues are grouped
//! into distinct levels by the rule `λ_{i+1} - λ_i <= max(abs, rel * scale)`,
//! where `scale` is the largest absolute matrix entry (1 for the zero
//! operator). Solvers only ever report *complete* levels: every eigenvalue
//! below the reported threshold is included with its full multiplicity.

mod dense;
mod lanczos;
mod summary;
pub(crate) mod vector;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::second_quantization::{LinearOperator, SparseOperator};
use crate::{Error, Result, C64};

pub(crate) use dense::small_hermitian_eigenvalues;
pub(crate) use lanczos::lanczos;
pub use summary::{
    gap_report, spectral_summary, summarize_operator, GapReport, Level, SolverInfo, SpectralSummary,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    /// Largest (block) dimension diagonalized densely.
    pub dense_max_dim: usize,
    /// Krylov space size per Lanczos run.
    pub krylov_dim: usize,
    /// Cap on operator applications per Lanczos solve.
    pub max_iterations: usize,
    /// Eigenpairs are accepted when `‖Hv - λv‖ <= residual_tol * scale`.
    pub residual_tol: f64,
    pub seed: u64,
    pub grouping_abs: f64,
    pub grouping_rel: f64,
    /// `λ` counts as zero when `|λ| <= kernel_tol * scale`.
    pub kernel_tol: f64,
    /// Ground levels closer than `ambiguity_rel * scale` to the first
    /// excited level are flagged as degeneracy-ambiguous.
    pub ambiguity_rel: f64,
    pub dipole_blocking: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_max_dim: 2000,
            krylov_dim: 120,
            max_iterations: 200_000,
            residual_tol: 1e-10,
            seed: 0x5eed_f0c6,
            grouping_abs: 1e-9,
            grouping_rel: 1e-8,
            kernel_tol: 1e-9,
            ambiguity_rel: 1e-6,
            dipole_blocking: true,
        }
    }
}

impl SolverOptions {
    pub fn grouping_tolerance(&self, scale: f64) -> f64 {
        self.grouping_abs.max(self.grouping_rel * scale)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("residual_tol", self.residual_tol),
            ("grouping_abs", self.grouping_abs),
            ("grouping_rel", self.grouping_rel),
            ("kernel_tol", self.kernel_tol),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArguments(format!(
                    "{name} must be a nonnegative number"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArguments(
                "max_iterations must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Seed for an independent sub-solve labelled by `parts`.
    pub(crate) fn derived_seed(&self, parts: &[u64]) -> u64 {
        // splitmix64 over the parts
        let mut z = self.seed;
        for &p in parts {
            z = z.wrapping_add(p.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
        }
        z
    }
}

/// How much of the bottom of the spectrum a solve must resolve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Target {
    /// The lowest eigenvalue only, without its multiplicity.
    Lowest,
    /// The lowest `k` distinct levels, each complete.
    Levels(usize),
    /// At least `c` eigenvalues, ending on a complete level.
    Count(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveInfo {
    pub method: Method,
    pub dim: usize,
    pub matvecs: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, parallel to `values`.
    pub vectors: Vec<Vec<C64>>,
    /// `‖Hv - λv‖` per pair.
    pub residuals: Vec<f64>,
    /// Every eigenvalue strictly below this bound is in `values`
    /// (`+∞` when the whole spectrum is known).
    pub complete_below: f64,
    pub info: SolveInfo,
}

/// Index ranges of the distinct levels of an ascending list.
pub fn group_levels(values: &[f64], tol: f64) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(r) if v - values[r.end - 1] <= tol => r.end = i + 1,
            _ => out.push(i..i + 1),
        }
    }
    out
}

/// Levels of the ascending `values` that are known to be complete when
/// every eigenvalue below `threshold` is present.
pub(crate) fn complete_levels(values: &[f64], threshold: f64, tol: f64) -> Vec<Range<usize>> {
    let below = values.partition_point(|&v| v < threshold);
    let mut levels = group_levels(&values[..below], tol);
    if let Some(last) = levels.last() {
        if threshold - values[last.end - 1] <= tol {
            levels.pop();
        }
    }
    levels
}

fn deflated_residual(op: &SparseOperator, deflation: &[Vec<C64>], value: f64, v: &[C64]) -> f64 {
    let mut hv = op.apply(v);
    vector::orthogonalize(&mut hv, &[deflation]);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * value).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Bottom of the spectrum of `op` (compressed to the orthogonal complement
/// of `deflation`), dense or Lanczos depending on the dimension.
pub fn solve(
    op: &SparseOperator,
    target: Target,
    deflation: &[Vec<C64>],
    opts: &SolverOptions,
    seed: u64,
) -> Result<EigenResult> {
    solve_with_scale(op, op.tolerance_scale(), target, deflation, opts, seed)
}

/// [`solve`] with tolerances relative to an external `scale`, for operators
/// formed as differences whose own entries are dominated by cancellation.
pub fn solve_with_scale(
    op: &SparseOperator,
    scale: f64,
    target: Target,
    deflation: &[Vec<C64>],
    opts: &SolverOptions,
    seed: u64,
) -> Result<EigenResult> {
    let residual = op.hermiticity_residual();
    if residual > crate::second_quantization::HERMITICITY_TOL * scale {
        return Err(Error::NonHermitian { residual, scale });
    }
    let dim = op.nrows();
    if dim <= opts.dense_max_dim {
        let (values, mut vectors) = dense::full_eigen(op, deflation)?;
        let gtol = opts.grouping_tolerance(scale);
        let levels = group_levels(&values, gtol);
        let count = match target {
            Target::Lowest => values.len().min(1),
            Target::Levels(k) => levels.iter().take(k).last().map_or(0, |r| r.end),
            Target::Count(c) => levels
                .iter()
                .find(|r| r.end >= c)
                .map_or(values.len(), |r| r.end),
        };
        vectors.truncate(count);
        let residuals = values[..count]
            .iter()
            .zip(&vectors)
            .map(|(&l, v)| deflated_residual(op, deflation, l, v))
            .collect();
        return Ok(EigenResult {
            complete_below: values.get(count).copied().unwrap_or(f64::INFINITY),
            values: values[..count].to_vec(),
            vectors,
            residuals,
            info: SolveInfo {
                method: Method::Dense,
                dim,
                matvecs: 0,
                restarts: 0,
            },
        });
    }
    lanczos(op, scale, target, deflation, opts, seed)
}

/// The lowest `count` eigenpairs (at least; complete degenerate levels).
pub fn lowest_eigenpairs(
    h: &SparseOperator,
    count: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    if count == 0 {
        return Err(Error::InvalidArguments("count must be at least 1".into()));
    }
    let r = solve(h, Target::Count(count), &[], opts, opts.seed)?;
    Ok((r.values, r.vectors))
}

/// Smallest eigenvalue of a hermitian operator.
pub fn min_eigenvalue(h: &SparseOperator, opts: &SolverOptions) -> Result<f64> {
    let r = solve(h, Target::Lowest, &[], opts, opts.seed)?;
    Ok(r.values.first().copied().unwrap_or(f64::INFINITY))
}

/// Largest eigenvalue of a hermitian positive operator given matrix-free,
/// compressed to the complement of `deflation`; 0 when that complement is
/// empty.
pub fn max_eigenvalue_deflated<A: LinearOperator + ?Sized>(
    op: &A,
    op_scale: f64,
    deflation: &[Vec<C64>],
    opts: &SolverOptions,
    seed: u64,
) -> Result<(f64, SolveInfo)> {
    struct Negated<'a, A: ?Sized>(&'a A);
    impl<A: LinearOperator + ?Sized> LinearOperator for Negated<'_, A> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn apply(&self, x: &[C64], y: &mut [C64]) {
            self.0.apply(x, y);
            for v in y.iter_mut() {
                *v = -*v;
            }
        }
    }
    if deflation.len() >= op.dim() {
        return Ok((
            0.0,
            SolveInfo {
                method: Method::Lanczos,
                dim: op.dim(),
                matvecs: 0,
                restarts: 0,
            },
        ));
    }
    let r = lanczos(
        &Negated(op),
        op_scale,
        Target::Lowest,
        deflation,
        opts,
        seed,
    )?;
    Ok((-r.values[0], r.info))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::basis::{SectorBasis, Statistics};

    #[test]
    fn grouping_and_completeness() {
        let v = [0.0, 1e-12, 0.5, 0.5 + 5e-10, 1.0];
        let g = group_levels(&v, 1e-9);
        assert_eq!(g, vec![0..2, 2..4, 4..5]);
        assert_eq!(complete_levels(&v, 1.0, 1e-9), vec![0..2, 2..4]);
        assert_eq!(complete_levels(&v, 0.5 + 1e-9, 1e-9), vec![0..2]);
        assert_eq!(complete_levels(&v, f64::INFINITY, 1e-9).len(), 3);
    }

    #[test]
    fn zero_operator_reports_full_multiplicity() {
        let b = Arc::new(SectorBasis::new(6, 3, Statistics::Fermion, None).unwrap());
        let zero = SparseOperator::zero(b.clone(), b.clone());
        let (values, vectors) = lowest_eigenpairs(&zero, 1, &SolverOptions::default()).unwrap();
        assert_eq!(values.len(), 20);
        assert_eq!(vectors.len(), 20);
        let opts = SolverOptions {
            dense_max_dim: 0,
            ..Default::default()
        };
        let (values, _) = lowest_eigenpairs(&zero, 1, &opts).unwrap();
        assert_eq!(values.len(), 20);
        assert!(values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn derived_seeds_differ() {
        let o = SolverOptions::default();
        assert_ne!(o.derived_seed(&[1, 2]), o.derived_seed(&[2, 1]));
        assert_eq!(o.derived_seed(&[3]), o.derived_seed(&[3]));
    }
}
