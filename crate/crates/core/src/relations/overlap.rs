use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::second_quantization::{annihilation_matrix, LinearOperator, SparseOperator};
use crate::spectra::vector::dot;
use crate::spectra::{max_eigenvalue_deflated, small_hermitian_eigenvalues, SolveInfo};
use crate::{Error, Result, Statistics, C64};

use super::Analysis;

/// Largest ground space handled by the projected `q x q` overlap.
pub const MAX_GROUND_SPACE: usize = 4096;

/// `‖G_n‖`, `‖F_n‖` and `‖G^(n)‖` between sectors `n` and `n + 1`.
#[derive(Clone, Debug, Serialize)]
pub struct OverlapNorms {
    pub n: usize,
    /// `q_n`
    pub q_n: usize,
    /// `q_{n+1}`
    pub q_n1: usize,
    pub norm_g: f64,
    pub norm_f: f64,
    /// `‖F_n‖` from the low-rank form `C†C - (Ψ†C)†(Ψ†C)`, when the Gram
    /// matrix is small enough to form.
    pub norm_f_lowrank: Option<f64>,
    /// `‖G^(n)‖`
    pub norm_gram: f64,
    pub matvecs: usize,
    /// Norms with the first excited level of `H_{n+1}` counted as ground,
    /// when the two levels are closer than the ambiguity threshold.
    pub alternate: Option<AlternateNorms>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlternateNorms {
    pub q_n1: usize,
    pub norm_g: f64,
    pub norm_f: f64,
}

/// `M = Σ_x a_x† P_n a_x` applied matrix-free on sector `n + 1`.
pub(crate) struct OverlapOperator<'a> {
    pub down: &'a [SparseOperator],
    pub phi: &'a [Vec<C64>],
}

impl LinearOperator for OverlapOperator<'_> {
    fn dim(&self) -> usize {
        self.down.first().map_or(0, |a| a.ncols())
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let partials: Vec<Vec<C64>> = self
            .down
            .par_iter()
            .map(|a| {
                let t = a.apply(x);
                let mut u = vec![C64::new(0.0, 0.0); t.len()];
                for phi in self.phi {
                    let c = dot(phi, &t);
                    for (ui, pi) in u.iter_mut().zip(phi) {
                        *ui += c * pi;
                    }
                }
                let mut out = vec![C64::new(0.0, 0.0); x.len()];
                a.apply_adjoint_add(&u, &mut out);
                out
            })
            .collect();
        y.fill(C64::new(0.0, 0.0));
        for p in partials {
            for (yi, pi) in y.iter_mut().zip(p) {
                *yi += pi;
            }
        }
    }
}

/// Matrices of `a_x`, `x = 1..=L`, from sector `n + 1` to sector `n`.
pub(crate) fn annihilators(analysis: &Analysis, n: usize) -> Result<Vec<SparseOperator>> {
    let upper = analysis.summary(n + 1)?;
    (1..=analysis.sites())
        .map(|x| annihilation_matrix(x, &upper.sector))
        .collect()
}

/// `Σ_x B_x† B_x` with `B_x = Φ† a_x Ψ`, row-major.
fn projected_overlap(down: &[SparseOperator], phi: &[Vec<C64>], psi: &[Vec<C64>]) -> Vec<C64> {
    let q = psi.len();
    let blocks: Vec<Vec<C64>> = down
        .par_iter()
        .map(|a| {
            // b[α][j] = ⟨φ_α, a ψ_j⟩
            let images: Vec<Vec<C64>> = psi.iter().map(|p| a.apply(p)).collect();
            let b: Vec<Vec<C64>> = phi
                .iter()
                .map(|f| images.iter().map(|im| dot(f, im)).collect())
                .collect();
            let mut out = vec![C64::new(0.0, 0.0); q * q];
            for i in 0..q {
                for j in 0..q {
                    out[i * q + j] = b.iter().map(|row| row[i].conj() * row[j]).sum();
                }
            }
            out
        })
        .collect();
    let mut total = vec![C64::new(0.0, 0.0); q * q];
    for b in blocks {
        for (t, v) in total.iter_mut().zip(b) {
            *t += v;
        }
    }
    total
}

/// Columns `a_x† φ_α` ordered `(α, x)` with `α` major.
pub(crate) fn gram_columns(down: &[SparseOperator], phi: &[Vec<C64>]) -> Vec<Vec<C64>> {
    phi.par_iter()
        .flat_map_iter(|f| {
            down.iter().map(move |a| {
                let mut out = vec![C64::new(0.0, 0.0); a.ncols()];
                a.apply_adjoint_add(f, &mut out);
                out
            })
        })
        .collect()
}

/// Row-major Gram matrix `⟨c_i, c_j⟩`.
pub(crate) fn gram_of(columns: &[Vec<C64>]) -> Vec<C64> {
    let k = columns.len();
    let rows: Vec<Vec<C64>> = (0..k)
        .into_par_iter()
        .map(|i| (0..k).map(|j| dot(&columns[i], &columns[j])).collect())
        .collect();
    rows.into_iter().flatten().collect()
}

fn largest(dim: usize, entries: &[C64]) -> Result<f64> {
    Ok(small_hermitian_eigenvalues(dim, entries)?
        .last()
        .copied()
        .unwrap_or(0.0))
}

fn norm_pair(
    analysis: &Analysis,
    n: usize,
    down: &[SparseOperator],
    phi: &[Vec<C64>],
    psi: &[Vec<C64>],
    salt: u64,
) -> Result<(f64, f64, SolveInfo)> {
    let opts = analysis.options();
    let q = psi.len();
    if q > MAX_GROUND_SPACE {
        return Err(Error::InvalidArguments(format!(
            "ground space of H_{} has dimension {q}, above the limit {MAX_GROUND_SPACE}",
            n + 1
        )));
    }
    let norm_g = largest(q, &projected_overlap(down, phi, psi))?;
    let m = OverlapOperator { down, phi };
    let seed = opts.derived_seed(&[analysis.sites() as u64, n as u64, salt]);
    let (norm_f, info) = max_eigenvalue_deflated(&m, (n + 1) as f64, psi, opts, seed)?;
    Ok((norm_g, norm_f.max(0.0), info))
}

pub(super) fn compute(analysis: &Analysis, n: usize) -> Result<OverlapNorms> {
    if analysis.statistics() == Statistics::Fermion && n + 1 > analysis.sites() {
        return Err(Error::InvalidArguments(format!(
            "sector n + 1 = {} exceeds L = {} for fermions",
            n + 1,
            analysis.sites()
        )));
    }
    let lower = analysis.summary(n)?;
    let upper = analysis.summary(n + 1)?;
    let down = annihilators(analysis, n)?;
    let phi = &lower.ground_basis;
    let psi = &upper.ground_basis;
    let opts = analysis.options();

    let (norm_g, norm_f, info) = norm_pair(analysis, n, &down, phi, psi, 2000)?;
    let mut matvecs = info.matvecs;

    let width = phi.len() * analysis.sites();
    let (norm_gram, norm_f_lowrank) = if width <= opts.dense_max_dim {
        let columns = gram_columns(&down, phi);
        let gram = gram_of(&columns);
        let norm_gram = largest(width, &gram)?;
        // C†P⊥C = C†C - (Ψ†C)†(Ψ†C)
        let proj: Vec<Vec<C64>> = psi
            .iter()
            .map(|p| columns.iter().map(|c| dot(p, c)).collect())
            .collect();
        let mut reduced = gram;
        for i in 0..width {
            for j in 0..width {
                let s: C64 = proj.iter().map(|row| row[i].conj() * row[j]).sum();
                reduced[i * width + j] -= s;
            }
        }
        (norm_gram, Some(largest(width, &reduced)?.max(0.0)))
    } else {
        let m = OverlapOperator { down: &down, phi };
        let seed = opts.derived_seed(&[analysis.sites() as u64, n as u64, 2001]);
        let (v, info) = max_eigenvalue_deflated(&m, (n + 1) as f64, &[], opts, seed)?;
        matvecs += info.matvecs;
        (v, None)
    };

    let alternate = if upper.degeneracy_ambiguous {
        let mut widened: Vec<Vec<C64>> = psi.clone();
        widened.extend(upper.excited_basis.iter().cloned());
        let (g, f, info) = norm_pair(analysis, n, &down, phi, &widened, 2002)?;
        matvecs += info.matvecs;
        Some(AlternateNorms {
            q_n1: widened.len(),
            norm_g: g,
            norm_f: f,
        })
    } else {
        None
    };

    Ok(OverlapNorms {
        n,
        q_n: lower.q_n,
        q_n1: upper.q_n,
        norm_g,
        norm_f,
        norm_f_lowrank,
        norm_gram,
        matvecs,
        alternate,
    })
}

/// `(‖G_n‖, ‖F_n‖)` of `spec` between sectors `n` and `n + 1`.
pub fn overlap_norms(analysis: &Analysis, n: usize) -> Result<Arc<OverlapNorms>> {
    analysis.overlap(n)
}
