use std::sync::Arc;

use serde::Serialize;

use crate::basis::FillingSpec;
use crate::second_quantization::{annihilation_matrix, creation_matrix};
use crate::spectra::small_hermitian_eigenvalues;
use crate::spectra::vector::dot;
use crate::symmetry::{kernel_structure, KernelStructure};
use crate::{Error, Result, Statistics, C64};

use super::overlap::{gram_columns, gram_of};
use super::Analysis;

/// The many-body Gram matrix `G^(n)` of the ground space of `H_n`.
#[derive(Clone, Debug, Serialize)]
pub struct GramReport {
    pub n: usize,
    pub q_n: usize,
    pub sites: usize,
    /// Row-major entries `⟨a_x† φ_α, a_y† φ_β⟩`, index `α L + (x - 1)`;
    /// omitted when `q_n L` exceeds the dense limit.
    pub gram: Option<Vec<Vec<C64>>>,
    pub min_eigenvalue: Option<f64>,
    /// `‖G^(n)‖`
    pub norm_gram: f64,
    /// `‖G_n‖`, absent when sector `n + 1` does not exist.
    pub norm_g: Option<f64>,
    /// `‖F_n‖`, absent when sector `n + 1` does not exist.
    pub norm_f: Option<f64>,
    pub blocks: Option<GramBlocks>,
}

/// `G^(n)` for the ground space of `H_n`, with the overlap norms.
pub fn gram_matrix(analysis: &Analysis, n: usize) -> Result<GramReport> {
    let l = analysis.sites();
    let lower = analysis.summary(n)?;
    let has_upper = analysis.max_particles().map_or(true, |max| n < max);
    let width = lower.q_n * l;
    let mut report = GramReport {
        n,
        q_n: lower.q_n,
        sites: l,
        gram: None,
        min_eigenvalue: None,
        norm_gram: 0.0,
        norm_g: None,
        norm_f: None,
        blocks: None,
    };
    if !has_upper {
        report.gram = Some(vec![vec![C64::new(0.0, 0.0); width]; width]);
        report.min_eigenvalue = Some(0.0);
    } else if width <= analysis.options().dense_max_dim {
        let raised = Arc::new(lower.sector.shifted(1)?);
        let down: Vec<_> = (1..=l)
            .map(|x| annihilation_matrix(x, &raised))
            .collect::<Result<_>>()?;
        let g = gram_of(&gram_columns(&down, &lower.ground_basis));
        let values = small_hermitian_eigenvalues(width, &g)?;
        report.min_eigenvalue = values.first().copied();
        report.norm_gram = values.last().copied().unwrap_or(0.0);
        report.gram = Some(g.chunks(width).map(<[C64]>::to_vec).collect());
    }
    if has_upper {
        let o = analysis.overlap(n)?;
        report.norm_g = Some(o.norm_g);
        report.norm_f = Some(o.norm_f);
        if report.gram.is_none() {
            report.norm_gram = o.norm_gram;
        }
    }
    Ok(report)
}

/// One `q × q` block `γ` of the Gram matrix at maximal filling, in the basis
/// of kernel translates `T^(k-1) φ`.
#[derive(Clone, Debug, Serialize)]
pub struct GramBlock {
    pub gamma: usize,
    /// Site `x_k = (γ - n_q k) mod L` paired with translate `k`.
    pub sites: Vec<usize>,
    pub g: Vec<Vec<C64>>,
    pub f: Vec<Vec<C64>>,
    pub g_eigenvalues: Vec<f64>,
    pub f_eigenvalues: Vec<f64>,
    pub trace_f: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GramBlocks {
    pub n_q: usize,
    pub p: usize,
    pub q: usize,
    pub kernel: KernelStructure,
    pub blocks: Vec<GramBlock>,
    /// Largest entry of `G^(n_q)` outside the `γ` blocks.
    pub off_block_residual: f64,
    /// `max_γ max |G(γ) - (1 ∓ F(γ))|`
    pub identity_residual: f64,
    pub min_f_eigenvalue: f64,
    pub max_g_eigenvalue: f64,
    /// Whether `tr F(γ) = p` is expected (bosons on commensurate rings).
    pub trace_checked: bool,
    pub max_trace_deviation: f64,
}

impl GramBlocks {
    /// Names of the failed block checks.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.off_block_residual > 1e-12 {
            out.push(format!(
                "off-block entries up to {:.3e}",
                self.off_block_residual
            ));
        }
        if self.identity_residual > 1e-12 {
            out.push(format!(
                "G(γ) deviates from 1 ∓ F(γ) by {:.3e}",
                self.identity_residual
            ));
        }
        if self.min_f_eigenvalue < -1e-10 {
            out.push(format!("F(γ) has eigenvalue {:.3e}", self.min_f_eigenvalue));
        }
        if self.trace_checked && self.max_trace_deviation > 1e-9 {
            out.push(format!(
                "tr F(γ) deviates from p by {:.3e}",
                self.max_trace_deviation
            ));
        }
        out
    }
}

fn site(t: i64, l: usize) -> usize {
    (t - 1).rem_euclid(l as i64) as usize + 1
}

/// Block decomposition of `G^(n_q)` over the translates of the reference
/// kernel state.
pub fn gram_blocks(analysis: &Analysis, filling: &FillingSpec) -> Result<GramBlocks> {
    let l = analysis.sites();
    if filling.sites != l {
        return Err(Error::InvalidArguments(format!(
            "filling is for L = {}, spec has L = {l}",
            filling.sites
        )));
    }
    let n_q = filling.n_q();
    let summary = analysis.summary(n_q)?;
    let kernel_dim = summary.kernel_dim.unwrap_or(0);
    if kernel_dim != filling.q || summary.e0.abs() > analysis.options().kernel_tol * summary.scale {
        return Err(Error::AssumptionViolated(format!(
            "kernel of H_{n_q} has dimension {kernel_dim}, expected q = {}",
            filling.q
        )));
    }
    let kernel = kernel_structure(&summary.hamiltonian, &summary.ground_basis, filling)?;
    let failures = kernel.failures(1e-10);
    if !failures.is_empty() {
        return Err(Error::AssumptionViolated(failures.join("; ")));
    }
    let q = filling.q;
    let sector = summary.sector.clone();
    let full = analysis.statistics() == Statistics::Fermion && n_q == l;
    let up: Vec<_> = if full {
        Vec::new()
    } else {
        (1..=l)
            .map(|x| creation_matrix(x, &sector))
            .collect::<Result<_>>()?
    };
    let down: Vec<_> = if n_q > 0 {
        (1..=l)
            .map(|x| annihilation_matrix(x, &sector))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let t = &kernel.translates;

    // a_x† t_k for every (k, x)
    let raised: Vec<Vec<Vec<C64>>> = if full {
        vec![vec![Vec::new(); l]; q]
    } else {
        t.iter()
            .map(|tk| up.iter().map(|a| a.apply(tk)).collect())
            .collect()
    };
    let lowered: Vec<Vec<Vec<C64>>> = t
        .iter()
        .map(|tk| down.iter().map(|a| a.apply(tk)).collect())
        .collect();
    let gamma_of = |k: usize, x: usize| site(x as i64 + (n_q * k) as i64, l);

    let mut off_block_residual: f64 = 0.0;
    for k in 1..=q {
        for x in 1..=l {
            for k2 in 1..=q {
                for y in 1..=l {
                    if gamma_of(k, x) != gamma_of(k2, y) {
                        let v = dot(&raised[k - 1][x - 1], &raised[k2 - 1][y - 1]).norm();
                        off_block_residual = off_block_residual.max(v);
                    }
                }
            }
        }
    }

    let sign = match analysis.statistics() {
        Statistics::Fermion => -1.0,
        Statistics::Boson => 1.0,
    };
    let mut blocks = Vec::with_capacity(l);
    let mut identity_residual: f64 = 0.0;
    let mut min_f = f64::INFINITY;
    let mut max_g = f64::NEG_INFINITY;
    let mut max_trace_deviation: f64 = 0.0;
    let trace_checked = analysis.statistics() == Statistics::Boson && filling.ell().is_some();
    for gamma in 1..=l {
        let xs: Vec<usize> = (1..=q)
            .map(|k| site(gamma as i64 - (n_q * k) as i64, l))
            .collect();
        let mut g = vec![vec![C64::new(0.0, 0.0); q]; q];
        let mut f = vec![vec![C64::new(0.0, 0.0); q]; q];
        for k in 0..q {
            for k2 in 0..q {
                g[k][k2] = dot(&raised[k][xs[k] - 1], &raised[k2][xs[k2] - 1]);
                if !down.is_empty() {
                    f[k][k2] = dot(&lowered[k][xs[k2] - 1], &lowered[k2][xs[k] - 1]);
                }
                let delta = if k == k2 { 1.0 } else { 0.0 };
                identity_residual =
                    identity_residual.max((g[k][k2] - (delta + sign * f[k][k2])).norm());
            }
        }
        let flat = |m: &[Vec<C64>]| m.iter().flatten().copied().collect::<Vec<_>>();
        let g_eigenvalues = small_hermitian_eigenvalues(q, &flat(&g))?;
        let f_eigenvalues = small_hermitian_eigenvalues(q, &flat(&f))?;
        min_f = min_f.min(f_eigenvalues.first().copied().unwrap_or(0.0));
        max_g = max_g.max(g_eigenvalues.last().copied().unwrap_or(0.0));
        let trace_f: f64 = (0..q).map(|k| f[k][k].re).sum();
        if trace_checked {
            max_trace_deviation = max_trace_deviation.max((trace_f - filling.p as f64).abs());
        }
        blocks.push(GramBlock {
            gamma,
            sites: xs,
            g,
            f,
            g_eigenvalues,
            f_eigenvalues,
            trace_f,
        });
    }

    Ok(GramBlocks {
        n_q,
        p: filling.p,
        q,
        kernel,
        blocks,
        off_block_residual,
        identity_residual,
        min_f_eigenvalue: min_f,
        max_g_eigenvalue: max_g,
        trace_checked,
        max_trace_deviation,
    })
}
