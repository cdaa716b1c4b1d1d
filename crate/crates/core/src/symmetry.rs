//! Translation `T`, charge `U = exp(2πi N / L)` and dipole
//! `V = exp(2πi D / L)` unitaries, their algebra `VT = UTV`, and dipole-class
//! block decomposition of Hamiltonians that commute with `V`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::basis::{FillingSpec, FockState, SectorBasis, Statistics};
use crate::second_quantization::{annihilation_matrix, SparseOperator};
use crate::spectra::vector::{dot, fix_phase, norm};
use crate::{Error, Result, C64};

/// Charge and dipole eigenvalues of a `U`/`V` eigenvector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymmetryEigendata {
    pub d: usize,
    pub n: usize,
    pub sites: usize,
    pub u_phase: C64,
    pub v_phase: C64,
}

impl SymmetryEigendata {
    pub fn new(d: usize, n: usize, sites: usize) -> Self {
        Self {
            d,
            n,
            sites,
            u_phase: phase(n, sites),
            v_phase: phase(d, sites),
        }
    }
}

/// `exp(2πi k / L)`.
pub fn phase(k: usize, sites: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k % sites) as f64 / sites as f64)
}

/// Image of a basis state under `T`: every particle moves from `x` to
/// `x + 1`, site `L` wrapping to 1. For fermions the wrapped particle is
/// moved to the front of the normal order past the other `n - 1`.
pub fn translate_state(state: &FockState) -> (f64, FockState) {
    let occ = state.occupations();
    let l = occ.len();
    let mut shifted = vec![0; l];
    for x in 0..l {
        shifted[(x + 1) % l] = occ[x];
    }
    let image = FockState::from_occupations(state.statistics(), &shifted)
        .expect("translation preserves validity");
    let sign = match state.statistics() {
        Statistics::Fermion if occ[l - 1] == 1 && (state.number() - 1) % 2 == 1 => -1.0,
        _ => 1.0,
    };
    (sign, image)
}

/// Matrix of `T` on `sector`. On a dipole-restricted sector of class `d`, the
/// codomain is the class `d + n (mod L)`.
pub fn translation_matrix(sector: &Arc<SectorBasis>) -> Result<SparseOperator> {
    let l = sector.sites();
    let codomain = match sector.dipole_class() {
        None => sector.clone(),
        Some(d) => Arc::new(SectorBasis::new(
            l,
            sector.particles(),
            sector.statistics(),
            Some((d + sector.particles()) % l),
        )?),
    };
    let columns = sector
        .states()
        .iter()
        .map(|s| {
            let (sign, image) = translate_state(s);
            let row = codomain
                .index_of(&image)
                .expect("translate lies in the codomain");
            vec![(row, C64::new(sign, 0.0))]
        })
        .collect();
    Ok(SparseOperator::from_columns(
        sector.clone(),
        codomain,
        columns,
    ))
}

/// `(U, V)` on `sector`, both diagonal.
pub fn uv_matrices(sector: &Arc<SectorBasis>) -> (SparseOperator, SparseOperator) {
    let l = sector.sites();
    let u = vec![phase(sector.particles(), l); sector.dim()];
    let v: Vec<C64> = sector
        .states()
        .iter()
        .map(|s| phase((s.dipole() % l as u64) as usize, l))
        .collect();
    (
        SparseOperator::diagonal(sector.clone(), &u),
        SparseOperator::diagonal(sector.clone(), &v),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlgebraResiduals {
    /// `max |VT - UTV|`
    pub vt_utv: f64,
    /// `max |UT - TU|`
    pub ut_tu: f64,
    /// `max |UV - VU|`
    pub uv_vu: f64,
}

impl AlgebraResiduals {
    pub fn max(&self) -> f64 {
        self.vt_utv.max(self.ut_tu).max(self.uv_vu)
    }
}

pub fn verify_symmetry_algebra(
    sites: usize,
    n: usize,
    statistics: Statistics,
) -> Result<AlgebraResiduals> {
    let sector = Arc::new(SectorBasis::new(sites, n, statistics, None)?);
    let t = translation_matrix(&sector)?;
    let (u, v) = uv_matrices(&sector);
    Ok(AlgebraResiduals {
        vt_utv: v.compose(&t)?.max_abs_diff(&u.compose(&t)?.compose(&v)?)?,
        ut_tu: u.compose(&t)?.max_abs_diff(&t.compose(&u)?)?,
        uv_vu: u.compose(&v)?.max_abs_diff(&v.compose(&u)?)?,
    })
}

/// `max |A†A - I|`.
pub fn unitarity_residual(op: &SparseOperator) -> Result<f64> {
    let id = SparseOperator::identity(op.domain().clone());
    op.adjoint().compose(op)?.max_abs_diff(&id)
}

/// `max |T^L - I|` on the unrestricted sector.
pub fn translation_period_residual(sites: usize, n: usize, statistics: Statistics) -> Result<f64> {
    let sector = Arc::new(SectorBasis::new(sites, n, statistics, None)?);
    let t = translation_matrix(&sector)?;
    let mut power = SparseOperator::identity(sector.clone());
    for _ in 0..sites {
        power = t.compose(&power)?;
    }
    power.max_abs_diff(&SparseOperator::identity(sector))
}

/// `max_x max |T† a_x T - a_{x-1}|` between sectors `n` and `n - 1`.
pub fn conjugation_residual(sites: usize, n: usize, statistics: Statistics) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let upper = Arc::new(SectorBasis::new(sites, n, statistics, None)?);
    let lower = Arc::new(upper.shifted(-1)?);
    let t_up = translation_matrix(&upper)?;
    let t_down_adj = translation_matrix(&lower)?.adjoint();
    let mut worst: f64 = 0.0;
    for x in 1..=sites {
        let prev = if x == 1 { sites } else { x - 1 };
        let lhs = t_down_adj.compose(&annihilation_matrix(x, &upper)?.compose(&t_up)?)?;
        worst = worst.max(lhs.max_abs_diff(&annihilation_matrix(prev, &upper)?)?);
    }
    Ok(worst)
}

/// One dipole-class block of an operator on an unrestricted sector.
#[derive(Clone, Debug)]
pub struct DipoleBlock {
    pub class: usize,
    /// Positions of the block's states in the unrestricted sector,
    /// increasing (the class basis is an order-preserving subsequence).
    pub indices: Vec<usize>,
    pub operator: SparseOperator,
}

impl DipoleBlock {
    /// Embeds a block vector into the unrestricted sector.
    pub fn embed(&self, v: &[C64], full_dim: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); full_dim];
        for (&i, &a) in self.indices.iter().zip(v) {
            out[i] = a;
        }
        out
    }
}

fn classes(sector: &SectorBasis) -> Vec<usize> {
    let l = sector.sites() as u64;
    sector
        .states()
        .iter()
        .map(|s| (s.dipole() % l) as usize)
        .collect()
}

/// Largest entry of `h` coupling different dipole classes.
pub fn dipole_coupling(h: &SparseOperator) -> f64 {
    let class = classes(h.domain());
    h.entries()
        .filter(|&(i, j, _)| class[i] != class[j])
        .map(|(_, _, v)| v.norm())
        .fold(0.0, f64::max)
}

/// Splits an operator that commutes with `V` into its `L` dipole-class
/// blocks, ordered by class.
pub fn symmetry_block_decompose(h: &SparseOperator) -> Result<Vec<DipoleBlock>> {
    let sector = h.domain().clone();
    if sector.dipole_class().is_some() || h.codomain().as_ref() != sector.as_ref() {
        return Err(Error::InvalidArguments(
            "block decomposition needs an operator on an unrestricted sector".into(),
        ));
    }
    let residual = dipole_coupling(h);
    let scale = h.tolerance_scale();
    if residual > 1e-12 * scale {
        return Err(Error::NotSymmetric { residual, scale });
    }
    let l = sector.sites();
    let class = classes(&sector);
    let mut local = vec![0usize; sector.dim()];
    let mut indices = vec![Vec::new(); l];
    for (i, &c) in class.iter().enumerate() {
        local[i] = indices[c].len();
        indices[c].push(i);
    }
    let mut triplets = vec![Vec::new(); l];
    for (i, j, v) in h.entries() {
        if class[i] == class[j] {
            triplets[class[i]].push((local[i], local[j], v));
        }
    }
    let mut blocks = Vec::with_capacity(l);
    for (c, (idx, trip)) in indices.into_iter().zip(triplets).enumerate() {
        let basis = Arc::new(SectorBasis::new(
            l,
            sector.particles(),
            sector.statistics(),
            Some(c),
        )?);
        debug_assert_eq!(basis.dim(), idx.len());
        let operator = SparseOperator::from_triplets(basis.clone(), basis, trip);
        blocks.push(DipoleBlock {
            class: c,
            indices: idx,
            operator,
        });
    }
    Ok(blocks)
}

/// Dipole class of a vector if it lies in a single class (up to `tol` in
/// norm outside it).
pub fn vector_class(sector: &SectorBasis, v: &[C64], tol: f64) -> Option<usize> {
    let class = classes(sector);
    let mut weight = vec![0.0; sector.sites()];
    for (&c, a) in class.iter().zip(v) {
        weight[c] += a.norm_sqr();
    }
    let total: f64 = weight.iter().sum();
    let (best, &w) = weight
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    ((total - w).max(0.0).sqrt() <= tol).then_some(best)
}

/// The kernel of `H_{n_q}` seen through the translation and dipole
/// symmetries: a reference state `φ`, its translates and the checks that
/// the kernel has the q-fold translate structure.
#[derive(Clone, Debug, Serialize)]
pub struct KernelStructure {
    pub kernel_dim: usize,
    pub q: usize,
    pub eigendata: SymmetryEigendata,
    /// `⟨φ, T^q φ⟩`
    pub periodicity_overlap: C64,
    /// `‖T^q φ - φ‖`
    pub periodicity_residual: f64,
    /// `‖T^q φ - ⟨φ, T^q φ⟩ φ‖`, zero when `φ` is a `T^q` eigenvector.
    pub translation_eigen_residual: f64,
    /// `‖V T^j φ - exp(2πi(d/L + jp/q)) T^j φ‖` for `j = 0..q`.
    pub v_phase_residuals: Vec<f64>,
    /// `max_j ‖H T^j φ‖`
    pub kernel_residual: f64,
    /// `max |⟨T^j φ, T^k φ⟩ - δ_jk|`
    pub orthonormality_residual: f64,
    /// `max_x ⟨φ, N_x φ⟩`
    pub max_site_occupation: f64,
    #[serde(skip)]
    pub reference: Vec<C64>,
    /// `T^j φ` for `j = 0..q`.
    #[serde(skip)]
    pub translates: Vec<Vec<C64>>,
}

impl KernelStructure {
    /// Names of the failed structural checks at tolerance `tol`, apart from
    /// q-periodicity (see [`Self::periodicity_failure`]).
    pub fn failures(&self, tol: f64) -> Vec<String> {
        let mut out = Vec::new();
        if self.kernel_dim != self.q {
            out.push(format!(
                "kernel dimension {} differs from q = {}",
                self.kernel_dim, self.q
            ));
        }
        if self.translation_eigen_residual > tol {
            out.push(format!(
                "reference state is not a T^q eigenvector (residual {:.3e})",
                self.translation_eigen_residual
            ));
        }
        if let Some(r) = self.v_phase_residuals.iter().cloned().reduce(f64::max) {
            if r > tol {
                out.push(format!("translates are not V-eigenvectors with the predicted phases (residual {r:.3e})"));
            }
        }
        if self.kernel_residual > tol {
            out.push(format!(
                "translates leave the kernel (residual {:.3e})",
                self.kernel_residual
            ));
        }
        if self.orthonormality_residual > tol {
            out.push(format!(
                "translates are not orthonormal (residual {:.3e})",
                self.orthonormality_residual
            ));
        }
        out
    }

    /// Description of the failure of `T^q φ = φ`, if it fails.
    pub fn periodicity_failure(&self, tol: f64) -> Option<String> {
        (self.periodicity_residual > tol).then(|| {
            format!(
                "reference state is not q-periodic: <phi, T^q phi> = {:.6}{:+.6}i",
                self.periodicity_overlap.re, self.periodicity_overlap.im
            )
        })
    }
}

/// Picks the reference kernel state `φ` (smallest dipole class, phase fixed
/// so its largest coordinate is real positive) and checks the translate
/// structure `T^j φ`, `j = 0..q`.
pub fn kernel_structure(
    h: &SparseOperator,
    kernel: &[Vec<C64>],
    filling: &FillingSpec,
) -> Result<KernelStructure> {
    let sector = h.domain().clone();
    let l = sector.sites();
    if kernel.is_empty() {
        return Err(Error::AssumptionViolated(format!(
            "H has no kernel at n = {}",
            sector.particles()
        )));
    }
    if filling.sites != l {
        return Err(Error::InvalidArguments(
            "filling and sector disagree on L".into(),
        ));
    }
    // Project the kernel onto each dipole class and keep the smallest class
    // with a nonzero component; the best-aligned kernel vector supplies φ.
    let class = classes(&sector);
    let mut chosen = None;
    'classes: for c in 0..l {
        let mut best: Option<(f64, Vec<C64>)> = None;
        for k in kernel {
            let proj: Vec<C64> = k
                .iter()
                .zip(&class)
                .map(|(&a, &cl)| if cl == c { a } else { C64::new(0.0, 0.0) })
                .collect();
            let w = norm(&proj);
            if w > 1e-6 && best.as_ref().map_or(true, |(bw, _)| w > *bw * (1.0 + 1e-9)) {
                best = Some((w, proj));
            }
        }
        if let Some((w, mut proj)) = best {
            for a in proj.iter_mut() {
                *a /= w;
            }
            chosen = Some((c, proj));
            break 'classes;
        }
    }
    let (d, mut phi) = chosen.expect("a nonzero kernel vector has a nonzero class component");
    fix_phase(&mut phi);

    let t = translation_matrix(&sector)?;
    let q = filling.q;
    let mut translates = vec![phi.clone()];
    for _ in 1..q {
        let next = t.apply(translates.last().expect("nonempty"));
        translates.push(next);
    }
    let t_q = t.apply(translates.last().expect("nonempty"));
    let periodicity_overlap = dot(&phi, &t_q);
    let periodicity_residual = norm(&t_q.iter().zip(&phi).map(|(a, b)| a - b).collect::<Vec<_>>());
    let translation_eigen_residual = norm(
        &t_q.iter()
            .zip(&phi)
            .map(|(a, b)| a - b * periodicity_overlap)
            .collect::<Vec<_>>(),
    );

    let (_, v) = uv_matrices(&sector);
    let v_phase_residuals = translates
        .iter()
        .enumerate()
        .map(|(j, tj)| {
            let angle = 2.0 * PI * (d as f64 / l as f64 + (j * filling.p) as f64 / q as f64);
            let expected = C64::from_polar(1.0, angle);
            let vt = v.apply(tj);
            norm(
                &vt.iter()
                    .zip(tj)
                    .map(|(a, b)| a - b * expected)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let kernel_residual = translates
        .iter()
        .map(|tj| norm(&h.apply(tj)))
        .fold(0.0, f64::max);
    let mut orthonormality_residual: f64 = 0.0;
    for (j, a) in translates.iter().enumerate() {
        for (k, b) in translates.iter().enumerate() {
            let target = if j == k { 1.0 } else { 0.0 };
            orthonormality_residual = orthonormality_residual.max((dot(a, b) - target).norm());
        }
    }
    let max_site_occupation = (1..=l)
        .map(|x| {
            sector
                .states()
                .iter()
                .zip(&phi)
                .map(|(s, a)| a.norm_sqr() * s.occupation(x) as f64)
                .sum::<f64>()
        })
        .fold(0.0, f64::max);

    Ok(KernelStructure {
        kernel_dim: kernel.len(),
        q,
        eigendata: SymmetryEigendata::new(d, sector.particles(), l),
        periodicity_overlap,
        periodicity_residual,
        translation_eigen_residual,
        v_phase_residuals,
        kernel_residual,
        orthonormality_residual,
        max_site_occupation,
        reference: phi,
        translates,
    })
}
