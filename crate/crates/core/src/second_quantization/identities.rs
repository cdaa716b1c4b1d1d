//! Exact operator identities between neighbouring particle-number sectors.

use std::sync::Arc;

use serde::Serialize;

use crate::basis::{SectorBasis, Statistics};
use crate::{Error, Result, C64};

use super::hamiltonian::assemble_term;
use super::ladder::{annihilation_matrix, creation_matrix};
use super::{HamiltonianSpec, MBodyTerm, SparseOperator};

/// Max-entry difference of two operators together with the scale it is
/// measured against.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Residual {
    pub max_abs_diff: f64,
    pub scale: f64,
}

impl Residual {
    fn between(lhs: &SparseOperator, rhs: &SparseOperator) -> Result<Self> {
        Ok(Self {
            max_abs_diff: lhs.max_abs_diff(rhs)?,
            scale: lhs.tolerance_scale().max(rhs.tolerance_scale()),
        })
    }

    /// Residual divided by scale.
    pub fn relative(&self) -> f64 {
        self.max_abs_diff / self.scale
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max_abs_diff <= tol * self.scale
    }
}

fn unrestricted(sites: usize, n: usize, stats: Statistics) -> Result<Arc<SectorBasis>> {
    Ok(Arc::new(SectorBasis::new(sites, n, stats, None)?))
}

/// `Σ_x a_x† A a_x` on sector `n + 1`, given `A` on sector `n`.
pub fn lift(op: &SparseOperator) -> Result<SparseOperator> {
    let lower = op.domain().clone();
    if lower.dipole_class().is_some() {
        return Err(Error::InvalidArguments(
            "lifting needs an unrestricted sector".into(),
        ));
    }
    let upper = Arc::new(lower.shifted(1)?);
    let mut sum = SparseOperator::zero(upper.clone(), upper.clone());
    for x in 1..=lower.sites() {
        let a = annihilation_matrix(x, &upper)?;
        let c = creation_matrix(x, &lower)?;
        sum = sum.add(&c.compose(&op.compose(&a)?)?)?;
    }
    Ok(sum)
}

/// Checks `N A = m A + Σ_ξ a_ξ† A a_ξ` for the term's operator `A` on
/// `sector` (unrestricted).
pub fn verify_number_commute(term: &MBodyTerm, sector: &Arc<SectorBasis>) -> Result<Residual> {
    let n = sector.particles();
    let a = assemble_term(term, sector)?;
    let lhs = a.scaled(C64::new(n as f64, 0.0));
    let mut rhs = a.scaled(C64::new(term.order as f64, 0.0));
    if n > 0 {
        let lower = Arc::new(sector.shifted(-1)?);
        rhs = rhs.add(&lift(&assemble_term(term, &lower)?)?)?;
    }
    Residual::between(&lhs, &rhs)
}

/// Checks `H^(m)_{n+1} = (n + 1 - m)^{-1} Σ_x a_x† H^(m)_n a_x`.
pub fn verify_lift_identity(
    term: &MBodyTerm,
    sites: usize,
    n: usize,
    statistics: Statistics,
) -> Result<Residual> {
    if n < term.order {
        return Err(Error::InvalidArguments(format!(
            "lifting identity needs n >= m, got n={n}, m={}",
            term.order
        )));
    }
    let lower = unrestricted(sites, n, statistics)?;
    let upper = unrestricted(sites, n + 1, statistics)?;
    let lhs = assemble_term(term, &upper)?;
    let factor = 1.0 / (n + 1 - term.order) as f64;
    let rhs = lift(&assemble_term(term, &lower)?)?.scaled(C64::new(factor, 0.0));
    Residual::between(&lhs, &rhs)
}

/// `H_{n+1} - (n + 1 - m_0)^{-1} Σ_x a_x† H_n a_x` on sector `n + 1`.
pub fn key_lemma_operator(spec: &HamiltonianSpec, n: usize) -> Result<SparseOperator> {
    let m0 = spec.min_order();
    let m1 = spec.max_order();
    if n < m1 {
        return Err(Error::InvalidArguments(format!(
            "need n >= m_1 = {m1}, got {n}"
        )));
    }
    let lower = unrestricted(spec.sites, n, spec.statistics)?;
    let upper = unrestricted(spec.sites, n + 1, spec.statistics)?;
    let factor = 1.0 / (n + 1 - m0) as f64;
    let lifted = lift(&spec.assemble(&lower)?)?;
    spec.assemble(&upper)?
        .add_scaled(&lifted, C64::new(-factor, 0.0))
}

/// Largest deviation of `a_x a_y† ± a_y† a_x - δ_xy` and `a_x a_y ± a_y a_x`
/// from zero over all sites, on sector `n` (sign `+` for fermions).
pub fn canonical_relation_residual(sites: usize, n: usize, statistics: Statistics) -> Result<f64> {
    let sign = C64::new(statistics.exchange_sign(), 0.0);
    let sector = unrestricted(sites, n, statistics)?;
    let id = SparseOperator::identity(sector.clone());
    let mut worst: f64 = 0.0;
    let raised = if statistics == Statistics::Fermion && n == sites {
        None
    } else {
        Some(Arc::new(sector.shifted(1)?))
    };
    let lowered = if n > 0 {
        Some(Arc::new(sector.shifted(-1)?))
    } else {
        None
    };
    for x in 1..=sites {
        for y in 1..=sites {
            // a_x a_y† + sign a_y† a_x
            let mut mixed = SparseOperator::zero(sector.clone(), sector.clone());
            if let Some(up) = &raised {
                mixed = annihilation_matrix(x, up)?.compose(&creation_matrix(y, &sector)?)?;
            }
            if let Some(down) = &lowered {
                let t = creation_matrix(y, down)?.compose(&annihilation_matrix(x, &sector)?)?;
                mixed = mixed.add_scaled(&t, sign)?;
            }
            let delta = if x == y {
                id.clone()
            } else {
                SparseOperator::zero(sector.clone(), sector.clone())
            };
            worst = worst.max(mixed.max_abs_diff(&delta)?);

            // a_x a_y + sign a_y a_x
            if let Some(down) = &lowered {
                if down.particles() > 0 {
                    let xy =
                        annihilation_matrix(x, down)?.compose(&annihilation_matrix(y, &sector)?)?;
                    let yx =
                        annihilation_matrix(y, down)?.compose(&annihilation_matrix(x, &sector)?)?;
                    worst = worst.max(xy.add_scaled(&yx, sign)?.max_abs());
                }
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_operator_identities_are_exact() {
        let n_op = MBodyTerm::number_operator(3);
        let s = unrestricted(3, 2, Statistics::Fermion).unwrap();
        assert_eq!(verify_number_commute(&n_op, &s).unwrap().max_abs_diff, 0.0);
        let r =
            verify_lift_identity(&MBodyTerm::number_operator(4), 4, 2, Statistics::Boson).unwrap();
        assert!(r.within(1e-14));
        let zero = MBodyTerm::zero(2);
        assert_eq!(verify_number_commute(&zero, &s).unwrap().max_abs_diff, 0.0);
    }

    #[test]
    fn lift_needs_enough_particles() {
        let term = MBodyTerm::zero(2);
        assert!(verify_lift_identity(&term, 4, 1, Statistics::Fermion).is_err());
    }

    #[test]
    fn canonical_relations_hold_exactly() {
        for stats in [Statistics::Fermion, Statistics::Boson] {
            for n in 0..=3 {
                assert!(
                    canonical_relation_residual(3, n, stats).unwrap() < 1e-14,
                    "{stats} n={n}"
                );
            }
        }
    }
}
