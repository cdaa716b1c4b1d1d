use std::sync::Arc;

use crate::basis::{FockState, SectorBasis, Statistics, MAX_BOSON_OCCUPATION};
use crate::{Error, Result, C64};

use super::SparseOperator;

// Fermion basis states are a†_{x_1} ... a†_{x_n} |vac> with x_1 < ... < x_n,
// so moving a ladder operator to site x passes every particle below x.
#[inline]
fn fermion_sign(state: &FockState, x: usize) -> f64 {
    if state.occupied_below(x) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// One ladder step as `(sign, weight, state')`: the coefficient is
/// `sign * sqrt(weight)`. Fermions have weight 1, bosons sign +1. Keeping the
/// boson weight as an integer lets strings of operators take one square root
/// of the product, which is exact whenever the product is a perfect square.
#[inline]
pub(crate) fn ladder_step(
    x: usize,
    state: &FockState,
    create: bool,
) -> Option<(f64, u64, FockState)> {
    assert!(
        x >= 1 && x <= state.sites(),
        "site {x} outside 1..={}",
        state.sites()
    );
    let occ = state.occupation(x);
    match (state.statistics(), create) {
        (_, false) if occ == 0 => None,
        (Statistics::Fermion, true) if occ == 1 => None,
        (Statistics::Fermion, _) => {
            let next = if create { 1 } else { 0 };
            Some((fermion_sign(state, x), 1, state.with_occupation(x, next)))
        }
        (Statistics::Boson, false) => Some((1.0, occ as u64, state.with_occupation(x, occ - 1))),
        (Statistics::Boson, true) => {
            assert!(
                occ < MAX_BOSON_OCCUPATION,
                "boson occupation overflow at site {x}"
            );
            Some((1.0, occ as u64 + 1, state.with_occupation(x, occ + 1)))
        }
    }
}

/// `a_x |state>` as `(coefficient, state')`, or `None` when site `x` is empty.
#[inline]
pub fn apply_annihilation(x: usize, state: &FockState) -> Option<(f64, FockState)> {
    ladder_step(x, state, false).map(|(sign, w, s)| (sign * (w as f64).sqrt(), s))
}

/// `a_x^† |state>` as `(coefficient, state')`, or `None` under Pauli exclusion.
#[inline]
pub fn apply_creation(x: usize, state: &FockState) -> Option<(f64, FockState)> {
    ladder_step(x, state, true).map(|(sign, w, s)| (sign * (w as f64).sqrt(), s))
}

fn ladder_matrix(
    x: usize,
    from: &Arc<SectorBasis>,
    delta: isize,
    op: fn(usize, &FockState) -> Option<(f64, FockState)>,
) -> Result<SparseOperator> {
    if from.dipole_class().is_some() {
        return Err(Error::InvalidArguments(
            "ladder matrices are built on unrestricted sectors".into(),
        ));
    }
    if x == 0 || x > from.sites() {
        return Err(Error::InvalidArguments(format!(
            "site {x} outside 1..={}",
            from.sites()
        )));
    }
    let to = Arc::new(from.shifted(delta)?);
    let columns = from
        .states()
        .iter()
        .map(|s| match op(x, s) {
            Some((c, t)) => {
                let row = to
                    .index_of(&t)
                    .expect("ladder image lies in the neighbouring sector");
                vec![(row, C64::new(c, 0.0))]
            }
            None => Vec::new(),
        })
        .collect();
    Ok(SparseOperator::from_columns(from.clone(), to, columns))
}

/// Matrix of `a_x` from sector `n` to sector `n - 1`.
pub fn annihilation_matrix(x: usize, from: &Arc<SectorBasis>) -> Result<SparseOperator> {
    if from.particles() == 0 {
        return Err(Error::InvalidArguments(
            "cannot annihilate on the vacuum sector".into(),
        ));
    }
    ladder_matrix(x, from, -1, apply_annihilation)
}

/// Matrix of `a_x^†` from sector `n` to sector `n + 1`.
pub fn creation_matrix(x: usize, from: &Arc<SectorBasis>) -> Result<SparseOperator> {
    ladder_matrix(x, from, 1, apply_creation)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boson(occ: &[u32]) -> FockState {
        FockState::from_occupations(Statistics::Boson, occ).unwrap()
    }

    #[test]
    fn annihilation_examples() {
        let vac = FockState::vacuum(3, Statistics::Fermion).unwrap();
        assert!(apply_annihilation(1, &vac).is_none());
        let s = FockState::fermions(4, &[1, 2]).unwrap();
        let (c, t) = apply_annihilation(2, &s).unwrap();
        assert_eq!(c, -1.0);
        assert_eq!(t, FockState::fermions(4, &[1]).unwrap());
        let (c, t) = apply_annihilation(1, &boson(&[2, 0])).unwrap();
        assert_eq!(c, 2f64.sqrt());
        assert_eq!(t, boson(&[1, 0]));
    }

    #[test]
    fn creation_examples() {
        let s = FockState::fermions(3, &[1]).unwrap();
        assert!(apply_creation(1, &s).is_none());
        let (c, t) = apply_creation(2, &s).unwrap();
        assert_eq!(c, -1.0);
        assert_eq!(t, FockState::fermions(3, &[1, 2]).unwrap());
        let (c, t) = apply_creation(1, &boson(&[2, 0])).unwrap();
        assert_eq!(c, 3f64.sqrt());
        assert_eq!(t, boson(&[3, 0]));
    }

    #[test]
    fn creation_is_adjoint_of_annihilation() {
        for stats in [Statistics::Fermion, Statistics::Boson] {
            let lower = Arc::new(SectorBasis::new(4, 1, stats, None).unwrap());
            let upper = Arc::new(SectorBasis::new(4, 2, stats, None).unwrap());
            for x in 1..=4 {
                let c = creation_matrix(x, &lower).unwrap();
                let a = annihilation_matrix(x, &upper).unwrap();
                assert_eq!(c.max_abs_diff(&a.adjoint()).unwrap(), 0.0);
            }
        }
    }
}
