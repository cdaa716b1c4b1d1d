mod support;

use std::collections::HashSet;
use std::sync::Arc;

use fockgap::basis::{binomial, sector_dimension};
use fockgap::symmetry::{
    conjugation_residual, kernel_structure, symmetry_block_decompose, translation_matrix,
    translation_period_residual, unitarity_residual, uv_matrices, verify_symmetry_algebra,
};
use fockgap::{
    FillingSpec, FockState, HamiltonianSpec, PseudopotentialSpec, SectorBasis, SolverOptions,
    Statistics,
};
use support::*;

const BOTH: [Statistics; 2] = [Statistics::Fermion, Statistics::Boson];

fn sector(l: usize, n: usize, stats: Statistics) -> Arc<SectorBasis> {
    Arc::new(SectorBasis::new(l, n, stats, None).unwrap())
}

#[test]
fn dimensions_match_binomials_and_oracle() {
    for l in 1..=8usize {
        for n in 0..=5usize {
            for stats in BOTH {
                let expected = match stats {
                    Statistics::Fermion if n > l => continue,
                    Statistics::Fermion => binomial(l as u64, n as u64),
                    Statistics::Boson => binomial((l + n - 1) as u64, n as u64),
                };
                let s = SectorBasis::new(l, n, stats, None).unwrap();
                assert_eq!(s.dim() as u128, expected);
                assert_eq!(sector_dimension(l, n, stats), expected);
                assert_eq!(s.dim(), Sector::new(l, n, stats).dim());
            }
        }
    }
}

#[test]
fn dipole_classes_partition_the_sector() {
    for stats in BOTH {
        for (l, n) in [(5, 2), (6, 3), (4, 4)] {
            let full = SectorBasis::new(l, n, stats, None).unwrap();
            let mut seen = HashSet::new();
            for c in 0..l {
                let part = SectorBasis::new(l, n, stats, Some(c)).unwrap();
                for (i, s) in part.states().iter().enumerate() {
                    assert_eq!(s.dipole() as usize % l, c);
                    assert_eq!(part.index_of(s), Some(i));
                    assert!(seen.insert(*s));
                }
            }
            assert_eq!(seen.len(), full.dim());
            for (i, s) in full.states().iter().enumerate() {
                assert_eq!(full.index_of(s), Some(i));
            }
        }
    }
}

#[test]
fn ordering_is_lexicographic_descending() {
    for stats in BOTH {
        let s = SectorBasis::new(5, 3, stats, None).unwrap();
        let occ: Vec<Vec<u32>> = s.states().iter().map(FockState::occupations).collect();
        assert!(occ.windows(2).all(|w| w[0] > w[1]));
    }
}

#[test]
fn invalid_sectors_are_rejected() {
    assert!(SectorBasis::new(4, 5, Statistics::Fermion, None).is_err());
    assert!(SectorBasis::new(4, 2, Statistics::Boson, Some(4)).is_err());
    let vac = SectorBasis::new(5, 0, Statistics::Fermion, None).unwrap();
    assert_eq!(vac.dim(), 1);
    assert_eq!(vac.state(0).number(), 0);
}

/// `T` from its definition: the translated state is `Π a†_{x+1}` applied to
/// the vacuum in the original creation order.
fn oracle_translation(o: &Sector) -> Mat {
    let l = o.sites;
    let mut t = Mat::zeros(o.dim(), o.dim());
    for (j, occ) in o.states.iter().enumerate() {
        let mut word = Vec::new();
        let mut norm = 1.0;
        for x in 1..=l {
            for k in 0..occ[x - 1] {
                word.push((x % l + 1, true));
                norm *= ((k + 1) as f64).sqrt();
            }
        }
        let (f, image) = apply_word(&vec![0; l], &word, o.fermion).unwrap();
        t[(o.index[&image], j)] += c(f / norm);
    }
    t
}

#[test]
fn translation_matches_definition() {
    for stats in BOTH {
        for (l, n) in [(2, 2), (4, 2), (5, 3), (4, 4), (6, 3)] {
            if stats == Statistics::Fermion && n > l {
                continue;
            }
            let s = sector(l, n, stats);
            let o = Sector::new(l, n, stats);
            let t = translation_matrix(&s).unwrap();
            assert!(
                max_abs_diff(&to_oracle(&t, &o, &o), &oracle_translation(&o)) <= 1e-14,
                "{stats} {l} {n}"
            );
        }
    }
    let full = sector(2, 2, Statistics::Fermion);
    assert_eq!(translation_matrix(&full).unwrap().get(0, 0).re, -1.0);
    let vac = sector(3, 0, Statistics::Boson);
    assert_eq!(translation_matrix(&vac).unwrap().get(0, 0).re, 1.0);
}

#[test]
fn symmetry_operators_are_unitary_periodic_and_conjugate_correctly() {
    for stats in BOTH {
        for (l, n) in [(4, 2), (5, 3), (3, 3), (6, 2)] {
            let s = sector(l, n, stats);
            let t = translation_matrix(&s).unwrap();
            let (u, v) = uv_matrices(&s);
            for op in [&t, &u, &v] {
                assert!(unitarity_residual(op).unwrap() <= 1e-12);
            }
            assert!(translation_period_residual(l, n, stats).unwrap() <= 1e-12);
            assert!(conjugation_residual(l, n, stats).unwrap() <= 1e-12);
            assert!(verify_symmetry_algebra(l, n, stats).unwrap().max() <= 1e-12);
        }
    }
    assert_eq!(
        verify_symmetry_algebra(4, 0, Statistics::Fermion)
            .unwrap()
            .max(),
        0.0
    );
    let full = sector(4, 4, Statistics::Fermion);
    let (u, _) = uv_matrices(&full);
    assert!((u.get(0, 0).re - 1.0).abs() < 1e-15);
}

#[test]
fn blocked_spectrum_equals_full_spectrum() {
    let pp = PseudopotentialSpec::from_real(4, Statistics::Boson, &[(0, 1.0), (2, 1.0)]).unwrap();
    let spec = HamiltonianSpec::from_pseudopotential(pp).unwrap();
    let s = sector(4, 2, Statistics::Boson);
    let h = spec.assemble(&s).unwrap();
    let blocks = symmetry_block_decompose(&h).unwrap();
    assert_eq!(blocks.len(), 4);
    let mut union = Vec::new();
    for b in &blocks {
        let k = b.indices.len();
        let mut m = Mat::zeros(k, k);
        for (i, j, v) in b.operator.entries() {
            m[(i, j)] = v;
        }
        union.extend(eigh(&m).0);
    }
    union.sort_by(f64::total_cmp);
    let o = Sector::new(4, 2, Statistics::Boson);
    let full = eigh(&hamiltonian(&spec, &o)).0;
    assert_eq!(union.len(), full.len());
    for (a, b) in union.iter().zip(&full) {
        assert!((a - b).abs() <= 1e-10);
    }

    let number = HamiltonianSpec::number(5, Statistics::Fermion)
        .assemble(&sector(5, 2, Statistics::Fermion))
        .unwrap();
    for b in symmetry_block_decompose(&number).unwrap() {
        assert!(b
            .operator
            .entries()
            .all(|(i, j, v)| i == j && (v.re - 2.0).abs() < 1e-15));
    }
    let zero = HamiltonianSpec::zero(5, Statistics::Boson, 2)
        .assemble(&sector(5, 3, Statistics::Boson))
        .unwrap();
    assert!(symmetry_block_decompose(&zero)
        .unwrap()
        .iter()
        .all(|b| b.operator.nnz() == 0));
}

#[test]
fn hopping_breaks_dipole_symmetry() {
    let hop = HamiltonianSpec::from_terms(
        4,
        Statistics::Fermion,
        vec![
            fockgap::MBodyTerm::new(1, vec![fockgap::TermEntry::new(vec![1], vec![2], c(1.0))])
                .unwrap(),
        ],
    )
    .unwrap();
    let h = hop.assemble(&sector(4, 2, Statistics::Fermion)).unwrap();
    assert!(matches!(
        symmetry_block_decompose(&h),
        Err(fockgap::Error::NotSymmetric { .. })
    ));
}

#[test]
fn boson_half_filling_kernel_has_translate_structure() {
    let pp = PseudopotentialSpec::from_real(8, Statistics::Boson, &[(0, 1.0), (1, 1.0), (2, 1.0)])
        .unwrap();
    let spec = HamiltonianSpec::from_pseudopotential(pp).unwrap();
    let summary = fockgap::spectra::spectral_summary(&spec, 4, &SolverOptions::default()).unwrap();
    assert_eq!(summary.kernel_dim, Some(2));
    let filling = FillingSpec::new(1, 2, 8).unwrap();
    let k = kernel_structure(&summary.hamiltonian, &summary.ground_basis, &filling).unwrap();
    assert!(k.failures(1e-10).is_empty(), "{:?}", k.failures(1e-10));
    assert!(k.periodicity_failure(1e-10).is_none());
    assert!(k.v_phase_residuals.iter().all(|&r| r <= 1e-10));
    assert!(k.max_site_occupation <= 1.0 + 1e-10);
    assert_eq!(
        k.eigendata.v_phase,
        fockgap::symmetry::phase(k.eigendata.d, 8)
    );
}
