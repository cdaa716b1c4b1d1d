//! Naive reference pipeline shared by the integration tests: hash-map
//! sector enumeration, operator strings applied one occupation vector at a
//! time, dense matrices and full diagonalization with nalgebra.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fockgap::{HamiltonianSpec, MBodyTerm, Statistics, TermEntry};

pub type Mat = DMatrix<C>;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub struct Sector {
    pub sites: usize,
    pub n: usize,
    pub fermion: bool,
    pub states: Vec<Vec<u32>>,
    pub index: HashMap<Vec<u32>, usize>,
}

impl Sector {
    pub fn new(sites: usize, n: usize, statistics: Statistics) -> Self {
        let fermion = statistics == Statistics::Fermion;
        let cap = if fermion { 1 } else { n as u32 };
        let mut states = Vec::new();
        let mut cur = vec![0u32; sites];
        fill(&mut cur, 0, n as u32, cap, &mut states);
        let index = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        Self {
            sites,
            n,
            fermion,
            states,
            index,
        }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, cap: u32, out: &mut Vec<Vec<u32>>) {
    if pos == cur.len() {
        if left == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for k in 0..=left.min(cap) {
        cur[pos] = k;
        fill(cur, pos + 1, left - k, cap, out);
    }
    cur[pos] = 0;
}

/// `a_x` (or `a_x†`) on an occupation vector, in place.
pub fn ladder(occ: &mut [u32], x: usize, create: bool, fermion: bool) -> Option<f64> {
    let i = x - 1;
    if fermion {
        let before: u32 = occ[..i].iter().sum();
        let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
        match (create, occ[i]) {
            (true, 0) => occ[i] = 1,
            (false, 1) => occ[i] = 0,
            _ => return None,
        }
        Some(sign)
    } else if create {
        occ[i] += 1;
        Some((occ[i] as f64).sqrt())
    } else if occ[i] == 0 {
        None
    } else {
        let f = (occ[i] as f64).sqrt();
        occ[i] -= 1;
        Some(f)
    }
}

/// Applies an operator word given as `(site, is_creation)` factors written
/// left to right; the rightmost factor acts first.
pub fn apply_word(occ: &[u32], word: &[(usize, bool)], fermion: bool) -> Option<(f64, Vec<u32>)> {
    let mut s = occ.to_vec();
    let mut f = 1.0;
    for &(x, create) in word.iter().rev() {
        f *= ladder(&mut s, x, create, fermion)?;
    }
    Some((f, s))
}

/// Dense matrix of `Σ coefficient · word` from `from` to `to`.
pub fn word_matrix(from: &Sector, to: &Sector, words: &[(Vec<(usize, bool)>, C)]) -> Mat {
    let mut m = Mat::zeros(to.dim(), from.dim());
    for (j, s) in from.states.iter().enumerate() {
        for (word, w) in words {
            if let Some((f, t)) = apply_word(s, word, from.fermion) {
                if let Some(&i) = to.index.get(&t) {
                    m[(i, j)] += w * f;
                }
            }
        }
    }
    m
}

pub fn annihilator(x: usize, from: &Sector, to: &Sector) -> Mat {
    word_matrix(from, to, &[(vec![(x, false)], c(1.0))])
}

fn entry_word(e: &TermEntry) -> Vec<(usize, bool)> {
    // a†_{x1} ... a†_{xm} a_{ym} ... a_{y1}
    let mut word: Vec<(usize, bool)> = e.create.iter().map(|&x| (x, true)).collect();
    word.extend(e.annihilate.iter().rev().map(|&y| (y, false)));
    word
}

pub fn term_matrix(term: &MBodyTerm, sector: &Sector) -> Mat {
    let words: Vec<_> = term
        .entries
        .iter()
        .map(|e| (entry_word(e), e.coefficient))
        .collect();
    word_matrix(sector, sector, &words)
}

fn site(two_t: i64, l: usize) -> usize {
    ((two_t / 2 - 1).rem_euclid(l as i64) + 1) as usize
}

/// `Σ_s Q_s† Q_s` built from dense `Q_s` matrices.
pub fn pseudopotential_matrix(spec: &HamiltonianSpec, sector: &Sector) -> Mat {
    let d = sector.dim();
    let mut h = Mat::zeros(d, d);
    let Some(pp) = &spec.pseudopotential else {
        return h;
    };
    if sector.n < 2 {
        return h;
    }
    let lower = Sector::new(sector.sites, sector.n - 2, spec.statistics);
    let l = sector.sites;
    for two_s in 1..=2 * l as i64 {
        let mut words = Vec::new();
        for (&k2, &f) in &pp.coefficients {
            if (k2 as i64 - two_s).rem_euclid(2) != 0 {
                continue;
            }
            let lo = site(two_s - k2 as i64, l);
            let hi = site(two_s + k2 as i64, l);
            words.push((vec![(lo, false), (hi, false)], f));
        }
        let q = word_matrix(sector, &lower, &words);
        h += q.adjoint() * q;
    }
    h
}

/// The full Hamiltonian of `spec` on sector `n`, hermitian part of each term.
pub fn hamiltonian(spec: &HamiltonianSpec, sector: &Sector) -> Mat {
    let d = sector.dim();
    let mut h = pseudopotential_matrix(spec, sector);
    for t in &spec.terms {
        let a = term_matrix(t, sector);
        h += (a.adjoint() + a) * c(0.5);
    }
    if let Some(mu) = spec.chemical_potential {
        h += Mat::identity(d, d) * c(mu * sector.n as f64);
    }
    h
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn scale_of(m: &Mat) -> f64 {
    let s = max_abs(m);
    if s == 0.0 {
        1.0
    } else {
        s
    }
}

/// Ascending eigenvalues and matching orthonormal eigenvector columns.
pub fn eigh(m: &Mat) -> (Vec<f64>, Mat) {
    let d = m.nrows();
    if d == 0 {
        return (Vec::new(), Mat::zeros(0, 0));
    }
    let sym = (m.adjoint() + m) * c(0.5);
    let e = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vectors = Mat::from_fn(d, d, |r, k| e.eigenvectors[(r, order[k])]);
    (values, vectors)
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    eigh(m).0.last().copied().unwrap_or(0.0)
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    eigh(m).0.first().copied().unwrap_or(0.0)
}

/// Bottom of the spectrum of one sector.
pub struct Spectrum {
    pub n: usize,
    pub dim: usize,
    pub h: Mat,
    pub scale: f64,
    pub values: Vec<f64>,
    pub e0: f64,
    pub e1: Option<f64>,
    pub q_n: usize,
    pub kernel_dim: usize,
    /// Ground projector.
    pub ground: Mat,
    pub sector: Sector,
}

impl Spectrum {
    pub fn gap(&self) -> Option<f64> {
        self.e1.map(|e1| e1 - self.e0)
    }
}

pub fn spectrum(spec: &HamiltonianSpec, n: usize) -> Spectrum {
    let sector = Sector::new(spec.sites, n, spec.statistics);
    let h = hamiltonian(spec, &sector);
    let scale = scale_of(&h);
    let (values, vectors) = eigh(&h);
    let tol = 1e-9f64.max(1e-8 * scale);
    let e0 = values[0];
    // a level ends at the first step larger than the grouping tolerance
    let mut q_n = 1;
    while q_n < values.len() && values[q_n] - values[q_n - 1] <= tol {
        q_n += 1;
    }
    let e1 = values.get(q_n).copied();
    let kernel_dim = values.iter().filter(|v| v.abs() <= 1e-9 * scale).count();
    let cols = vectors.columns(0, q_n).into_owned();
    let ground = &cols * cols.adjoint();
    Spectrum {
        n,
        dim: sector.dim(),
        h,
        scale,
        values,
        e0,
        e1,
        q_n,
        kernel_dim,
        ground,
        sector,
    }
}

/// `‖G_n‖`, `‖F_n‖` and `‖G^(n)‖ = ‖Σ_x a_x† P_n a_x‖` from dense projectors.
pub struct Norms {
    pub norm_g: f64,
    pub norm_f: f64,
    pub norm_gram: f64,
}

pub fn overlap_matrix(lower: &Spectrum, upper: &Spectrum) -> Mat {
    let d = upper.dim;
    let mut m = Mat::zeros(d, d);
    for x in 1..=lower.sector.sites {
        let a = annihilator(x, &upper.sector, &lower.sector);
        m += a.adjoint() * &lower.ground * a;
    }
    m
}

pub fn norms(lower: &Spectrum, upper: &Spectrum) -> Norms {
    let m = overlap_matrix(lower, upper);
    let d = upper.dim;
    let p = &upper.ground;
    let perp = Mat::identity(d, d) - p;
    Norms {
        norm_g: max_eigenvalue(&(p * &m * p)),
        norm_f: max_eigenvalue(&(&perp * &m * &perp)).max(0.0),
        norm_gram: max_eigenvalue(&m),
    }
}

/// Minimum eigenvalue of `H_{n+1} - (n+1-m_0)^{-1} Σ_x a_x† H_n a_x`.
pub fn key_lemma_min(spec: &HamiltonianSpec, lower: &Spectrum, upper: &Spectrum) -> f64 {
    let m0 = spec.min_order();
    let d = upper.dim;
    let mut lifted = Mat::zeros(d, d);
    for x in 1..=spec.sites {
        let a = annihilator(x, &upper.sector, &lower.sector);
        lifted += a.adjoint() * &lower.h * a;
    }
    min_eigenvalue(&(&upper.h - lifted * c(1.0 / (lower.n + 1 - m0) as f64)))
}

/// Relation (I) and (II) slacks and the corollary slack, from oracle data.
pub struct Slacks {
    pub relation_i: f64,
    pub relation_ii: Option<f64>,
    pub corollary: Option<f64>,
}

pub fn slacks(spec: &HamiltonianSpec, lower: &Spectrum, upper: &Spectrum, norms: &Norms) -> Slacks {
    let m0 = spec.min_order() as f64;
    let np1 = (lower.n + 1) as f64;
    let d = np1 - m0;
    let gap = lower.gap().unwrap_or(0.0);
    let relation_i = upper.e0 - (np1 / d * lower.e0 + gap / d * (np1 - norms.norm_g));
    let relation_ii = match (lower.e1, upper.e1) {
        (Some(e1), Some(e1_up)) => Some(e1_up - (np1 - norms.norm_f) / d * e1),
        _ => None,
    };
    let corollary = (m0 >= 1.0 && lower.n >= 1).then(|| {
        let n = lower.n as f64;
        (upper.e0 - lower.e0) - (lower.e0 / n + (n + 1.0 - norms.norm_g) / n * gap)
    });
    Slacks {
        relation_i,
        relation_ii,
        corollary,
    }
}

/// A random `m`-body term with `entries` entries of unit-size coefficients.
pub fn random_term(rng: &mut ChaCha8Rng, sites: usize, m: usize, entries: usize) -> MBodyTerm {
    let entries = (0..entries)
        .map(|_| {
            let create = (0..m).map(|_| rng.gen_range(1..=sites)).collect();
            let annihilate = (0..m).map(|_| rng.gen_range(1..=sites)).collect();
            TermEntry::new(create, annihilate, random_c(rng))
        })
        .collect();
    MBodyTerm::new(m, entries).unwrap()
}

fn random_c(rng: &mut ChaCha8Rng) -> C {
    C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// `B† B` with `B = Σ_y c_y a_{y_m} ... a_{y_1}` over strictly increasing
/// (fermions) or weakly increasing (bosons) tuples `y`.
fn gram_term(
    rng: &mut ChaCha8Rng,
    sites: usize,
    m: usize,
    fermion: bool,
    rank: usize,
) -> MBodyTerm {
    let tuples = tuples(sites, m, fermion);
    let mut entries = Vec::new();
    for _ in 0..rank {
        let coeffs: Vec<(Vec<usize>, C)> = tuples
            .iter()
            .filter_map(|t| rng.gen_bool(0.6).then(|| (t.clone(), random_c(rng))))
            .collect();
        for (x, cx) in &coeffs {
            for (y, cy) in &coeffs {
                entries.push(TermEntry::new(x.clone(), y.clone(), cx.conj() * cy));
            }
        }
    }
    MBodyTerm::new(m, entries).unwrap()
}

fn tuples(sites: usize, m: usize, fermion: bool) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        let mut next = Vec::new();
        for t in &out {
            let start = t.last().map_or(1, |&l| if fermion { l + 1 } else { l });
            for x in start..=sites {
                let mut u = t.clone();
                u.push(x);
                next.push(u);
            }
        }
        out = next;
    }
    out
}

/// A random positive Hamiltonian: a positive 1-body part when `m0 = 1`
/// plus a positive 2-body part `Σ B†B`.
pub struct RandomSpec {
    pub seed: u64,
    pub m0: usize,
    pub rank: usize,
    pub spec: HamiltonianSpec,
}

pub fn random_psd_spec(
    seed: u64,
    statistics: Statistics,
    sites: usize,
    m0: usize,
    rank: usize,
) -> RandomSpec {
    random_spec(seed, statistics, sites, m0, rank, false)
}

/// As [`random_psd_spec`] but the 1-body part (when `m0 == 1`) is an
/// arbitrary hermitian matrix, so the spectrum may be negative.
pub fn random_spec_indefinite(
    seed: u64,
    statistics: Statistics,
    sites: usize,
    rank: usize,
) -> RandomSpec {
    random_spec(seed, statistics, sites, 1, rank, true)
}

fn random_spec(
    seed: u64,
    statistics: Statistics,
    sites: usize,
    m0: usize,
    rank: usize,
    indefinite: bool,
) -> RandomSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fermion = statistics == Statistics::Fermion;
    let mut terms = Vec::new();
    if m0 == 1 {
        let mut w = DMatrix::<C>::zeros(sites, sites);
        if indefinite {
            for x in 0..sites {
                w[(x, x)] = c(rng.gen_range(-1.0..1.0));
                for y in x + 1..sites {
                    w[(x, y)] = random_c(&mut rng) * 0.5;
                    w[(y, x)] = w[(x, y)].conj();
                }
            }
        } else {
            let b = DMatrix::from_fn(2, sites, |_, _| random_c(&mut rng) * 0.5);
            w = b.adjoint() * b;
        }
        let entries = (0..sites)
            .flat_map(|x| (0..sites).map(move |y| (x, y)))
            .map(|(x, y)| TermEntry::new(vec![x + 1], vec![y + 1], w[(x, y)]))
            .collect();
        terms.push(MBodyTerm::new(1, entries).unwrap());
    }
    terms.push(gram_term(&mut rng, sites, 2, fermion, rank));
    let spec = HamiltonianSpec::from_terms(sites, statistics, terms).unwrap();
    RandomSpec {
        seed,
        m0,
        rank,
        spec,
    }
}

/// The shared random corpus: 50 specs, fermions on 4 to 6 sites and bosons
/// on 4 or 5 sites, `m_0 ∈ {1, 2}`, 2-body ranks 1 to 3.
pub fn corpus() -> Vec<RandomSpec> {
    (0..50u64)
        .map(|i| {
            let (stats, sites) = if i % 2 == 0 {
                (Statistics::Fermion, 4 + (i / 2 % 3) as usize)
            } else {
                (Statistics::Boson, 4 + (i / 2 % 2) as usize)
            };
            let m0 = 1 + (i / 3 % 2) as usize;
            let rank = 1 + (i % 3) as usize;
            random_psd_spec(1000 + i, stats, sites, m0, rank)
        })
        .collect()
}

/// Particle numbers `n >= m_1` with sector `n + 1` present and of dimension
/// at most `max_dim`.
pub fn corpus_ns(spec: &HamiltonianSpec, max_dim: u128) -> Vec<usize> {
    let m1 = spec.max_order();
    (m1..)
        .take_while(|&n| {
            let fits = spec.statistics == Statistics::Boson || n < spec.sites;
            fits && fockgap::basis::sector_dimension(spec.sites, n + 1, spec.statistics) <= max_dim
        })
        .collect()
}

/// A library operator rewritten in the oracle's state ordering.
pub fn to_oracle(op: &fockgap::SparseOperator, from: &Sector, to: &Sector) -> Mat {
    let mut m = Mat::zeros(to.dim(), from.dim());
    for (r, col, v) in op.entries() {
        let i = to.index[&op.codomain().state(r).occupations()];
        let j = from.index[&op.domain().state(col).occupations()];
        m[(i, j)] += v;
    }
    m
}

pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    max_abs(&(a - b))
}
