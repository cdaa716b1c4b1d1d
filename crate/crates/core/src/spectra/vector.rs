use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::C64;

#[inline]
pub(crate) fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

#[inline]
pub(crate) fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn scale(v: &mut [C64], factor: f64) {
    for a in v {
        *a *= factor;
    }
}

/// Two passes of modified Gram-Schmidt against orthonormal `sets`.
pub(crate) fn orthogonalize(w: &mut [C64], sets: &[&[Vec<C64>]]) {
    for _ in 0..2 {
        for set in sets {
            for u in set.iter() {
                let c = dot(u, w);
                axpy(-c, u, w);
            }
        }
    }
}

pub(crate) fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// `Σ_j coefficients[j] * basis[j]`.
pub(crate) fn combine(basis: &[Vec<C64>], coefficients: impl Iterator<Item = C64>) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); basis.first().map_or(0, Vec::len)];
    for (b, c) in basis.iter().zip(coefficients) {
        axpy(c, b, &mut out);
    }
    out
}

/// Multiplies by a unit phase so the largest-magnitude entry is real
/// positive (first such entry on ties).
pub(crate) fn fix_phase(v: &mut [C64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, a) in v.iter().enumerate() {
        let m = a.norm();
        if m > best_abs * (1.0 + 1e-12) {
            best = i;
            best_abs = m;
        }
    }
    if best_abs > 0.0 {
        let phase = v[best].conj() / best_abs;
        for a in v.iter_mut() {
            *a *= phase;
        }
        v[best] = C64::new(v[best].norm(), 0.0);
    }
}
