//! Restarted Lanczos with full reorthogonalization and locking.
//!
//! Each run builds a Krylov space from a start vector orthogonal to the
//! deflation set and to every locked eigenvector. Ritz pairs whose explicit
//! residual meets the tolerance are locked. If the lowest Ritz pair of a run
//! has not converged, the next run restarts from it; otherwise the next run
//! starts from a fresh random vector, which is how further members of a
//! degenerate eigenspace are found. A converged lowest Ritz value `θ` of a run
//! is the lowest eigenvalue of the operator on the complement of the locked
//! space, so every eigenvalue below `θ` is already locked.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::second_quantization::LinearOperator;
use crate::{Error, Result, C64};

use super::dense::tridiagonal_eigen;
use super::vector::{combine, dot, norm, orthogonalize, random_vector, scale};
use super::{complete_levels, EigenResult, Method, SolveInfo, SolverOptions, Target};

pub(crate) fn lanczos<A: LinearOperator + ?Sized>(
    op: &A,
    op_scale: f64,
    target: Target,
    deflation: &[Vec<C64>],
    opts: &SolverOptions,
    seed: u64,
) -> Result<EigenResult> {
    let dim = op.dim();
    let tol = opts.residual_tol * op_scale;
    let gtol = opts.grouping_tolerance(op_scale);
    let breakdown = 1e-12 * op_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut locked_values: Vec<f64> = Vec::new();
    let mut locked_vectors: Vec<Vec<C64>> = Vec::new();
    let mut locked_residuals: Vec<f64> = Vec::new();
    let mut matvecs = 0usize;
    let mut restarts = 0usize;
    let mut start: Option<Vec<C64>> = None;
    let mut w = vec![C64::new(0.0, 0.0); dim];

    let apply = |x: &[C64], y: &mut [C64], matvecs: &mut usize| -> Result<()> {
        if *matvecs >= opts.max_iterations {
            return Err(Error::NoConvergence(format!(
                "Lanczos hit the cap of {} operator applications (dimension {dim})",
                opts.max_iterations
            )));
        }
        *matvecs += 1;
        op.apply(x, y);
        Ok(())
    };

    let complete_below = loop {
        let free = dim.saturating_sub(deflation.len() + locked_vectors.len());
        if free == 0 {
            break f64::INFINITY;
        }

        let mut v0 = start.take().unwrap_or_else(|| random_vector(&mut rng, dim));
        let mut attempts = 0;
        let v0_norm = loop {
            orthogonalize(&mut v0, &[deflation, &locked_vectors]);
            let nv = norm(&v0);
            if nv > 1e-8 {
                break nv;
            }
            attempts += 1;
            if attempts > 8 {
                return Err(Error::NoConvergence(
                    "cannot find a start vector outside the locked space".into(),
                ));
            }
            v0 = random_vector(&mut rng, dim);
        };
        scale(&mut v0, 1.0 / v0_norm);

        let max_steps = opts.krylov_dim.max(2).min(free);
        let mut basis: Vec<Vec<C64>> = vec![v0];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let last_beta;
        loop {
            let j = basis.len() - 1;
            apply(&basis[j], &mut w, &mut matvecs)?;
            alpha.push(dot(&basis[j], &w).re);
            orthogonalize(&mut w, &[deflation, &locked_vectors, &basis]);
            let b = norm(&w);
            if basis.len() == max_steps || b <= breakdown {
                last_beta = if b <= breakdown { 0.0 } else { b };
                break;
            }
            beta.push(b);
            let mut next = w.clone();
            scale(&mut next, 1.0 / b);
            basis.push(next);
        }

        let (theta, s) = tridiagonal_eigen(&alpha, &beta)?;
        let k = alpha.len();
        let mut hy = vec![C64::new(0.0, 0.0); dim];
        let mut lowest_converged = false;
        let mut lowest_vector = None;
        for i in 0..k {
            let estimate = last_beta * s[(k - 1, i)].abs();
            if estimate > tol && i > 0 {
                continue;
            }
            let mut y = combine(&basis, (0..k).map(|j| C64::new(s[(j, i)], 0.0)));
            let ny = norm(&y);
            scale(&mut y, 1.0 / ny);
            if estimate > tol {
                lowest_vector = Some(y);
                continue;
            }
            apply(&y, &mut hy, &mut matvecs)?;
            orthogonalize(&mut hy, &[deflation]);
            let residual = hy
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - b * theta[i]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if residual <= tol {
                if i == 0 {
                    lowest_converged = true;
                }
                locked_values.push(theta[i]);
                locked_vectors.push(y);
                locked_residuals.push(residual);
            } else if i == 0 {
                lowest_vector = Some(y);
            }
        }

        if !lowest_converged {
            restarts += 1;
            start = lowest_vector;
            continue;
        }
        let theta0 = theta[0];
        let done = match target {
            Target::Lowest => true,
            Target::Levels(count) => {
                complete_levels(&sorted(&locked_values), theta0, gtol).len() >= count
            }
            Target::Count(count) => {
                complete_levels(&sorted(&locked_values), theta0, gtol)
                    .iter()
                    .map(|r| r.len())
                    .sum::<usize>()
                    >= count
            }
        };
        if done {
            if target == Target::Lowest {
                let at = locked_values
                    .iter()
                    .position(|&v| v == theta0)
                    .expect("just locked");
                return Ok(EigenResult {
                    values: vec![theta0],
                    vectors: vec![locked_vectors.swap_remove(at)],
                    residuals: vec![locked_residuals[at]],
                    complete_below: theta0,
                    info: SolveInfo {
                        method: Method::Lanczos,
                        dim,
                        matvecs,
                        restarts,
                    },
                });
            }
            break theta0;
        }
    };

    let mut order: Vec<usize> = (0..locked_values.len()).collect();
    order.sort_by(|&a, &b| locked_values[a].total_cmp(&locked_values[b]));
    let sorted_values: Vec<f64> = order.iter().map(|&i| locked_values[i]).collect();
    let levels = complete_levels(&sorted_values, complete_below, gtol);
    let count = levels.last().map_or(0, |r| r.end);
    let mut vectors: Vec<Option<Vec<C64>>> = locked_vectors.into_iter().map(Some).collect();
    let selected = &order[..count];
    Ok(EigenResult {
        values: selected.iter().map(|&i| locked_values[i]).collect(),
        vectors: selected
            .iter()
            .map(|&i| vectors[i].take().expect("each vector taken once"))
            .collect(),
        residuals: selected.iter().map(|&i| locked_residuals[i]).collect(),
        complete_below: if count < sorted_values.len() {
            sorted_values[count].min(complete_below)
        } else {
            complete_below
        },
        info: SolveInfo {
            method: Method::Lanczos,
            dim,
            matvecs,
            restarts,
        },
    })
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}
