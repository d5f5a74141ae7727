//! Internal optimization engines: nonnegative weighted least squares
//! (Lawson–Hanson active set) and a derivative-free Nelder–Mead simplex.

use crate::error::{Result, SbgError};
use crate::math::solve_dense;

/// Minimize Σ_l w_l (y_l − Σ_i G_{li} x_i)² subject to x ≥ 0.
///
/// The unconstrained design must have full column rank; coincident columns
/// are reported as `RankDeficient`.
pub fn nnls_weighted(design: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let rows = design.len();
    let cols = if rows > 0 { design[0].len() } else { 0 };
    debug_assert!(y.len() == rows && w.len() == rows);
    if cols == 0 {
        return Ok(vec![]);
    }

    // normal matrix and right-hand side
    let mut normal = vec![vec![0.0; cols]; cols];
    let mut rhs = vec![0.0; cols];
    for l in 0..rows {
        for i in 0..cols {
            rhs[i] += w[l] * design[l][i] * y[l];
            for j in i..cols {
                normal[i][j] += w[l] * design[l][i] * design[l][j];
            }
        }
    }
    for i in 0..cols {
        for j in 0..i {
            normal[i][j] = normal[j][i];
        }
    }

    // full-rank gate: principal submatrices of a PD matrix stay PD, so the
    // restricted solves below cannot fail after this check
    {
        let mut a = normal.clone();
        let mut b = rhs.clone();
        if solve_dense(&mut a, &mut b).is_none() {
            return Err(SbgError::RankDeficient);
        }
    }

    let solve_restricted = |passive: &[usize]| -> Option<Vec<f64>> {
        let k = passive.len();
        let mut a = vec![vec![0.0; k]; k];
        let mut b = vec![0.0; k];
        for (pi, &i) in passive.iter().enumerate() {
            b[pi] = rhs[i];
            for (pj, &j) in passive.iter().enumerate() {
                a[pi][pj] = normal[i][j];
            }
        }
        solve_dense(&mut a, &mut b)
    };

    let scale = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    let mut x = vec![0.0; cols];
    let mut passive: Vec<usize> = Vec::new();

    for _ in 0..(8 * cols + 8) {
        // gradient of the objective at x (up to factor −2)
        let mut grad = rhs.clone();
        for i in 0..cols {
            for j in 0..cols {
                grad[i] -= normal[i][j] * x[j];
            }
        }
        let candidate = (0..cols)
            .filter(|i| !passive.contains(i))
            .max_by(|a, b| grad[*a].total_cmp(&grad[*b]));
        let Some(best) = candidate else { break };
        if grad[best] <= tol {
            break;
        }
        passive.push(best);

        loop {
            let z = solve_restricted(&passive).ok_or(SbgError::RankDeficient)?;
            if z.iter().all(|v| *v > 0.0) {
                x.fill(0.0);
                for (pi, &i) in passive.iter().enumerate() {
                    x[i] = z[pi];
                }
                break;
            }
            // step back to the feasible boundary and drop zeroed variables
            let mut alpha = f64::INFINITY;
            for (pi, &i) in passive.iter().enumerate() {
                if z[pi] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - z[pi]));
                }
            }
            let alpha = alpha.clamp(0.0, 1.0);
            for (pi, &i) in passive.iter().enumerate() {
                x[i] += alpha * (z[pi] - x[i]);
            }
            passive.retain(|&i| x[i] > tol.max(1e-300));
            for i in 0..cols {
                if !passive.contains(&i) {
                    x[i] = 0.0;
                }
            }
            if passive.is_empty() {
                break;
            }
        }
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead with the standard coefficients. Converges when the simplex
/// value spread falls below `tol` relative to the best value. The returned
/// point is never worse than the start (descent property).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    start: &[f64],
    initial_step: f64,
    tol: f64,
    max_iter: usize,
) -> NelderMeadOutcome {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..dim {
        let mut p = start.to_vec();
        p[i] += if p[i].abs() > 1e-8 {
            initial_step * p[i].abs().max(0.25)
        } else {
            initial_step
        };
        let v = f(&p);
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        if (worst - best).abs() <= tol * (best.abs() + tol) {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; dim];
        for point in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(&point.0) {
                *c += v / dim as f64;
            }
        }
        let blend = |a: f64, b: f64, t: f64| a + t * (b - a);
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[dim].0)
            .map(|(c, w)| blend(*c, *w, -1.0))
            .collect();
        let fr = f(&reflect);

        if fr < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| blend(*c, *w, -2.0))
                .collect();
            let fe = f(&expand);
            simplex[dim] = if fe < fr { (expand, fe) } else { (reflect, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflect, fr);
        } else {
            let contract: Vec<f64> = if fr < simplex[dim].1 {
                centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| blend(*c, *r, 0.5))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&simplex[dim].0)
                    .map(|(c, w)| blend(*c, *w, 0.5))
                    .collect()
            };
            let fc = f(&contract);
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (contract, fc);
            } else {
                // shrink toward the best vertex
                let best_point = simplex[0].0.clone();
                for point in simplex.iter_mut().skip(1) {
                    for (p, b) in point.0.iter_mut().zip(&best_point) {
                        *p = *b + 0.5 * (*p - *b);
                    }
                    point.1 = f(&point.0);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    NelderMeadOutcome {
        x: simplex[0].0.clone(),
        value: simplex[0].1,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_matches_unconstrained_solution_when_interior() {
        // y = 2 g1 + 3 g2 exactly
        let design = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let y = vec![2.0, 3.0, 5.0];
        let w = vec![1.0, 1.0, 1.0];
        let x = nnls_weighted(&design, &y, &w).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-10);
        assert!((x[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn nnls_clips_at_zero() {
        // best unconstrained fit would take x[1] < 0
        let design = vec![vec![1.0, 1.0], vec![1.0, 2.0], vec![1.0, 3.0]];
        let y = vec![3.0, 2.0, 1.0];
        let w = vec![1.0, 1.0, 1.0];
        let x = nnls_weighted(&design, &y, &w).unwrap();
        assert!(x[1].abs() < 1e-12, "{x:?}");
        assert!(x[0] > 0.0);
    }

    #[test]
    fn nnls_detects_duplicate_columns() {
        let design = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let y = vec![1.0, 2.0, 3.0];
        let w = vec![1.0, 1.0, 1.0];
        match nnls_weighted(&design, &y, &w) {
            Err(SbgError::RankDeficient) => {}
            other => panic!("expected RankDeficient, got {other:?}"),
        }
    }

    #[test]
    fn nelder_mead_minimizes_rosenbrock() {
        let mut f = |x: &[f64]| {
            let (a, b) = (x[0], x[1]);
            (1.0 - a) * (1.0 - a) + 100.0 * (b - a * a) * (b - a * a)
        };
        let out = nelder_mead(&mut f, &[-1.2, 1.0], 0.5, 1e-12, 5000);
        assert!(out.converged);
        assert!((out.x[0] - 1.0).abs() < 1e-4, "{:?}", out.x);
        assert!((out.x[1] - 1.0).abs() < 1e-4, "{:?}", out.x);
    }

    #[test]
    fn nelder_mead_never_returns_worse_than_start() {
        let mut f = |x: &[f64]| x[0].sin() * 10.0 + x[0] * x[0];
        let start = [3.0];
        let f0 = f(&start);
        let out = nelder_mead(&mut f, &start, 0.3, 1e-10, 50);
        assert!(out.value <= f0);
    }
}
