//! Internal numerics: special functions, Gauss–Legendre panels and a small
//! dense linear solver. Nothing here is specific to jump-activity models.

/// Lanczos approximation of `ln Γ(x)` for `x > 0` (g = 7, 9 coefficients).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    debug_assert!(x > 0.0);
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = 0.99999999999980993;
    for (i, c) in COEFFS.iter().enumerate() {
        acc += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Γ(x) for moderate positive x.
pub fn gamma(x: f64) -> f64 {
    ln_gamma(x).exp()
}

/// Digamma ψ₀(x) for x > 0: recurrence into the asymptotic regime.
pub fn digamma(x: f64) -> f64 {
    debug_assert!(x > 0.0);
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // asymptotic expansion with Bernoulli terms
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// sin(πt/2)/t with the removable singularity at t = 0.
fn half_sinc(t: f64) -> f64 {
    let x = 0.5 * std::f64::consts::PI * t;
    if t.abs() < 1e-3 {
        0.5 * std::f64::consts::PI * (1.0 - x * x / 6.0 + x.powi(4) / 120.0)
    } else {
        x.sin() / t
    }
}

/// d/dt [sin(πt/2)/t], series-protected near t = 0.
fn half_sinc_deriv(t: f64) -> f64 {
    let h = 0.5 * std::f64::consts::PI;
    let x = h * t;
    if t.abs() < 1e-3 {
        // (π/2)² · d/dx [sin x / x] = (π/2)² (−x/3 + x³/30 − x⁵/840)
        h * h * (-x / 3.0 + x.powi(3) / 30.0 - x.powi(5) / 840.0)
    } else {
        (h * x.cos() * t - x.sin()) / (t * t)
    }
}

/// The constant C(β) = 2β ∫₀^∞ (1 − cos y) y^{−1−β} dy for β ∈ (0, 2).
///
/// A component whose Lévy density is a′β/|x|^{1+β} has characteristic
/// exponent −a′·C(β)·|u|^β. Closed form 2·Γ(2−β)·sin(π(β−1)/2)/(β−1), which
/// is smooth across β = 1 (where it equals π) and diverges like 2/(2−β) as
/// β → 2.
pub fn stable_tail_constant(beta: f64) -> f64 {
    debug_assert!(beta > 0.0 && beta < 2.0);
    2.0 * gamma(2.0 - beta) * half_sinc(beta - 1.0)
}

/// dC/dβ, with the digamma term from differentiating Γ(2−β).
pub fn stable_tail_constant_dbeta(beta: f64) -> f64 {
    let t = beta - 1.0;
    2.0 * gamma(2.0 - beta) * (-digamma(2.0 - beta) * half_sinc(t) + half_sinc_deriv(t))
}

/// Nodes and weights of the 16-point Gauss–Legendre rule on [−1, 1]
/// (positive half; the rule is symmetric).
const GL16_NODES: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_WEIGHTS: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// 16-point Gauss–Legendre on [a, b].
pub fn gauss_legendre_16<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..8 {
        let dx = half * GL16_NODES[i];
        acc += GL16_WEIGHTS[i] * (f(mid + dx) + f(mid - dx));
    }
    acc * half
}

/// Composite 16-point Gauss–Legendre over `panels` equal panels of [a, b].
pub fn integrate_panels<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(1);
    let w = (b - a) / panels as f64;
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * w;
        acc += gauss_legendre_16(&mut f, lo, lo + w);
    }
    acc
}

/// Solve A x = b in place with partial pivoting. Returns None when the matrix
/// is numerically singular.
pub fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert!(a.len() == n && a.iter().all(|row| row.len() == n));
    let scale: f64 = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-12 * scale.max(1e-300);
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))?;
        if pivot <= tol {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for r in col + 1..n {
            let factor = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= factor * a[col][c];
            }
            b[r] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// SplitMix64 step, used as the documented seed-splitting hash.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}
