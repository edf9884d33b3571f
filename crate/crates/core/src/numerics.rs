//! Special functions and quadrature rules shared by the Fock-basis kernels.
//!
//! Everything here is a pure function. The log-factorial table is built
//! once on first use and is read-only afterwards.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Number of cached `ln(n!)` entries; larger arguments fall back to log-gamma.
pub const LOG_FACTORIAL_TABLE_LEN: usize = 1025;

fn log_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LOG_FACTORIAL_TABLE_LEN);
        let mut acc = 0.0_f64;
        table.push(0.0);
        for k in 1..LOG_FACTORIAL_TABLE_LEN {
            acc += (k as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(n!)`.
pub fn log_factorial(n: usize) -> f64 {
    match log_factorial_table().get(n) {
        Some(&v) => v,
        None => statrs::function::gamma::ln_gamma(n as f64 + 1.0),
    }
}

/// `ln C(n, k)` for `k <= n`.
pub fn log_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    log_factorial(n) - log_factorial(k) - log_factorial(n - k)
}

/// Normalized harmonic-oscillator eigenfunction `φ_n(x)`.
pub fn oscillator_eigenfunction(n: usize, x: f64) -> f64 {
    let mut values = vec![0.0; n + 1];
    fill_oscillator_eigenfunctions(x, &mut values);
    values[n]
}

/// `φ_0(x), ..., φ_{count-1}(x)` in one upward pass.
pub fn oscillator_eigenfunctions(count: usize, x: f64) -> Vec<f64> {
    let mut values = vec![0.0; count];
    fill_oscillator_eigenfunctions(x, &mut values);
    values
}

/// Writes `φ_n(x)` for `n = 0..out.len()` using the recurrence on the
/// normalized functions, so no Hermite polynomial or factorial is formed.
pub fn fill_oscillator_eigenfunctions(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() == 1 {
        return;
    }
    out[1] = std::f64::consts::SQRT_2 * x * out[0];
    for n in 1..out.len() - 1 {
        let nf = n as f64;
        out[n + 1] = x * (2.0 / (nf + 1.0)).sqrt() * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Associated Laguerre polynomial `L_m^α(y)` by the three-term recurrence in `m`.
pub fn associated_laguerre(m: usize, alpha: i64, y: f64) -> f64 {
    let a = alpha as f64;
    let mut prev = 1.0;
    if m == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - y;
    for k in 1..m {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - y) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// Matrix elements `⟨m|D(β)|n⟩` of the displacement operator
/// `D(β) = exp(β a† − β* a)` for `m, n < dim`.
///
/// Upper-triangular entries use the Laguerre closed form
/// `√(m!/n!) (−β*)^{n−m} e^{−|β|²/2} L_m^{n−m}(|β|²)`; the lower triangle
/// follows from `⟨n|D|m⟩ = (−1)^{n−m} ⟨m|D|n⟩*`. Magnitudes are accumulated
/// in log space so large index gaps do not overflow.
pub fn displacement_matrix(dim: usize, beta: C64) -> DMatrix<C64> {
    let mut out = DMatrix::<C64>::zeros(dim, dim);
    let y = beta.norm_sqr();
    let z = -beta.conj();
    let radius = z.norm();
    let log_radius = radius.ln();
    let theta = z.arg();
    let mut laguerre = vec![0.0; dim];

    for gap in 0..dim {
        if gap > 0 && radius == 0.0 {
            break;
        }
        let rows = dim - gap;
        // L_m^{gap}(y) for m = 0..rows
        let a = gap as f64;
        laguerre[0] = 1.0;
        if rows > 1 {
            laguerre[1] = 1.0 + a - y;
        }
        for k in 1..rows.saturating_sub(1) {
            let kf = k as f64;
            laguerre[k + 1] = ((2.0 * kf + 1.0 + a - y) * laguerre[k] - (kf + a) * laguerre[k - 1]) / (kf + 1.0);
        }
        let phase = C64::from_polar(1.0, gap as f64 * theta);
        let sign = if gap % 2 == 0 { 1.0 } else { -1.0 };
        for (m, &lag) in laguerre.iter().enumerate().take(rows) {
            let n = m + gap;
            let power = if gap == 0 { 0.0 } else { a * log_radius };
            let log_mag = 0.5 * (log_factorial(m) - log_factorial(n)) + power - 0.5 * y;
            let value = phase * (log_mag.exp() * lag);
            out[(m, n)] = value;
            if gap > 0 {
                out[(n, m)] = value.conj() * sign;
            }
        }
    }
    out
}

/// Nodes and positive weights of a fixed-order quadrature rule on `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
}

impl QuadratureGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// `n`-point Gauss–Legendre rule on `[lower, upper]`.
///
/// Roots of `P_n` are found by Newton iteration from the Tricomi initial
/// guesses; weights are `2 / ((1 − x²) P_n'(x)²)` scaled to the interval.
pub fn gauss_legendre(n: usize, lower: f64, upper: f64) -> Result<QuadratureGrid> {
    if n == 0 || !lower.is_finite() || !upper.is_finite() || lower >= upper {
        return Err(Error::InvalidBounds { lower, upper, order: n });
    }
    let half = 0.5 * (upper - lower);
    let mid = 0.5 * (upper + lower);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;

    for i in 0..n.div_ceil(2) {
        // i-th largest root
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // ascending order: largest root goes last
        nodes[n - 1 - i] = mid + half * x;
        nodes[i] = mid - half * x;
        weights[n - 1 - i] = half * w;
        weights[i] = half * w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = mid;
    }
    Ok(QuadratureGrid { nodes, weights, lower, upper })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
