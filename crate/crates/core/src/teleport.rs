//! Fock-basis teleportation pipeline.
//!
//! For a homodyne outcome `(X₀, P₁)` the output coefficients are
//! `b = C a` with `C = (2π)^{−1/2} e^{iX₀P₁} B A D`, where `A` is the
//! entangled-state coefficient matrix, `B` holds the displacement-operator
//! elements for `β = X₀ + iP₁` and `D = √2 B†`.
//!
//! Conventions that differ from a literal reading of the closed forms:
//!
//! * `B` is the Laguerre closed form, which satisfies
//!   `B_{k,m} = (−1)^{k−m} B*_{m,k}`. The defining overlap integral equals
//!   `e^{iX₀P₁} B`; that phase is carried by `C` so `b` agrees with direct
//!   integration of the output wave function.
//! * `D_{l,n} = √2 B*_{n,l}` (note the transposed indices), which is what the
//!   defining integral over mode 1 evaluates to.
//! * The averaged output is `ρ_{m,m'} = ∬ b_m b*_{m'}`, i.e. `⟨m|ρ|m'⟩`, so
//!   `ρ` is positive semidefinite and `F = ⟨ψ_in|ρ|ψ_in⟩`.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::numerics::{
    associated_laguerre, displacement_matrix, fill_oscillator_eigenfunctions, gauss_legendre, log_factorial,
    QuadratureGrid,
};
use crate::states::{DensityMatrix, SingleModeState, TwoModeState};

/// Default outcome-integration half-width.
pub const DEFAULT_OUTCOME_BOUND: f64 = 8.0;
/// Default Gauss–Legendre order per outcome axis.
pub const DEFAULT_OUTCOME_ORDER: usize = 160;
/// Relative probability loss tolerated by [`averaged_density_matrix`].
pub const OUTCOME_LOSS_TOLERANCE: f64 = 1e-4;

/// Measured quadrature values `X₀` and `P₁`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneOutcome {
    pub x0: f64,
    pub p1: f64,
}

impl HomodyneOutcome {
    pub fn new(x0: f64, p1: f64) -> Result<Self> {
        if x0.is_finite() && p1.is_finite() {
            Ok(Self { x0, p1 })
        } else {
            Err(Error::NonFinite("homodyne outcome"))
        }
    }

    /// Displacement amplitude `β = X₀ + iP₁` of the `B` kernel.
    pub fn beta(&self) -> C64 {
        C64::new(self.x0, self.p1)
    }

    /// `e^{iX₀P₁}`, the phase between the closed-form `B` and its integral.
    pub fn ordering_phase(&self) -> C64 {
        C64::from_polar(1.0, self.x0 * self.p1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    B,
    D,
    C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub entries: DMatrix<C64>,
    pub outcome: HomodyneOutcome,
    pub kind: KernelKind,
}

/// Single `B_{m,k}` element from the Laguerre closed form.
pub fn kernel_b(m: usize, k: usize, outcome: &HomodyneOutcome) -> C64 {
    if k < m {
        let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        return kernel_b(k, m, outcome).conj() * sign;
    }
    let gap = k - m;
    let y = outcome.x0 * outcome.x0 + outcome.p1 * outcome.p1;
    let z = -C64::new(outcome.x0, -outcome.p1);
    if gap > 0 && z.norm() == 0.0 {
        return C64::new(0.0, 0.0);
    }
    let power = if gap == 0 { 0.0 } else { gap as f64 * z.norm().ln() };
    let log_mag = 0.5 * (log_factorial(m) - log_factorial(k)) + power - 0.5 * y;
    C64::from_polar(log_mag.exp(), gap as f64 * z.arg()) * associated_laguerre(m, gap as i64, y)
}

/// Single `D_{l,n} = √2 B*_{n,l}` element.
pub fn kernel_d(l: usize, n: usize, outcome: &HomodyneOutcome) -> C64 {
    kernel_b(n, l, outcome).conj() * SQRT_2
}

/// Full `B` matrix for one outcome.
pub fn kernel_b_matrix(dim: usize, outcome: &HomodyneOutcome) -> KernelMatrix {
    KernelMatrix {
        entries: displacement_matrix(dim, outcome.beta()),
        outcome: *outcome,
        kind: KernelKind::B,
    }
}

/// `D = √2 B†` from a precomputed `B`.
pub fn kernel_d_matrix(b: &KernelMatrix) -> KernelMatrix {
    debug_assert_eq!(b.kind, KernelKind::B);
    KernelMatrix {
        entries: b.entries.adjoint() * C64::new(SQRT_2, 0.0),
        outcome: b.outcome,
        kind: KernelKind::D,
    }
}

/// Transfer matrix `C` mapping input to output coefficients.
pub fn kernel_c(entangled: &TwoModeState, outcome: &HomodyneOutcome) -> KernelMatrix {
    let b = kernel_b_matrix(entangled.dim(), outcome);
    let d = kernel_d_matrix(&b);
    let scale = outcome.ordering_phase() / (2.0 * PI).sqrt();
    KernelMatrix {
        entries: (&b.entries * entangled.coeffs() * &d.entries) * scale,
        outcome: *outcome,
        kind: KernelKind::C,
    }
}

fn check_dims(input: &SingleModeState, entangled: &TwoModeState) -> Result<()> {
    if input.dim() != entangled.dim() {
        return Err(Error::DimensionMismatch { expected: entangled.dim(), found: input.dim() });
    }
    Ok(())
}

/// `b = C a` evaluated right to left: `π^{−1/2} e^{iX₀P₁} B (A (B† a))`.
fn output_vector(input: &DVector<C64>, entangled: &DMatrix<C64>, outcome: &HomodyneOutcome) -> DVector<C64> {
    let b = displacement_matrix(input.len(), outcome.beta());
    let v = b.ad_mul(input);
    let w = entangled * v;
    let scale = outcome.ordering_phase() / PI.sqrt();
    (b * w) * scale
}

/// Unnormalized output coefficients `b_m(X₀, P₁)`.
pub fn teleported_coefficients(
    input: &SingleModeState,
    entangled: &TwoModeState,
    outcome: &HomodyneOutcome,
) -> Result<SingleModeState> {
    check_dims(input, entangled)?;
    SingleModeState::from_coeffs(output_vector(input.coeffs(), entangled.coeffs(), outcome))
}

/// Probability density `P(X₀, P₁) = Σ|b_m|²`.
pub fn outcome_probability_density(
    input: &SingleModeState,
    entangled: &TwoModeState,
    outcome: &HomodyneOutcome,
) -> Result<f64> {
    Ok(teleported_coefficients(input, entangled, outcome)?.norm_squared())
}

/// Squared overlap of the normalized input with the normalized output.
pub fn conditional_fidelity(
    input: &SingleModeState,
    entangled: &TwoModeState,
    outcome: &HomodyneOutcome,
) -> Result<f64> {
    let input = input.normalize()?;
    let out = teleported_coefficients(&input, entangled, outcome)?;
    fidelity_from_output(&input, &out)
}

fn fidelity_from_output(input: &SingleModeState, out: &SingleModeState) -> Result<f64> {
    let probability = out.norm_squared();
    if probability <= 0.0 || !probability.is_finite() {
        return Err(Error::ZeroProbability);
    }
    Ok(input.overlap(out)?.norm_sqr() / probability)
}

/// Tensor-product quadrature over `(X₀, P₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeGrid {
    pub x0: QuadratureGrid,
    pub p1: QuadratureGrid,
}

impl OutcomeGrid {
    /// Same Gauss–Legendre rule on `[−bound, bound]` along both axes.
    pub fn square(bound: f64, order: usize) -> Result<Self> {
        let axis = gauss_legendre(order, -bound, bound)?;
        Ok(Self { x0: axis.clone(), p1: axis })
    }

    pub fn len(&self) -> usize {
        self.x0.len() * self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Default for OutcomeGrid {
    fn default() -> Self {
        Self::square(DEFAULT_OUTCOME_BOUND, DEFAULT_OUTCOME_ORDER).expect("default grid is valid")
    }
}

/// Result of integrating `b b†` over an outcome grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeAverage {
    pub rho: DensityMatrix,
    /// `∬ P` on the grid.
    pub captured: f64,
    /// `‖a‖² ‖A‖²`, the value of `∬ P` over the whole plane.
    pub expected: f64,
}

impl OutcomeAverage {
    pub fn relative_loss(&self) -> f64 {
        (self.expected - self.captured) / self.expected
    }
}

fn pairwise_sum(mut parts: Vec<DMatrix<C64>>) -> Option<DMatrix<C64>> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut iter = parts.into_iter();
        while let Some(a) = iter.next() {
            match iter.next() {
                Some(b) => next.push(a + b),
                None => next.push(a),
            }
        }
        parts = next;
    }
    parts.pop()
}

/// Integrates `b b†` over the grid without checking the captured weight.
///
/// Each `X₀` node is one work item summed in `P₁` order, and the per-node
/// partial sums are combined pairwise, so the result does not depend on the
/// number of worker threads.
pub fn average_over_outcomes(
    input: &SingleModeState,
    entangled: &TwoModeState,
    grid: &OutcomeGrid,
) -> Result<OutcomeAverage> {
    check_dims(input, entangled)?;
    let dim = input.dim();
    let a = input.coeffs();
    let ent = entangled.coeffs();
    let rows: Vec<DMatrix<C64>> = grid
        .x0
        .nodes
        .par_iter()
        .zip(grid.x0.weights.par_iter())
        .map(|(&x0, &wx)| {
            let mut acc = DMatrix::<C64>::zeros(dim, dim);
            for (p1, wp) in grid.p1.iter() {
                let outcome = HomodyneOutcome { x0, p1 };
                let b = output_vector(a, ent, &outcome);
                acc.gerc(C64::new(wx * wp, 0.0), &b, &b, C64::new(1.0, 0.0));
            }
            acc
        })
        .collect();
    let elements = pairwise_sum(rows).unwrap_or_else(|| DMatrix::zeros(dim, dim));
    let rho = DensityMatrix::from_elements(elements)?;
    let captured = rho.trace();
    let expected = input.norm_squared() * entangled.norm_squared();
    Ok(OutcomeAverage { rho, captured, expected })
}

/// Outcome-averaged output density matrix.
///
/// Fails when the grid misses more than [`OUTCOME_LOSS_TOLERANCE`] of the
/// outcome probability.
pub fn averaged_density_matrix(
    input: &SingleModeState,
    entangled: &TwoModeState,
    grid: &OutcomeGrid,
) -> Result<DensityMatrix> {
    let avg = average_over_outcomes(input, entangled, grid)?;
    if avg.relative_loss().abs() > OUTCOME_LOSS_TOLERANCE {
        return Err(Error::GridTruncation {
            captured: avg.captured,
            expected: avg.expected,
            tolerance: OUTCOME_LOSS_TOLERANCE,
        });
    }
    Ok(avg.rho)
}

/// Averaged fidelity `Σ a*_m ρ_{m,m'} a_{m'}` for the normalized input.
pub fn averaged_fidelity(input: &SingleModeState, rho: &DensityMatrix) -> Result<f64> {
    let trace = rho.trace();
    if (trace - 1.0).abs() > 1e-4 {
        return Err(Error::TraceNotUnity(trace));
    }
    rho.expectation(&input.normalize()?)
}

/// Output coefficients by direct quadrature of the output wave function
/// `ψ_out(x₂) = (2π)^{−1/2} ∫dx₁ e^{iP₁(√2x₂−x₁)} ψ₀((x₁+X₀)/√2) ψ_E((x₁−X₀)/√2, x₂−√2X₀)`
/// followed by projection onto `φ_m(x₂)`.
///
/// Shares no kernel code with [`teleported_coefficients`]; only the
/// eigenfunction recurrence and the quadrature rule are common.
pub fn teleport_oracle(
    input: &SingleModeState,
    entangled: &TwoModeState,
    outcome: &HomodyneOutcome,
    x_grid: &QuadratureGrid,
) -> Result<SingleModeState> {
    check_dims(input, entangled)?;
    let dim = input.dim();
    let (x0, p1) = (outcome.x0, outcome.p1);
    let a = input.coeffs();
    let ent = entangled.coeffs();
    let mut phi = vec![0.0; dim];

    // h_k = Σ_{x₁} w e^{−iP₁x₁} ψ₀((x₁+X₀)/√2) φ_k((x₁−X₀)/√2)
    let mut h = DVector::<C64>::zeros(dim);
    for (x1, w) in x_grid.iter() {
        fill_oscillator_eigenfunctions((x1 + x0) / SQRT_2, &mut phi);
        let psi0: C64 = a.iter().zip(&phi).map(|(c, &f)| c * f).sum();
        let g = C64::from_polar(w, -p1 * x1) * psi0;
        fill_oscillator_eigenfunctions((x1 - x0) / SQRT_2, &mut phi);
        for (hk, &f) in h.iter_mut().zip(&phi) {
            *hk += g * f;
        }
    }
    // (Aᵀ h)_l, contracted against φ_l(x₂ − √2X₀)
    let ha = ent.transpose() * h;
    let mut b = DVector::<C64>::zeros(dim);
    let mut phi_out = vec![0.0; dim];
    for (x2, w) in x_grid.iter() {
        fill_oscillator_eigenfunctions(x2 - SQRT_2 * x0, &mut phi);
        let psi_e: C64 = ha.iter().zip(&phi).map(|(c, &f)| c * f).sum();
        let psi_out = C64::from_polar(1.0, SQRT_2 * p1 * x2) * psi_e / (2.0 * PI).sqrt();
        fill_oscillator_eigenfunctions(x2, &mut phi_out);
        for (bm, &f) in b.iter_mut().zip(&phi_out) {
            *bm += psi_out * (w * f);
        }
    }
    SingleModeState::from_coeffs(b)
}

/// Default oracle grid: 600 Gauss–Legendre nodes on `[−14, 14]`.
pub fn default_oracle_grid() -> QuadratureGrid {
    gauss_legendre(600, -14.0, 14.0).expect("default oracle grid is valid")
}

/// Probability density and conditional fidelity at one outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x0: f64,
    pub p1: f64,
    pub probability_density: f64,
    /// NaN where the probability density vanishes.
    pub fidelity: f64,
}

/// Evaluates the outcome surface on a rectangular grid, row-major in `X₀`.
pub fn outcome_surface(
    input: &SingleModeState,
    entangled: &TwoModeState,
    x0_values: &[f64],
    p1_values: &[f64],
) -> Result<Vec<SurfacePoint>> {
    check_dims(input, entangled)?;
    let input = input.normalize()?;
    let points: Vec<(f64, f64)> = x0_values
        .iter()
        .flat_map(|&x0| p1_values.iter().map(move |&p1| (x0, p1)))
        .collect();
    points
        .par_iter()
        .map(|&(x0, p1)| {
            let outcome = HomodyneOutcome::new(x0, p1)?;
            let out = teleported_coefficients(&input, entangled, &outcome)?;
            let probability_density = out.norm_squared();
            let fidelity = fidelity_from_output(&input, &out).unwrap_or(f64::NAN);
            Ok(SurfacePoint { x0, p1, probability_density, fidelity })
        })
        .collect()
}

pub const SURFACE_CSV_HEADER: &str = "X0,P1,probability_density,fidelity";

pub fn write_surface_csv<W: Write>(points: &[SurfacePoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SURFACE_CSV_HEADER}")?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{}",
            fmt17(p.x0),
            fmt17(p.p1),
            fmt17(p.probability_density),
            fmt17(p.fidelity)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::oscillator_eigenfunctions;
    use crate::states::{coherent_state, odd_cat_state, two_mode_squeezed_vacuum};

    const Q: f64 = 0.8178;

    fn cat(dim: usize) -> SingleModeState {
        odd_cat_state(C64::new(0.0, 1.5), dim).unwrap()
    }

    /// `∫dx₂ e^{i√2P₁x₂} φ_m(x₂) φ_k(x₂−√2X₀)` by quadrature.
    fn b_integral(m: usize, k: usize, o: &HomodyneOutcome) -> C64 {
        let grid = gauss_legendre(600, -14.0, 14.0).unwrap();
        let n = m.max(k) + 1;
        grid.iter()
            .map(|(x, w)| {
                let f = oscillator_eigenfunctions(n, x);
                let g = oscillator_eigenfunctions(n, x - SQRT_2 * o.x0);
                C64::from_polar(w * f[m] * g[k], SQRT_2 * o.p1 * x)
            })
            .sum()
    }

    /// `∫dx₁ e^{−iP₁x₁} φ_l((x₁−X₀)/√2) φ_n((x₁+X₀)/√2)` by quadrature.
    fn d_integral(l: usize, n: usize, o: &HomodyneOutcome) -> C64 {
        let grid = gauss_legendre(600, -14.0, 14.0).unwrap();
        let size = l.max(n) + 1;
        grid.iter()
            .map(|(x, w)| {
                let f = oscillator_eigenfunctions(size, (x - o.x0) / SQRT_2);
                let g = oscillator_eigenfunctions(size, (x + o.x0) / SQRT_2);
                C64::from_polar(w * f[l] * g[n], -o.p1 * x)
            })
            .sum()
    }

    #[test]
    fn kernel_b_at_origin_is_identity() {
        let origin = HomodyneOutcome::new(0.0, 0.0).unwrap();
        for m in 0..20 {
            assert_eq!(kernel_b(m, m, &origin), C64::new(1.0, 0.0));
            for k in 0..20 {
                if k != m {
                    assert_eq!(kernel_b(m, k, &origin), C64::new(0.0, 0.0));
                }
            }
        }
        let b = kernel_b_matrix(48, &origin);
        assert_eq!(b.entries, DMatrix::identity(48, 48));
        let d = kernel_d_matrix(&b);
        assert_eq!(d.entries, DMatrix::identity(48, 48) * C64::new(SQRT_2, 0.0));
        for n in 0..10 {
            assert_eq!(kernel_d(n, n, &origin), C64::new(SQRT_2, 0.0));
        }
    }

    #[test]
    fn kernel_b_matches_defining_integral() {
        let o = HomodyneOutcome::new(0.7, -0.3).unwrap();
        let closed = kernel_b(2, 5, &o) * o.ordering_phase();
        assert!((closed - b_integral(2, 5, &o)).norm() < 1e-8);
        for m in 0..6 {
            for k in 0..6 {
                let diff = (kernel_b(m, k, &o) * o.ordering_phase() - b_integral(m, k, &o)).norm();
                assert!(diff < 1e-8, "({m},{k}) {diff}");
            }
        }
    }

    #[test]
    fn kernel_d_matches_defining_integral() {
        let o = HomodyneOutcome::new(1.1, 0.4).unwrap();
        assert!((kernel_d(3, 0, &o) - d_integral(3, 0, &o)).norm() < 1e-8);
        let o = HomodyneOutcome::new(0.7, -0.3).unwrap();
        assert!((kernel_d(1, 4, &o) - kernel_b(4, 1, &o).conj() * SQRT_2).norm() < 1e-15);
        for l in 0..6 {
            for n in 0..6 {
                assert!((kernel_d(l, n, &o) - d_integral(l, n, &o)).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn element_and_matrix_kernels_agree() {
        let o = HomodyneOutcome::new(-1.3, 0.8).unwrap();
        let b = kernel_b_matrix(24, &o);
        for m in 0..24 {
            for k in 0..24 {
                assert!((b.entries[(m, k)] - kernel_b(m, k, &o)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_c_vacuum_resource() {
        let o = HomodyneOutcome::new(0.4, -0.9).unwrap();
        let vac = TwoModeState::vacuum(12).unwrap();
        let c = kernel_c(&vac, &o);
        for m in 0..12 {
            for n in 0..12 {
                let expected =
                    o.ordering_phase() * kernel_b(m, 0, &o) * kernel_d(0, n, &o) / (2.0 * PI).sqrt();
                assert!((c.entries[(m, n)] - expected).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn kernel_c_squeezed_vacuum_at_origin() {
        let o = HomodyneOutcome::new(0.0, 0.0).unwrap();
        let s = two_mode_squeezed_vacuum(Q, 32).unwrap();
        let c = kernel_c(&s, &o);
        for m in 0..32 {
            for n in 0..32 {
                let expected = if m == n { (1.0 - Q * Q).sqrt() * Q.powi(n as i32) / PI.sqrt() } else { 0.0 };
                assert!((c.entries[(m, n)] - expected).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn vacuum_teleportation_gives_q_function() {
        let vac = SingleModeState::vacuum(48).unwrap();
        let ent = TwoModeState::vacuum(48).unwrap();
        for (x0, p1) in [(0.0, 0.0), (0.3, -1.2), (2.0, 0.5)] {
            let o = HomodyneOutcome::new(x0, p1).unwrap();
            let p = outcome_probability_density(&vac, &ent, &o).unwrap();
            let expected = (-(x0 * x0 + p1 * p1)).exp() / PI;
            assert!((p - expected).abs() < 1e-14, "{p} vs {expected}");
        }
    }

    #[test]
    fn fidelity_tends_to_one_with_squeezing() {
        let input = cat(96);
        let origin = HomodyneOutcome::new(0.0, 0.0).unwrap();
        let mut last = 0.0;
        for q in [0.5, Q, 0.95, 0.99, 0.999] {
            let ent = two_mode_squeezed_vacuum(q, 96).unwrap();
            let f = conditional_fidelity(&input, &ent, &origin).unwrap();
            assert!(f > last, "q={q}");
            last = f;
        }
        assert!(last > 0.999);
    }

    #[test]
    fn conditional_fidelity_bounded() {
        let ent = two_mode_squeezed_vacuum(Q, 32).unwrap();
        let inputs = [
            cat(32),
            coherent_state(C64::new(0.8, -0.4), 32).unwrap(),
            SingleModeState::fock(3, 32).unwrap(),
        ];
        let axis: Vec<f64> = (0..40).map(|i| -4.0 + 8.0 * i as f64 / 39.0).collect();
        for input in &inputs {
            for p in outcome_surface(input, &ent, &axis, &axis).unwrap() {
                assert!(p.fidelity <= 1.0 + 1e-10);
                assert!(p.fidelity >= 0.0);
            }
        }
    }

    #[test]
    fn zero_probability_outcome_rejected() {
        let input = SingleModeState::fock(1, 8).unwrap();
        let ent = TwoModeState::vacuum(8).unwrap();
        // Q function of |1⟩ vanishes at the origin
        let o = HomodyneOutcome::new(0.0, 0.0).unwrap();
        assert_eq!(conditional_fidelity(&input, &ent, &o), Err(Error::ZeroProbability));
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let input = SingleModeState::vacuum(8).unwrap();
        let ent = TwoModeState::vacuum(9).unwrap();
        let o = HomodyneOutcome::new(0.0, 0.0).unwrap();
        assert!(matches!(
            teleported_coefficients(&input, &ent, &o),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vacuum_average_is_thermal() {
        let vac = SingleModeState::vacuum(24).unwrap();
        let ent = TwoModeState::vacuum(24).unwrap();
        let grid = OutcomeGrid::square(8.0, 96).unwrap();
        let rho = averaged_density_matrix(&vac, &ent, &grid).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-6);
        // vacuum displaced by a Gaussian of unit variance: thermal with n̄ = 1
        for n in 0..10 {
            let expected = 0.5f64.powi(n as i32 + 1);
            assert!((rho.elements()[(n, n)].re - expected).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn grid_loss_is_reported() {
        let input = cat(32);
        let ent = two_mode_squeezed_vacuum(Q, 32).unwrap();
        let grid = OutcomeGrid::square(2.0, 40).unwrap();
        assert!(matches!(
            averaged_density_matrix(&input, &ent, &grid),
            Err(Error::GridTruncation { .. })
        ));
    }

    #[test]
    fn oracle_matches_kernels() {
        let input = cat(40);
        let ent = two_mode_squeezed_vacuum(Q, 40).unwrap();
        let grid = default_oracle_grid();
        for (x0, p1) in [(0.1, 0.2), (-1.3, 0.7), (0.9, -1.6)] {
            let o = HomodyneOutcome::new(x0, p1).unwrap();
            let fock = teleported_coefficients(&input, &ent, &o).unwrap();
            let direct = teleport_oracle(&input, &ent, &o, &grid).unwrap();
            let diff = (fock.coeffs() - direct.coeffs()).map(|z| z.norm()).max();
            assert!(diff < 1e-6, "({x0},{p1}): {diff}");
        }
    }

    #[test]
    fn oracle_vacuum_resource_at_origin() {
        let input = SingleModeState::vacuum(16).unwrap();
        let ent = TwoModeState::vacuum(16).unwrap();
        let o = HomodyneOutcome::new(0.0, 0.0).unwrap();
        let b = teleport_oracle(&input, &ent, &o, &default_oracle_grid()).unwrap();
        assert!((b.coeffs()[0] - C64::new(1.0 / PI.sqrt(), 0.0)).norm() < 1e-12);
        assert!(b.coeffs().iter().skip(1).all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn oracle_near_perfect_squeezing_reproduces_input() {
        let dim = 96;
        let input = cat(dim);
        let ent = two_mode_squeezed_vacuum(0.999, dim).unwrap();
        let o = HomodyneOutcome::new(0.05, -0.1).unwrap();
        let out = teleport_oracle(&input, &ent, &o, &default_oracle_grid()).unwrap().normalize().unwrap();
        assert!(input.overlap(&out).unwrap().norm_sqr() > 0.99);
    }

    #[test]
    fn surface_csv_layout() {
        let input = cat(16);
        let ent = two_mode_squeezed_vacuum(0.5, 16).unwrap();
        let pts = outcome_surface(&input, &ent, &[0.0, 1.0], &[0.5]).unwrap();
        let mut buf = Vec::new();
        write_surface_csv(&pts, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], SURFACE_CSV_HEADER);
        assert_eq!(lines.len(), 3);
        let row = crate::io::parse_row(lines[2]).unwrap();
        assert_eq!(row[0], 1.0);
        assert_eq!(row[2], pts[1].probability_density);
    }
}
