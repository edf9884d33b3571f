//! Phase-space and quadrature observables of Fock-basis density matrices.
//!
//! Quadratures are `x = (a + a†)/√2`, `p = −i(a − a†)/√2`, and Wigner
//! functions integrate to the trace over `dx dp`.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::numerics::{displacement_matrix, fill_oscillator_eigenfunctions};
use crate::states::DensityMatrix;

/// Wigner function sampled on a rectangular grid; `values[(i, j)]` is
/// `W(x_values[i], p_values[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub x_values: Vec<f64>,
    pub p_values: Vec<f64>,
    pub values: DMatrix<f64>,
}

/// Wigner function at a single phase-space point.
///
/// Uses `W(x,p) = π⁻¹ Σ_{m,n} ρ_{m,n} (−1)ⁿ ⟨n|D(β)|m⟩` with
/// `β = −√2 (x + ip)`, i.e. the parity-displacement form in the Fock basis.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let dim = rho.dim();
    let kernel = displacement_matrix(dim, C64::new(-SQRT_2 * x, -SQRT_2 * p));
    let elements = rho.elements();
    let mut total = 0.0;
    for n in 0..dim {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        let row: C64 = (0..dim).map(|m| kernel[(n, m)] * elements[(m, n)]).sum();
        total += sign * row.re;
    }
    total / PI
}

pub fn wigner_function(rho: &DensityMatrix, x_values: &[f64], p_values: &[f64]) -> PhaseSpaceGrid {
    let rows: Vec<Vec<f64>> = x_values
        .par_iter()
        .map(|&x| p_values.iter().map(|&p| wigner_point(rho, x, p)).collect())
        .collect();
    let values = DMatrix::from_fn(x_values.len(), p_values.len(), |i, j| rows[i][j]);
    PhaseSpaceGrid {
        x_values: x_values.to_vec(),
        p_values: p_values.to_vec(),
        values,
    }
}

/// `⟨x|ρ|x⟩ = Σ ρ_{m,m'} φ_m(x) φ_{m'}(x)`.
pub fn quadrature_distribution(rho: &DensityMatrix, x_values: &[f64]) -> Vec<f64> {
    let dim = rho.dim();
    x_values
        .par_iter()
        .map(|&x| {
            let mut phi = vec![0.0; dim];
            fill_oscillator_eigenfunctions(x, &mut phi);
            let v = DVector::from_iterator(dim, phi.into_iter().map(|f| C64::new(f, 0.0)));
            v.dotc(&(rho.elements() * &v)).re
        })
        .collect()
}

/// `⟨p|ρ|p⟩`, using `⟨p|n⟩ = (−i)ⁿ φ_n(p)`.
pub fn momentum_distribution(rho: &DensityMatrix, p_values: &[f64]) -> Vec<f64> {
    let dim = rho.dim();
    let phases = [C64::new(1.0, 0.0), C64::new(0.0, -1.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0)];
    p_values
        .par_iter()
        .map(|&p| {
            let mut phi = vec![0.0; dim];
            fill_oscillator_eigenfunctions(p, &mut phi);
            // v_n = ⟨n|p⟩ = conj((−i)ⁿ) φ_n(p)
            let v = DVector::from_iterator(dim, phi.iter().enumerate().map(|(n, &f)| phases[n % 4].conj() * f));
            v.dotc(&(rho.elements() * &v)).re
        })
        .collect()
}

/// A local extremum refined by a parabola through three neighboring samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub x: f64,
    pub value: f64,
}

fn refine(xs: &[f64], ys: &[f64], i: usize) -> Extremum {
    let (x0, x1, x2) = (xs[i - 1], xs[i], xs[i + 1]);
    let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
    // divided differences of the interpolating parabola
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if curvature == 0.0 {
        return Extremum { x: x1, value: y1 };
    }
    let slope_at_x1 = d01 + curvature * (x1 - x0);
    let shift = -slope_at_x1 / (2.0 * curvature);
    let x = (x1 + shift).clamp(x0, x2);
    let dx = x - x1;
    Extremum { x, value: y1 + slope_at_x1 * dx + curvature * dx * dx }
}

fn local_maxima(xs: &[f64], ys: &[f64]) -> Vec<Extremum> {
    (1..ys.len().saturating_sub(1))
        .filter(|&i| ys[i] >= ys[i - 1] && ys[i] > ys[i + 1])
        .map(|i| refine(xs, ys, i))
        .collect()
}

fn local_minima(xs: &[f64], ys: &[f64]) -> Vec<Extremum> {
    (1..ys.len().saturating_sub(1))
        .filter(|&i| ys[i] <= ys[i - 1] && ys[i] < ys[i + 1])
        .map(|i| refine(xs, ys, i))
        .collect()
}

/// Extrema used by the central-fringe visibility estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeReport {
    pub maximum: Extremum,
    /// Nearest local minima to the left and right of the maximum, if any.
    pub left_minimum: Option<Extremum>,
    pub right_minimum: Option<Extremum>,
    pub visibility: f64,
}

/// Central-fringe contrast: the local maximum nearest `x = 0` against the
/// mean of its adjacent local minima.
///
/// A side without a local minimum (the envelope decays monotonically there)
/// is skipped; at least one adjacent minimum must exist.
pub fn fringe_report(distribution: &[f64], x_values: &[f64]) -> Result<FringeReport> {
    if distribution.len() != x_values.len() {
        return Err(Error::DimensionMismatch { expected: x_values.len(), found: distribution.len() });
    }
    let maxima = local_maxima(x_values, distribution);
    let maximum = maxima
        .iter()
        .copied()
        .min_by(|a, b| a.x.abs().total_cmp(&b.x.abs()))
        .ok_or(Error::NoFringe)?;
    let minima = local_minima(x_values, distribution);
    let left_minimum = minima.iter().copied().filter(|m| m.x < maximum.x).max_by(|a, b| a.x.total_cmp(&b.x));
    let right_minimum = minima.iter().copied().filter(|m| m.x > maximum.x).min_by(|a, b| a.x.total_cmp(&b.x));
    let mins: Vec<f64> = [left_minimum, right_minimum].iter().flatten().map(|m| m.value.max(0.0)).collect();
    if mins.is_empty() {
        return Err(Error::NoFringe);
    }
    let low = mins.iter().sum::<f64>() / mins.len() as f64;
    let high = maximum.value;
    let visibility = ((high - low) / (high + low)).clamp(0.0, 1.0);
    Ok(FringeReport { maximum, left_minimum, right_minimum, visibility })
}

pub fn fringe_visibility(distribution: &[f64], x_values: &[f64]) -> Result<f64> {
    Ok(fringe_report(distribution, x_values)?.visibility)
}

/// Alternative estimator: largest local maximum against smallest local minimum.
pub fn global_fringe_visibility(distribution: &[f64], x_values: &[f64]) -> Result<f64> {
    let high = local_maxima(x_values, distribution)
        .into_iter()
        .map(|e| e.value)
        .max_by(f64::total_cmp)
        .ok_or(Error::NoFringe)?;
    let low = local_minima(x_values, distribution)
        .into_iter()
        .map(|e| e.value.max(0.0))
        .min_by(f64::total_cmp)
        .ok_or(Error::NoFringe)?;
    Ok(((high - low) / (high + low)).clamp(0.0, 1.0))
}

/// `n` evenly spaced samples on `[lower, upper]`.
pub fn linspace(lower: f64, upper: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lower],
        _ => (0..n).map(|i| lower + (upper - lower) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Grid metadata written next to a Wigner CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerHeader {
    pub x_min: f64,
    pub x_max: f64,
    pub x_points: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub p_points: usize,
    pub trace: f64,
    /// Trapezoid estimate of `∬ W dx dp` on the grid.
    pub grid_integral: f64,
}

fn trapezoid_weights(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = 0.5 * (xs[i + 1] - xs[i]);
        w[i] += h;
        w[i + 1] += h;
    }
    w
}

impl PhaseSpaceGrid {
    pub fn header(&self, trace: f64) -> WignerHeader {
        let wx = trapezoid_weights(&self.x_values);
        let wp = trapezoid_weights(&self.p_values);
        let mut integral = 0.0;
        for (i, &a) in wx.iter().enumerate() {
            for (j, &b) in wp.iter().enumerate() {
                integral += a * b * self.values[(i, j)];
            }
        }
        WignerHeader {
            x_min: self.x_values.first().copied().unwrap_or(0.0),
            x_max: self.x_values.last().copied().unwrap_or(0.0),
            x_points: self.x_values.len(),
            p_min: self.p_values.first().copied().unwrap_or(0.0),
            p_max: self.p_values.last().copied().unwrap_or(0.0),
            p_points: self.p_values.len(),
            trace,
            grid_integral: integral,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,p,W")?;
        for (i, &x) in self.x_values.iter().enumerate() {
            for (j, &p) in self.p_values.iter().enumerate() {
                writeln!(out, "{},{},{}", fmt17(x), fmt17(p), fmt17(self.values[(i, j)]))?;
            }
        }
        Ok(())
    }
}

pub fn write_quadrature_csv<W: Write>(x_values: &[f64], distribution: &[f64], mut out: W) -> std::io::Result<()> {
    writeln!(out, "x,pr")?;
    for (x, pr) in x_values.iter().zip(distribution) {
        writeln!(out, "{},{}", fmt17(*x), fmt17(*pr))?;
    }
    Ok(())
}
