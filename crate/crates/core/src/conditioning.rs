//! Photon subtraction by conditional photon-number measurement behind
//! low-reflectance beam splitters, and the entanglement entropy used to
//! score the conditioned two-mode state.

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::fmt17;
use crate::numerics::{log_binomial, log_factorial};
use crate::states::TwoModeState;

/// Photon counts `n1`, `n2` detected in the reflected ports of two beam
/// splitters with real reflectances `r1`, `r2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubtractionEvent {
    pub n1: usize,
    pub n2: usize,
    r1: f64,
    r2: f64,
}

impl SubtractionEvent {
    pub fn new(n1: usize, n2: usize, r1: f64, r2: f64) -> Result<Self> {
        for r in [r1, r2] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::ReflectanceOutOfRange(r));
            }
        }
        Ok(Self { n1, n2, r1, r2 })
    }

    /// Same count and reflectance on both modes.
    pub fn symmetric(n: usize, r: f64) -> Result<Self> {
        Self::new(n, n, r, r)
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r2(&self) -> f64 {
        self.r2
    }

    pub fn t1(&self) -> f64 {
        (1.0 - self.r1 * self.r1).sqrt()
    }

    pub fn t2(&self) -> f64 {
        (1.0 - self.r2 * self.r2).sqrt()
    }
}

/// Amplitude of `|k⟩ → |k−n⟩` when `n` photons are detected in the reflected
/// port: `(−1)ⁿ √C(k,n) |r|ⁿ |t|^{k−n}`.
pub fn fock_reduction_amplitude(k: usize, n: usize, t: f64, r: f64) -> Result<f64> {
    if n > k {
        return Err(Error::TooManyPhotons { detected: n, available: k });
    }
    Ok(reduction_amplitude(k, n, t, r))
}

fn reduction_amplitude(k: usize, n: usize, t: f64, r: f64) -> f64 {
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * (0.5 * log_binomial(k, n)).exp() * r.abs().powi(n as i32) * t.abs().powi((k - n) as i32)
}

/// Conditions an arbitrary two-mode state on the detection event.
///
/// Returns the unnormalized conditioned state and its norm, which is the
/// probability of the event. Source coefficients beyond the truncation are
/// treated as zero.
pub fn subtract_photons(state: &TwoModeState, event: &SubtractionEvent) -> Result<(TwoModeState, f64)> {
    let dim = state.dim();
    let old = state.coeffs();
    let (t1, t2) = (event.t1(), event.t2());
    let row_amp: Vec<f64> = (0..dim)
        .map(|k| if k + event.n1 < dim { reduction_amplitude(k + event.n1, event.n1, t1, event.r1) } else { 0.0 })
        .collect();
    let col_amp: Vec<f64> = (0..dim)
        .map(|l| if l + event.n2 < dim { reduction_amplitude(l + event.n2, event.n2, t2, event.r2) } else { 0.0 })
        .collect();
    let coeffs = DMatrix::from_fn(dim, dim, |k, l| {
        if k + event.n1 < dim && l + event.n2 < dim {
            old[(k + event.n1, l + event.n2)] * (row_amp[k] * col_amp[l])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let conditioned = TwoModeState::from_coeffs(coeffs)?;
    let probability = conditioned.norm_squared();
    Ok((conditioned, probability))
}

/// Log-magnitude of the closed-form conditioned squeezed-vacuum coefficient
/// on band index `k`, excluding the `r`, `t`, `q` powers.
fn tmsv_band_log_factor(k: usize, n1: usize, n2: usize) -> f64 {
    log_factorial(k + n1) - 0.5 * (log_factorial(k) + log_factorial(k + n1 - n2) + log_factorial(n1) + log_factorial(n2))
}

fn tmsv_band_coefficient(q: f64, event: &SubtractionEvent, k: usize) -> f64 {
    let (n1, n2) = (event.n1, event.n2);
    let sign = if (n1 + n2) % 2 == 0 { 1.0 } else { -1.0 };
    let l = k + n1 - n2;
    sign * (1.0 - q * q).sqrt()
        * tmsv_band_log_factor(k, n1, n2).exp()
        * event.r1.powi(n1 as i32)
        * event.r2.powi(n2 as i32)
        * event.t1().powi(k as i32)
        * event.t2().powi(l as i32)
        * q.powi((k + n1) as i32)
}

/// Closed-form conditioning of a two-mode squeezed vacuum. Nonzero entries
/// lie on the band `l = k + n1 − n2`.
///
/// Entries whose source index `k + n1` falls outside the truncation are
/// zero, matching [`subtract_photons`] applied to
/// [`two_mode_squeezed_vacuum`](crate::states::two_mode_squeezed_vacuum).
pub fn subtract_photons_tmsv(q: f64, event: &SubtractionEvent, dim: usize) -> Result<(TwoModeState, f64)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::SqueezingOutOfRange(q));
    }
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let (n1, n2) = (event.n1, event.n2);
    let mut coeffs = DMatrix::zeros(dim, dim);
    for k in n2.saturating_sub(n1)..dim {
        let l = k + n1 - n2;
        if l >= dim || k + n1 >= dim {
            continue;
        }
        coeffs[(k, l)] = C64::new(tmsv_band_coefficient(q, event, k), 0.0);
    }
    let conditioned = TwoModeState::from_coeffs(coeffs)?;
    let probability = conditioned.norm_squared();
    Ok((conditioned, probability))
}

/// Weight of the untruncated conditioned squeezed vacuum that the
/// `dim`-truncated closed form misses, as a fraction of the total.
pub fn tmsv_truncation_weight(q: f64, event: &SubtractionEvent, dim: usize) -> f64 {
    let (n1, n2) = (event.n1, event.n2);
    let start = n2.saturating_sub(n1);
    let mut captured = 0.0;
    let mut tail = 0.0;
    let mut k = start;
    loop {
        let c = tmsv_band_coefficient(q, event, k).powi(2);
        let l = k + n1 - n2;
        if k + n1 < dim && l < dim {
            captured += c;
        } else {
            tail += c;
            // terms are unimodal in k, so a negligible term is past the peak
            if c <= 1e-20 * (captured + tail) {
                break;
            }
        }
        k += 1;
    }
    let total = captured + tail;
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Von Neumann entropy of either reduced state, from the singular values of
/// the normalized coefficient matrix. `base = 2.0` gives bits.
pub fn entanglement_entropy(state: &TwoModeState, base: f64) -> Result<f64> {
    let normalized = state.normalize()?;
    let singular = normalized.coeffs().clone().singular_values();
    let ln_base = base.ln();
    let entropy: f64 = singular
        .iter()
        .map(|s| s * s)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    Ok(entropy / ln_base)
}

/// Analytic entropy in bits of an untruncated two-mode squeezed vacuum.
pub fn tmsv_entropy_bits(q: f64) -> f64 {
    let r = q.atanh();
    let c2 = r.cosh().powi(2);
    let s2 = r.sinh().powi(2);
    c2 * c2.log2() - s2 * s2.log2()
}

/// One reflectance point of an entanglement sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    /// `None` when the event has zero probability.
    pub entropy_bits: Option<f64>,
    pub success_probability: f64,
    pub truncation_weight: f64,
}

/// Entropy and heralding probability of the photon-subtracted squeezed
/// vacuum for each reflectance `r = r1 = r2`. Rows come back in input order.
pub fn entanglement_sweep(q: f64, n1: usize, n2: usize, r_values: &[f64], dim: usize) -> Result<Vec<SweepRow>> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::SqueezingOutOfRange(q));
    }
    r_values
        .par_iter()
        .map(|&r| {
            let event = SubtractionEvent::new(n1, n2, r, r)?;
            let (state, probability) = subtract_photons_tmsv(q, &event, dim)?;
            let entropy_bits = if probability > 0.0 { Some(entanglement_entropy(&state, 2.0)?) } else { None };
            Ok(SweepRow {
                r,
                entropy_bits,
                success_probability: probability,
                truncation_weight: tmsv_truncation_weight(q, &event, dim),
            })
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: &str = "r,entropy_bits,success_probability,truncation_weight";

/// Writes sweep rows as CSV. Rows with undefined entropy are omitted.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for row in rows {
        if let Some(entropy) = row.entropy_bits {
            writeln!(
                out,
                "{},{},{},{}",
                fmt17(row.r),
                fmt17(entropy),
                fmt17(row.success_probability),
                fmt17(row.truncation_weight)
            )?;
        }
    }
    Ok(())
}
