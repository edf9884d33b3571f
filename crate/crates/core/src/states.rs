//! Single-mode and two-mode pure states in a truncated Fock basis, and the
//! density matrices produced by averaging over measurement outcomes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::log_factorial;

/// Default Fock truncation.
pub const DEFAULT_DIM: usize = 64;

/// Largest coherent-state weight that may fall outside the truncated basis.
pub const COHERENT_TRUNCATION_TOLERANCE: f64 = 1e-8;

const NORM_TOLERANCE: f64 = 1e-10;

fn check_finite<'a>(mut values: impl Iterator<Item = &'a C64>, what: &'static str) -> Result<()> {
    if values.all(|c| c.re.is_finite() && c.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Pure single-mode state `Σ a_n |n⟩`, possibly unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct SingleModeState {
    coeffs: DVector<C64>,
    normalized: bool,
}

impl SingleModeState {
    /// Wraps raw coefficients. The normalized flag is set when the norm is
    /// unity within `1e-10`.
    pub fn from_coeffs(coeffs: DVector<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyDimension);
        }
        check_finite(coeffs.iter(), "single-mode coefficients")?;
        let normalized = (coeffs.norm_squared() - 1.0).abs() <= NORM_TOLERANCE;
        Ok(Self { coeffs, normalized })
    }

    pub fn from_vec(coeffs: Vec<C64>) -> Result<Self> {
        Self::from_coeffs(DVector::from_vec(coeffs))
    }

    /// The Fock vacuum `|0⟩`.
    pub fn vacuum(dim: usize) -> Result<Self> {
        Self::fock(0, dim)
    }

    /// Number state `|n⟩`.
    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        if n >= dim {
            return Err(Error::DimensionMismatch { expected: n + 1, found: dim });
        }
        let mut coeffs = DVector::zeros(dim);
        coeffs[n] = C64::new(1.0, 0.0);
        Ok(Self { coeffs, normalized: true })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &DVector<C64> {
        &self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.coeffs.norm();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            coeffs: self.coeffs.unscale(norm),
            normalized: true,
        })
    }

    /// `⟨n⟩` of the normalized state.
    pub fn mean_photon_number(&self) -> Result<f64> {
        let norm = self.norm_squared();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        let weighted: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.norm_sqr())
            .sum();
        Ok(weighted / norm)
    }

    /// Complex inner product `⟨self|other⟩`.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    /// Pure-state projector `|ψ⟩⟨ψ|` (not renormalized).
    pub fn projector(&self) -> DensityMatrix {
        DensityMatrix::from_elements_unchecked(&self.coeffs * self.coeffs.adjoint())
    }
}

/// Pure two-mode state `Σ a_{k,l} |k⟩|l⟩`, possibly unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    coeffs: DMatrix<C64>,
    normalized: bool,
}

/// Per-mode and total photon numbers of a two-mode state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonNumbers {
    pub mode1: f64,
    pub mode2: f64,
    pub total: f64,
}

impl TwoModeState {
    pub fn from_coeffs(coeffs: DMatrix<C64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if coeffs.nrows() != coeffs.ncols() {
            return Err(Error::DimensionMismatch { expected: coeffs.nrows(), found: coeffs.ncols() });
        }
        check_finite(coeffs.iter(), "two-mode coefficients")?;
        let normalized = (coeffs.norm_squared() - 1.0).abs() <= NORM_TOLERANCE;
        Ok(Self { coeffs, normalized })
    }

    /// `|0⟩|0⟩`.
    pub fn vacuum(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut coeffs = DMatrix::zeros(dim, dim);
        coeffs[(0, 0)] = C64::new(1.0, 0.0);
        Ok(Self { coeffs, normalized: true })
    }

    pub fn dim(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &DMatrix<C64> {
        &self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `Σ|a_{k,l}|²`; for a conditioned state this is the heralding probability.
    pub fn norm_squared(&self) -> f64 {
        self.coeffs.norm_squared()
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.coeffs.norm();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            coeffs: self.coeffs.unscale(norm),
            normalized: true,
        })
    }

    pub fn mean_photon_number(&self) -> Result<PhotonNumbers> {
        let norm = self.norm_squared();
        if norm == 0.0 {
            return Err(Error::ZeroState);
        }
        let (mut mode1, mut mode2) = (0.0, 0.0);
        for l in 0..self.dim() {
            for k in 0..self.dim() {
                let w = self.coeffs[(k, l)].norm_sqr();
                mode1 += k as f64 * w;
                mode2 += l as f64 * w;
            }
        }
        let (mode1, mode2) = (mode1 / norm, mode2 / norm);
        Ok(PhotonNumbers { mode1, mode2, total: mode1 + mode2 })
    }
}

/// Density matrix `ρ_{m,m'} = ⟨m|ρ|m'⟩` in the Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    elements: DMatrix<C64>,
}

impl DensityMatrix {
    /// Validates hermiticity (`1e-10` entrywise) and nonnegative diagonal.
    pub fn from_elements(elements: DMatrix<C64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyDimension);
        }
        if elements.nrows() != elements.ncols() {
            return Err(Error::DimensionMismatch { expected: elements.nrows(), found: elements.ncols() });
        }
        check_finite(elements.iter(), "density matrix")?;
        let dim = elements.nrows();
        for i in 0..dim {
            for j in 0..=i {
                if (elements[(i, j)] - elements[(j, i)].conj()).norm() > NORM_TOLERANCE {
                    return Err(Error::Format(format!("density matrix not Hermitian at ({i}, {j})")));
                }
            }
            if elements[(i, i)].re < -1e-12 {
                return Err(Error::Format(format!("negative population at {i}")));
            }
        }
        Ok(Self { elements })
    }

    pub(crate) fn from_elements_unchecked(elements: DMatrix<C64>) -> Self {
        Self { elements }
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn elements(&self) -> &DMatrix<C64> {
        &self.elements
    }

    pub fn trace(&self) -> f64 {
        self.elements.diagonal().iter().map(|c| c.re).sum()
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let hermitian = (&self.elements + self.elements.adjoint()).scale(0.5);
        let mut values: Vec<f64> = hermitian.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }

    /// `⟨ψ|ρ|ψ⟩` for the given (not renormalized) state.
    pub fn expectation(&self, state: &SingleModeState) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: state.dim() });
        }
        let a = state.coeffs();
        Ok(a.dotc(&(&self.elements * a)).re)
    }

    pub fn mean_photon_number(&self) -> f64 {
        let weighted: f64 = self
            .elements
            .diagonal()
            .iter()
            .enumerate()
            .map(|(n, c)| n as f64 * c.re)
            .sum();
        weighted / self.trace()
    }
}

/// Two-mode squeezed vacuum `√(1−q²) Σ qⁿ |n⟩|n⟩` truncated to `dim`.
///
/// The coefficients keep their analytic values; the truncation loss
/// `q^{2·dim}` shows up as a norm below one.
pub fn two_mode_squeezed_vacuum(q: f64, dim: usize) -> Result<TwoModeState> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::SqueezingOutOfRange(q));
    }
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let prefactor = (1.0 - q * q).sqrt();
    let mut coeffs = DMatrix::zeros(dim, dim);
    let mut power = 1.0;
    for n in 0..dim {
        coeffs[(n, n)] = C64::new(prefactor * power, 0.0);
        power *= q;
    }
    TwoModeState::from_coeffs(coeffs)
}

/// Weight `q^{2·dim}` of a two-mode squeezed vacuum beyond the truncation.
pub fn squeezed_vacuum_truncation_loss(q: f64, dim: usize) -> f64 {
    q.powf(2.0 * dim as f64)
}

/// Unnormalized `e^{−|α|²/2} αⁿ/√(n!)` for `n < dim`, and the weight lost
/// beyond the truncation.
pub fn coherent_coefficients(alpha: C64, dim: usize) -> (DVector<C64>, f64) {
    let mean = alpha.norm_sqr();
    let radius = alpha.norm();
    let theta = alpha.arg();
    let coeffs = DVector::from_iterator(
        dim,
        (0..dim).map(|n| {
            if n == 0 {
                C64::new((-0.5 * mean).exp(), 0.0)
            } else if radius == 0.0 {
                C64::new(0.0, 0.0)
            } else {
                let log_mag = -0.5 * mean + n as f64 * radius.ln() - 0.5 * log_factorial(n);
                C64::from_polar(log_mag.exp(), n as f64 * theta)
            }
        }),
    );
    let lost = (1.0 - coeffs.norm_squared()).max(0.0);
    (coeffs, lost)
}

/// Coherent state `|α⟩`, renormalized over the truncated basis.
///
/// Fails when more than [`COHERENT_TRUNCATION_TOLERANCE`] of the weight
/// falls outside the basis.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<SingleModeState> {
    if dim == 0 {
        return Err(Error::EmptyDimension);
    }
    let (coeffs, lost) = coherent_coefficients(alpha, dim);
    if lost > COHERENT_TRUNCATION_TOLERANCE {
        return Err(Error::TruncationExceeded { mean_photons: alpha.norm_sqr(), lost, dim });
    }
    SingleModeState::from_coeffs(coeffs)?.normalize()
}

/// Odd cat state `∝ |α⟩ − |−α⟩`; even Fock components are exactly zero.
pub fn odd_cat_state(alpha: C64, dim: usize) -> Result<SingleModeState> {
    if alpha.norm() == 0.0 {
        return Err(Error::ZeroAmplitude);
    }
    let plus = coherent_state(alpha, dim)?;
    let mut coeffs = plus.coeffs().clone();
    for (n, c) in coeffs.iter_mut().enumerate() {
        if n % 2 == 0 {
            *c = C64::new(0.0, 0.0);
        }
    }
    SingleModeState::from_coeffs(coeffs)?.normalize()
}

/// Serialized form shared by single-mode states, two-mode states and
/// density matrices. Matrices are flattened row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDocument {
    pub kind: StateKind,
    pub dim: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Single,
    TwoMode,
    DensityMatrix,
}

fn split_parts<'a>(values: impl Iterator<Item = &'a C64>) -> (Vec<f64>, Vec<f64>) {
    values.map(|c| (c.re, c.im)).unzip()
}

fn row_major(matrix: &DMatrix<C64>) -> Vec<C64> {
    let mut out = Vec::with_capacity(matrix.len());
    for i in 0..matrix.nrows() {
        for j in 0..matrix.ncols() {
            out.push(matrix[(i, j)]);
        }
    }
    out
}

impl StateDocument {
    fn matrix(&self) -> Result<DMatrix<C64>> {
        let expected = self.dim * self.dim;
        if self.re.len() != expected || self.im.len() != expected {
            return Err(Error::Format(format!(
                "expected {expected} entries, found re={} im={}",
                self.re.len(),
                self.im.len()
            )));
        }
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| {
            let idx = i * self.dim + j;
            C64::new(self.re[idx], self.im[idx])
        }))
    }

    fn expect_kind(&self, kind: StateKind) -> Result<()> {
        if self.kind == kind {
            Ok(())
        } else {
            Err(Error::Format(format!("expected kind {kind:?}, found {:?}", self.kind)))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("state documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
    }
}

impl From<&SingleModeState> for StateDocument {
    fn from(state: &SingleModeState) -> Self {
        let (re, im) = split_parts(state.coeffs.iter());
        Self { kind: StateKind::Single, dim: state.dim(), re, im, trace: None }
    }
}

impl From<&TwoModeState> for StateDocument {
    fn from(state: &TwoModeState) -> Self {
        let flat = row_major(&state.coeffs);
        let (re, im) = split_parts(flat.iter());
        Self { kind: StateKind::TwoMode, dim: state.dim(), re, im, trace: None }
    }
}

impl From<&DensityMatrix> for StateDocument {
    fn from(rho: &DensityMatrix) -> Self {
        let flat = row_major(&rho.elements);
        let (re, im) = split_parts(flat.iter());
        Self {
            kind: StateKind::DensityMatrix,
            dim: rho.dim(),
            re,
            im,
            trace: Some(rho.trace()),
        }
    }
}

impl TryFrom<&StateDocument> for SingleModeState {
    type Error = Error;

    fn try_from(doc: &StateDocument) -> Result<Self> {
        doc.expect_kind(StateKind::Single)?;
        if doc.re.len() != doc.dim || doc.im.len() != doc.dim {
            return Err(Error::Format("coefficient length does not match dim".into()));
        }
        SingleModeState::from_vec(doc.re.iter().zip(&doc.im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

impl TryFrom<&StateDocument> for TwoModeState {
    type Error = Error;

    fn try_from(doc: &StateDocument) -> Result<Self> {
        doc.expect_kind(StateKind::TwoMode)?;
        TwoModeState::from_coeffs(doc.matrix()?)
    }
}

impl TryFrom<&StateDocument> for DensityMatrix {
    type Error = Error;

    fn try_from(doc: &StateDocument) -> Result<Self> {
        doc.expect_kind(StateKind::DensityMatrix)?;
        DensityMatrix::from_elements(doc.matrix()?)
    }
}
