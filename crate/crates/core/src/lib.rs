//! Fock-basis simulation of continuous-variable teleportation through a
//! two-mode squeezed vacuum, with photon subtraction by conditional
//! photon-number measurement on the entangled resource.
//!
//! The crate is organized bottom-up:
//!
//! * [`numerics`]: log-factorials, oscillator eigenfunctions, Laguerre
//!   polynomials, displacement matrices and Gauss–Legendre rules.
//! * [`states`]: single-mode, two-mode and density-matrix containers plus
//!   the squeezed-vacuum, coherent and cat-state generators.
//! * [`conditioning`]: beam-splitter photon subtraction and entanglement
//!   entropy.
//! * [`teleport`]: homodyne-outcome kernels, conditional output states,
//!   outcome-averaged density matrices and fidelities, and an independent
//!   quadrature-representation oracle.
//! * [`analysis`]: Wigner functions, quadrature distributions and fringe
//!   visibility.
//! * [`cli`]: the `cv-teleport` command-line front end.
//!
//! ```
//! use cv_teleport::conditioning::{subtract_photons_tmsv, SubtractionEvent};
//! use cv_teleport::states::odd_cat_state;
//! use cv_teleport::teleport::{averaged_density_matrix, averaged_fidelity, OutcomeGrid};
//! use cv_teleport::C64;
//!
//! let input = odd_cat_state(C64::new(0.0, 1.5), 48)?;
//! let event = SubtractionEvent::symmetric(1, 0.15)?;
//! let (resource, probability) = subtract_photons_tmsv(0.8178, &event, 48)?;
//! let rho = averaged_density_matrix(&input, &resource.normalize()?, &OutcomeGrid::square(8.0, 64)?)?;
//! let fidelity = averaged_fidelity(&input, &rho)?;
//! assert!((probability - 0.0039).abs() < 1e-4);
//! assert!(fidelity > 0.74 && fidelity < 0.75);
//! # Ok::<(), cv_teleport::Error>(())
//! ```

pub mod analysis;
pub mod cli;
pub mod conditioning;
pub mod error;
pub mod io;
pub mod numerics;
pub mod states;
pub mod teleport;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
