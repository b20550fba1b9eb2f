//! Complex-valued Chinese remainder theorem with Gaussian-integer moduli.
//!
//! The crate covers exact reconstruction of a complex number from its
//! remainders modulo `M·Γ_i`, the fast maximum-likelihood estimator for
//! noisy remainders (2L objective evaluations), the robustness conditions
//! under which the reconstruction error equals the weighted mean remainder
//! error, wrapped-Gaussian noise machinery, and a multi-channel self-reset
//! ADC simulator built on top of all of it.
//!
//! ```
//! use ccrt::{GaussianInt, ModulusSystem};
//! use num_complex::Complex64;
//!
//! let g = |s: &str| s.parse::<GaussianInt>().unwrap();
//! let sys = ModulusSystem::build(2, vec![g("1+4i"), g("-3-4i"), g("13+16i")]).unwrap();
//! let rems = [
//!     Complex64::new(-3.0, 6.0),
//!     Complex64::new(-1.0, -6.0),
//!     Complex64::new(-15.0, 44.0),
//! ];
//! let sol = ccrt::crt::solve_common(&rems, &sys).unwrap();
//! assert_eq!(sol.n, Complex64::new(17.0, 18.0));
//! ```

pub mod adc;
pub mod complex_mod;
pub mod crt;
pub mod error;
pub mod gaussian;
pub mod mle;
pub mod noise;
pub mod rng;
pub mod robustness;

pub use complex_mod::{circ_dist, floor_c, in_region, mod_c, ComplexVal, Region, RegionKind};
pub use crt::{CommonSolution, ModulusSystem, RealSystem};
pub use error::{Error, Result};
pub use gaussian::GaussianInt;
pub use mle::{Estimate, NoisyRemainders, OpCounter, Weights};
