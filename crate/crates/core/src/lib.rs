//! Stochastic-gradient MCMC with softened monomial-gamma kinetic energies.
//!
//! The crate provides the kinetic energies and their momentum samplers
//! ([`kinetics`]), target models ([`potentials`]), the SGLD, SGHMC, SGNHT,
//! SGMGT, SGMGT-D and MGHMC samplers ([`dynamics`]), trace diagnostics
//! ([`diagnostics`]) and an experiment runner with a command-line front end
//! ([`experiment`], [`suites`], [`cli`]).
//!
//! ```
//! use sgmgt::dynamics::{run_chain, Algorithm, SamplerConfig};
//! use sgmgt::kinetics::Monomial;
//! use sgmgt::potentials::{noisy_gradient, Gaussian};
//!
//! let model = noisy_gradient(Gaussian::standard(1), 1.0).unwrap();
//! let config = SamplerConfig {
//!     algorithm: Algorithm::SgmgtD,
//!     a: Monomial::Two,
//!     h: 0.05,
//!     n_iters: 2_000,
//!     n_burnin: 500,
//!     ..SamplerConfig::default()
//! };
//! let trace = run_chain(&model, &config).unwrap();
//! assert_eq!(trace.samples.len(), 1_500);
//! ```

pub mod cli;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod kinetics;
pub mod potentials;
pub mod suites;

#[cfg(doctest)]
pub mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod introduction {}
    #[doc = include_str!("../../../book/src/kinetics.md")]
    pub mod kinetics {}
    #[doc = include_str!("../../../book/src/targets.md")]
    pub mod targets {}
    #[doc = include_str!("../../../book/src/samplers.md")]
    pub mod samplers {}
    #[doc = include_str!("../../../book/src/integrators.md")]
    pub mod integrators {}
    #[doc = include_str!("../../../book/src/diagnostics.md")]
    pub mod diagnostics {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod cli {}
}
