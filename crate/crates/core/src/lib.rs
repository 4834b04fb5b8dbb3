//! Point-vortex statistical mechanics for generalized Euler / SQG equations
//! on the unit torus: regularized Green functions, Gaussian field sampling,
//! vortex dynamics, Gibbs-ensemble Monte Carlo, fluctuation limits and the
//! mean-field equation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod gibbs;
pub mod limits;
pub mod meanfield;
pub mod prior;
pub mod spectral;
pub mod stats;
pub mod testfn;

pub use dynamics::{hamiltonian, integrate, vortex_rhs, TrajectoryDiagnostics, VortexConfiguration};
pub use error::{Error, Result};
pub use field::{check_char_bound, eval_field, sample_field, verify_gaussian_rep, FieldSample};
pub use gibbs::{epsilon_schedule, log_weight, mcmc_sweep, run_chain, ChainSchedule, ChainStats, GibbsParams};
pub use limits::{
    chaos_experiment, clt_experiment, lln_experiment, sigma_infinity_operator, sigma_infinity_spectral, sigma_tilde,
    CltReport, ExperimentConfig,
};
pub use meanfield::{averaged_stream, beta_zero, free_energy, mfe_iterate, second_variation_coefficient, DensityGrid};
pub use prior::IntensityPrior;
pub use spectral::{enumerate_modes, Mode, Parity, SpectralTable, TorusPoint};
pub use testfn::{pair_empirical, pair_fluctuation, pair_pseudo_vorticity, prior_moments, Poly, TestFunction};
