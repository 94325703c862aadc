//! Remote-effects spatial process (RESP) model.
//!
//! A Gaussian-process spatial regression in which a local Matérn field is
//! augmented by teleconnection effects: a remote covariate field acts on the
//! response through spatially varying coefficients, reduced to predictive-process
//! rank over a knot set. The separable covariance is exploited throughout
//! likelihood evaluation and sampling — no `n_s·n_t` square matrix is ever
//! materialized, and `n_s·k`-sized objects appear only where they are the
//! deliverable (the composition-sampled coefficient summary).
//!
//! Modules follow the processing pipeline:
//! - [`kronlinalg`]: blocked Kronecker products and SPD factorization
//! - [`covkernels`]: great-circle distance and Matérn covariance construction
//! - [`reducedrank`]: knot grids, induced covariates, EOF bases
//! - [`resplike`]: model data, marginalized likelihood, simulation
//! - [`gibbs`]: hybrid Gibbs / adaptive random-walk Metropolis sampler
//! - [`posteriorops`]: composition sampling, streaming moments, prediction
//! - [`assess`]: variance inflation factors and categorical forecast skill

pub mod assess;
pub mod covkernels;
pub mod gibbs;
pub mod kronlinalg;
pub mod posteriorops;
pub mod reducedrank;
pub mod resplike;

pub use kronlinalg::Mat;
pub use resplike::{Dataset, GridSeries, ModelState};

