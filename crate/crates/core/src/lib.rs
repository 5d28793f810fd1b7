//! Variance-UCB: adaptive sampling across groups to estimate every group
//! mean as precisely as possible, where precision is the p-norm of the
//! vector of estimator variances `sigma_g^2 / n_g`.
//!
//! The crate is split into:
//!
//! * [`problem`]: instances, norm parameters, count vectors and the objective `R_p`.
//! * [`oracle`]: the complete-information allocation, normalized regret and a
//!   brute-force optimizer used to cross-check the closed form.
//! * [`estimation`]: streaming moments, UCB procedures and admissible widths.
//! * [`policies`]: Variance-UCB, round-robin and oracle tracking, plus the
//!   single-episode runner.
//! * [`theory`]: decision errors, the potential function and its fixed point,
//!   leading-term regret bounds, sample-size inversion and the Taylor check.
//! * [`harness`]: configuration, seeded parallel Monte Carlo, persistence, CLI.

pub mod error;
pub mod estimation;
pub mod harness;
pub mod oracle;
pub mod policies;
pub mod problem;
pub mod theory;

pub use error::{Error, FieldError, Result};
pub use problem::{CountVector, Family, GroupDistribution, Instance, NormParam};
