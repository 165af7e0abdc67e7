//! Fair allocation of indivisible chores among agents with asymmetric shares.
//!
//! An [`Instance`] gives every agent a share `s_i` (shares sum to 1) and a
//! nonpositive value for every chore. Agent `i`'s weighted maxmin share is
//! `WMMS_i = s_i * max_X min_k V_i(X_k) / s_k`, and an allocation is
//! `alpha`-WMMS when every agent gets at least `alpha * WMMS_i`.
//!
//! * [`oracle`]: exhaustive WMMS, the makespan form, and the optimal ratio
//!   `alpha*`.
//! * [`algos`]: polynomial-time algorithms and the baselines they are
//!   compared against.
//! * [`lp`] and [`simplex`]: the LinPro algorithm, a `(4+eps)`-approximation
//!   of the optimal WMMS allocation for any number of agents.
//! * [`fixtures`]: the worked tables, adversarial families and seeded random
//!   instances.
//! * [`format`]: the JSON instance document.
//! * [`bench`]: algorithm runs checked against the oracle.
//!
//! All arithmetic is exact. Code is generic over [`Scalar`], implemented for
//! arbitrary-precision [`Ratio`] and the fixed-width [`num_rational::Rational64`].

pub mod algos;
pub mod bench;
pub mod fixtures;
pub mod format;
pub mod lp;
pub mod model;
pub mod oracle;
pub mod scalar;
pub mod simplex;

pub use model::{AchievedRatio, Allocation, FairnessReport, ModelError, Violation};
pub use scalar::Scalar;

/// The default scalar: arbitrary-precision rationals.
pub type Ratio = num_rational::BigRational;
pub type Instance = model::Instance<Ratio>;
pub type Instance64 = model::Instance<num_rational::Rational64>;
pub type OracleResult = oracle::OracleResult<Ratio>;
pub type OwmmsResult = oracle::OwmmsResult<Ratio>;
pub type LinProResult = lp::LinProResult<Ratio>;
pub type LpProgram = lp::LpProgram<Ratio>;
pub type LpPoint = lp::LpPoint<Ratio>;
pub type AlgoTrace = algos::AlgoTrace<Ratio>;
