//! Instance generators: the six worked tables, the adversarial families used
//! as negative controls, and seeded random instances.
//!
//! Families whose defining sums only approach 1 are renormalized exactly
//! (shares divided by their sum, each row divided by its total) so every
//! generated instance validates.
//!
//! Random instances use ChaCha8 seeded through `rand_core`'s
//! `SeedableRng::seed_from_u64`. Each draw is `next_u64() % k`, so a seed
//! reproduces the same instance on every platform.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Allocation, Instance, ModelError};
use crate::scalar::{self, isqrt_floor, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixtureError {
    #[error("there is no table {0}; tables are numbered 1 to 6")]
    UnknownTable(usize),
    #[error("epsilon {0} is outside the range this table allows")]
    BadEpsilon(String),
    #[error("NoIntegralM: epsilon {epsilon} gives m = {m}, not an integer")]
    NoIntegralM { epsilon: String, m: String },
    #[error("ParameterInconsistent: {0}")]
    ParameterInconsistent(String),
    #[error("family needs n >= {min}, got {got}")]
    TooFewAgents { min: usize, got: usize },
    #[error("a generated value does not fit the scalar type")]
    OutOfRange,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parameters for [`paper_table`]: `epsilon` for tables 3 to 5, `(t, c, n)`
/// for table 6.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureParams {
    pub epsilon: BigRational,
    pub t: BigRational,
    pub c: BigRational,
    pub n: usize,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            epsilon: BigRational::new(BigInt::one(), BigInt::from(10)),
            t: BigRational::new(BigInt::from(16), BigInt::from(3)),
            c: BigRational::from_integer(BigInt::from(4)),
            n: 5,
        }
    }
}

fn narrow<T: Scalar>(v: &BigRational) -> Result<T, FixtureError> {
    T::from_big(v).ok_or(FixtureError::OutOfRange)
}

fn narrow_all<T: Scalar>(vs: &[BigRational]) -> Result<Vec<T>, FixtureError> {
    vs.iter().map(narrow).collect()
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn build<T: Scalar>(shares: &[BigRational], rows: &[Vec<BigRational>]) -> Result<Instance<T>, FixtureError> {
    let rows = rows.iter().map(|r| narrow_all(r)).collect::<Result<Vec<_>, _>>()?;
    Ok(Instance::new(narrow_all(shares)?, rows)?)
}

/// Chore count of the additive-greedy table: the `m` solving
/// `(-ε + ε²) + (-ε) + (m - 2)(-ε²) = -1`, i.e. `m = 2 + ((1 - ε)/ε)²`.
pub fn table5_chores(epsilon: &BigRational) -> Result<usize, FixtureError> {
    if *epsilon <= BigRational::zero() || *epsilon >= BigRational::one() {
        return Err(FixtureError::BadEpsilon(epsilon.to_string()));
    }
    let ratio = (BigRational::one() - epsilon) / epsilon;
    let m = BigRational::from_integer(BigInt::from(2)) + ratio.clone() * ratio;
    if !m.is_integer() {
        return Err(FixtureError::NoIntegralM {
            epsilon: epsilon.to_string(),
            m: m.to_string(),
        });
    }
    m.to_integer()
        .try_into()
        .map_err(|_| FixtureError::BadEpsilon(epsilon.to_string()))
}

/// The worked tables, exactly as printed.
///
/// 1. Two agents, shares 1/4 and 3/4; a WMMS allocation exists.
/// 2. The two-agent instance where no allocation beats 4/3-WMMS.
/// 3. and 4. Bad cases for multiplicative greedy with largest-share and
///    smallest-share tie breaking.
/// 5. Bad case for additive greedy; `m` follows from `epsilon`.
/// 6. Bad case for the greedy on heterogeneous rows; see
///    [`egal_greedy_failure_family`].
pub fn paper_table<T: Scalar>(k: usize, params: &FixtureParams) -> Result<Instance<T>, FixtureError> {
    let eps = params.epsilon.clone();
    let one = BigRational::one();
    let eps2 = eps.clone() * eps.clone();
    match k {
        1 => build(
            &[q(1, 4), q(3, 4)],
            &[vec![q(-1, 4); 4], vec![q(-3, 8), q(-3, 8), q(-1, 8), q(-1, 8)]],
        ),
        2 => build(
            &[q(3, 4), q(1, 4)],
            &[vec![q(-3, 4), q(-1, 4)], vec![q(-1, 2), q(-1, 2)]],
        ),
        3 => {
            if eps <= BigRational::zero() || eps >= one {
                return Err(FixtureError::BadEpsilon(eps.to_string()));
            }
            let row = vec![eps.clone() - one.clone(), -eps.clone()];
            build(&[eps.clone(), one - eps], &[row.clone(), row])
        }
        4 => {
            let half = q(1, 2);
            if eps <= BigRational::zero() || eps >= half {
                return Err(FixtureError::BadEpsilon(eps.to_string()));
            }
            let two_eps = eps.clone() + eps.clone();
            let row = vec![
                eps2.clone() - eps.clone(),
                -eps2,
                -eps.clone(),
                two_eps.clone() - one.clone(),
            ];
            build(&[eps.clone(), eps, one - two_eps], &[row.clone(), row.clone(), row])
        }
        5 => {
            let m = table5_chores(&eps)?;
            let mut first = vec![BigRational::zero(); m];
            first[0] = eps.clone() - one.clone();
            first[2] = -eps.clone();
            let mut second = vec![-eps2.clone(); m];
            second[0] = eps2 - eps.clone();
            second[1] = -eps.clone();
            build(&[eps.clone(), one - eps], &[first, second])
        }
        6 => egal_greedy_failure_family(&params.t, &params.c, params.n),
        other => Err(FixtureError::UnknownTable(other)),
    }
}

/// Closed-form shares and the shared row of the round-robin family before
/// renormalization: `s_i = n / (n+1)^(n-i+1)` and, for the k-th block of `n`
/// chores, value `-1 / (n+1)^(n-k+1)` (both 1-based).
pub fn round_robin_family_raw(n: usize) -> (Vec<BigRational>, Vec<BigRational>) {
    let base = BigInt::from(n + 1);
    let shares = (1..=n)
        .map(|i| BigRational::new(BigInt::from(n), num_traits::pow(base.clone(), n - i + 1)))
        .collect();
    let row = (1..=n)
        .flat_map(|k| {
            let v = -BigRational::new(BigInt::one(), num_traits::pow(base.clone(), n - k + 1));
            std::iter::repeat_n(v, n)
        })
        .collect();
    (shares, row)
}

/// Round-robin bad family: `n` agents with geometric shares, `n²` chores in
/// `n` value blocks, identical rows, renormalized exactly.
pub fn round_robin_family<T: Scalar>(n: usize) -> Result<Instance<T>, FixtureError> {
    if n < 2 {
        return Err(FixtureError::TooFewAgents { min: 2, got: n });
    }
    let (shares, row) = round_robin_family_raw(n);
    let share_sum = shares.iter().fold(BigRational::zero(), |a, s| a + s);
    let row_sum = -row.iter().fold(BigRational::zero(), |a, v| a + v);
    let shares: Vec<BigRational> = shares.into_iter().map(|s| s / share_sum.clone()).collect();
    let row: Vec<BigRational> = row.into_iter().map(|v| v / row_sum.clone()).collect();
    build(&shares, &vec![row; n])
}

/// The weighted-proportional partition of the round-robin family: block `i`
/// goes to agent `i`.
pub fn round_robin_family_partition(n: usize) -> Allocation {
    Allocation::new((0..n * n).map(|j| j / n).collect())
}

/// `k = floor(T * sqrt(2 / c))`, computed exactly as the largest `k` with
/// `k² <= 2T²/c`.
pub fn table6_k(t: &BigRational, c: &BigRational) -> u64 {
    let two = BigRational::from_integer(BigInt::from(2));
    isqrt_floor(&(two * t.clone() * t.clone() / c.clone()))
}

/// Greedy-on-heterogeneous-rows bad family.
///
/// Agent 0 has share `1/c` and values `-1/T` on chores `0..n-1` and `-1/c` on
/// the last chore. The other `n-1` agents have share `1/T` and value
/// `-j·c/T²` on chore `j` (1-based) for `j <= k`, 0 beyond. The parameters
/// must satisfy `T > c > 1`, `1/c + (n-1)/T = 1` and `1 <= k <= n-1`; rows are
/// then renormalized to -1.
pub fn egal_greedy_failure_family<T: Scalar>(
    t: &BigRational,
    c: &BigRational,
    n: usize,
) -> Result<Instance<T>, FixtureError> {
    let one = BigRational::one();
    if n < 2 {
        return Err(FixtureError::TooFewAgents { min: 2, got: n });
    }
    if !(t > c && *c > one) {
        return Err(FixtureError::ParameterInconsistent(format!(
            "need T > c > 1, got T = {t}, c = {c}"
        )));
    }
    let others = BigRational::from_integer(BigInt::from(n - 1));
    let identity = one.clone() / c.clone() + others / t.clone();
    if identity != one {
        return Err(FixtureError::ParameterInconsistent(format!(
            "1/c + (n-1)/T = {identity}, not 1"
        )));
    }
    let k = table6_k(t, c) as usize;
    if k == 0 || k > n - 1 {
        return Err(FixtureError::ParameterInconsistent(format!(
            "k = floor(T*sqrt(2/c)) = {k} must lie in 1..={}",
            n - 1
        )));
    }
    let mut shares = vec![one.clone() / c.clone()];
    shares.extend(std::iter::repeat_n(one.clone() / t.clone(), n - 1));
    let mut first = vec![-(one.clone() / t.clone()); n];
    first[n - 1] = -(one / c.clone());
    let t2 = t.clone() * t.clone();
    let mut tail: Vec<BigRational> = (1..=n)
        .map(|j| {
            if j <= k {
                -(BigRational::from_integer(BigInt::from(j)) * c.clone() / t2.clone())
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let total = -tail.iter().fold(BigRational::zero(), |a, v| a + v);
    for v in &mut tail {
        *v = v.clone() / total.clone();
    }
    let mut rows = vec![first];
    rows.extend(std::iter::repeat_n(tail, n - 1));
    build(&shares, &rows)
}

/// Agent 0's weighted-proportional partition of the failure family: she takes
/// the last chore, every other agent one of the remaining chores.
pub fn egal_greedy_failure_partition(n: usize) -> Allocation {
    let mut owner: Vec<usize> = (1..n).collect();
    owner.push(0);
    Allocation::new(owner)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomStyle {
    /// Independent positive weights per cell, each row scaled to -1.
    Normalized,
    /// Entries drawn from {0, -1}.
    Binary,
    /// One normalized row shared by every agent.
    Identical,
    /// Every chore worth `-1/m` to everyone.
    Uniform,
}

impl std::str::FromStr for RandomStyle {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "normalized" => Ok(Self::Normalized),
            "binary" => Ok(Self::Binary),
            "identical" => Ok(Self::Identical),
            "uniform" => Ok(Self::Uniform),
            other => Err(format!("unknown random style `{other}`")),
        }
    }
}

impl std::fmt::Display for RandomStyle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Normalized => "normalized",
            Self::Binary => "binary",
            Self::Identical => "identical",
            Self::Uniform => "uniform",
        })
    }
}

const SHARE_WEIGHT_MAX: u64 = 10;
const VALUE_WEIGHT_MAX: u64 = 20;

fn draw(rng: &mut ChaCha8Rng, max: u64) -> i64 {
    (rng.next_u64() % max + 1) as i64
}

fn normalized_row<T: Scalar>(rng: &mut ChaCha8Rng, m: usize) -> Vec<T> {
    let weights: Vec<i64> = (0..m).map(|_| draw(rng, VALUE_WEIGHT_MAX)).collect();
    let total: i64 = weights.iter().sum();
    weights.iter().map(|&w| T::ratio(-w, total)).collect()
}

/// Deterministic random instance. Shares are integer weights in `1..=10`
/// scaled to sum 1; values follow `style`.
pub fn random_instance<T: Scalar>(n: usize, m: usize, seed: u64, style: RandomStyle) -> Result<Instance<T>, FixtureError> {
    if n == 0 {
        return Err(FixtureError::TooFewAgents { min: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights: Vec<i64> = (0..n).map(|_| draw(&mut rng, SHARE_WEIGHT_MAX)).collect();
    let total: i64 = weights.iter().sum();
    let shares: Vec<T> = weights.iter().map(|&w| T::ratio(w, total)).collect();
    let values = match style {
        RandomStyle::Normalized => (0..n).map(|_| normalized_row(&mut rng, m)).collect(),
        RandomStyle::Binary => (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| if rng.next_u64() & 1 == 0 { T::zero() } else { -T::one() })
                    .collect()
            })
            .collect(),
        RandomStyle::Identical => vec![normalized_row(&mut rng, m); n],
        RandomStyle::Uniform => {
            let v = if m == 0 { T::zero() } else { T::ratio(-1, m as i64) };
            vec![vec![v; m]; n]
        }
    };
    debug_assert!(scalar::is_one(&scalar::sum(&shares)));
    Ok(Instance::new(shares, values)?)
}

/// A named, reproducible instance source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorSpec {
    Table { k: usize, params: FixtureParams },
    RoundRobin { n: usize },
    EgalFailure { t: BigRational, c: BigRational, n: usize },
    Random { n: usize, m: usize, seed: u64, style: RandomStyle },
}

impl GeneratorSpec {
    pub fn generate<T: Scalar>(&self) -> Result<Instance<T>, FixtureError> {
        match self {
            GeneratorSpec::Table { k, params } => paper_table(*k, params),
            GeneratorSpec::RoundRobin { n } => round_robin_family(*n),
            GeneratorSpec::EgalFailure { t, c, n } => egal_greedy_failure_family(t, c, *n),
            GeneratorSpec::Random { n, m, seed, style } => random_instance(*n, *m, *seed, *style),
        }
    }

    /// Stable identifier, also used to sort benchmark rows.
    pub fn id(&self) -> String {
        match self {
            GeneratorSpec::Table { k, params } => match k {
                3..=5 => format!("table{k}-eps{}", params.epsilon),
                6 => format!("table6-T{}-c{}-n{}", params.t, params.c, params.n),
                _ => format!("table{k}"),
            },
            GeneratorSpec::RoundRobin { n } => format!("round-robin-n{n:02}"),
            GeneratorSpec::EgalFailure { t, c, n } => format!("egal-failure-T{t}-c{c}-n{n}"),
            GeneratorSpec::Random { n, m, seed, style } => {
                format!("random-{style}-n{n}-m{m}-seed{seed:06}")
            }
        }
    }
}
