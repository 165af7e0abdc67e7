//! Instances, allocations and the per-agent fairness quantities built on them.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("value matrix has {rows} rows but there are {agents} shares")]
    RowCountMismatch { agents: usize, rows: usize },
    #[error("row {agent} has {len} entries, expected {expected}")]
    RaggedRow {
        agent: usize,
        len: usize,
        expected: usize,
    },
    #[error("agent {agent} values the whole chore set at 0; cannot normalize")]
    NormalizationImpossible { agent: usize },
    #[error("allocation assigns chore {chore} to agent {owner}, but there are only {agents} agents")]
    OwnerOutOfRange {
        chore: usize,
        owner: usize,
        agents: usize,
    },
    #[error("allocation covers {got} chores, instance has {expected}")]
    ChoreCountMismatch { got: usize, expected: usize },
    #[error("{0} violation(s): {1}")]
    Invalid(usize, String),
}

/// A broken instance invariant, as reported by [`Instance::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation<T> {
    NoAgents,
    ShareOutOfRange { agent: usize, share: T },
    SharesSum { sum: T },
    PositiveValue { agent: usize, chore: usize, value: T },
}

impl<T: Scalar> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoAgents => write!(f, "instance has no agents"),
            Violation::ShareOutOfRange { agent, share } => {
                write!(f, "share of agent {agent} is {share}, outside (0, 1]")
            }
            Violation::SharesSum { sum } => write!(f, "shares sum to {sum} ≠ 1"),
            Violation::PositiveValue { agent, chore, value } => {
                write!(f, "positive value at ({agent},{chore}): {value}")
            }
        }
    }
}

/// Agents with shares and a nonpositive value matrix `values[agent][chore]`.
///
/// Construction only checks the matrix shape; the share and sign
/// invariants are reported by [`Instance::validate`] so that callers can
/// inspect every violation at once.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Instance<T> {
    shares: Vec<T>,
    values: Vec<Vec<T>>,
    chores: usize,
}

impl<T: Scalar> Instance<T> {
    pub fn new(shares: Vec<T>, values: Vec<Vec<T>>) -> Result<Self, ModelError> {
        if shares.len() != values.len() {
            return Err(ModelError::RowCountMismatch {
                agents: shares.len(),
                rows: values.len(),
            });
        }
        let chores = values.first().map_or(0, Vec::len);
        if let Some((agent, row)) = values.iter().enumerate().find(|(_, r)| r.len() != chores) {
            return Err(ModelError::RaggedRow {
                agent,
                len: row.len(),
                expected: chores,
            });
        }
        Ok(Self {
            shares,
            values,
            chores,
        })
    }

    /// Builds an instance and rejects it unless [`validate`](Self::validate) is clean.
    pub fn validated(shares: Vec<T>, values: Vec<Vec<T>>) -> Result<Self, ModelError> {
        let inst = Self::new(shares, values)?;
        let violations = inst.validate();
        if violations.is_empty() {
            Ok(inst)
        } else {
            let text = violations
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join("; ");
            Err(ModelError::Invalid(violations.len(), text))
        }
    }

    /// Instance where every agent has the same valuation row.
    pub fn identical(shares: Vec<T>, row: Vec<T>) -> Result<Self, ModelError> {
        let values = vec![row; shares.len()];
        Self::new(shares, values)
    }

    pub fn agents(&self) -> usize {
        self.shares.len()
    }

    pub fn chores(&self) -> usize {
        self.chores
    }

    pub fn shares(&self) -> &[T] {
        &self.shares
    }

    pub fn share(&self, agent: usize) -> &T {
        &self.shares[agent]
    }

    pub fn values(&self) -> &[Vec<T>] {
        &self.values
    }

    pub fn row(&self, agent: usize) -> &[T] {
        &self.values[agent]
    }

    pub fn value(&self, agent: usize, chore: usize) -> &T {
        &self.values[agent][chore]
    }

    /// Every violated invariant, in a fixed order; empty iff the instance is valid.
    pub fn validate(&self) -> Vec<Violation<T>> {
        let mut out = Vec::new();
        if self.shares.is_empty() {
            out.push(Violation::NoAgents);
        }
        for (agent, share) in self.shares.iter().enumerate() {
            if !share.is_positive() || *share > T::one() {
                out.push(Violation::ShareOutOfRange {
                    agent,
                    share: share.clone(),
                });
            }
        }
        let total = scalar::sum(&self.shares);
        if !self.shares.is_empty() && !scalar::is_one(&total) {
            out.push(Violation::SharesSum { sum: total });
        }
        for (agent, row) in self.values.iter().enumerate() {
            for (chore, value) in row.iter().enumerate() {
                if value.is_positive() {
                    out.push(Violation::PositiveValue {
                        agent,
                        chore,
                        value: value.clone(),
                    });
                }
            }
        }
        out
    }

    /// `V_i(M)` for every agent.
    pub fn row_totals(&self) -> Vec<T> {
        self.values.iter().map(|r| scalar::sum(r)).collect()
    }

    pub fn is_normalized(&self) -> bool {
        self.row_totals().iter().all(|t| *t == -T::one())
    }

    /// Scales every row so that it sums to exactly `-1`.
    pub fn normalize(&self) -> Result<Self, ModelError> {
        let mut values = Vec::with_capacity(self.values.len());
        for (agent, row) in self.values.iter().enumerate() {
            let total = scalar::sum(row);
            if total.is_zero() {
                return Err(ModelError::NormalizationImpossible { agent });
            }
            let scale = -total;
            values.push(row.iter().map(|v| v.clone() / scale.clone()).collect());
        }
        Ok(Self {
            shares: self.shares.clone(),
            values,
            chores: self.chores,
        })
    }

    /// True when every agent has the same valuation row.
    pub fn has_identical_rows(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    /// `V_i(S)`.
    pub fn bundle_value(&self, agent: usize, bundle: &[usize]) -> T {
        bundle
            .iter()
            .fold(T::zero(), |acc, &j| acc + self.values[agent][j].clone())
    }

    /// `W_i(X) = min_k V_i(X_k) / s_k`: how badly `agent` rates the allocation
    /// when every bundle is compared per unit of its receiver's share.
    pub fn unfairness_degree(&self, agent: usize, alloc: &Allocation) -> T {
        let sums = alloc.bundle_sums(self.row(agent), self.agents());
        weighted_min(&sums, &self.shares)
    }

    /// `V_i(X_i)` for every agent.
    pub fn own_values(&self, alloc: &Allocation) -> Vec<T> {
        let mut out = vec![T::zero(); self.agents()];
        for (chore, &owner) in alloc.owner.iter().enumerate() {
            out[owner] = out[owner].clone() + self.values[owner][chore].clone();
        }
        out
    }

    /// Per-agent comparison of the allocation against reference values.
    pub fn fairness_report(&self, alloc: &Allocation, refs: &[T]) -> FairnessReport<T> {
        assert_eq!(refs.len(), self.agents(), "one reference per agent");
        let own = self.own_values(alloc);
        let agents = own
            .into_iter()
            .zip(refs)
            .map(|(value, reference)| AgentFairness::new(value, reference.clone()))
            .collect();
        FairnessReport { agents }
    }
}

/// `min_k sums[k] / shares[k]`; zero when there are no agents.
pub(crate) fn weighted_min<T: Scalar>(sums: &[T], shares: &[T]) -> T {
    sums.iter()
        .zip(shares)
        .map(|(v, s)| v.clone() / s.clone())
        .min()
        .unwrap_or_else(T::zero)
}

/// An assignment of every chore to exactly one agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Allocation {
    pub owner: Vec<usize>,
}

impl Allocation {
    pub fn new(owner: Vec<usize>) -> Self {
        Self { owner }
    }

    pub fn empty() -> Self {
        Self { owner: Vec::new() }
    }

    /// Everything to one agent.
    pub fn all_to(agent: usize, chores: usize) -> Self {
        Self {
            owner: vec![agent; chores],
        }
    }

    /// Builds the owner vector from explicit bundles; `None` unless the
    /// bundles partition `0..chores`.
    pub fn from_bundles(bundles: &[Vec<usize>], chores: usize) -> Option<Self> {
        let mut owner = vec![usize::MAX; chores];
        for (agent, bundle) in bundles.iter().enumerate() {
            for &j in bundle {
                if j >= chores || owner[j] != usize::MAX {
                    return None;
                }
                owner[j] = agent;
            }
        }
        if owner.contains(&usize::MAX) {
            return None;
        }
        Some(Self { owner })
    }

    pub fn chores(&self) -> usize {
        self.owner.len()
    }

    /// `X_1, ..., X_n`, each sorted ascending.
    pub fn bundles(&self, agents: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); agents];
        for (chore, &owner) in self.owner.iter().enumerate() {
            out[owner].push(chore);
        }
        out
    }

    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        self.owner
            .iter()
            .enumerate()
            .filter(|(_, &o)| o == agent)
            .map(|(j, _)| j)
            .collect()
    }

    /// Sum of `row` over each bundle.
    pub fn bundle_sums<T: Scalar>(&self, row: &[T], agents: usize) -> Vec<T> {
        let mut out = vec![T::zero(); agents];
        for (chore, &owner) in self.owner.iter().enumerate() {
            out[owner] = out[owner].clone() + row[chore].clone();
        }
        out
    }

    pub fn check<T: Scalar>(&self, inst: &Instance<T>) -> Result<(), ModelError> {
        if self.owner.len() != inst.chores() {
            return Err(ModelError::ChoreCountMismatch {
                got: self.owner.len(),
                expected: inst.chores(),
            });
        }
        if let Some((chore, &owner)) = self
            .owner
            .iter()
            .enumerate()
            .find(|(_, &o)| o >= inst.agents())
        {
            return Err(ModelError::OwnerOutOfRange {
                chore,
                owner,
                agents: inst.agents(),
            });
        }
        Ok(())
    }
}

/// How far an agent's bundle is from her reference value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AchievedRatio<T> {
    /// `bundle / reference` for a negative reference.
    Finite(T),
    /// Reference is 0 and the bundle is worth 0: satisfied at every α.
    ZeroSatisfied,
    /// Reference is 0 but the bundle is negative: no α satisfies the agent.
    ZeroViolated,
}

impl<T: Scalar> AchievedRatio<T> {
    fn rank(&self) -> u8 {
        match self {
            AchievedRatio::ZeroSatisfied => 0,
            AchievedRatio::Finite(_) => 1,
            AchievedRatio::ZeroViolated => 2,
        }
    }

    /// True when the agent is satisfied at approximation factor `alpha`.
    pub fn within(&self, alpha: &T) -> bool {
        match self {
            AchievedRatio::Finite(r) => r <= alpha,
            AchievedRatio::ZeroSatisfied => true,
            AchievedRatio::ZeroViolated => false,
        }
    }

    pub fn finite(&self) -> Option<&T> {
        match self {
            AchievedRatio::Finite(r) => Some(r),
            _ => None,
        }
    }
}

/// Orders from best (satisfied at any α) to worst (unsatisfiable).
impl<T: Scalar> Ord for AchievedRatio<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (AchievedRatio::Finite(a), AchievedRatio::Finite(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl<T: Scalar> PartialOrd for AchievedRatio<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> fmt::Display for AchievedRatio<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AchievedRatio::Finite(r) => write!(f, "{r}"),
            AchievedRatio::ZeroSatisfied => f.write_str("satisfied"),
            AchievedRatio::ZeroViolated => f.write_str("unbounded"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentFairness<T> {
    pub bundle_value: T,
    pub reference: T,
    pub ratio: AchievedRatio<T>,
}

impl<T: Scalar> AgentFairness<T> {
    pub fn new(bundle_value: T, reference: T) -> Self {
        let ratio = if reference.is_negative() {
            AchievedRatio::Finite(bundle_value.clone() / reference.clone())
        } else if bundle_value.is_zero() {
            AchievedRatio::ZeroSatisfied
        } else {
            AchievedRatio::ZeroViolated
        };
        Self {
            bundle_value,
            reference,
            ratio,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FairnessReport<T> {
    pub agents: Vec<AgentFairness<T>>,
}

impl<T: Scalar> FairnessReport<T> {
    /// Largest per-agent ratio; `ZeroSatisfied` when nobody has a negative reference.
    pub fn worst(&self) -> AchievedRatio<T> {
        self.agents
            .iter()
            .map(|a| a.ratio.clone())
            .max()
            .unwrap_or(AchievedRatio::ZeroSatisfied)
    }

    pub fn satisfied_at(&self, alpha: &T) -> bool {
        self.agents.iter().all(|a| a.ratio.within(alpha))
    }
}
