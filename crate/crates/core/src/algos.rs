//! Polynomial-time allocation algorithms.
//!
//! Guaranteed algorithms: [`naive`] (n-WMMS), [`egal_greedy`] (2-WMMS on
//! identical valuations, exact on uniform ones), [`div_cho`] (3/2-WMMS for
//! two agents) and [`binary_wmms`] (exact WMMS on {0,-1} valuations).
//!
//! [`round_robin`], [`multiplicative_greedy`], [`additive_greedy`] and
//! [`egal_greedy_general`] carry no guarantee; they are kept to reproduce the
//! instances on which they fail.
//!
//! Every algorithm is deterministic and has a `*_traced` form that records one
//! event per assigned chore.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{weighted_min, Allocation, Instance, ModelError};
use crate::oracle;
use crate::scalar::Scalar;

/// Largest chore count for which [`div_cho`] enumerates subsets by default.
pub const DEFAULT_SUBSET_GUARD: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgoError {
    #[error("instance has no agents")]
    NoAgents,
    #[error("algorithm needs exactly {expected} agents, instance has {got}")]
    WrongAgentCount { expected: usize, got: usize },
    #[error("{chores} chores exceed the subset-enumeration guard of {guard}")]
    SubsetBudgetExceeded { chores: usize, guard: usize },
    #[error(transparent)]
    Normalization(#[from] ModelError),
    #[error("NotBinary: value at ({agent},{chore}) is neither 0 nor -1")]
    NotBinary { agent: usize, chore: usize },
    #[error("picking order must be a permutation of 0..{agents}")]
    InvalidOrder { agents: usize },
    #[error("agent {agent} does not exist")]
    AgentOutOfRange { agent: usize },
}

/// One assignment decision.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent<T> {
    pub step: usize,
    pub chore: usize,
    pub agent: usize,
    /// The value the algorithm compared when it made the choice.
    pub quantity: T,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgoTrace<T> {
    pub chores: usize,
    pub events: Vec<TraceEvent<T>>,
}

impl<T: Scalar> AlgoTrace<T> {
    fn new(chores: usize) -> Self {
        Self {
            chores,
            events: Vec::with_capacity(chores),
        }
    }

    fn push(&mut self, chore: usize, agent: usize, quantity: T) {
        let step = self.events.len();
        self.events.push(TraceEvent {
            step,
            chore,
            agent,
            quantity,
        });
    }

    /// Rebuilds the allocation from the events; `None` if some chore is
    /// missing or assigned twice.
    pub fn replay(&self) -> Option<Allocation> {
        let mut owner = vec![None; self.chores];
        for e in &self.events {
            let slot = owner.get_mut(e.chore)?;
            if slot.is_some() {
                return None;
            }
            *slot = Some(e.agent);
        }
        owner.into_iter().collect::<Option<Vec<_>>>().map(Allocation::new)
    }

    /// `(chore, agent)` decisions without the compared quantities.
    pub fn decisions(&self) -> Vec<(usize, usize)> {
        self.events.iter().map(|e| (e.chore, e.agent)).collect()
    }
}

fn require_agents<T: Scalar>(inst: &Instance<T>) -> Result<(), AlgoError> {
    if inst.agents() == 0 {
        Err(AlgoError::NoAgents)
    } else {
        Ok(())
    }
}

/// Index of the largest share, lowest index on ties.
fn max_share_agent<T: Scalar>(shares: &[T]) -> usize {
    let mut best = 0;
    for (i, s) in shares.iter().enumerate().skip(1) {
        if *s > shares[best] {
            best = i;
        }
    }
    best
}

/// Picks the index maximizing `key`, breaking ties by `tie` then lowest index.
fn argmax_by<K: Ord, S: Ord>(count: usize, key: impl Fn(usize) -> K, tie: impl Fn(usize) -> S) -> usize {
    let mut best = 0;
    let mut best_key = key(0);
    for i in 1..count {
        let k = key(i);
        let better = match k.cmp(&best_key) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => tie(i) > tie(best),
        };
        if better {
            best = i;
            best_key = k;
        }
    }
    best
}

/// Most preferred remaining chore of `agent`: highest value, lowest index on ties.
fn favourite<T: Scalar>(row: &[T], taken: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, v) in row.iter().enumerate() {
        if taken[j] {
            continue;
        }
        if best.is_none_or(|b| *v > row[b]) {
            best = Some(j);
        }
    }
    best
}

/// All chores to the largest-share agent (lowest index on ties).
pub fn naive<T: Scalar>(inst: &Instance<T>) -> Result<Allocation, AlgoError> {
    naive_traced(inst).map(|(a, _)| a)
}

pub fn naive_traced<T: Scalar>(inst: &Instance<T>) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    let agent = max_share_agent(inst.shares());
    let mut trace = AlgoTrace::new(inst.chores());
    for j in 0..inst.chores() {
        trace.push(j, agent, inst.share(agent).clone());
    }
    Ok((Allocation::all_to(agent, inst.chores()), trace))
}

/// Greedy for a single shared valuation row.
///
/// Chores are taken from most to least negative (ties by index); each goes to
/// an agent maximizing `V(X_i ∪ {j}) / s_i`, ties to the larger share, then
/// the lower index. This is list scheduling of the longest job first on
/// machines with speeds `s_i`.
pub fn egal_greedy<T: Scalar>(shares: &[T], row: &[T]) -> Allocation {
    egal_greedy_traced(shares, row).0
}

pub fn egal_greedy_traced<T: Scalar>(shares: &[T], row: &[T]) -> (Allocation, AlgoTrace<T>) {
    assert!(!shares.is_empty(), "egal_greedy needs at least one agent");
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].cmp(&row[b]));
    let mut sums = vec![T::zero(); shares.len()];
    let mut owner = vec![0; row.len()];
    let mut trace = AlgoTrace::new(row.len());
    for j in order {
        let key = |i: usize| (sums[i].clone() + row[j].clone()) / shares[i].clone();
        let agent = argmax_by(shares.len(), key, |i| shares[i].clone());
        let quantity = key(agent);
        sums[agent] = sums[agent].clone() + row[j].clone();
        owner[j] = agent;
        trace.push(j, agent, quantity);
    }
    (Allocation::new(owner), trace)
}

/// [`egal_greedy`] on the instance, with `agent`'s row as the shared valuation.
pub fn egal_greedy_with_row<T: Scalar>(
    inst: &Instance<T>,
    agent: usize,
) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    if agent >= inst.agents() {
        return Err(AlgoError::AgentOutOfRange { agent });
    }
    Ok(egal_greedy_traced(inst.shares(), inst.row(agent)))
}

/// The greedy applied naively to heterogeneous rows: chores in index order,
/// each to an agent maximizing her own `V_i(X_i ∪ {j}) / s_i`. No guarantee.
pub fn egal_greedy_general<T: Scalar>(inst: &Instance<T>) -> Result<Allocation, AlgoError> {
    egal_greedy_general_traced(inst).map(|(a, _)| a)
}

pub fn egal_greedy_general_traced<T: Scalar>(
    inst: &Instance<T>,
) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    let n = inst.agents();
    let mut own = vec![T::zero(); n];
    let mut owner = vec![0; inst.chores()];
    let mut trace = AlgoTrace::new(inst.chores());
    for (j, slot) in owner.iter_mut().enumerate() {
        let key = |i: usize| (own[i].clone() + inst.value(i, j).clone()) / inst.share(i).clone();
        let agent = argmax_by(n, key, |i| inst.share(i).clone());
        let quantity = key(agent);
        own[agent] = own[agent].clone() + inst.value(agent, j).clone();
        *slot = agent;
        trace.push(j, agent, quantity);
    }
    Ok((Allocation::new(owner), trace))
}

/// Approximate WMMS values: for each agent, the egalitarian objective
/// `s_i * min_k V_i(X^i_k) / s_k` of [`egal_greedy`] run on her row.
///
/// Always lies in `[2 * WMMS_i, WMMS_i]`.
pub fn wmms_prime<T: Scalar>(inst: &Instance<T>) -> Vec<T> {
    (0..inst.agents())
        .map(|i| {
            let alloc = egal_greedy(inst.shares(), inst.row(i));
            let sums = alloc.bundle_sums(inst.row(i), inst.agents());
            inst.share(i).clone() * weighted_min(&sums, inst.shares())
        })
        .collect()
}

/// `V_i(X^i_i)`: agent i's own bundle in the greedy run on her row. Unlike
/// [`wmms_prime`] this is not bounded above by `WMMS_i`; it is kept for
/// diagnostics.
pub fn wmms_prime_own_bundle<T: Scalar>(inst: &Instance<T>) -> Vec<T> {
    (0..inst.agents())
        .map(|i| {
            let alloc = egal_greedy(inst.shares(), inst.row(i));
            inst.bundle_value(i, &alloc.bundle(i))
        })
        .collect()
}

/// Divide and choose for two agents with a share threshold.
///
/// With `s_small <= s_big`: if `s_small <= 1/3` the big-share agent takes
/// everything. Otherwise the big-share agent splits the chores by an exact
/// P-i partition (subset enumeration, at most `subset_guard` chores) and the
/// small-share agent takes the bundle she prefers, keeping the one meant for
/// her on ties. Both agents end at `3/2 * WMMS_i` or better.
pub fn div_cho<T: Scalar>(inst: &Instance<T>, subset_guard: usize) -> Result<Allocation, AlgoError> {
    div_cho_traced(inst, subset_guard).map(|(a, _)| a)
}

pub fn div_cho_traced<T: Scalar>(
    inst: &Instance<T>,
    subset_guard: usize,
) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    if inst.agents() != 2 {
        return Err(AlgoError::WrongAgentCount {
            expected: 2,
            got: inst.agents(),
        });
    }
    let m = inst.chores();
    let mut trace = AlgoTrace::new(m);
    if m == 0 {
        return Ok((Allocation::empty(), trace));
    }
    if m > subset_guard {
        return Err(AlgoError::SubsetBudgetExceeded {
            chores: m,
            guard: subset_guard,
        });
    }
    // an agent indifferent to every chore can take them all at no cost
    if let Some(idle) = (0..2).find(|&i| inst.row(i).iter().all(|v| v.is_zero())) {
        for j in 0..m {
            trace.push(j, idle, T::zero());
        }
        return Ok((Allocation::all_to(idle, m), trace));
    }
    let inst = inst.normalize()?;
    let (chooser, divider) = if inst.share(0) <= inst.share(1) {
        (0, 1)
    } else {
        (1, 0)
    };
    if *inst.share(chooser) <= T::ratio(1, 3) {
        for j in 0..m {
            trace.push(j, divider, inst.share(chooser).clone());
        }
        return Ok((Allocation::all_to(divider, m), trace));
    }
    let budget = 1u64 << subset_guard.min(63);
    let (_, split) = oracle::best_partition(inst.row(divider), inst.shares(), budget)
        .map_err(|_| AlgoError::SubsetBudgetExceeded {
            chores: m,
            guard: subset_guard,
        })?;
    let mine = split.bundle(chooser);
    let theirs = split.bundle(divider);
    let keep = inst.bundle_value(chooser, &mine);
    let swap = inst.bundle_value(chooser, &theirs);
    let (alloc, chosen_value) = if swap > keep {
        let flipped = split
            .owner
            .iter()
            .map(|&o| if o == chooser { divider } else { chooser })
            .collect();
        (Allocation::new(flipped), swap)
    } else {
        (split, keep)
    };
    for (j, &agent) in alloc.owner.iter().enumerate() {
        trace.push(j, agent, chosen_value.clone());
    }
    Ok((alloc, trace))
}

fn check_binary<T: Scalar>(inst: &Instance<T>) -> Result<(), AlgoError> {
    let minus_one = -T::one();
    for i in 0..inst.agents() {
        for (j, v) in inst.row(i).iter().enumerate() {
            if !v.is_zero() && *v != minus_one {
                return Err(AlgoError::NotBinary { agent: i, chore: j });
            }
        }
    }
    Ok(())
}

/// Exact WMMS for `{0, -1}` valuations (no normalization needed).
///
/// A chore that someone values at 0 goes to the lowest-index such agent. The
/// rest are worth -1 to everybody and are split by [`egal_greedy`], which is
/// exact on uniform rows.
pub fn binary_wmms<T: Scalar>(inst: &Instance<T>) -> Result<Allocation, AlgoError> {
    binary_wmms_traced(inst).map(|(a, _)| a)
}

pub fn binary_wmms_traced<T: Scalar>(inst: &Instance<T>) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    check_binary(inst)?;
    let m = inst.chores();
    let mut owner = vec![0; m];
    let mut trace = AlgoTrace::new(m);
    let mut uniform = Vec::new();
    for (j, slot) in owner.iter_mut().enumerate() {
        match (0..inst.agents()).find(|&i| inst.value(i, j).is_zero()) {
            Some(i) => {
                *slot = i;
                trace.push(j, i, T::zero());
            }
            None => uniform.push(j),
        }
    }
    let row = vec![-T::one(); uniform.len()];
    let (sub, sub_trace) = egal_greedy_traced(inst.shares(), &row);
    for e in sub_trace.events {
        let chore = uniform[e.chore];
        owner[chore] = sub.owner[e.chore];
        trace.push(chore, e.agent, e.quantity);
    }
    Ok((Allocation::new(owner), trace))
}

/// Agents pick in the fixed rotation `order`, each taking her most preferred
/// remaining chore. Ignores shares.
pub fn round_robin<T: Scalar>(inst: &Instance<T>, order: &[usize]) -> Result<Allocation, AlgoError> {
    round_robin_traced(inst, order).map(|(a, _)| a)
}

pub fn round_robin_traced<T: Scalar>(
    inst: &Instance<T>,
    order: &[usize],
) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    let n = inst.agents();
    let mut seen = vec![false; n];
    if order.len() != n || order.iter().any(|&a| a >= n || std::mem::replace(&mut seen[a], true)) {
        return Err(AlgoError::InvalidOrder { agents: n });
    }
    let m = inst.chores();
    let mut taken = vec![false; m];
    let mut owner = vec![0; m];
    let mut trace = AlgoTrace::new(m);
    for turn in 0..m {
        let agent = order[turn % n];
        let j = favourite(inst.row(agent), &taken).expect("a chore remains");
        taken[j] = true;
        owner[j] = agent;
        trace.push(j, agent, inst.value(agent, j).clone());
    }
    Ok((Allocation::new(owner), trace))
}

/// Which share wins a tie in [`multiplicative_greedy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    LargestShare,
    SmallestShare,
}

/// The least burdened agent relative to her share, i.e. the one with the
/// largest `V_i(X_i) / s_i`, picks her most preferred remaining chore. Ties
/// go by `tie`, then lowest index.
pub fn multiplicative_greedy<T: Scalar>(inst: &Instance<T>, tie: TieRule) -> Result<Allocation, AlgoError> {
    multiplicative_greedy_traced(inst, tie).map(|(a, _)| a)
}

pub fn multiplicative_greedy_traced<T: Scalar>(
    inst: &Instance<T>,
    tie: TieRule,
) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    let n = inst.agents();
    let m = inst.chores();
    let mut own = vec![T::zero(); n];
    let mut taken = vec![false; m];
    let mut owner = vec![0; m];
    let mut trace = AlgoTrace::new(m);
    for _ in 0..m {
        let key = |i: usize| own[i].clone() / inst.share(i).clone();
        let agent = match tie {
            TieRule::LargestShare => argmax_by(n, key, |i| inst.share(i).clone()),
            TieRule::SmallestShare => argmax_by(n, key, |i| -inst.share(i).clone()),
        };
        let quantity = key(agent);
        let j = favourite(inst.row(agent), &taken).expect("a chore remains");
        taken[j] = true;
        owner[j] = agent;
        own[agent] = own[agent].clone() + inst.value(agent, j).clone();
        trace.push(j, agent, quantity);
    }
    Ok((Allocation::new(owner), trace))
}

/// The agent with the largest `s_i + V_i(X_i)` picks her most preferred
/// remaining chore; ties to the larger share, then lowest index.
pub fn additive_greedy<T: Scalar>(inst: &Instance<T>) -> Result<Allocation, AlgoError> {
    additive_greedy_traced(inst).map(|(a, _)| a)
}

pub fn additive_greedy_traced<T: Scalar>(inst: &Instance<T>) -> Result<(Allocation, AlgoTrace<T>), AlgoError> {
    require_agents(inst)?;
    let n = inst.agents();
    let m = inst.chores();
    let mut own = vec![T::zero(); n];
    let mut taken = vec![false; m];
    let mut owner = vec![0; m];
    let mut trace = AlgoTrace::new(m);
    for _ in 0..m {
        let key = |i: usize| inst.share(i).clone() + own[i].clone();
        let agent = argmax_by(n, key, |i| inst.share(i).clone());
        let quantity = key(agent);
        let j = favourite(inst.row(agent), &taken).expect("a chore remains");
        taken[j] = true;
        owner[j] = agent;
        own[agent] = own[agent].clone() + inst.value(agent, j).clone();
        trace.push(j, agent, quantity);
    }
    Ok((Allocation::new(owner), trace))
}

/// True when every row is `{0, -1}`-valued.
pub fn is_binary<T: Scalar>(inst: &Instance<T>) -> bool {
    check_binary(inst).is_ok()
}

/// True when all agents share one row whose entries are all equal and negative.
pub fn is_uniform<T: Scalar>(inst: &Instance<T>) -> bool {
    inst.has_identical_rows()
        && inst
            .values()
            .first()
            .is_some_and(|row| row.windows(2).all(|w| w[0] == w[1]) && row.iter().all(|v| v.is_negative()))
}
