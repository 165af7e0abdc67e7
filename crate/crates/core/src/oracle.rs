//! Exhaustive ground truth.
//!
//! Every quantity here is computed by walking all `n^m` owner vectors in
//! lexicographic order (chore 0 is the most significant digit). Ties keep the
//! first vector encountered, so witnesses are deterministic. The walk is
//! guarded by a budget on `n^m`.

use std::collections::HashMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::model::{weighted_min, Allocation, Instance};
use crate::scalar::Scalar;

/// Default cap on the number of owner vectors an oracle call may visit.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("enumeration needs {agents}^{chores} = {required} owner vectors, budget is {budget}")]
    BudgetExceeded {
        agents: usize,
        chores: usize,
        required: BigUint,
        budget: u64,
    },
    #[error("no allocation gives every zero-WMMS agent a zero-value bundle")]
    NoFeasibleAllocation,
    #[error("chores cannot be allocated without agents")]
    NoAgents,
}

/// Rejects the walk when `agents^chores` exceeds `budget`.
pub fn check_budget(agents: usize, chores: usize, budget: u64) -> Result<(), OracleError> {
    let required = num_traits::pow(BigUint::from(agents), chores);
    if required > BigUint::from(budget) {
        return Err(OracleError::BudgetExceeded {
            agents,
            chores,
            required,
            budget,
        });
    }
    Ok(())
}

/// Walks every owner vector, calling `moved(state, chore, from, to)` for each
/// digit change before `visit(state, owner)`. Starts from the all-zero vector.
fn walk<S>(
    agents: usize,
    chores: usize,
    state: &mut S,
    mut moved: impl FnMut(&mut S, usize, usize, usize),
    mut visit: impl FnMut(&mut S, &[usize]),
) {
    if agents == 0 {
        return;
    }
    let mut owner = vec![0usize; chores];
    loop {
        visit(state, &owner);
        let mut j = chores;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            let from = owner[j];
            if from + 1 < agents {
                owner[j] = from + 1;
                moved(state, j, from, from + 1);
                break;
            }
            owner[j] = 0;
            moved(state, j, from, 0);
        }
    }
}

/// `max_X min_k row(X_k) / shares[k]` and the first partition attaining it.
pub fn best_partition<T: Scalar>(
    row: &[T],
    shares: &[T],
    budget: u64,
) -> Result<(T, Allocation), OracleError> {
    let agents = shares.len();
    let chores = row.len();
    if agents == 0 {
        return Err(OracleError::NoAgents);
    }
    check_budget(agents, chores, budget)?;
    let inv: Vec<T> = shares.iter().map(|s| T::one() / s.clone()).collect();
    let mut sums = vec![T::zero(); agents];
    sums[0] = row.iter().fold(T::zero(), |a, v| a + v.clone());
    let mut best: Option<(T, Vec<usize>)> = None;
    walk(
        agents,
        chores,
        &mut sums,
        |sums, j, from, to| {
            sums[from] = sums[from].clone() - row[j].clone();
            sums[to] = sums[to].clone() + row[j].clone();
        },
        |sums, owner| {
            let w = sums
                .iter()
                .zip(&inv)
                .map(|(s, i)| s.clone() * i.clone())
                .min()
                .expect("at least one agent");
            if best.as_ref().is_none_or(|(b, _)| w > *b) {
                best = Some((w, owner.to_vec()));
            }
        },
    );
    let (w, owner) = best.expect("the walk visits at least one vector");
    Ok((w, Allocation::new(owner)))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult<T> {
    /// `WMMS_i = s_i * W_i`.
    pub wmms: Vec<T>,
    /// `W_i`, the best achievable unfairness degree.
    pub w: Vec<T>,
    /// A P-i partition per agent.
    pub witnesses: Vec<Allocation>,
}

/// Exact WMMS values by enumeration. Agents with identical rows share one walk.
pub fn exact_wmms<T: Scalar>(inst: &Instance<T>, budget: u64) -> Result<OracleResult<T>, OracleError> {
    check_budget(inst.agents(), inst.chores(), budget)?;
    let mut cache: HashMap<&[T], (T, Allocation)> = HashMap::new();
    let mut out = OracleResult {
        wmms: Vec::with_capacity(inst.agents()),
        w: Vec::with_capacity(inst.agents()),
        witnesses: Vec::with_capacity(inst.agents()),
    };
    for i in 0..inst.agents() {
        let row = inst.row(i);
        let (w, witness) = match cache.get(row) {
            Some(hit) => hit.clone(),
            None => {
                let found = best_partition(row, inst.shares(), budget)?;
                cache.insert(row, found.clone());
                found
            }
        };
        out.wmms.push(inst.share(i).clone() * w.clone());
        out.w.push(w);
        out.witnesses.push(witness);
    }
    Ok(out)
}

/// `F_i = min_X max_k D(X_k) / s_k` with disutility `D = -V`, computed by its
/// own walk so that it cross-checks [`exact_wmms`] (`F_i = -W_i`).
pub fn exact_makespan_f<T: Scalar>(inst: &Instance<T>, agent: usize, budget: u64) -> Result<T, OracleError> {
    let agents = inst.agents();
    let chores = inst.chores();
    check_budget(agents, chores, budget)?;
    let load: Vec<T> = inst.row(agent).iter().map(|v| -v.clone()).collect();
    let mut loads = vec![T::zero(); agents];
    loads[0] = load.iter().fold(T::zero(), |a, v| a + v.clone());
    let mut best: Option<T> = None;
    walk(
        agents,
        chores,
        &mut loads,
        |loads, j, from, to| {
            loads[from] = loads[from].clone() - load[j].clone();
            loads[to] = loads[to].clone() + load[j].clone();
        },
        |loads, _| {
            let makespan = loads
                .iter()
                .zip(inst.shares())
                .map(|(l, s)| l.clone() / s.clone())
                .max()
                .expect("at least one agent");
            if best.as_ref().is_none_or(|b| makespan < *b) {
                best = Some(makespan);
            }
        },
    );
    Ok(best.unwrap_or_else(T::zero))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OwmmsResult<T> {
    /// Smallest `α >= 1` at which some allocation gives every agent `α * WMMS_i`.
    pub alpha_star: T,
    pub witness: Allocation,
}

/// `α* = max(1, min_X max_{i: WMMS_i < 0} V_i(X_i) / WMMS_i)`.
///
/// Agents with `WMMS_i = 0` impose no ratio, but an allocation is only
/// admissible if it gives each of them a zero-value bundle.
pub fn exact_owmms<T: Scalar>(
    inst: &Instance<T>,
    wmms: &[T],
    budget: u64,
) -> Result<OwmmsResult<T>, OracleError> {
    let agents = inst.agents();
    let chores = inst.chores();
    assert_eq!(wmms.len(), agents, "one WMMS value per agent");
    if agents == 0 {
        if chores > 0 {
            return Err(OracleError::NoAgents);
        }
        return Ok(OwmmsResult {
            alpha_star: T::one(),
            witness: Allocation::empty(),
        });
    }
    check_budget(agents, chores, budget)?;
    let inv: Vec<Option<T>> = wmms
        .iter()
        .map(|w| w.is_negative().then(|| T::one() / w.clone()))
        .collect();
    let mut own = vec![T::zero(); agents];
    own[0] = inst.row(0).iter().fold(T::zero(), |a, v| a + v.clone());
    let mut best: Option<(T, Vec<usize>)> = None;
    walk(
        agents,
        chores,
        &mut own,
        |own, j, from, to| {
            own[from] = own[from].clone() - inst.value(from, j).clone();
            own[to] = own[to].clone() + inst.value(to, j).clone();
        },
        |own, owner| {
            let mut worst = T::zero();
            for (value, inv) in own.iter().zip(&inv) {
                match inv {
                    Some(inv) => {
                        let r = value.clone() * inv.clone();
                        if r > worst {
                            worst = r;
                        }
                    }
                    None if value.is_negative() => return,
                    None => {}
                }
            }
            if best.as_ref().is_none_or(|(b, _)| worst < *b) {
                best = Some((worst, owner.to_vec()));
            }
        },
    );
    let (ratio, owner) = best.ok_or(OracleError::NoFeasibleAllocation)?;
    Ok(OwmmsResult {
        alpha_star: if ratio < T::one() { T::one() } else { ratio },
        witness: Allocation::new(owner),
    })
}

/// True iff `V_i(X_i) >= alpha * wmms_i` for every agent.
pub fn verify_alpha<T: Scalar>(inst: &Instance<T>, alloc: &Allocation, wmms: &[T], alpha: &T) -> bool {
    inst.own_values(alloc)
        .iter()
        .zip(wmms)
        .all(|(v, w)| *v >= alpha.clone() * w.clone())
}

/// Certifies `WMMS_i` from a single partition.
///
/// For every partition, `sum_k s_k * (V_i(X_k) / s_k) = V_i(M)` is a weighted
/// mean of the per-bundle ratios, so `W_i <= V_i(M)`. A partition reaching
/// that bound is therefore a P-i partition and `WMMS_i = s_i * V_i(M)`.
/// Returns `None` when the partition falls short of the bound.
pub fn certify_wmms<T: Scalar>(inst: &Instance<T>, agent: usize, partition: &Allocation) -> Option<T> {
    let total = inst.row(agent).iter().fold(T::zero(), |a, v| a + v.clone());
    let sums = partition.bundle_sums(inst.row(agent), inst.agents());
    let w = weighted_min(&sums, inst.shares());
    (w == total).then(|| inst.share(agent).clone() * total)
}

/// Every owner vector in walk order. Test helper for small cases.
pub fn all_allocations(agents: usize, chores: usize, budget: u64) -> Result<Vec<Allocation>, OracleError> {
    check_budget(agents, chores, budget)?;
    let mut out = Vec::new();
    walk(agents, chores, &mut out, |_, _, _, _| {}, |out, owner| {
        out.push(Allocation::new(owner.to_vec()))
    });
    Ok(out)
}

impl<T: Scalar> OracleResult<T> {
    /// Weighted-mean bound: on a normalized instance every `W_i <= -1`.
    pub fn respects_weighted_mean_bound(&self) -> bool {
        self.w.iter().all(|w| *w <= -T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::paper_table;
    use crate::Ratio;

    fn q(n: i64, d: i64) -> Ratio {
        Ratio::ratio(n, d)
    }

    #[test]
    fn walk_is_lexicographic() {
        let all = all_allocations(2, 3, 100).unwrap();
        let owners: Vec<Vec<usize>> = all.into_iter().map(|a| a.owner).collect();
        assert_eq!(owners.len(), 8);
        assert_eq!(owners[0], vec![0, 0, 0]);
        assert_eq!(owners[1], vec![0, 0, 1]);
        assert_eq!(owners[7], vec![1, 1, 1]);
        let mut sorted = owners.clone();
        sorted.sort();
        assert_eq!(owners, sorted);
        assert_eq!(all_allocations(3, 0, 1).unwrap().len(), 1);
    }

    #[test]
    fn table1_wmms() {
        let t1 = paper_table::<Ratio>(1, &Default::default()).unwrap();
        let r = exact_wmms(&t1, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.wmms, vec![q(-1, 4), q(-3, 4)]);
        assert_eq!(r.w, vec![q(-1, 1), q(-1, 1)]);
        for i in 0..2 {
            assert_eq!(t1.unfairness_degree(i, &r.witnesses[i]), r.w[i]);
        }
        assert!(r.respects_weighted_mean_bound());
        assert_eq!(exact_makespan_f(&t1, 0, DEFAULT_BUDGET).unwrap(), q(1, 1));
        assert_eq!(exact_makespan_f(&t1, 1, DEFAULT_BUDGET).unwrap(), q(1, 1));
    }

    #[test]
    fn table2_wmms_and_owmms() {
        let t2 = paper_table::<Ratio>(2, &Default::default()).unwrap();
        let r = exact_wmms(&t2, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.wmms, vec![q(-3, 4), q(-1, 3)]);
        assert_eq!(r.witnesses[0].owner, vec![0, 1]);
        assert_eq!(r.witnesses[1].owner, vec![0, 0]);
        let o = exact_owmms(&t2, &r.wmms, DEFAULT_BUDGET).unwrap();
        assert_eq!(o.alpha_star, q(4, 3));
        assert_eq!(o.witness, Allocation::all_to(0, 2));
        assert!(verify_alpha(&t2, &o.witness, &r.wmms, &q(4, 3)));
        assert!(!verify_alpha(&t2, &o.witness, &r.wmms, &q(5, 4)));
    }

    #[test]
    fn single_agent() {
        let inst = Instance::new(vec![q(1, 1)], vec![vec![q(-1, 3), q(-2, 3), q(-5, 7)]]).unwrap();
        let r = exact_wmms(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.wmms, vec![q(-1, 1) - q(5, 7)]);
        let o = exact_owmms(&inst, &r.wmms, DEFAULT_BUDGET).unwrap();
        assert_eq!(o.alpha_star, q(1, 1));
        assert_eq!(o.witness, Allocation::all_to(0, 3));
    }

    #[test]
    fn makespan_of_balanced_uniform_split() {
        // 5 chores of -1/5, equal shares over 2 agents: best split is 3/2,
        // makespan (3/5)/(1/2) = 6/5.
        let inst = Instance::identical(vec![q(1, 2), q(1, 2)], vec![q(-1, 5); 5]).unwrap();
        let f = exact_makespan_f(&inst, 0, DEFAULT_BUDGET).unwrap();
        let brute = all_allocations(2, 5, 1000)
            .unwrap()
            .iter()
            .map(|x| {
                x.bundle_sums(inst.row(0), 2)
                    .iter()
                    .map(|s| -s.clone() / q(1, 2))
                    .max()
                    .unwrap()
            })
            .min()
            .unwrap();
        assert_eq!(f, brute);
        assert_eq!(f, q(6, 5));
        assert_eq!(exact_wmms(&inst, DEFAULT_BUDGET).unwrap().w[0], -f);
    }

    #[test]
    fn budget_guard() {
        let err = check_budget(5, 30, DEFAULT_BUDGET).unwrap_err();
        match err {
            OracleError::BudgetExceeded { required, .. } => {
                assert_eq!(required, num_traits::pow(BigUint::from(5u32), 30));
            }
            other => panic!("{other:?}"),
        }
        assert!(check_budget(10, 8, DEFAULT_BUDGET).is_ok());
        assert!(check_budget(10, 9, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn empty_chore_set() {
        let inst = Instance::new(vec![q(1, 2), q(1, 2)], vec![vec![], vec![]]).unwrap();
        let r = exact_wmms(&inst, 1).unwrap();
        assert_eq!(r.wmms, vec![q(0, 1), q(0, 1)]);
        let o = exact_owmms(&inst, &r.wmms, 1).unwrap();
        assert_eq!(o.alpha_star, q(1, 1));
        assert!(verify_alpha(&inst, &Allocation::empty(), &r.wmms, &q(1, 1)));
    }

    #[test]
    fn zero_wmms_agent_must_get_zero_bundle() {
        // Agent 1 values every chore at 0; agent 0 must take nothing she dislikes.
        let inst = Instance::new(
            vec![q(1, 2), q(1, 2)],
            vec![vec![q(-1, 2), q(-1, 2)], vec![q(0, 1), q(0, 1)]],
        )
        .unwrap();
        let r = exact_wmms(&inst, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.wmms, vec![q(-1, 2), q(0, 1)]);
        let o = exact_owmms(&inst, &r.wmms, DEFAULT_BUDGET).unwrap();
        assert_eq!(o.alpha_star, q(1, 1));

        let stuck = Instance::new(vec![q(1, 1)], vec![vec![q(-1, 1)]]).unwrap();
        assert_eq!(
            exact_owmms(&stuck, &[q(0, 1)], DEFAULT_BUDGET),
            Err(OracleError::NoFeasibleAllocation)
        );
    }

    #[test]
    fn certificate_matches_enumeration() {
        let t1 = paper_table::<Ratio>(1, &Default::default()).unwrap();
        let p1 = Allocation::new(vec![0, 1, 1, 1]);
        assert_eq!(certify_wmms(&t1, 0, &p1), Some(q(-1, 4)));
        let p2 = Allocation::new(vec![1, 1, 0, 0]);
        assert_eq!(certify_wmms(&t1, 1, &p2), Some(q(-3, 4)));
        assert_eq!(certify_wmms(&t1, 1, &p1), None);
        let t2 = paper_table::<Ratio>(2, &Default::default()).unwrap();
        // agent 1's optimum (-4/3) is strictly below the bound V(M) = -1
        assert_eq!(certify_wmms(&t2, 1, &Allocation::all_to(0, 2)), None);
    }
}
