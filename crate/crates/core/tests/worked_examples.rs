//! Worked examples and adversarial families, checked end to end against the
//! exhaustive oracle (or the weighted-mean certificate where enumeration is
//! out of budget).

use num_bigint::BigInt;
use wmms_core::algos::{
    additive_greedy, binary_wmms, div_cho, egal_greedy, egal_greedy_general, multiplicative_greedy,
    round_robin, wmms_prime, TieRule, DEFAULT_SUBSET_GUARD,
};
use wmms_core::fixtures::{
    egal_greedy_failure_family, egal_greedy_failure_partition, paper_table, round_robin_family,
    round_robin_family_partition, FixtureParams,
};
use wmms_core::lp::{feasible_at, lin_pro};
use wmms_core::oracle::{
    all_allocations, certify_wmms, exact_makespan_f, exact_owmms, exact_wmms, verify_alpha, DEFAULT_BUDGET,
};
use wmms_core::model::AgentFairness;
use wmms_core::{AchievedRatio, Allocation, Instance, Ratio, Scalar};

fn q(n: i64, d: i64) -> Ratio {
    Ratio::ratio(n, d)
}

fn big(n: i64, d: i64) -> num_rational::BigRational {
    num_rational::BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn table(k: usize) -> Instance {
    paper_table(k, &FixtureParams::default()).unwrap()
}

fn ratio(inst: &Instance, alloc: &Allocation, agent: usize, wmms: &Ratio) -> AchievedRatio<Ratio> {
    AgentFairness::new(inst.own_values(alloc)[agent].clone(), wmms.clone()).ratio
}

#[test]
fn table1_oracle() {
    let t1 = table(1);
    let res = exact_wmms(&t1, DEFAULT_BUDGET).unwrap();
    assert_eq!(res.wmms, vec![q(-1, 4), q(-3, 4)]);
    assert_eq!(res.w, vec![q(-1, 1), q(-1, 1)]);
    let alloc = Allocation::from_bundles(&[vec![0], vec![1, 2, 3]], 4).unwrap();
    assert!(verify_alpha(&t1, &alloc, &res.wmms, &q(1, 1)));
    assert_eq!(exact_owmms(&t1, &res.wmms, DEFAULT_BUDGET).unwrap().alpha_star, q(1, 1));
    for i in 0..2 {
        assert_eq!(exact_makespan_f(&t1, i, DEFAULT_BUDGET).unwrap(), -res.w[i].clone());
    }
}

#[test]
fn table2_oracle_and_lower_bound() {
    let t2 = table(2);
    let res = exact_wmms(&t2, DEFAULT_BUDGET).unwrap();
    assert_eq!(res.wmms, vec![q(-3, 4), q(-1, 3)]);
    let owmms = exact_owmms(&t2, &res.wmms, DEFAULT_BUDGET).unwrap();
    assert_eq!(owmms.alpha_star, q(4, 3));
    assert_eq!(owmms.witness, Allocation::all_to(0, 2));
    let below = q(4, 3) - q(1, 1000);
    for alloc in all_allocations(2, 2, DEFAULT_BUDGET).unwrap() {
        assert!(!verify_alpha(&t2, &alloc, &res.wmms, &below), "{alloc:?}");
    }
}

#[test]
fn table2_div_cho_reaches_four_thirds() {
    let t2 = table(2);
    let wmms = exact_wmms(&t2, DEFAULT_BUDGET).unwrap().wmms;
    let alloc = div_cho(&t2, DEFAULT_SUBSET_GUARD).unwrap();
    let report = t2.fairness_report(&alloc, &wmms);
    assert_eq!(report.worst(), AchievedRatio::Finite(q(4, 3)));
}

#[test]
fn table3_multiplicative_greedy_ratio() {
    let t3 = table(3);
    let wmms = exact_wmms(&t3, DEFAULT_BUDGET).unwrap().wmms;
    assert_eq!(wmms[0], q(-1, 10));
    let alloc = multiplicative_greedy(&t3, TieRule::LargestShare).unwrap();
    assert_eq!(alloc.owner, vec![0, 1]);
    assert_eq!(ratio(&t3, &alloc, 0, &wmms[0]), AchievedRatio::Finite(q(9, 1)));
}

#[test]
fn table3_ratio_grows_as_epsilon_shrinks() {
    // agent 0 ends with value -1 + eps against WMMS -eps
    for d in [10, 20, 40] {
        let params = FixtureParams {
            epsilon: big(1, d),
            ..FixtureParams::default()
        };
        let t3 = paper_table::<Ratio>(3, &params).unwrap();
        let wmms = exact_wmms(&t3, DEFAULT_BUDGET).unwrap().wmms;
        let alloc = multiplicative_greedy(&t3, TieRule::LargestShare).unwrap();
        assert_eq!(ratio(&t3, &alloc, 0, &wmms[0]), AchievedRatio::Finite(q(d - 1, 1)));
    }
}

#[test]
fn table4_smallest_share_ties() {
    let t4 = table(4);
    let wmms = exact_wmms(&t4, DEFAULT_BUDGET).unwrap().wmms;
    let alloc = multiplicative_greedy(&t4, TieRule::SmallestShare).unwrap();
    assert_eq!(alloc.owner, vec![1, 0, 2, 0]);
    // agent 0 carries -1/100 - 8/10 against WMMS -1/10
    assert_eq!(ratio(&t4, &alloc, 0, &wmms[0]), AchievedRatio::Finite(q(81, 10)));
}

#[test]
fn table5_additive_greedy_hands_item_one_to_agent_one() {
    let t5 = table(5);
    assert_eq!(t5.chores(), 83);
    let alloc = additive_greedy(&t5).unwrap();
    assert_eq!(alloc.owner[0], 0);
    assert_eq!(alloc.owner[1], 0);
    // chore 2 alone against chore 0 alone meets agent 0's proportional bound
    let mut owner = vec![1; t5.chores()];
    owner[2] = 0;
    let w0 = certify_wmms(&t5, 0, &Allocation::new(owner)).unwrap();
    assert_eq!(w0, q(-1, 10));
    let r = ratio(&t5, &alloc, 0, &w0);
    assert!(r.finite().unwrap() >= &q(9, 1), "{r}");
}

#[test]
fn table6_general_greedy_fails_on_small_family() {
    let inst = egal_greedy_failure_family::<Ratio>(&big(16, 3), &big(4, 1), 5).unwrap();
    let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
    assert_eq!(wmms[0], q(-1, 4));
    assert_eq!(
        certify_wmms(&inst, 0, &egal_greedy_failure_partition(5)),
        Some(q(-1, 4))
    );
    let alloc = egal_greedy_general(&inst).unwrap();
    assert_eq!(alloc.bundle(0), vec![0, 1, 2]);
    assert_eq!(ratio(&inst, &alloc, 0, &wmms[0]), AchievedRatio::Finite(q(9, 4)));
}

#[test]
fn table6_ratio_grows_with_the_family() {
    let inst = egal_greedy_failure_family::<Ratio>(&big(16, 1), &big(8, 1), 15).unwrap();
    let w0 = certify_wmms(&inst, 0, &egal_greedy_failure_partition(15)).unwrap();
    assert_eq!(w0, q(-1, 8));
    // after renormalization chore 0 goes to a small-share agent, and agent 0
    // takes the next seven chores at -1/16 each
    let alloc = egal_greedy_general(&inst).unwrap();
    assert_eq!(alloc.bundle(0), (1..8).collect::<Vec<_>>());
    assert_eq!(ratio(&inst, &alloc, 0, &w0), AchievedRatio::Finite(q(7, 2)));
}

fn round_robin_agent0_ratio(n: usize) -> Ratio {
    let inst = round_robin_family::<Ratio>(n).unwrap();
    let order: Vec<usize> = (0..n).collect();
    let alloc = round_robin(&inst, &order).unwrap();
    let w0 = certify_wmms(&inst, 0, &round_robin_family_partition(n)).unwrap();
    ratio(&inst, &alloc, 0, &w0).finite().unwrap().clone()
}

#[test]
fn round_robin_family_blows_up() {
    // enumeration agrees with the certificate where it is affordable
    let inst = round_robin_family::<Ratio>(3).unwrap();
    let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
    assert_eq!(certify_wmms(&inst, 0, &round_robin_family_partition(3)), Some(wmms[0].clone()));

    let ratios: Vec<Ratio> = (3..=5).map(round_robin_agent0_ratio).collect();
    // closed form ((n+1)^n - 1) / n^2
    assert_eq!(ratios, vec![q(7, 1), q(39, 1), q(311, 1)]);
    assert!(ratios[1] > q(5, 1));
}

#[test]
fn binary_example() {
    let inst = Instance::new(
        vec![q(1, 2), q(1, 2)],
        vec![vec![q(-1, 1), q(0, 1), q(-1, 1)], vec![q(-1, 1), q(-1, 1), q(-1, 1)]],
    )
    .unwrap();
    let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
    assert_eq!(wmms, vec![q(-1, 1), q(-2, 1)]);
    let alloc = binary_wmms(&inst).unwrap();
    assert_eq!(inst.own_values(&alloc), vec![q(-1, 1), q(-1, 1)]);
    assert!(verify_alpha(&inst, &alloc, &wmms, &q(1, 1)));
}

#[test]
fn egal_greedy_exact_on_uniform_rows() {
    let row = vec![q(-1, 5); 5];
    let shares = vec![q(1, 5), q(3, 10), q(1, 2)];
    let inst = Instance::identical(shares.clone(), row.clone()).unwrap();
    let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
    let alloc = egal_greedy(&shares, &row);
    assert!(verify_alpha(&inst, &alloc, &wmms, &q(1, 1)));
}

#[test]
fn linpro_on_tables() {
    let eps = q(1, 100);
    for k in [1, 2, 3, 4] {
        let inst = table(k);
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let alpha = exact_owmms(&inst, &wmms, DEFAULT_BUDGET).unwrap().alpha_star;
        let res = lin_pro(&inst, &eps).unwrap();
        let bound = (q(4, 1) + eps.clone()) * alpha.clone();
        assert!(verify_alpha(&inst, &res.allocation, &wmms, &bound), "table {k}");
        assert!(feasible_at(&inst, &alpha, &wmms).unwrap(), "table {k}");
    }
    // Table 1: (401/100) * (-1/4, -3/4)
    let t1 = table(1);
    let values = t1.own_values(&lin_pro(&t1, &eps).unwrap().allocation);
    assert!(values[0] >= q(-401, 400) && values[1] >= q(-1203, 400));
}

#[test]
fn wmms_prime_brackets_table_values() {
    for k in 1..=4 {
        let inst = table(k);
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        for (p, w) in wmms_prime(&inst).iter().zip(&wmms) {
            assert!(*p <= *w && *p >= q(2, 1) * w.clone(), "table {k}");
        }
    }
}
