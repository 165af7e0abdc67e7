//! Invariants over generated instances, each checked against the exhaustive
//! oracle or an independent recomputation.

use num_rational::Rational64;
use proptest::prelude::*;

use wmms_core::algos::{
    binary_wmms, div_cho, egal_greedy, naive, naive_traced, round_robin_traced, wmms_prime, DEFAULT_SUBSET_GUARD,
};
use wmms_core::bench::{run_algorithm, Algorithm, RunOptions};
use wmms_core::format::{parse_instance, serialize_instance};
use wmms_core::lp::{check_feasible, lin_pro, AssignmentGraph, LpPoint, LpProgram};
use wmms_core::oracle::{all_allocations, certify_wmms, exact_makespan_f, exact_owmms, exact_wmms, DEFAULT_BUDGET};
use wmms_core::simplex::{feasible_basic_point, Feasibility, Relation, StandardForm};
use wmms_core::{model, Instance, Ratio, Scalar};

fn q(n: i64, d: i64) -> Ratio {
    Ratio::ratio(n, d)
}

/// Shares from positive weights; each row from nonnegative weights,
/// negated and scaled to total -1 unless the row is all zero.
fn build(share_w: &[i64], value_w: &[Vec<i64>]) -> Instance {
    let total: i64 = share_w.iter().sum();
    let shares = share_w.iter().map(|&w| q(w, total)).collect();
    let values = value_w
        .iter()
        .map(|row| {
            let t: i64 = row.iter().sum();
            row.iter().map(|&w| if t == 0 { q(0, 1) } else { q(-w, t) }).collect()
        })
        .collect();
    Instance::new(shares, values).unwrap()
}

type Span = std::ops::RangeInclusive<usize>;

fn instances(agents: Span, chores: Span) -> impl Strategy<Value = Instance> {
    weighted_instances(agents, chores, 0)
}

fn weighted_instances(agents: Span, chores: Span, min_weight: i64) -> impl Strategy<Value = Instance> {
    (agents, chores).prop_flat_map(move |(n, m)| {
        (
            prop::collection::vec(1i64..=10, n),
            prop::collection::vec(prop::collection::vec(min_weight..=20, m), n),
        )
            .prop_map(|(s, v)| build(&s, &v))
    })
}

fn identical_instances() -> impl Strategy<Value = Instance> {
    (2usize..=3, 1usize..=6).prop_flat_map(|(n, m)| {
        (prop::collection::vec(1i64..=10, n), prop::collection::vec(1i64..=20, m))
            .prop_map(move |(s, row)| build(&s, &vec![row; n]))
    })
}

fn binary_instances() -> impl Strategy<Value = Instance> {
    (2usize..=3, 1usize..=6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(1i64..=10, n),
            prop::collection::vec(prop::collection::vec(prop::bool::ANY, m), n),
        )
            .prop_map(|(s, v)| {
                let total: i64 = s.iter().sum();
                let shares = s.iter().map(|&w| q(w, total)).collect();
                let values = v
                    .iter()
                    .map(|row| row.iter().map(|&b| if b { q(-1, 1) } else { q(0, 1) }).collect())
                    .collect();
                Instance::new(shares, values).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialization_round_trips(inst in instances(1..=4, 0..=6)) {
        let text = serialize_instance(&inst);
        let back: Instance = parse_instance(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(serialize_instance(&back), text);
    }

    #[test]
    fn oracle_forms_agree(inst in instances(1..=3, 0..=5)) {
        let res = exact_wmms(&inst, DEFAULT_BUDGET).unwrap();
        for i in 0..inst.agents() {
            // makespan form is the negated unfairness degree
            prop_assert_eq!(exact_makespan_f(&inst, i, DEFAULT_BUDGET).unwrap(), -res.w[i].clone());
            // weighted mean: no partition beats the total row value
            let total = model::Instance::row_totals(&inst)[i].clone();
            prop_assert!(res.w[i] <= total);
            // the witness attains the optimum
            let sums = res.witnesses[i].bundle_sums(inst.row(i), inst.agents());
            let best = sums.iter().zip(inst.shares()).map(|(v, s)| v.clone() / s.clone()).min().unwrap();
            prop_assert_eq!(&best, &res.w[i]);
            if let Some(cert) = certify_wmms(&inst, i, &res.witnesses[i]) {
                prop_assert_eq!(cert, res.wmms[i].clone());
            }
        }
    }

    #[test]
    fn alpha_star_is_attained_and_minimal(inst in instances(2..=3, 1..=4)) {
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let res = exact_owmms(&inst, &wmms, DEFAULT_BUDGET).unwrap();
        let report = inst.fairness_report(&res.witness, &wmms);
        prop_assert!(report.satisfied_at(&res.alpha_star));
        prop_assert!(res.alpha_star >= q(1, 1));
        if res.alpha_star > q(1, 1) {
            let below = res.alpha_star.clone() - q(1, 1000);
            for alloc in all_allocations(inst.agents(), inst.chores(), DEFAULT_BUDGET).unwrap() {
                prop_assert!(!inst.fairness_report(&alloc, &wmms).satisfied_at(&below));
            }
        }
    }

    #[test]
    fn wmms_prime_within_factor_two(inst in instances(1..=3, 1..=6)) {
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        for (p, w) in wmms_prime(&inst).iter().zip(&wmms) {
            prop_assert!(p <= w);
            prop_assert!(*p >= q(2, 1) * w.clone());
        }
    }

    #[test]
    fn naive_within_n(inst in instances(1..=3, 1..=6)) {
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let alloc = naive(&inst).unwrap();
        let n = q(inst.agents() as i64, 1);
        prop_assert!(inst.fairness_report(&alloc, &wmms).satisfied_at(&n));
    }

    #[test]
    fn egal_greedy_within_two_on_identical_rows(inst in identical_instances()) {
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let alloc = egal_greedy(inst.shares(), inst.row(0));
        prop_assert!(inst.fairness_report(&alloc, &wmms).satisfied_at(&q(2, 1)));
    }

    #[test]
    fn div_cho_within_three_halves(inst in weighted_instances(2..=2, 1..=7, 1)) {
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let alloc = div_cho(&inst, DEFAULT_SUBSET_GUARD).unwrap();
        prop_assert!(inst.fairness_report(&alloc, &wmms).satisfied_at(&q(3, 2)));
    }

    #[test]
    fn binary_is_exact(inst in binary_instances()) {
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let alloc = binary_wmms(&inst).unwrap();
        prop_assert!(inst.fairness_report(&alloc, &wmms).satisfied_at(&q(1, 1)));
    }

    #[test]
    fn linpro_bound_and_structure(inst in instances(1..=3, 1..=5)) {
        let eps = q(1, 100);
        let wmms = exact_wmms(&inst, DEFAULT_BUDGET).unwrap().wmms;
        let alpha = exact_owmms(&inst, &wmms, DEFAULT_BUDGET).unwrap().alpha_star;
        let res = lin_pro(&inst, &eps).unwrap();
        res.allocation.check(&inst).unwrap();
        let bound = (q(4, 1) + eps) * alpha;
        prop_assert!(inst.fairness_report(&res.allocation, &wmms).satisfied_at(&bound));
        prop_assert!(res.point.nonzeros() <= inst.agents() + inst.chores());
        prop_assert!(AssignmentGraph::new(inst.agents(), inst.chores(), &res.point).is_pseudoforest());
        prop_assert!(res.program.satisfied_by(&res.point));
    }

    /// If some integral allocation satisfies the program, the simplex must
    /// find it feasible; whatever it returns must satisfy the program.
    #[test]
    fn simplex_agrees_with_integral_witnesses(inst in instances(2..=3, 1..=4), c_num in 2i64..=12) {
        let refs = wmms_prime(&inst);
        let c = q(c_num, 4);
        let program = LpProgram::build(&inst, &c, &refs).unwrap();
        let integral = all_allocations(inst.agents(), inst.chores(), DEFAULT_BUDGET)
            .unwrap()
            .into_iter()
            .any(|a| program.satisfied_by(&LpPoint::from_allocation(&a)));
        match check_feasible(&program) {
            Some(point) => {
                prop_assert!(program.satisfied_by(&point));
                prop_assert!(point.nonzeros() <= inst.agents() + inst.chores());
            }
            None => prop_assert!(!integral),
        }
    }

    #[test]
    fn simplex_vertices_are_basic(
        rows in prop::collection::vec(
            (prop::collection::vec(-3i64..=3, 4), 0usize..3, -4i64..=4),
            1..=4,
        )
    ) {
        let mut sf = StandardForm::new(4);
        for (coeffs, rel, rhs) in &rows {
            let relation = [Relation::Le, Relation::Ge, Relation::Eq][*rel];
            sf.add_row(
                coeffs.iter().enumerate().map(|(v, &a)| (v, q(a, 1))).collect(),
                relation,
                q(*rhs, 1),
            );
        }
        // keep the region bounded so every feasible form has a vertex
        sf.add_row((0..4).map(|v| (v, q(1, 1))).collect(), Relation::Le, q(10, 1));
        if let Feasibility::Feasible(x) = feasible_basic_point(&sf) {
            prop_assert!(sf.satisfied_by(&x));
            prop_assert!(x.iter().filter(|v| **v != q(0, 1)).count() <= sf.rows().len());
            prop_assert_eq!(feasible_basic_point(&sf), Feasibility::Feasible(x));
        }
    }

    #[test]
    fn traces_replay(inst in instances(1..=3, 0..=6)) {
        let (alloc, trace) = naive_traced(&inst).unwrap();
        prop_assert_eq!(trace.replay(), Some(alloc));
        let order: Vec<usize> = (0..inst.agents()).rev().collect();
        let (alloc, trace) = round_robin_traced(&inst, &order).unwrap();
        prop_assert_eq!(trace.replay(), Some(alloc));
    }

    #[test]
    fn narrow_scalar_matches_big(inst in instances(1..=3, 1..=5)) {
        let narrow = model::Instance::<Rational64>::new(
            inst.shares().iter().map(|s| Rational64::from_big(s).unwrap()).collect(),
            inst.values()
                .iter()
                .map(|r| r.iter().map(|v| Rational64::from_big(v).unwrap()).collect())
                .collect(),
        )
        .unwrap();
        for alg in [Algorithm::Naive, Algorithm::EgalGreedy, Algorithm::RoundRobin, Algorithm::AddGreedy, Algorithm::Linpro] {
            let big = run_algorithm(&inst, alg, &RunOptions::default()).unwrap().allocation;
            let small = run_algorithm(&narrow, alg, &RunOptions::default()).unwrap().allocation;
            prop_assert_eq!(big, small, "{}", alg);
        }
    }
}
