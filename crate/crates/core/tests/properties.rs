use num_traits::{Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

use expord::exactnum::{dot, int, ones_vec, ratio, zero_vec};
use expord::experiments::{posteriors, support_function, zonotope_vertices};
use expord::lp::{check_certificate, solve_lp, Bound, LpOutcome, LpProblem, Sense};
use expord::moralhazard::{
    check_ic, check_pc, solve, ConstraintClass, Cost, CostSpec, Environment, MhSolution, UtilitySpec,
};
use expord::oracle::{lagrangian_gap, zon_membership_by_facets};
use expord::orders::{self, classical_majorizes, zonotope_membership, Certificate, Order};
use expord::random::{
    permute_and_split, random_direction, random_environment, random_experiment, random_garbled,
    random_plc, random_prior, stream,
};
use expord::{parse_rational, render_rational, Experiment, RatMatrix, RatVector, Rational};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

fn small_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = RatMatrix> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(-3i64..=3, r * c)
            .prop_map(move |d| RatMatrix::new(r, c, d.into_iter().map(int).collect()).unwrap())
    })
}

/// Two experiments on the same states, drawn independently.
fn pair(seed: u64) -> (Experiment, Experiment) {
    let mut rng = stream(seed, 0);
    let n = rng.gen_range(2..=4);
    let e = sized_experiment(&mut rng, n, 1..=5);
    (e, sized_experiment(&mut rng, n, 1..=5))
}

/// `(E, E·G)`.
fn garbled_pair(seed: u64) -> (Experiment, Experiment) {
    let mut rng = stream(seed, 1);
    let n = rng.gen_range(2..=4);
    let e = sized_experiment(&mut rng, n, 1..=4);
    let e2 = sized_garbled(&mut rng, &e, 1..=4);
    (e, e2)
}

fn sized_experiment<R: Rng>(rng: &mut R, n: usize, cols: std::ops::RangeInclusive<usize>) -> Experiment {
    let m = rng.gen_range(cols);
    random_experiment(rng, n, m)
}

fn sized_garbled<R: Rng>(rng: &mut R, e: &Experiment, cols: std::ops::RangeInclusive<usize>) -> Experiment {
    let m = rng.gen_range(cols);
    random_garbled(rng, e, m)
}

fn holds(order: Order, e: &Experiment, e2: &Experiment) -> bool {
    orders::dominates(order, e, e2).unwrap().dominates
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn rational_round_trip(p in -10_000i64..10_000, q in 1i64..10_000) {
        let r = ratio(p, q);
        prop_assert_eq!(parse_rational(&render_rational(&r)).unwrap(), r);
    }

    #[test]
    fn rank_of_transpose(a in small_matrix(6, 8)) {
        prop_assert_eq!(a.rank(), a.transpose().rank());
    }

    #[test]
    fn solve_exact_substitutes(a in small_matrix(5, 5), x in prop::collection::vec(-5i64..=5, 5)) {
        let x: RatVector = x.into_iter().take(a.cols()).map(int).collect();
        let b = a.mul_vec(&x).unwrap();
        let y = a.solve_exact(&b).unwrap().expect("b is in the column space");
        prop_assert_eq!(a.mul_vec(&y).unwrap(), b);
    }
}

proptest! {
    #![proptest_config(config(96))]

    /// Nonnegative LPs built around a known feasible point.
    #[test]
    fn lp_outcomes_are_certified(
        a in small_matrix(4, 6),
        x0 in prop::collection::vec(0i64..=4, 6),
        c in prop::collection::vec(-4i64..=4, 6),
    ) {
        let n = a.cols();
        let x0: RatVector = x0.into_iter().take(n).map(int).collect();
        let c: RatVector = c.into_iter().take(n).map(int).collect();
        let b = a.mul_vec(&x0).unwrap();
        let p = LpProblem::new(Sense::Min, c.clone(), a.clone(), b.clone(), vec![Bound::nonneg(); n]).unwrap();
        let out = solve_lp(&p).unwrap();
        prop_assert!(check_certificate(&p, &out));
        prop_assert_eq!(&solve_lp(&p).unwrap(), &out);
        match out {
            LpOutcome::Optimal { value, duals, .. } => {
                prop_assert!(dot(&c, &x0) >= value);
                // the final-basis multipliers are dual feasible and bound every feasible point
                let reduced: Vec<Rational> = c.iter().zip(a.vec_mul(&duals).unwrap()).map(|(ci, ay)| ci - ay).collect();
                prop_assert!(reduced.iter().all(|r| !r.is_negative()));
                prop_assert!(dot(&duals, &b) <= dot(&c, &x0));
                prop_assert_eq!(dot(&duals, &b), value);
            }
            LpOutcome::Unbounded { .. } => {}
            LpOutcome::Infeasible { .. } => prop_assert!(false, "x0 is feasible"),
        }
    }

    #[test]
    fn bayes_plausibility(seed in any::<u64>()) {
        let mut rng = stream(seed, 2);
        let n = rng.gen_range(1..=5);
        let e = sized_experiment(&mut rng, n, 1..=6);
        let mu0 = random_prior(&mut rng, n);
        let d = posteriors(&e, &mu0).unwrap();
        prop_assert_eq!(d.barycenter(), mu0.as_slice().to_vec());
        let total: Rational = d.atoms.iter().map(|a| a.weight.clone()).sum();
        prop_assert_eq!(total, int(1));
    }

    #[test]
    fn support_function_properties(seed in any::<u64>()) {
        let mut rng = stream(seed, 3);
        let n = rng.gen_range(2..=4);
        let e = sized_experiment(&mut rng, n, 1..=6);
        let beta = random_direction(&mut rng, n);
        let neg: RatVector = beta.iter().map(|b| -b).collect();
        let h = support_function(e.matrix(), &beta).unwrap();
        let sum = &h + support_function(e.matrix(), &neg).unwrap();
        prop_assert!(!sum.is_negative());
        let flat = e.matrix().vec_mul(&beta).unwrap().iter().all(Zero::is_zero);
        prop_assert_eq!(sum.is_zero(), flat);

        let m = e.n_realizations();
        let c = e.matrix().vec_mul(&beta).unwrap();
        let p = LpProblem::new(
            Sense::Max,
            c,
            RatMatrix::zeros(0, m),
            vec![],
            vec![Bound::between(int(0), int(1)); m],
        ).unwrap();
        match solve_lp(&p).unwrap() {
            LpOutcome::Optimal { value, .. } => prop_assert_eq!(value, h),
            other => prop_assert!(false, "bounded LP gave {:?}", other),
        }
    }

    #[test]
    fn zonotope_vertices_symmetric(seed in any::<u64>()) {
        let mut rng = stream(seed, 4);
        let n = rng.gen_range(1..=4);
        let e = sized_experiment(&mut rng, n, 1..=6);
        let vs = zonotope_vertices(&e).unwrap();
        prop_assert!(vs.contains(&zero_vec(n)));
        prop_assert!(vs.contains(&ones_vec(n)));
        for v in &vs {
            let reflected: RatVector = v.iter().map(|x| int(1) - x).collect();
            prop_assert!(vs.contains(&reflected));
        }
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn nesting_and_certificates(seed in any::<u64>()) {
        for (e, e2) in [pair(seed), garbled_pair(seed)] {
            let verdicts: Vec<_> = Order::ALL.iter().map(|&o| orders::dominates(o, &e, &e2).unwrap()).collect();
            for v in &verdicts {
                prop_assert!(v.verify(e.matrix(), e2.matrix()), "{} certificate failed", v.order);
            }
            // order of ALL: col, cone, zon, blackwell
            let d: Vec<bool> = verdicts.iter().map(|v| v.dominates).collect();
            prop_assert!(!d[3] || d[2]);
            prop_assert!(!d[2] || d[1]);
            prop_assert!(!d[1] || d[0]);
        }
    }

    #[test]
    fn two_state_collapse(seed in any::<u64>()) {
        let mut rng = stream(seed, 5);
        let e = sized_experiment(&mut rng, 2, 1..=5);
        let e2 = if rng.gen_bool(0.5) {
            sized_garbled(&mut rng, &e, 1..=4)
        } else {
            sized_experiment(&mut rng, 2, 1..=5)
        };
        prop_assert_eq!(holds(Order::Zon, &e, &e2), holds(Order::Blackwell, &e, &e2));
    }

    #[test]
    fn full_rank_collapse(seed in any::<u64>()) {
        let mut rng = stream(seed, 6);
        let n = rng.gen_range(2..=4);
        let m = rng.gen_range(1..=n);
        let e = random_experiment(&mut rng, n, m);
        let e2 = if rng.gen_bool(0.5) {
            sized_garbled(&mut rng, &e, 1..=4)
        } else {
            sized_experiment(&mut rng, n, 1..=4)
        };
        let b = holds(Order::Blackwell, &e, &e2);
        if e.rank() == m {
            prop_assert_eq!(holds(Order::Cone, &e, &e2), b);
        }
        if e.rank() == m.min(n) {
            prop_assert_eq!(holds(Order::Zon, &e, &e2), b);
        }
    }

    #[test]
    fn zon_support_inequality(seed in any::<u64>()) {
        let mut rng = stream(seed, 7);
        let (e, e2) = if rng.gen_bool(0.5) { garbled_pair(seed) } else { pair(seed) };
        let v = orders::zon_dominates(&e, &e2).unwrap();
        if v.dominates {
            for _ in 0..200 {
                let beta = random_direction(&mut rng, e.n_states());
                // max-form majorization of βE over βE′
                prop_assert!(support_function(e.matrix(), &beta).unwrap() >= support_function(e2.matrix(), &beta).unwrap());
            }
        } else if let Certificate::Witness { beta, .. } = &v.certificate {
            prop_assert!(support_function(e.matrix(), beta).unwrap() < support_function(e2.matrix(), beta).unwrap());
        } else {
            prop_assert!(false, "failed zon verdict without witness");
        }
    }

    #[test]
    fn permutation_and_splitting_invariance(seed in any::<u64>()) {
        let mut rng = stream(seed, 8);
        let (e, e2) = if rng.gen_bool(0.5) { garbled_pair(seed) } else { pair(seed) };
        let (es, e2s) = (permute_and_split(&mut rng, &e), permute_and_split(&mut rng, &e2));
        for &o in Order::ALL.iter() {
            let base = holds(o, &e, &e2);
            prop_assert_eq!(holds(o, &es, &e2), base, "{} left", o);
            prop_assert_eq!(holds(o, &e, &e2s), base, "{} right", o);
        }
    }

    #[test]
    fn reflexive_and_transitive(seed in any::<u64>()) {
        let mut rng = stream(seed, 9);
        let n = rng.gen_range(2..=3);
        let a = sized_experiment(&mut rng, n, 1..=4);
        let b = if rng.gen_bool(0.7) {
            sized_garbled(&mut rng, &a, 1..=4)
        } else {
            sized_experiment(&mut rng, n, 1..=4)
        };
        let c = if rng.gen_bool(0.7) {
            sized_garbled(&mut rng, &b, 1..=4)
        } else {
            sized_experiment(&mut rng, n, 1..=4)
        };
        for &o in Order::ALL.iter() {
            prop_assert!(holds(o, &a, &a), "{} not reflexive", o);
            if holds(o, &a, &b) && holds(o, &b, &c) {
                prop_assert!(holds(o, &a, &c), "{} not transitive", o);
            }
        }
    }

    #[test]
    fn facets_agree_with_lp(seed in any::<u64>()) {
        let mut rng = stream(seed, 10);
        let n = rng.gen_range(1..=3);
        let e = sized_experiment(&mut rng, n, 1..=5);
        let p: RatVector = (0..n).map(|_| ratio(rng.gen_range(-2..=12), 10)).collect();
        let lp = zonotope_membership(e.matrix(), &p).unwrap().is_ok();
        prop_assert_eq!(zon_membership_by_facets(&e, &p).unwrap(), lp);
    }

    #[test]
    fn lagrangian_direction_under_dominance(seed in any::<u64>()) {
        let mut rng = stream(seed, 11);
        let (e, e2) = garbled_pair(seed);
        let mu0 = random_prior(&mut rng, e.n_states());
        let plc = random_plc(&mut rng);
        let last = plc.slopes().last().cloned().unwrap();
        let u = UtilitySpec::PiecewiseLinearConcave(plc);
        for _ in 0..5 {
            // β = (μ0 ∘ w)/slope with |w| ≤ 1 keeps every column's sup finite
            let beta: RatVector = mu0
                .as_slice()
                .iter()
                .map(|m| m * ratio(rng.gen_range(-10..=10), 10) / &last)
                .collect();
            let (left, right) = lagrangian_gap(&e, &e2, &beta, &mu0, &u).unwrap();
            prop_assert!(left >= right);
        }
    }
}

/// Zonotope (even Blackwell) dominance does not give partial-sum majorization
/// of `βE` over `βE′`: merging two signals raises the top entry.
#[test]
fn partial_sum_majorization_not_implied() {
    let e = Experiment::new(RatMatrix::identity(2)).unwrap();
    let e2 = Experiment::new(RatMatrix::from_ratios(&[&[(1, 1), (0, 1)], &[(1, 1), (0, 1)]])).unwrap();
    assert!(holds(Order::Blackwell, &e, &e2));
    assert!(holds(Order::Zon, &e, &e2));
    let beta = [int(1), int(1)];
    let x = e.matrix().vec_mul(&beta).unwrap();
    let z = e2.matrix().vec_mul(&beta).unwrap();
    assert_eq!((x.clone(), z.clone()), (vec![int(1), int(1)], vec![int(2), int(0)]));
    assert!(!classical_majorizes(&x, &z));
    assert!(support_function(e.matrix(), &beta).unwrap() >= support_function(e2.matrix(), &beta).unwrap());
}

fn with_class(env: &Environment, class: ConstraintClass) -> Environment {
    Environment {
        constraints: class,
        ..env.clone()
    }
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn constraint_and_budget_monotonicity(seed in any::<u64>()) {
        let mut rng = stream(seed, 12);
        let n = rng.gen_range(2..=3);
        let e = sized_experiment(&mut rng, n, 1..=4);
        let u = if rng.gen_bool(0.5) {
            UtilitySpec::RiskNeutral
        } else {
            UtilitySpec::PiecewiseLinearConcave(random_plc(&mut rng))
        };
        let env = random_environment(&mut rng, &e, u, ConstraintClass::None);
        let k = |class| solve(&e, &with_class(&env, class)).unwrap().cost();
        let free = k(ConstraintClass::None);
        let ll = k(ConstraintClass::LimitedLiability);
        prop_assert!(free <= ll);
        let mut last = Cost::Infinite;
        for b in [ratio(1, 2), int(1), int(2), int(4)] {
            let kb = k(ConstraintClass::LimitedLiabilityBudget(b));
            prop_assert!(ll <= kb);
            prop_assert!(kb <= last);
            last = kb;
        }
        if matches!(env.utility, UtilitySpec::RiskNeutral) {
            let big: Rational = env.cost.gradient.iter().map(|g| g.abs()).sum::<Rational>()
                + &env.cost.cost_level
                + &env.outside_option
                + int(1);
            let ll_big = k(ConstraintClass::LimitedLiabilityBudget(big.clone()));
            // the desk-check bound, verified rather than assumed: report when it is too small
            if ll_big != ll {
                let larger = k(ConstraintClass::LimitedLiabilityBudget(big * int(100)));
                prop_assert_eq!(larger, ll);
            }
        }
    }

    #[test]
    fn optimal_contracts_are_incentive_compatible(seed in any::<u64>()) {
        let mut rng = stream(seed, 13);
        let n = rng.gen_range(2..=3);
        let e = sized_experiment(&mut rng, n, 1..=4);
        let u = if rng.gen_bool(0.5) {
            UtilitySpec::RiskNeutral
        } else {
            UtilitySpec::PiecewiseLinearConcave(random_plc(&mut rng))
        };
        let classes = [
            ConstraintClass::None,
            ConstraintClass::LimitedLiability,
            ConstraintClass::LimitedLiabilityBudget(int(2)),
            ConstraintClass::BudgetOnly(int(2)),
        ];
        for class in classes {
            let env = random_environment(&mut rng, &e, u.clone(), class);
            if let MhSolution::Optimal { t, .. } = solve(&e, &env).unwrap() {
                prop_assert!(env.constraints.admits(&t));
                prop_assert!(check_ic(&e, &t, &env).unwrap());
                prop_assert!(check_pc(&e, &t, &env).unwrap());
            }
        }
    }

    #[test]
    fn gradient_shift_moves_only_the_multiplier(seed in any::<u64>(), k in -8i64..=8) {
        let mut rng = stream(seed, 14);
        let n = rng.gen_range(2..=3);
        let e = sized_experiment(&mut rng, n, 1..=4);
        let env = random_environment(&mut rng, &e, UtilitySpec::RiskNeutral, ConstraintClass::LimitedLiability);
        let k = ratio(k, 4);
        let shifted = Environment {
            cost: CostSpec {
                gradient: env.cost.gradient.iter().map(|g| g + &k).collect(),
                cost_level: env.cost.cost_level.clone(),
            },
            ..env.clone()
        };
        match (solve(&e, &env).unwrap(), solve(&e, &shifted).unwrap()) {
            (
                MhSolution::Optimal { cost, t, lambda, .. },
                MhSolution::Optimal { cost: cost2, t: t2, lambda: lambda2, .. },
            ) => {
                prop_assert_eq!(cost, cost2);
                prop_assert_eq!(t, t2);
                prop_assert_eq!(lambda2, lambda - k);
            }
            (MhSolution::Infeasible, MhSolution::Infeasible) => {}
            (a, b) => prop_assert!(false, "shift changed feasibility: {:?} vs {:?}", a, b),
        }
    }
}
