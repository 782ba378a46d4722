//! Randomized cost comparisons between two experiments.
//!
//! Theorem 1 pairs the Col order with unconstrained risk-neutral costs and
//! implementability, theorem 2 pairs Cone with limited liability and with
//! a budget alone, theorem 3 pairs Zon with limited liability plus budget,
//! risk-averse limited liability (with and without budget) and ex-ante
//! budget feasible sets. When the order holds, every sampled environment
//! must favour the dominating experiment; when it fails, the counterexample
//! constructors must produce a strict reversal.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactnum::{dot, ratio, render_rational, RatVector, Rational};
use crate::experiments::{Experiment, Prior};
use crate::moralhazard::{
    construct_budget_counterexample, construct_counterexample, implementable, solve, vplus_membership,
    ConstraintClass, Cost, Counterexample, Environment, UtilitySpec,
};
use crate::orders::{dominates, Order};
use crate::random::{random_budget, random_environment, random_payment, random_plc, random_prior, stream};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub trial: usize,
    pub check: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepReport {
    pub theorem: u8,
    pub order: Order,
    pub dominates: bool,
    pub trials: usize,
    pub seed: u64,
    /// Individual comparisons performed.
    pub checks: usize,
    pub violations: Vec<Violation>,
    pub counterexamples: Vec<Counterexample>,
    /// Constructors that failed to produce a strict reversal.
    pub failures: Vec<String>,
}

pub fn order_for(theorem: u8) -> Result<Order> {
    match theorem {
        1 => Ok(Order::Col),
        2 => Ok(Order::Cone),
        3 => Ok(Order::Zon),
        other => Err(Error::Unsupported(format!("theorem {other}; expected 1, 2 or 3"))),
    }
}

fn compare(trial: usize, check: &'static str, a: Cost, b: Cost, out: &mut Vec<Violation>) {
    if a > b {
        out.push(Violation {
            trial,
            check,
            detail: format!("cost {a} under E exceeds {b} under E'"),
        });
    }
}

fn cost_check(
    trial: usize,
    check: &'static str,
    e: &Experiment,
    e2: &Experiment,
    env: &Environment,
    out: &mut Vec<Violation>,
) -> Result<()> {
    compare(trial, check, solve(e, env)?.cost(), solve(e2, env)?.cost(), out);
    Ok(())
}

/// One trial; returns the number of checks and any violations.
fn run_trial(theorem: u8, e: &Experiment, e2: &Experiment, seed: u64, trial: usize) -> Result<(usize, Vec<Violation>)> {
    let mut rng = stream(seed, trial as u64);
    let mut out = Vec::new();
    let rn = UtilitySpec::RiskNeutral;
    let checks = match theorem {
        1 => {
            let env = random_environment(&mut rng, e2, rn, ConstraintClass::None);
            cost_check(trial, "K", e, e2, &env, &mut out)?;
            if implementable(e2, &env)? && !implementable(e, &env)? {
                out.push(Violation {
                    trial,
                    check: "implementability",
                    detail: "target implementable under E' only".into(),
                });
            }
            2
        }
        2 => {
            let env = random_environment(&mut rng, e2, rn.clone(), ConstraintClass::LimitedLiability);
            cost_check(trial, "K^LL", e, e2, &env, &mut out)?;
            let b = random_budget(&mut rng);
            let env = random_environment(&mut rng, e2, rn, ConstraintClass::BudgetOnly(b));
            cost_check(trial, "K^B", e, e2, &env, &mut out)?;
            2
        }
        _ => {
            let b = random_budget(&mut rng);
            let env = random_environment(&mut rng, e2, rn, ConstraintClass::LimitedLiabilityBudget(b));
            cost_check(trial, "K^LL,B", e, e2, &env, &mut out)?;

            let plc = UtilitySpec::PiecewiseLinearConcave(random_plc(&mut rng));
            let env = random_environment(&mut rng, e2, plc.clone(), ConstraintClass::LimitedLiability);
            cost_check(trial, "K^LL (risk averse)", e, e2, &env, &mut out)?;
            let b = random_budget(&mut rng);
            let env = random_environment(&mut rng, e2, plc.clone(), ConstraintClass::LimitedLiabilityBudget(b));
            cost_check(trial, "K^LL,B (risk averse)", e, e2, &env, &mut out)?;

            let (x, mu0, budget) = random_vplus_point(&mut rng, e2, &plc);
            if !vplus_membership(e, &x, &mu0, &plc, &budget)? {
                out.push(Violation {
                    trial,
                    check: "V+",
                    detail: format!(
                        "point ({}) with budget {} reachable under E' only",
                        x.iter().map(render_rational).collect::<Vec<_>>().join(", "),
                        render_rational(&budget)
                    ),
                });
            }
            4
        }
    };
    Ok((checks, out))
}

/// A point of `V⁺(E′)` built from a random nonnegative payment, with the
/// prior and a budget that covers its expected payment.
pub fn random_vplus_point<R: Rng>(rng: &mut R, e2: &Experiment, u: &UtilitySpec) -> (RatVector, Prior, Rational) {
    let mu0 = random_prior(rng, e2.n_states());
    let t = random_payment(rng, e2.n_realizations(), &ConstraintClass::LimitedLiability);
    let x = e2.matrix().mul_vec(&u.apply(&t)).expect("conformable");
    let paid = dot(&e2.matrix().vec_mul(mu0.as_slice()).expect("conformable"), &t);
    // V⁺ needs B > 0 even when nothing is paid.
    let budget = paid + ratio(rng.gen_range(1..=2), 4);
    (x, mu0, budget)
}

pub fn sweep(theorem: u8, e: &Experiment, e2: &Experiment, trials: usize, seed: u64) -> Result<SweepReport> {
    let order = order_for(theorem)?;
    let holds = dominates(order, e, e2)?.dominates;
    let mut report = SweepReport {
        theorem,
        order,
        dominates: holds,
        trials,
        seed,
        checks: 0,
        violations: Vec::new(),
        counterexamples: Vec::new(),
        failures: Vec::new(),
    };
    if holds {
        let results: Vec<(usize, Vec<Violation>)> = (0..trials)
            .into_par_iter()
            .map(|i| run_trial(theorem, e, e2, seed, i))
            .collect::<Result<_>>()?;
        for (checks, violations) in results {
            report.checks += checks;
            report.violations.extend(violations);
        }
        return Ok(report);
    }
    let mut attempts: Vec<Result<Counterexample>> = vec![construct_counterexample(order, e, e2)];
    if order == Order::Cone {
        attempts.push(construct_budget_counterexample(e, e2));
    }
    for attempt in attempts {
        report.checks += 1;
        match attempt {
            Ok(ce) => report.counterexamples.push(ce),
            Err(err @ Error::NoReversal(_)) => report.failures.push(err.to_string()),
            Err(err) => return Err(err),
        }
    }
    Ok(report)
}
