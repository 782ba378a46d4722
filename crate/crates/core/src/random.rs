//! Seeded generators for experiments, priors, utilities and environments.
//!
//! Every task derives its own ChaCha stream from `(seed, index)`, so results
//! do not depend on scheduling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::exactnum::{int, ratio, RatMatrix, RatVector, Rational};
use crate::experiments::{Experiment, Prior};
use crate::moralhazard::{ConstraintClass, CostSpec, Environment, Plc, UtilitySpec};

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A probability vector with small denominators; `interior` forbids zeros.
pub fn random_distribution<R: Rng>(rng: &mut R, len: usize, interior: bool) -> RatVector {
    loop {
        let raw: Vec<i64> = (0..len)
            .map(|_| {
                if !interior && rng.gen_ratio(1, 6) {
                    0
                } else {
                    rng.gen_range(1..=9)
                }
            })
            .collect();
        let total: i64 = raw.iter().sum();
        if total > 0 {
            return raw.into_iter().map(|a| ratio(a, total)).collect();
        }
    }
}

pub fn random_prior<R: Rng>(rng: &mut R, n: usize) -> Prior {
    Prior::new(random_distribution(rng, n, true)).expect("valid distribution")
}

pub fn random_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> RatMatrix {
    let rows: Vec<RatVector> = (0..rows).map(|_| random_distribution(rng, cols, false)).collect();
    RatMatrix::from_rows(rows).expect("uniform rows")
}

pub fn random_experiment<R: Rng>(rng: &mut R, n: usize, m: usize) -> Experiment {
    Experiment::new(random_stochastic(rng, n, m)).expect("row-stochastic")
}

/// An experiment of rank at most `rank`: rows mix `rank` base distributions.
pub fn random_low_rank_experiment<R: Rng>(rng: &mut R, n: usize, m: usize, rank: usize) -> Experiment {
    let weights = random_stochastic(rng, n, rank);
    let base = random_stochastic(rng, rank, m);
    Experiment::new(weights.mul(&base).expect("conformable")).expect("row-stochastic")
}

/// `E·G` for a random garbling `G`.
pub fn random_garbled<R: Rng>(rng: &mut R, e: &Experiment, m2: usize) -> Experiment {
    let g = random_stochastic(rng, e.n_realizations(), m2);
    Experiment::new(e.matrix().mul(&g).expect("conformable")).expect("row-stochastic")
}

/// Permutes the columns of `e` and splits one of them in two.
pub fn permute_and_split<R: Rng>(rng: &mut R, e: &Experiment) -> Experiment {
    let mut cols = e.matrix().columns();
    cols.shuffle(rng);
    let j = rng.gen_range(0..cols.len());
    let w = ratio(rng.gen_range(1..=4), 5);
    let part: RatVector = cols[j].iter().map(|x| x * &w).collect();
    let rest: RatVector = cols[j].iter().zip(&part).map(|(x, p)| x - p).collect();
    cols[j] = part;
    cols.push(rest);
    Experiment::new(RatMatrix::from_columns(&cols).expect("uniform columns")).expect("row-stochastic")
}

/// Concave utility with one to three segments of decreasing slope.
pub fn random_plc<R: Rng>(rng: &mut R) -> Plc {
    let segments = rng.gen_range(1..=3);
    let mut slope = ratio(rng.gen_range(2..=6), 2);
    let (mut t, mut u) = (int(0), int(0));
    let mut points = vec![(t.clone(), u.clone())];
    for _ in 0..segments {
        let dt = ratio(rng.gen_range(1..=4), 2);
        t += &dt;
        u += &slope * &dt;
        points.push((t.clone(), u.clone()));
        slope *= ratio(rng.gen_range(1..=4), 5);
    }
    Plc::new(points).expect("decreasing slopes")
}

pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> RatVector {
    loop {
        let beta: RatVector = (0..n).map(|_| ratio(rng.gen_range(-10..=10), 10)).collect();
        if beta.iter().any(|b| *b != int(0)) {
            return beta;
        }
    }
}

/// Payment interval allowed by a constraint class, for sampling.
fn payment_range(class: &ConstraintClass) -> (Rational, Rational) {
    match class {
        ConstraintClass::None => (int(-3), int(3)),
        ConstraintClass::LimitedLiability => (int(0), int(3)),
        ConstraintClass::LimitedLiabilityBudget(b) => (int(0), b.clone()),
        ConstraintClass::BudgetOnly(b) => (b - int(3), b.clone()),
    }
}

pub fn random_payment<R: Rng>(rng: &mut R, m: usize, class: &ConstraintClass) -> RatVector {
    let (lo, hi) = payment_range(class);
    (0..m)
        .map(|_| &lo + (&hi - &lo) * ratio(rng.gen_range(0..=8), 8))
        .collect()
}

/// A random environment. Half the time the gradient is anchored at a
/// utility vector reachable under `anchor` (shifted by a constant), so
/// comparisons are not vacuously infinite on both sides.
pub fn random_environment<R: Rng>(
    rng: &mut R,
    anchor: &Experiment,
    utility: UtilitySpec,
    constraints: ConstraintClass,
) -> Environment {
    let n = anchor.n_states();
    let mu0 = random_prior(rng, n);
    let gradient: RatVector = if rng.gen_bool(0.5) {
        let t = random_payment(rng, anchor.n_realizations(), &constraints);
        let v = utility.apply(&t);
        let shift = ratio(rng.gen_range(-4..=4), 4);
        anchor
            .matrix()
            .mul_vec(&v)
            .expect("conformable")
            .into_iter()
            .map(|x| x + &shift)
            .collect()
    } else {
        (0..n).map(|_| ratio(rng.gen_range(-10..=10), 5)).collect()
    };
    Environment {
        mu0,
        cost: CostSpec {
            gradient,
            cost_level: ratio(rng.gen_range(0..=4), 4),
        },
        outside_option: ratio(rng.gen_range(0..=2), 4),
        utility,
        constraints,
    }
}

pub fn random_budget<R: Rng>(rng: &mut R) -> Rational {
    ratio(rng.gen_range(1..=8), 4)
}
