//! Brute-force checks that share no code path with the LP-based deciders.

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactnum::{dot, int, ratio, RatMatrix, RatVector, Rational};
use crate::experiments::{posteriors, support_function, Experiment, PosteriorDistribution, Prior};
use crate::moralhazard::UtilitySpec;

pub const FACET_MAX_STATES: usize = 4;
pub const FACET_MAX_REALIZATIONS: usize = 12;

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// Candidate facet normals of `Zon E` inside `Col E`, plus the signed axes.
pub fn facet_normals(matrix: &RatMatrix) -> Vec<RatVector> {
    let n = matrix.rows();
    let r = matrix.rank();
    let left_null = matrix.left_null_space();
    let columns = matrix.columns();
    let mut normals = Vec::new();
    for subset in combinations(matrix.cols(), r.saturating_sub(1)) {
        let mut rows: Vec<RatVector> = subset.iter().map(|&j| columns[j].clone()).collect();
        rows.extend(left_null.iter().cloned());
        let basis = if rows.is_empty() {
            (0..n).map(|i| unit(n, i)).collect()
        } else {
            RatMatrix::from_rows(rows).expect("uniform rows").null_space()
        };
        if basis.len() != 1 {
            continue;
        }
        let beta = basis.into_iter().next().unwrap();
        normals.push(beta.iter().map(|b| -b.clone()).collect());
        normals.push(beta);
    }
    for i in 0..n {
        let axis = unit(n, i);
        normals.push(axis.iter().map(|b| -b.clone()).collect());
        normals.push(axis);
    }
    normals.sort();
    normals.dedup();
    normals
}

fn unit(n: usize, i: usize) -> RatVector {
    (0..n).map(|k| if k == i { int(1) } else { int(0) }).collect()
}

/// `p ∈ Zon E`, decided by checking every candidate facet inequality.
pub fn zon_membership_by_facets(e: &Experiment, p: &[Rational]) -> Result<bool> {
    let (n, m) = (e.n_states(), e.n_realizations());
    if n > FACET_MAX_STATES || m > FACET_MAX_REALIZATIONS {
        return Err(Error::DimensionCap(format!(
            "facet enumeration supports N ≤ {FACET_MAX_STATES} and M ≤ {FACET_MAX_REALIZATIONS}, got {n} × {m}"
        )));
    }
    if p.len() != n {
        return Err(Error::DimensionMismatch(format!("point has {} entries, expected {n}", p.len())));
    }
    if e.matrix().solve_exact(p)?.is_none() {
        return Ok(false);
    }
    for beta in facet_normals(e.matrix()) {
        if dot(&beta, p) > support_function(e.matrix(), &beta)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All points of the simplex with denominators dividing `resolution`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexGrid {
    pub resolution: usize,
    pub points: Vec<RatVector>,
}

impl SimplexGrid {
    /// Points come out in lexicographic order.
    pub fn new(n_states: usize, resolution: usize) -> Self {
        fn go(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if parts == 1 {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
                return;
            }
            for a in 0..=left {
                cur.push(a);
                go(left - a, parts - 1, cur, out);
                cur.pop();
            }
        }
        let mut raw = Vec::new();
        if n_states > 0 {
            go(resolution, n_states, &mut Vec::new(), &mut raw);
        }
        let k = resolution.max(1) as i64;
        let points = raw
            .into_iter()
            .map(|c| c.into_iter().map(|a| ratio(a as i64, k)).collect())
            .collect();
        SimplexGrid { resolution, points }
    }
}

/// `C(μ) = scale · |μ − center|²`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticCost {
    pub center: Prior,
    pub scale: Rational,
}

impl QuadraticCost {
    pub fn value(&self, mu: &[Rational]) -> Rational {
        let sq: Rational = mu
            .iter()
            .zip(self.center.as_slice())
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        &self.scale * sq
    }

    pub fn gradient(&self, mu: &[Rational]) -> RatVector {
        mu.iter()
            .zip(self.center.as_slice())
            .map(|(a, c)| int(2) * &self.scale * (a - c))
            .collect()
    }

    /// The cost whose gradient at `mu0` equals `g` up to a multiple of `1`.
    /// `None` if the implied center leaves the simplex at this scale.
    pub fn matching(mu0: &Prior, g: &[Rational], scale: Rational) -> Option<Self> {
        let n = g.len() as i64;
        let mean: Rational = g.iter().sum::<Rational>() / int(n);
        let two_s = int(2) * &scale;
        let center: RatVector = mu0
            .as_slice()
            .iter()
            .zip(g)
            .map(|(m, gi)| m - (gi - &mean) / &two_s)
            .collect();
        let center = Prior::new(center).ok()?;
        Some(QuadraticCost { center, scale })
    }
}

/// The agent's best grid response to payments `t`; ties go to the
/// lexicographically smallest point.
pub fn grid_best_response(
    e: &Experiment,
    t: &[Rational],
    u: &UtilitySpec,
    cost: &QuadraticCost,
    grid: &SimplexGrid,
) -> Result<Prior> {
    let utility = e.matrix().mul_vec(&u.apply(t))?;
    let mut best: Option<(Rational, &RatVector)> = None;
    for mu in &grid.points {
        let payoff = dot(mu, &utility) - cost.value(mu);
        if best.as_ref().is_none_or(|(b, _)| payoff > *b) {
            best = Some((payoff, mu));
        }
    }
    let (_, mu) = best.ok_or_else(|| Error::InvalidPrior("empty grid".into()))?;
    Prior::new(mu.clone())
}

/// `φ(s) = Σ cₖ·max(0, s − θₖ)`; affine parts cancel between two
/// distributions with the same barycenter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hinges {
    pub kinks: Vec<(Rational, Rational)>,
}

impl Hinges {
    pub fn eval(&self, s: &Rational) -> Rational {
        self.kinks
            .iter()
            .map(|(c, theta)| {
                let d = s - theta;
                if d.is_positive() {
                    c * d
                } else {
                    Rational::zero()
                }
            })
            .sum()
    }
}

fn expectation(dist: &PosteriorDistribution, beta: &[Rational], phi: &Hinges) -> Rational {
    dist.atoms
        .iter()
        .map(|a| &a.weight * phi.eval(&dot(beta, &a.posterior)))
        .sum()
}

fn random_trial(rng: &mut ChaCha8Rng, n: usize, d1: &PosteriorDistribution, d2: &PosteriorDistribution) -> (RatVector, Hinges) {
    let beta: RatVector = (0..n).map(|_| ratio(rng.gen_range(-10..=10), 10)).collect();
    let values: Vec<Rational> = d1
        .atoms
        .iter()
        .chain(&d2.atoms)
        .map(|a| dot(&beta, &a.posterior))
        .collect();
    let lo = values.iter().min().cloned().unwrap_or_default();
    let hi = values.iter().max().cloned().unwrap_or_default();
    let kinks = (0..rng.gen_range(1..=3))
        .map(|_| {
            let c = int(rng.gen_range(1..=10));
            let w = ratio(rng.gen_range(0..=100), 100);
            let theta = &lo + (&hi - &lo) * w;
            (c, theta)
        })
        .collect();
    (beta, Hinges { kinks })
}

/// Samples `(β, φ)` and checks `E[φ(β·x)]` under `⟨E|μ0⟩` is at least that
/// under `⟨E′|μ0⟩`. `false` on the first violation found.
pub fn mc_lcx_check(e: &Experiment, e2: &Experiment, mu0: &Prior, trials: usize, seed: u64) -> Result<bool> {
    mc_lcx_check_with(e, e2, mu0, trials, seed, &[])
}

/// As [`mc_lcx_check`], also trying each zonotope direction `γ` in
/// `injected` as `β = γ ⊘ μ0` with `φ(s) = max(0, s)`, whose expectation
/// under `⟨E|μ0⟩` is exactly `support_function(E, γ)`.
pub fn mc_lcx_check_with(
    e: &Experiment,
    e2: &Experiment,
    mu0: &Prior,
    trials: usize,
    seed: u64,
    injected: &[RatVector],
) -> Result<bool> {
    mu0.require_interior()?;
    if e.n_states() != e2.n_states() {
        return Err(Error::StateCountMismatch(e.n_states(), e2.n_states()));
    }
    let d1 = posteriors(e, mu0)?;
    let d2 = posteriors(e2, mu0)?;
    let n = e.n_states();
    let holds = |beta: &[Rational], phi: &Hinges| expectation(&d1, beta, phi) >= expectation(&d2, beta, phi);

    let relu = Hinges {
        kinks: vec![(int(1), Rational::zero())],
    };
    for gamma in injected {
        if gamma.len() != n {
            return Err(Error::DimensionMismatch(format!("direction has {} entries, expected {n}", gamma.len())));
        }
        let beta: RatVector = gamma.iter().zip(mu0.as_slice()).map(|(g, m)| g / m).collect();
        if !holds(&beta, &relu) {
            return Ok(false);
        }
    }
    let violated = (0..trials).into_par_iter().any(|i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let (beta, phi) = random_trial(&mut rng, n, &d1, &d2);
        !holds(&beta, &phi)
    });
    Ok(!violated)
}

/// `Σₘ max_{t ≥ 0} (βE)ₘ·u(t) − (μ0E)ₘ·t` for one matrix.
fn lagrangian_side(matrix: &RatMatrix, beta: &[Rational], mu0: &Prior, u: &UtilitySpec) -> Result<Rational> {
    let a = matrix.vec_mul(beta)?;
    let c = matrix.vec_mul(mu0.as_slice())?;
    let mut total = Rational::zero();
    for (m, (a, c)) in a.iter().zip(&c).enumerate() {
        if !a.is_positive() {
            continue;
        }
        let (points, last_slope) = match u {
            UtilitySpec::RiskNeutral => (vec![Rational::zero()], int(1)),
            UtilitySpec::PiecewiseLinearConcave(plc) => (
                plc.breakpoints().iter().map(|(t, _)| t.clone()).collect(),
                plc.slopes().last().cloned().expect("validated"),
            ),
        };
        if a * &last_slope > *c {
            return Err(Error::UnboundedColumn(m));
        }
        let best = points
            .iter()
            .map(|t| a * u.value(t) - c * t)
            .max()
            .unwrap_or_default();
        total += best.max(Rational::zero());
    }
    Ok(total)
}

/// Both sides of the Lagrangian comparison between `E` and `E′` at `β`.
pub fn lagrangian_gap(
    e: &Experiment,
    e2: &Experiment,
    beta: &[Rational],
    mu0: &Prior,
    u: &UtilitySpec,
) -> Result<(Rational, Rational)> {
    if e.n_states() != e2.n_states() {
        return Err(Error::StateCountMismatch(e.n_states(), e2.n_states()));
    }
    if beta.len() != e.n_states() || mu0.len() != e.n_states() {
        return Err(Error::DimensionMismatch("direction or prior length differs from the state count".into()));
    }
    Ok((
        lagrangian_side(e.matrix(), beta, mu0, u)?,
        lagrangian_side(e2.matrix(), beta, mu0, u)?,
    ))
}
