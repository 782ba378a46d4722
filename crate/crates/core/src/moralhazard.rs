//! The principal's cost-minimization problem for a finite experiment.
//!
//! The agent picks a distribution over states at cost `C`; the principal
//! pays `t(y)` on realization `y`. Only local cost data enters the program:
//! the gradient `g = ∇C(μ0)` and level `c0 = C(μ0)`. Writing `v = u(t)`,
//! the target `μ0` is implemented iff
//!
//! ```text
//!   E·v = g + λ·1 + η,   η ≥ 0,   ηₙ = 0 whenever μ0ₙ > 0      (IC)
//!   μ0·E·v − c0 ≥ u̲                                             (PC)
//! ```
//!
//! and the expected payment `μ0·E·u⁻¹(v)` is minimized. For a piecewise
//! linear concave `u` the inverse is a max of lines, handled with epigraph
//! variables, so every case is a single exact LP.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{dot, int, ones_vec, render_rational, zero_vec, RatMatrix, RatVector, Rational};
use crate::experiments::{Experiment, Prior};
use crate::lp::{solve_lp, Bound, LpOutcome, LpProblem, Sense};
use crate::orders::{dominates, Certificate, Order};

/// Piecewise-linear concave utility through `(0,0)`. The first segment is
/// extended to negative payments and the last one to `+∞`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plc {
    breakpoints: Vec<(Rational, Rational)>,
}

impl Plc {
    pub fn new(breakpoints: Vec<(Rational, Rational)>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidUtility("at least two breakpoints are required".into()));
        }
        if !breakpoints[0].0.is_zero() || !breakpoints[0].1.is_zero() {
            return Err(Error::InvalidUtility("the first breakpoint must be (0,0)".into()));
        }
        let mut prev: Option<Rational> = None;
        for w in breakpoints.windows(2) {
            let (dt, du) = (&w[1].0 - &w[0].0, &w[1].1 - &w[0].1);
            if !dt.is_positive() || !du.is_positive() {
                return Err(Error::InvalidUtility("breakpoints must be strictly increasing in t and u".into()));
            }
            let slope = du / dt;
            if prev.as_ref().is_some_and(|p| slope > *p) {
                return Err(Error::InvalidUtility("slopes must be non-increasing".into()));
            }
            prev = Some(slope);
        }
        Ok(Plc { breakpoints })
    }

    pub fn breakpoints(&self) -> &[(Rational, Rational)] {
        &self.breakpoints
    }

    pub fn slopes(&self) -> Vec<Rational> {
        self.breakpoints
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))
            .collect()
    }

    /// Segment lines `(tₖ, uₖ, sₖ)`.
    fn segments(&self) -> impl Iterator<Item = (&Rational, &Rational, Rational)> + '_ {
        self.breakpoints.iter().zip(self.slopes()).map(|((t, u), s)| (t, u, s))
    }

    pub fn value(&self, t: &Rational) -> Rational {
        self.segments()
            .map(|(tk, uk, s)| uk + s * (t - tk))
            .min()
            .expect("validated")
    }

    pub fn inverse(&self, v: &Rational) -> Rational {
        self.inverse_lines()
            .into_iter()
            .map(|(a, b)| a * v + b)
            .max()
            .expect("validated")
    }

    /// `u⁻¹(v) = max_k (a_k·v + b_k)`.
    pub fn inverse_lines(&self) -> Vec<(Rational, Rational)> {
        self.segments()
            .map(|(tk, uk, s)| {
                let a = s.recip();
                let b = tk - uk * &a;
                (a, b)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UtilitySpec {
    RiskNeutral,
    PiecewiseLinearConcave(Plc),
}

impl UtilitySpec {
    pub fn value(&self, t: &Rational) -> Rational {
        match self {
            UtilitySpec::RiskNeutral => t.clone(),
            UtilitySpec::PiecewiseLinearConcave(p) => p.value(t),
        }
    }

    pub fn inverse(&self, v: &Rational) -> Rational {
        match self {
            UtilitySpec::RiskNeutral => v.clone(),
            UtilitySpec::PiecewiseLinearConcave(p) => p.inverse(v),
        }
    }

    pub fn apply(&self, t: &[Rational]) -> RatVector {
        t.iter().map(|x| self.value(x)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostSpec {
    pub gradient: RatVector,
    pub cost_level: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstraintClass {
    None,
    LimitedLiability,
    /// `0 ≤ t ≤ B`.
    LimitedLiabilityBudget(Rational),
    /// `t ≤ B` only.
    BudgetOnly(Rational),
}

impl ConstraintClass {
    pub fn budget(&self) -> Option<&Rational> {
        match self {
            ConstraintClass::LimitedLiabilityBudget(b) | ConstraintClass::BudgetOnly(b) => Some(b),
            _ => None,
        }
    }

    pub fn limited_liability(&self) -> bool {
        matches!(
            self,
            ConstraintClass::LimitedLiability | ConstraintClass::LimitedLiabilityBudget(_)
        )
    }

    pub fn admits(&self, t: &[Rational]) -> bool {
        let ll = !self.limited_liability() || t.iter().all(|x| !x.is_negative());
        let b = self.budget().is_none_or(|b| t.iter().all(|x| x <= b));
        ll && b
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub mu0: Prior,
    pub cost: CostSpec,
    pub outside_option: Rational,
    pub utility: UtilitySpec,
    pub constraints: ConstraintClass,
}

impl Environment {
    pub fn validate(&self) -> Result<()> {
        if self.cost.gradient.len() != self.mu0.len() {
            return Err(Error::InvalidEnvironment(format!(
                "gradient has {} entries for {} states",
                self.cost.gradient.len(),
                self.mu0.len()
            )));
        }
        if self.cost.cost_level.is_negative() {
            return Err(Error::InvalidEnvironment("cost level must be nonnegative".into()));
        }
        if self.constraints.budget().is_some_and(|b| !b.is_positive()) {
            return Err(Error::InvalidEnvironment("budget must be positive".into()));
        }
        Ok(())
    }

    fn check_dims(&self, e: &Experiment) -> Result<()> {
        self.validate()?;
        if e.n_states() != self.mu0.len() {
            return Err(Error::DimensionMismatch(format!(
                "experiment has {} states, environment has {}",
                e.n_states(),
                self.mu0.len()
            )));
        }
        Ok(())
    }
}

/// Expected payment, with `Infinite` for non-implementable targets.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Cost {
    Finite(Rational),
    Infinite,
}

impl Cost {
    pub fn is_finite(&self) -> bool {
        matches!(self, Cost::Finite(_))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(c) => f.write_str(&render_rational(c)),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MhSolution {
    Optimal {
        cost: Rational,
        t: RatVector,
        lambda: Rational,
        eta: RatVector,
    },
    Infeasible,
}

impl MhSolution {
    pub fn cost(&self) -> Cost {
        match self {
            MhSolution::Optimal { cost, .. } => Cost::Finite(cost.clone()),
            MhSolution::Infeasible => Cost::Infinite,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, MhSolution::Optimal { .. })
    }
}

/// Column positions of the program's variables.
struct Layout {
    m: usize,
    lambda: usize,
    eta: Vec<(usize, usize)>,
}

/// Adds rows to a growing sparse-ish constraint list.
struct Builder {
    rows: Vec<Vec<(usize, Rational)>>,
    b: RatVector,
    bounds: Vec<Bound>,
}

impl Builder {
    fn var(&mut self, bound: Bound) -> usize {
        self.bounds.push(bound);
        self.bounds.len() - 1
    }

    fn row(&mut self, entries: Vec<(usize, Rational)>, rhs: Rational) {
        self.rows.push(entries);
        self.b.push(rhs);
    }

    fn finish(self, sense: Sense, objective: Vec<(usize, Rational)>) -> Result<LpProblem> {
        let n = self.bounds.len();
        let mut a = RatMatrix::zeros(self.rows.len(), n);
        for (i, row) in self.rows.into_iter().enumerate() {
            for (j, v) in row {
                a[(i, j)] += v;
            }
        }
        let mut c = zero_vec(n);
        for (j, v) in objective {
            c[j] += v;
        }
        LpProblem::new(sense, c, a, self.b, self.bounds)
    }
}

fn v_bound(class: &ConstraintClass, u: &UtilitySpec) -> Bound {
    let upper = class.budget().map(|b| u.value(b));
    let lower = class.limited_liability().then(Rational::zero);
    Bound { lower, upper }
}

/// Adds `w_m ≥ u⁻¹(v_m)` rows; returns the first `w` column.
fn add_epigraph(bld: &mut Builder, plc: &Plc, m: usize) -> usize {
    let w0 = bld.bounds.len();
    for _ in 0..m {
        bld.var(Bound::free());
    }
    for (a, b) in plc.inverse_lines() {
        for j in 0..m {
            let slack = bld.var(Bound::nonneg());
            bld.row(vec![(w0 + j, int(1)), (j, -a.clone()), (slack, int(-1))], b.clone());
        }
    }
    w0
}

fn build_program(e: &Experiment, env: &Environment, keep_pc: bool) -> Result<(LpProblem, Layout)> {
    let (n, m) = (e.n_states(), e.n_realizations());
    let mat = e.matrix();
    let mu = env.mu0.as_slice();
    let weights = mat.vec_mul(mu)?;
    let g = &env.cost.gradient;
    // Solve against g − g_N·1 so λ is pinned relative to one state.
    let shift = g[n - 1].clone();

    let mut bld = Builder {
        rows: Vec::new(),
        b: Vec::new(),
        bounds: Vec::new(),
    };
    let vb = v_bound(&env.constraints, &env.utility);
    for _ in 0..m {
        bld.var(vb.clone());
    }
    let lambda = bld.var(Bound::free());
    let eta: Vec<(usize, usize)> = (0..n)
        .filter(|&i| mu[i].is_zero())
        .map(|i| (i, bld.var(Bound::nonneg())))
        .collect();
    for i in 0..n {
        let mut row: Vec<(usize, Rational)> = (0..m).map(|j| (j, mat[(i, j)].clone())).collect();
        row.push((lambda, int(-1)));
        if let Some(&(_, col)) = eta.iter().find(|(s, _)| *s == i) {
            row.push((col, int(-1)));
        }
        bld.row(row, &g[i] - &shift);
    }
    if keep_pc {
        let s = bld.var(Bound::nonneg());
        let mut row: Vec<(usize, Rational)> = weights.iter().cloned().enumerate().collect();
        row.push((s, int(-1)));
        bld.row(row, &env.cost.cost_level + &env.outside_option);
    }
    let w = match &env.utility {
        UtilitySpec::RiskNeutral => None,
        UtilitySpec::PiecewiseLinearConcave(plc) => Some(add_epigraph(&mut bld, plc, m)),
    };
    let base = w.unwrap_or(0);
    let objective = weights.into_iter().enumerate().map(|(j, q)| (base + j, q)).collect();
    let lp = bld.finish(Sense::Min, objective)?;
    Ok((lp, Layout { m, lambda, eta }))
}

/// Minimum expected payment implementing `μ0` under `env`.
pub fn solve(e: &Experiment, env: &Environment) -> Result<MhSolution> {
    env.check_dims(e)?;
    let (lp, layout) = build_program(e, env, true)?;
    let x = match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => x,
        LpOutcome::Infeasible { .. } => return Ok(MhSolution::Infeasible),
        LpOutcome::Unbounded { .. } => return Err(Error::Solver("cost program reported unbounded".into())),
    };
    let t: RatVector = x[..layout.m].iter().map(|v| env.utility.inverse(v)).collect();
    let weights = e.matrix().vec_mul(env.mu0.as_slice())?;
    let n = e.n_states();
    let mut eta = zero_vec(n);
    for &(state, col) in &layout.eta {
        eta[state] = x[col].clone();
    }
    Ok(MhSolution::Optimal {
        cost: dot(&weights, &t),
        lambda: &x[layout.lambda] - &env.cost.gradient[n - 1],
        t,
        eta,
    })
}

/// Whether `μ0` can be implemented at all, ignoring participation.
pub fn implementable(e: &Experiment, env: &Environment) -> Result<bool> {
    implementable_with(e, env, false)
}

/// As [`implementable`], optionally keeping the participation constraint
/// (which matters once payments are bounded).
pub fn implementable_with(e: &Experiment, env: &Environment, keep_pc: bool) -> Result<bool> {
    env.check_dims(e)?;
    let (lp, _) = build_program(e, env, keep_pc)?;
    // Without PC the cost can be unbounded below, which still means feasible.
    Ok(!matches!(solve_lp(&lp)?, LpOutcome::Infeasible { .. }))
}

/// Does `t` satisfy the first-order conditions for some `λ`, `η`?
pub fn check_ic(e: &Experiment, t: &[Rational], env: &Environment) -> Result<bool> {
    env.check_dims(e)?;
    let n = e.n_states();
    let utility = e.matrix().mul_vec(&env.utility.apply(t))?;
    let rhs: RatVector = utility.iter().zip(&env.cost.gradient).map(|(x, g)| x - g).collect();
    let zero_states: Vec<usize> = (0..n).filter(|&i| env.mu0.as_slice()[i].is_zero()).collect();
    let mut a = RatMatrix::zeros(n, 1 + zero_states.len());
    let mut bounds = vec![Bound::free()];
    for i in 0..n {
        a[(i, 0)] = int(1);
    }
    for (k, &i) in zero_states.iter().enumerate() {
        a[(i, k + 1)] = int(1);
        bounds.push(Bound::nonneg());
    }
    let lp = LpProblem::feasibility(a, rhs, bounds)?;
    Ok(solve_lp(&lp)?.is_optimal())
}

pub fn check_pc(e: &Experiment, t: &[Rational], env: &Environment) -> Result<bool> {
    env.check_dims(e)?;
    let utility = e.matrix().mul_vec(&env.utility.apply(t))?;
    let value = dot(env.mu0.as_slice(), &utility) - &env.cost.cost_level;
    Ok(value >= env.outside_option)
}

/// `μ·E·u(t) − C(μ)`, with the cost level supplied by the caller.
pub fn agent_payoff(
    mu: &Prior,
    e: &Experiment,
    t: &[Rational],
    env: &Environment,
    cost_at_mu: &Rational,
) -> Result<Rational> {
    if mu.len() != e.n_states() || t.len() != e.n_realizations() {
        return Err(Error::DimensionMismatch(format!(
            "payoff needs {} states and {} payments",
            e.n_states(),
            e.n_realizations()
        )));
    }
    let utility = e.matrix().mul_vec(&env.utility.apply(t))?;
    Ok(dot(mu.as_slice(), &utility) - cost_at_mu)
}

/// Is `x = E·u(t)` for some `t ≥ 0` with `μ0·E·t ≤ B`?
pub fn vplus_membership(e: &Experiment, x: &[Rational], mu0: &Prior, u: &UtilitySpec, budget: &Rational) -> Result<bool> {
    let (n, m) = (e.n_states(), e.n_realizations());
    if x.len() != n || mu0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "point has {} entries, prior {}, experiment {} states",
            x.len(),
            mu0.len(),
            n
        )));
    }
    let mat = e.matrix();
    let weights = mat.vec_mul(mu0.as_slice())?;
    let mut bld = Builder {
        rows: Vec::new(),
        b: Vec::new(),
        bounds: Vec::new(),
    };
    for _ in 0..m {
        bld.var(Bound::nonneg());
    }
    for i in 0..n {
        bld.row((0..m).map(|j| (j, mat[(i, j)].clone())).collect(), x[i].clone());
    }
    let pay = match u {
        UtilitySpec::RiskNeutral => 0,
        UtilitySpec::PiecewiseLinearConcave(plc) => add_epigraph(&mut bld, plc, m),
    };
    let s = bld.var(Bound::nonneg());
    let mut row: Vec<(usize, Rational)> = weights.into_iter().enumerate().map(|(j, q)| (pay + j, q)).collect();
    row.push((s, int(1)));
    bld.row(row, budget.clone());
    let lp = bld.finish(Sense::Min, Vec::new())?;
    Ok(solve_lp(&lp)?.is_optimal())
}

/// An environment built from an order-failure witness, with both costs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub order: Order,
    pub env: Environment,
    /// Witness point of the dominated experiment's set.
    pub witness: RatVector,
    /// The Zon construction used `1 − witness` as gradient.
    pub reflected: bool,
    /// Cost under the experiment that fails to dominate.
    pub cost_e: Cost,
    /// Cost under the other experiment.
    pub cost_e2: Cost,
}

impl Counterexample {
    pub fn strict(&self) -> bool {
        self.cost_e > self.cost_e2
    }
}

fn witness_of(order: Order, e: &Experiment, e2: &Experiment) -> Result<RatVector> {
    let verdict = dominates(order, e, e2)?;
    if verdict.dominates {
        return Err(Error::OrderActuallyHolds(order));
    }
    match verdict.certificate {
        Certificate::Witness { point, .. } => Ok(point),
        _ => Err(Error::Solver("negative verdict without witness".into())),
    }
}

fn risk_neutral_env(g: RatVector, cost_level: Rational, constraints: ConstraintClass) -> Environment {
    Environment {
        mu0: Prior::uniform(g.len()),
        cost: CostSpec {
            gradient: g,
            cost_level,
        },
        outside_option: Rational::zero(),
        utility: UtilitySpec::RiskNeutral,
        constraints,
    }
}

fn default_cost_level(mu0: &Prior, g: &[Rational]) -> Rational {
    let mean = dot(mu0.as_slice(), g).min(Rational::one());
    mean.max(Rational::zero()) / int(2)
}

/// Turns a failure of `e ≥ e2` in `order` into an environment where `e`
/// is strictly more expensive than `e2`.
pub fn construct_counterexample(order: Order, e: &Experiment, e2: &Experiment) -> Result<Counterexample> {
    let class = match order {
        Order::Col => ConstraintClass::None,
        Order::Cone => ConstraintClass::LimitedLiability,
        Order::Zon => ConstraintClass::LimitedLiabilityBudget(int(1)),
        Order::Blackwell => {
            return Err(Error::Unsupported(
                "counterexamples are constructed for the col, cone and zon orders".into(),
            ))
        }
    };
    let x = witness_of(order, e, e2)?;
    let mut candidates = vec![(x.clone(), false)];
    if order == Order::Zon {
        candidates.push((ones_vec(x.len()).iter().zip(&x).map(|(o, p)| o - p).collect(), true));
    }
    for zero_level in [false, true] {
        for (g, reflected) in &candidates {
            let mu0 = Prior::uniform(g.len());
            let c0 = if zero_level {
                Rational::zero()
            } else {
                default_cost_level(&mu0, g)
            };
            let env = risk_neutral_env(g.clone(), c0, class.clone());
            let ce = Counterexample {
                order,
                cost_e: solve(e, &env)?.cost(),
                cost_e2: solve(e2, &env)?.cost(),
                env,
                witness: x.clone(),
                reflected: *reflected,
            };
            if ce.strict() {
                return Ok(ce);
            }
        }
    }
    Err(Error::NoReversal(order))
}

/// Budget-only variant for a Cone failure: with `g = 1 − x`, `t ≤ 1` and
/// `c0 = 1 − μ0·x`, the smaller experiment pays `1 − x` on the witness
/// column while the larger one cannot implement the target at all.
pub fn construct_budget_counterexample(e: &Experiment, e2: &Experiment) -> Result<Counterexample> {
    let x = witness_of(Order::Cone, e, e2)?;
    let mu0 = Prior::uniform(x.len());
    let g: RatVector = x.iter().map(|p| Rational::one() - p).collect();
    let c0 = Rational::one() - dot(mu0.as_slice(), &x);
    let env = risk_neutral_env(g, c0, ConstraintClass::BudgetOnly(int(1)));
    let ce = Counterexample {
        order: Order::Cone,
        cost_e: solve(e, &env)?.cost(),
        cost_e2: solve(e2, &env)?.cost(),
        env,
        witness: x,
        reflected: false,
    };
    if ce.strict() {
        Ok(ce)
    } else {
        Err(Error::NoReversal(Order::Cone))
    }
}
