//! Exact two-phase primal simplex over the rationals.
//!
//! Problems are stated as `optimize c·x` subject to `A·x = b` and per-variable
//! bounds `lower ≤ x ≤ upper` where either side may be infinite. Internally
//! every variable is shifted, flipped or split into nonnegative parts, finite
//! upper bounds become extra equality rows with slacks, and a dense tableau
//! is pivoted with Bland's smallest-index rule.
//!
//! Every outcome carries a certificate that [`check_certificate`] verifies
//! by substitution:
//!
//! * `Optimal`: the point itself (plus basis duals for the original rows).
//! * `Infeasible`: a Farkas vector `y` over the original rows with
//!   `sup { yᵀA·x : lower ≤ x ≤ upper } < yᵀb`.
//! * `Unbounded`: a feasible point and an improving recession direction.

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{dot, zero_vec, RatMatrix, RatVector, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Variable bounds; `None` stands for an infinite side.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

impl Bound {
    pub fn free() -> Self {
        Self {
            lower: None,
            upper: None,
        }
    }

    pub fn nonneg() -> Self {
        Self {
            lower: Some(Rational::zero()),
            upper: None,
        }
    }

    pub fn between(lower: Rational, upper: Rational) -> Self {
        Self {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    pub fn at_most(upper: Rational) -> Self {
        Self {
            lower: None,
            upper: Some(upper),
        }
    }

    pub fn fixed(value: Rational) -> Self {
        Self::between(value.clone(), value)
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lower.as_ref().is_none_or(|l| l <= x) && self.upper.as_ref().is_none_or(|u| x <= u)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LpProblem {
    pub sense: Sense,
    pub c: RatVector,
    pub a: RatMatrix,
    pub b: RatVector,
    pub bounds: Vec<Bound>,
}

impl LpProblem {
    pub fn new(sense: Sense, c: RatVector, a: RatMatrix, b: RatVector, bounds: Vec<Bound>) -> Result<Self> {
        let p = Self {
            sense,
            c,
            a,
            b,
            bounds,
        };
        p.validate()?;
        Ok(p)
    }

    /// Feasibility problem with a zero objective.
    pub fn feasibility(a: RatMatrix, b: RatVector, bounds: Vec<Bound>) -> Result<Self> {
        let c = zero_vec(a.cols());
        Self::new(Sense::Min, c, a, b, bounds)
    }

    pub fn num_vars(&self) -> usize {
        self.a.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.a.cols();
        if self.c.len() != n || self.bounds.len() != n || self.b.len() != self.a.rows() {
            return Err(Error::DimensionMismatch(format!(
                "A is {}x{}, c has {}, b has {}, bounds has {}",
                self.a.rows(),
                n,
                self.c.len(),
                self.b.len(),
                self.bounds.len()
            )));
        }
        for (j, bd) in self.bounds.iter().enumerate() {
            if let (Some(l), Some(u)) = (&bd.lower, &bd.upper) {
                if l > u {
                    return Err(Error::InvalidBounds(j));
                }
            }
        }
        Ok(())
    }

    pub fn is_feasible_point(&self, x: &[Rational]) -> bool {
        x.len() == self.num_vars()
            && self.bounds.iter().zip(x).all(|(b, v)| b.contains(v))
            && self.a.mul_vec(x).is_ok_and(|ax| ax == self.b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal {
        x: RatVector,
        value: Rational,
        /// Simplex multipliers of the original rows at the final basis.
        duals: RatVector,
    },
    Infeasible {
        farkas: RatVector,
    },
    Unbounded {
        x: RatVector,
        ray: RatVector,
    },
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// `x = lower + y`; a finite upper bound adds a row `y + s = upper - lower`.
    Shift { col: usize, lower: Rational },
    /// `x = upper - y`.
    Flip { col: usize, upper: Rational },
    /// `x = y⁺ - y⁻`.
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    a: Vec<Vec<Rational>>,
    b: RatVector,
    c: RatVector,
    maps: Vec<VarMap>,
    original_rows: usize,
}

fn standardize(p: &LpProblem) -> StandardForm {
    let m = p.a.rows();
    let mut maps = Vec::with_capacity(p.num_vars());
    let mut ncols = 0usize;
    let mut upper_rows: Vec<(usize, Rational)> = Vec::new();
    for bd in &p.bounds {
        match (&bd.lower, &bd.upper) {
            (Some(l), u) => {
                maps.push(VarMap::Shift {
                    col: ncols,
                    lower: l.clone(),
                });
                if let Some(u) = u {
                    upper_rows.push((ncols, u - l));
                }
                ncols += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Flip {
                    col: ncols,
                    upper: u.clone(),
                });
                ncols += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
        }
    }
    let slack_base = ncols;
    ncols += upper_rows.len();

    let sign = if p.sense == Sense::Max {
        -Rational::one()
    } else {
        Rational::one()
    };
    let mut a = vec![zero_vec(ncols); m + upper_rows.len()];
    let mut b = p.b.clone();
    let mut c = zero_vec(ncols);
    for (j, map) in maps.iter().enumerate() {
        let cj = &sign * &p.c[j];
        match map {
            VarMap::Shift { col, lower } => {
                for i in 0..m {
                    let aij = &p.a[(i, j)];
                    a[i][*col] = aij.clone();
                    b[i] -= aij * lower;
                }
                c[*col] = cj;
            }
            VarMap::Flip { col, upper } => {
                for i in 0..m {
                    let aij = &p.a[(i, j)];
                    a[i][*col] = -aij.clone();
                    b[i] -= aij * upper;
                }
                c[*col] = -cj;
            }
            VarMap::Split { pos, neg } => {
                for i in 0..m {
                    let aij = &p.a[(i, j)];
                    a[i][*pos] = aij.clone();
                    a[i][*neg] = -aij.clone();
                }
                c[*pos] = cj.clone();
                c[*neg] = -cj;
            }
        }
    }
    for (k, (col, width)) in upper_rows.into_iter().enumerate() {
        a[m + k][col] = Rational::one();
        a[m + k][slack_base + k] = Rational::one();
        b.push(width);
    }
    StandardForm {
        a,
        b,
        c,
        maps,
        original_rows: m,
    }
}

fn recover(maps: &[VarMap], y: &[Rational], direction: bool) -> RatVector {
    maps.iter()
        .map(|map| match map {
            VarMap::Shift { col, lower } => {
                if direction {
                    y[*col].clone()
                } else {
                    lower + &y[*col]
                }
            }
            VarMap::Flip { col, upper } => {
                if direction {
                    -y[*col].clone()
                } else {
                    upper - &y[*col]
                }
            }
            VarMap::Split { pos, neg } => &y[*pos] - &y[*neg],
        })
        .collect()
}

/// Dense simplex tableau `[A | I_art]` kept in the form `B⁻¹[A | I]`.
struct Tableau {
    t: Vec<Vec<Rational>>,
    rhs: RatVector,
    basis: Vec<usize>,
    n_struct: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let inv = self.t[row][col].recip();
        for v in self.t[row].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        self.rhs[row] *= &inv;
        let pivot_row = self.t[row].clone();
        let pivot_rhs = self.rhs[row].clone();
        for i in 0..self.t.len() {
            if i == row || self.t[i][col].is_zero() {
                continue;
            }
            let f = self.t[i][col].clone();
            for (v, pv) in self.t[i].iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
            self.rhs[i] -= &f * &pivot_rhs;
        }
        self.basis[row] = col;
    }

    fn reduced_cost(&self, cost: &[Rational], j: usize) -> Rational {
        let mut r = cost[j].clone();
        for (i, &bi) in self.basis.iter().enumerate() {
            if !cost[bi].is_zero() && !self.t[i][j].is_zero() {
                r -= &cost[bi] * &self.t[i][j];
            }
        }
        r
    }

    /// Runs Bland-rule iterations over the columns `0..limit`. Returns the
    /// unbounded entering column if one is found.
    fn optimize(&mut self, cost: &[Rational], limit: usize) -> Option<usize> {
        loop {
            let entering = (0..limit).find(|&j| !self.basis.contains(&j) && self.reduced_cost(cost, j).is_negative());
            let Some(j) = entering else {
                return None;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.t.len() {
                if !self.t[i][j].is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / &self.t[i][j];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((i, _)) => self.pivot(i, j),
                None => return Some(j),
            }
        }
    }

    /// `c_Bᵀ B⁻¹`, read off the artificial identity block.
    fn multipliers(&self, cost: &[Rational]) -> RatVector {
        let rows = self.t.len();
        (0..rows)
            .map(|k| {
                let col = self.n_struct + k;
                self.basis.iter().enumerate().fold(Rational::zero(), |acc, (i, &bi)| {
                    if cost[bi].is_zero() {
                        acc
                    } else {
                        acc + &cost[bi] * &self.t[i][col]
                    }
                })
            })
            .collect()
    }

    fn primal(&self) -> RatVector {
        let mut y = zero_vec(self.n_struct);
        for (i, &bi) in self.basis.iter().enumerate() {
            if bi < self.n_struct {
                y[bi] = self.rhs[i].clone();
            }
        }
        y
    }
}

/// Solves the problem exactly. Bland's rule makes the result deterministic.
pub fn solve_lp(p: &LpProblem) -> Result<LpOutcome> {
    p.validate()?;
    let sf = standardize(p);
    let rows = sf.a.len();
    let n = sf.c.len();

    // Phase 1: flip rows to a nonnegative right-hand side, add artificials.
    let signs: Vec<Rational> = sf
        .b
        .iter()
        .map(|v| if v.is_negative() { -Rational::one() } else { Rational::one() })
        .collect();
    let mut t = Vec::with_capacity(rows);
    let mut rhs = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut row: Vec<Rational> = sf.a[i].iter().map(|v| v * &signs[i]).collect();
        row.extend((0..rows).map(|k| if k == i { Rational::one() } else { Rational::zero() }));
        t.push(row);
        rhs.push(&sf.b[i] * &signs[i]);
    }
    let mut tab = Tableau {
        t,
        rhs,
        basis: (n..n + rows).collect(),
        n_struct: n,
    };
    let mut phase1_cost = zero_vec(n + rows);
    for v in phase1_cost.iter_mut().skip(n) {
        *v = Rational::one();
    }
    let unbounded = tab.optimize(&phase1_cost, n);
    debug_assert!(unbounded.is_none(), "phase 1 is bounded below by zero");
    let infeasibility: Rational = tab
        .basis
        .iter()
        .zip(&tab.rhs)
        .filter(|(&bi, _)| bi >= n)
        .fold(Rational::zero(), |acc, (_, v)| acc + v);
    if infeasibility.is_positive() {
        let y = tab.multipliers(&phase1_cost);
        let farkas = y
            .iter()
            .zip(&signs)
            .take(sf.original_rows)
            .map(|(yi, s)| yi * s)
            .collect();
        return Ok(LpOutcome::Infeasible { farkas });
    }

    // Drive zero-level artificials out of the basis where possible; rows
    // where that fails are redundant and keep their artificial at zero.
    for i in 0..rows {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| !tab.t[i][j].is_zero() && !tab.basis.contains(&j)) {
                tab.pivot(i, j);
            }
        }
    }

    let mut phase2_cost = sf.c.clone();
    phase2_cost.extend(zero_vec(rows));
    if let Some(entering) = tab.optimize(&phase2_cost, n) {
        let y = tab.primal();
        let mut dir = zero_vec(n);
        dir[entering] = Rational::one();
        for (i, &bi) in tab.basis.iter().enumerate() {
            if bi < n {
                dir[bi] = -tab.t[i][entering].clone();
            }
        }
        let x = recover(&sf.maps, &y, false);
        let ray = recover(&sf.maps, &dir, true);
        return Ok(LpOutcome::Unbounded { x, ray });
    }

    let y = tab.primal();
    let x = recover(&sf.maps, &y, false);
    let value = dot(&p.c, &x);
    let sense_sign = if p.sense == Sense::Max {
        -Rational::one()
    } else {
        Rational::one()
    };
    let duals = tab
        .multipliers(&phase2_cost)
        .iter()
        .zip(&signs)
        .take(sf.original_rows)
        .map(|(yi, s)| yi * s * &sense_sign)
        .collect();
    Ok(LpOutcome::Optimal { x, value, duals })
}

/// `sup { w·x : x within bounds }`, or `None` when it is `+∞`.
pub fn box_support(w: &[Rational], bounds: &[Bound]) -> Option<Rational> {
    let mut total = Rational::zero();
    for (wj, bd) in w.iter().zip(bounds) {
        if wj.is_zero() {
            continue;
        }
        let side = if wj.is_positive() { &bd.upper } else { &bd.lower };
        total += wj * side.as_ref()?;
    }
    Some(total)
}

/// True iff the outcome's claims hold for `p` by exact substitution.
pub fn check_certificate(p: &LpProblem, o: &LpOutcome) -> bool {
    if p.validate().is_err() {
        return false;
    }
    match o {
        LpOutcome::Optimal { x, value, .. } => p.is_feasible_point(x) && dot(&p.c, x) == *value,
        LpOutcome::Infeasible { farkas } => {
            if farkas.len() != p.a.rows() {
                return false;
            }
            let Ok(w) = p.a.vec_mul(farkas) else {
                return false;
            };
            match box_support(&w, &p.bounds) {
                Some(sup) => sup < dot(farkas, &p.b),
                None => false,
            }
        }
        LpOutcome::Unbounded { x, ray } => {
            if !p.is_feasible_point(x) || ray.len() != p.num_vars() {
                return false;
            }
            let in_recession_cone = p.bounds.iter().zip(ray).all(|(bd, d)| {
                (bd.lower.is_none() || !d.is_negative()) && (bd.upper.is_none() || !d.is_positive())
            });
            let flat = p.a.mul_vec(ray).is_ok_and(|v| v.iter().all(Zero::is_zero));
            let gain = dot(&p.c, ray);
            let improving = match p.sense {
                Sense::Min => gain.is_negative(),
                Sense::Max => gain.is_positive(),
            };
            in_recession_cone && flat && improving
        }
    }
}
