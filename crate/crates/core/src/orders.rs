//! Deciding the column-space, conic-span, zonotope and Blackwell orders.
//!
//! `E ≥ E′` in an order means the set generated by `E` contains the set
//! generated by `E′`:
//!
//! | order     | set                         | positive certificate          |
//! |-----------|-----------------------------|-------------------------------|
//! | Col       | `{E·v}`                     | `E′ = E·G`                    |
//! | Cone      | `{E·v : v ≥ 0}`             | `E′ = E·G`, `G ≥ 0`           |
//! | Zon       | `{E·v : 0 ≤ v ≤ 1}`         | every subset sum `= E·h_S`    |
//! | Blackwell | garbling                    | `E′ = E·G`, `G ≥ 0`, `G·1 = 1`|
//!
//! Negative answers come with a witness point of the smaller set and a
//! separating direction `β`, which for the LP-backed orders is the Farkas
//! vector returned by the simplex solver.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exactnum::{dot, ones_vec, zero_vec, RatMatrix, RatVector, Rational};
use crate::experiments::{
    subset_sums, support_function, weighted_experiment, Experiment, Prior, DEFAULT_REALIZATION_CAP,
};
use crate::lp::{check_certificate, solve_lp, Bound, LpOutcome, LpProblem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Col,
    Cone,
    Zon,
    Blackwell,
}

impl Order {
    pub const ALL: [Order; 4] = [Order::Col, Order::Cone, Order::Zon, Order::Blackwell];

    pub fn as_str(self) -> &'static str {
        match self {
            Order::Col => "col",
            Order::Cone => "cone",
            Order::Zon => "zon",
            Order::Blackwell => "blackwell",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Order {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "col" => Ok(Order::Col),
            "cone" => Ok(Order::Cone),
            "zon" => Ok(Order::Zon),
            "blackwell" | "b" => Ok(Order::Blackwell),
            other => Err(format!("unknown order {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Certificate {
    /// `E′ = E·G` (Col, Cone).
    FactorG(RatMatrix),
    /// Column `subset_map[S]` of `h` reproduces the subset sum `S` of `E′`
    /// (subsets encoded as bitmasks over the columns of `E′`).
    FactorH { h: RatMatrix, subset_map: Vec<usize> },
    /// A garbling `G ≥ 0`, `G·1 = 1` with `E′ = E·G`.
    Garbling(RatMatrix),
    /// A point of the smaller set outside the larger one, with a separating
    /// direction. For Blackwell the point is the right-hand side of the
    /// garbling system and `beta` its Farkas vector.
    Witness { point: RatVector, beta: RatVector },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderVerdict {
    pub order: Order,
    pub dominates: bool,
    pub certificate: Certificate,
}

impl OrderVerdict {
    /// Re-checks the certificate against `(e, e2)` by exact substitution.
    pub fn verify(&self, e: &RatMatrix, e2: &RatMatrix) -> bool {
        if e.rows() != e2.rows() {
            return false;
        }
        match (&self.certificate, self.dominates) {
            (Certificate::FactorG(g), true) if matches!(self.order, Order::Col | Order::Cone) => {
                let nonneg = self.order == Order::Col || g.entries().iter().all(|v| !v.is_negative());
                nonneg && e.mul(g).is_ok_and(|p| p == *e2)
            }
            (Certificate::Garbling(g), true) if self.order == Order::Blackwell => is_garbling_of(e, e2, g),
            (Certificate::FactorH { h, subset_map }, true) if self.order == Order::Zon => {
                verify_factor_h(e, e2, h, subset_map)
            }
            (Certificate::Witness { point, beta }, false) => verify_witness(self.order, e, e2, point, beta),
            _ => false,
        }
    }
}

fn is_garbling_of(e: &RatMatrix, e2: &RatMatrix, g: &RatMatrix) -> bool {
    g.entries().iter().all(|v| !v.is_negative())
        && g.mul_vec(&ones_vec(g.cols())).is_ok_and(|r| r.iter().all(One::is_one))
        && e.mul(g).is_ok_and(|p| p == *e2)
}

fn verify_factor_h(e: &RatMatrix, e2: &RatMatrix, h: &RatMatrix, subset_map: &[usize]) -> bool {
    let m2 = e2.cols();
    if m2 >= usize::BITS as usize || subset_map.len() != 1 << m2 || h.rows() != e.cols() {
        return false;
    }
    if h.entries().iter().any(|v| v.is_negative() || *v > Rational::one()) {
        return false;
    }
    let Ok(image) = e.mul(h) else {
        return false;
    };
    let columns = e2.columns();
    subset_map.iter().enumerate().all(|(mask, &k)| {
        if k >= h.cols() {
            return false;
        }
        let mut sum = zero_vec(e2.rows());
        for (j, col) in columns.iter().enumerate() {
            if mask >> j & 1 == 1 {
                for (s, c) in sum.iter_mut().zip(col) {
                    *s += c;
                }
            }
        }
        sum == image.column(k)
    })
}

fn verify_witness(order: Order, e: &RatMatrix, e2: &RatMatrix, point: &[Rational], beta: &[Rational]) -> bool {
    if beta.len() != e.rows() && order != Order::Blackwell {
        return false;
    }
    match order {
        Order::Col => {
            let in_smaller = e2.solve_exact(point).is_ok_and(|s| s.is_some());
            in_smaller
                && e.vec_mul(beta).is_ok_and(|w| w.iter().all(Zero::is_zero))
                && !dot(beta, point).is_zero()
        }
        Order::Cone => {
            let is_column = e2.columns().iter().any(|c| c == point);
            is_column
                && e.vec_mul(beta).is_ok_and(|w| w.iter().all(|v| !v.is_positive()))
                && dot(beta, point).is_positive()
        }
        Order::Zon => {
            let in_smaller = matches!(zonotope_membership(e2, point), Ok(Ok(_)));
            in_smaller && support_function(e, beta).is_ok_and(|h| dot(beta, point) > h)
        }
        Order::Blackwell => {
            let Ok(lp) = garbling_problem(e, e2) else {
                return false;
            };
            lp.b == point
                && check_certificate(
                    &lp,
                    &LpOutcome::Infeasible {
                        farkas: beta.to_vec(),
                    },
                )
        }
    }
}

fn same_states(e: &Experiment, e2: &Experiment) -> Result<()> {
    if e.n_states() == e2.n_states() {
        Ok(())
    } else {
        Err(Error::StateCountMismatch(e.n_states(), e2.n_states()))
    }
}

/// Feasibility of `A·v = p` under the given bounds: `Ok(v)` or `Err(β)`.
fn membership(a: &RatMatrix, p: &[Rational], bound: Bound) -> Result<std::result::Result<RatVector, RatVector>> {
    let lp = LpProblem::feasibility(a.clone(), p.to_vec(), vec![bound; a.cols()])?;
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => Ok(Ok(x)),
        LpOutcome::Infeasible { farkas } => Ok(Err(farkas)),
        LpOutcome::Unbounded { .. } => Err(Error::Solver("feasibility LP reported unbounded".into())),
    }
}

/// Is `p ∈ Cone A`?
pub fn cone_membership(a: &RatMatrix, p: &[Rational]) -> Result<std::result::Result<RatVector, RatVector>> {
    membership(a, p, Bound::nonneg())
}

/// Is `p ∈ Zon A`? Returns the generating `v ∈ [0,1]^M` or a Farkas `β`
/// with `β·p > support_function(A, β)`.
pub fn zonotope_membership(a: &RatMatrix, p: &[Rational]) -> Result<std::result::Result<RatVector, RatVector>> {
    membership(a, p, Bound::between(Rational::zero(), Rational::one()))
}

pub fn col_includes(a: &RatMatrix, b: &RatMatrix) -> Result<OrderVerdict> {
    let mut g_cols = Vec::with_capacity(b.cols());
    for col in b.columns() {
        match a.solve_exact(&col)? {
            Some(v) => g_cols.push(v),
            None => {
                let beta = a
                    .left_null_space()
                    .into_iter()
                    .find(|y| !dot(y, &col).is_zero())
                    .ok_or_else(|| Error::Solver("no separating left null vector".into()))?;
                return Ok(OrderVerdict {
                    order: Order::Col,
                    dominates: false,
                    certificate: Certificate::Witness { point: col, beta },
                });
            }
        }
    }
    let g = RatMatrix::from_columns(&g_cols)?;
    Ok(OrderVerdict {
        order: Order::Col,
        dominates: true,
        certificate: Certificate::FactorG(with_rows(g, a.cols())),
    })
}

pub fn cone_includes(a: &RatMatrix, b: &RatMatrix) -> Result<OrderVerdict> {
    let results: Vec<_> = b
        .columns()
        .into_par_iter()
        .map(|col| cone_membership(a, &col).map(|r| (col, r)))
        .collect::<Result<_>>()?;
    let mut g_cols = Vec::with_capacity(results.len());
    for (col, r) in results {
        match r {
            Ok(v) => g_cols.push(v),
            Err(beta) => {
                return Ok(OrderVerdict {
                    order: Order::Cone,
                    dominates: false,
                    certificate: Certificate::Witness { point: col, beta },
                })
            }
        }
    }
    let g = RatMatrix::from_columns(&g_cols)?;
    Ok(OrderVerdict {
        order: Order::Cone,
        dominates: true,
        certificate: Certificate::FactorG(with_rows(g, a.cols())),
    })
}

pub fn zon_includes(a: &RatMatrix, b: &RatMatrix, cap: usize) -> Result<OrderVerdict> {
    let sums = subset_sums(b, cap)?;
    let results: Vec<_> = sums
        .points
        .par_iter()
        .map(|p| zonotope_membership(a, p))
        .collect::<Result<_>>()?;
    let mut h_cols = Vec::with_capacity(results.len());
    for (p, r) in sums.points.iter().zip(results) {
        match r {
            Ok(v) => h_cols.push(v),
            Err(beta) => {
                return Ok(OrderVerdict {
                    order: Order::Zon,
                    dominates: false,
                    certificate: Certificate::Witness {
                        point: p.clone(),
                        beta,
                    },
                })
            }
        }
    }
    let h = with_rows(RatMatrix::from_columns(&h_cols)?, a.cols());
    Ok(OrderVerdict {
        order: Order::Zon,
        dominates: true,
        certificate: Certificate::FactorH {
            h,
            subset_map: sums.subset_map,
        },
    })
}

/// `from_columns` loses the row count when there are no columns.
fn with_rows(m: RatMatrix, rows: usize) -> RatMatrix {
    if m.cols() == 0 {
        RatMatrix::zeros(rows, 0)
    } else {
        m
    }
}

/// The garbling system in the `M × M′` entries of `G` (row-major):
/// `E·G = E′` followed by `G·1 = 1`, with `G ≥ 0`.
pub fn garbling_problem(e: &RatMatrix, e2: &RatMatrix) -> Result<LpProblem> {
    let (n, m, m2) = (e.rows(), e.cols(), e2.cols());
    if e2.rows() != n {
        return Err(Error::StateCountMismatch(n, e2.rows()));
    }
    let vars = m * m2;
    let mut a = RatMatrix::zeros(n * m2 + m, vars);
    let mut b = Vec::with_capacity(n * m2 + m);
    for row in 0..n {
        for k in 0..m2 {
            let r = row * m2 + k;
            for j in 0..m {
                a[(r, j * m2 + k)] = e[(row, j)].clone();
            }
            b.push(e2[(row, k)].clone());
        }
    }
    for j in 0..m {
        let r = n * m2 + j;
        for k in 0..m2 {
            a[(r, j * m2 + k)] = Rational::one();
        }
        b.push(Rational::one());
    }
    LpProblem::feasibility(a, b, vec![Bound::nonneg(); vars])
}

pub fn col_dominates(e: &Experiment, e2: &Experiment) -> Result<OrderVerdict> {
    same_states(e, e2)?;
    col_includes(e.matrix(), e2.matrix())
}

pub fn cone_dominates(e: &Experiment, e2: &Experiment) -> Result<OrderVerdict> {
    same_states(e, e2)?;
    cone_includes(e.matrix(), e2.matrix())
}

pub fn zon_dominates(e: &Experiment, e2: &Experiment) -> Result<OrderVerdict> {
    zon_dominates_with_cap(e, e2, DEFAULT_REALIZATION_CAP)
}

pub fn zon_dominates_with_cap(e: &Experiment, e2: &Experiment, cap: usize) -> Result<OrderVerdict> {
    same_states(e, e2)?;
    zon_includes(e.matrix(), e2.matrix(), cap)
}

pub fn blackwell_dominates(e: &Experiment, e2: &Experiment) -> Result<OrderVerdict> {
    same_states(e, e2)?;
    let lp = garbling_problem(e.matrix(), e2.matrix())?;
    let (m, m2) = (e.n_realizations(), e2.n_realizations());
    match solve_lp(&lp)? {
        LpOutcome::Optimal { x, .. } => Ok(OrderVerdict {
            order: Order::Blackwell,
            dominates: true,
            certificate: Certificate::Garbling(RatMatrix::new(m, m2, x)?),
        }),
        LpOutcome::Infeasible { farkas } => Ok(OrderVerdict {
            order: Order::Blackwell,
            dominates: false,
            certificate: Certificate::Witness {
                point: lp.b,
                beta: farkas,
            },
        }),
        LpOutcome::Unbounded { .. } => Err(Error::Solver("garbling LP reported unbounded".into())),
    }
}

pub fn dominates(order: Order, e: &Experiment, e2: &Experiment) -> Result<OrderVerdict> {
    match order {
        Order::Col => col_dominates(e, e2),
        Order::Cone => cone_dominates(e, e2),
        Order::Zon => zon_dominates(e, e2),
        Order::Blackwell => blackwell_dominates(e, e2),
    }
}

/// Partial-sum majorization after zero-padding the shorter vector.
pub fn classical_majorizes(x: &[Rational], z: &[Rational]) -> bool {
    let len = x.len().max(z.len());
    let sorted = |v: &[Rational]| {
        let mut s = v.to_vec();
        s.resize(len, Rational::zero());
        s.sort_by(|a, b| b.cmp(a));
        s
    };
    let (xs, zs) = (sorted(x), sorted(z));
    let mut px = Rational::zero();
    let mut pz = Rational::zero();
    for (a, b) in xs.iter().zip(&zs) {
        px += a;
        pz += b;
        if px < pz {
            return false;
        }
    }
    px == pz
}

/// Linear convex order of the induced posterior distributions at an
/// interior prior, decided as zonotope inclusion of the prior-weighted
/// matrices.
pub fn lcx_dominates_at_prior(e: &Experiment, e2: &Experiment, mu0: &Prior) -> Result<bool> {
    same_states(e, e2)?;
    mu0.require_interior()?;
    let a = weighted_experiment(e, mu0)?;
    let b = weighted_experiment(e2, mu0)?;
    Ok(zon_includes(&a, &b, DEFAULT_REALIZATION_CAP)?.dominates)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationRow {
    pub order: Order,
    /// `E ≥ E′`.
    pub forward: bool,
    /// `E′ ≥ E`.
    pub backward: bool,
}

impl RelationRow {
    pub fn strict_forward(&self) -> bool {
        self.forward && !self.backward
    }

    pub fn strict_backward(&self) -> bool {
        self.backward && !self.forward
    }
}

/// The 4 × 2 grid of verdicts between two experiments.
pub fn relations_summary(e: &Experiment, e2: &Experiment) -> Result<Vec<RelationRow>> {
    same_states(e, e2)?;
    Order::ALL
        .iter()
        .map(|&order| {
            Ok(RelationRow {
                order,
                forward: dominates(order, e, e2)?.dominates,
                backward: dominates(order, e2, e)?.dominates,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{int, ratio};

    fn e1() -> Experiment {
        Experiment::from_ratios(&[&[(3, 5), (2, 5)], &[(2, 5), (3, 5)]]).unwrap()
    }
    fn e2() -> Experiment {
        Experiment::from_ratios(&[&[(1, 2), (2, 5), (1, 10)], &[(1, 10), (2, 5), (1, 2)]]).unwrap()
    }
    fn e3() -> Experiment {
        Experiment::from_ratios(&[&[(1, 2), (3, 10), (1, 10), (1, 10)], &[(1, 10), (1, 10), (3, 10), (1, 2)]]).unwrap()
    }
    fn flat() -> Experiment {
        Experiment::from_ratios(&[&[(1, 2), (1, 2)], &[(1, 2), (1, 2)]]).unwrap()
    }

    fn check(v: &OrderVerdict, e: &Experiment, e2: &Experiment) {
        assert!(v.verify(e.matrix(), e2.matrix()), "{v:?}");
    }

    #[test]
    fn col_examples() {
        let v = col_dominates(&e1(), &e2()).unwrap();
        assert!(v.dominates);
        check(&v, &e1(), &e2());

        let v = col_dominates(&e2(), &e2()).unwrap();
        assert!(v.dominates);
        check(&v, &e2(), &e2());

        let v = col_dominates(&flat(), &e1()).unwrap();
        assert!(!v.dominates);
        check(&v, &flat(), &e1());
        let Certificate::Witness { point, beta } = &v.certificate else {
            panic!()
        };
        // β is a multiple of (1, -1).
        assert_eq!(&beta[0], &-beta[1].clone());
        assert_eq!(dot(beta, point).abs(), beta[0].abs() * ratio(1, 5));
    }

    #[test]
    fn cone_examples() {
        let v = cone_dominates(&e1(), &e2()).unwrap();
        assert!(!v.dominates);
        check(&v, &e1(), &e2());
        let Certificate::Witness { point, .. } = &v.certificate else {
            panic!()
        };
        assert_eq!(point, &vec![ratio(1, 2), ratio(1, 10)]);

        assert!(cone_dominates(&e2(), &e3()).unwrap().dominates);
        let v = cone_dominates(&e2(), &e1()).unwrap();
        assert!(v.dominates);
        check(&v, &e2(), &e1());
        let Certificate::FactorG(g) = &v.certificate else {
            panic!()
        };
        // Only columns 1 and 3 of E2 are extreme; column 1 of E1 uses 13/12, 7/12.
        let c = e2().matrix().mul_vec(&g.column(0)).unwrap();
        assert_eq!(c, e1().column(0));
    }

    #[test]
    fn zon_examples() {
        let v = zon_dominates(&e2(), &e3()).unwrap();
        assert!(!v.dominates);
        check(&v, &e2(), &e3());

        let v = zon_dominates(&e3(), &e2()).unwrap();
        assert!(v.dominates);
        check(&v, &e3(), &e2());

        let v = zon_dominates(&e1(), &e1()).unwrap();
        assert!(v.dominates);
        check(&v, &e1(), &e1());
    }

    #[test]
    fn blackwell_examples() {
        let split = Experiment::from_ratios(&[&[(3, 10), (3, 10), (2, 5)], &[(1, 5), (1, 5), (3, 5)]]).unwrap();
        let v = blackwell_dominates(&e1(), &split).unwrap();
        assert!(v.dominates);
        check(&v, &e1(), &split);

        let v = blackwell_dominates(&e2(), &e1()).unwrap();
        assert!(v.dominates);
        check(&v, &e2(), &e1());

        let v = blackwell_dominates(&e1(), &e2()).unwrap();
        assert!(!v.dominates);
        check(&v, &e1(), &e2());
    }

    #[test]
    fn state_count_mismatch() {
        let three = Experiment::uninformative(3);
        assert_eq!(col_dominates(&e1(), &three), Err(Error::StateCountMismatch(2, 3)));
        assert!(matches!(zon_dominates(&three, &e1()), Err(Error::StateCountMismatch(3, 2))));
    }

    #[test]
    fn tampered_certificates_fail() {
        let v = cone_dominates(&e1(), &e2()).unwrap();
        let Certificate::Witness { point, beta } = v.certificate.clone() else {
            panic!()
        };
        let bad = OrderVerdict {
            certificate: Certificate::Witness {
                point,
                beta: beta.iter().map(|b| -b.clone()).collect(),
            },
            ..v
        };
        assert!(!bad.verify(e1().matrix(), e2().matrix()));

        let v = col_dominates(&e1(), &e2()).unwrap();
        let Certificate::FactorG(mut g) = v.certificate.clone() else {
            panic!()
        };
        g[(0, 0)] += int(1);
        let bad = OrderVerdict {
            certificate: Certificate::FactorG(g),
            ..v
        };
        assert!(!bad.verify(e1().matrix(), e2().matrix()));
    }

    #[test]
    fn majorization_examples() {
        let x = vec![ratio(2, 5), int(0), ratio(-2, 5)];
        let z = vec![ratio(1, 5), ratio(-1, 5)];
        assert!(classical_majorizes(&x, &z));
        assert!(classical_majorizes(&x, &x));
        assert!(!classical_majorizes(&z, &x));
        assert!(!classical_majorizes(&[int(1)], &[int(2)]));
    }

    #[test]
    fn lcx_examples() {
        let u = Prior::uniform(2);
        assert!(lcx_dominates_at_prior(&e3(), &e2(), &u).unwrap());
        assert!(!lcx_dominates_at_prior(&e2(), &e3(), &u).unwrap());
        let mu = Prior::new(vec![ratio(1, 3), ratio(2, 3)]).unwrap();
        assert!(lcx_dominates_at_prior(&e1(), &e1(), &mu).unwrap());
        assert_eq!(
            lcx_dominates_at_prior(&e1(), &e1(), &Prior::degenerate(2, 0)),
            Err(Error::NonInteriorPrior)
        );
    }

    #[test]
    fn relations_grid() {
        let rows = relations_summary(&e1(), &e2()).unwrap();
        let flags: Vec<(bool, bool)> = rows.iter().map(|r| (r.forward, r.backward)).collect();
        assert_eq!(flags, vec![(true, true), (false, true), (false, true), (false, true)]);

        let rows = relations_summary(&e2(), &e3()).unwrap();
        let flags: Vec<(bool, bool)> = rows.iter().map(|r| (r.forward, r.backward)).collect();
        assert_eq!(flags, vec![(true, true), (true, true), (false, true), (false, true)]);
        assert!(rows[2].strict_backward());

        let rows = relations_summary(&e1(), &e1()).unwrap();
        assert!(rows.iter().all(|r| r.forward && r.backward && !r.strict_forward()));
    }
}
