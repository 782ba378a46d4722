//! Experiments, priors, Bayes posteriors and zonotope primitives.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::exactnum::{dot, ratio, render_rational, zero_vec, RatMatrix, RatVector, Rational};

/// Default cap on realizations for subset-sum enumeration (`2^cap` sums).
pub const DEFAULT_REALIZATION_CAP: usize = 20;

/// A finite experiment: a row-stochastic `N × M` matrix whose entry
/// `(n, m)` is the probability of realization `m` in state `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Experiment {
    matrix: RatMatrix,
    labels: Option<Vec<String>>,
}

impl Experiment {
    /// Checks nonnegativity and unit row sums.
    pub fn new(matrix: RatMatrix) -> Result<Self> {
        validate_experiment(&matrix)?;
        Ok(Self { matrix, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_realizations() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} realizations",
                labels.len(),
                self.n_realizations()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Result<Self> {
        Self::new(RatMatrix::from_ratios(rows))
    }

    pub fn n_states(&self) -> usize {
        self.matrix.rows()
    }

    pub fn n_realizations(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &RatMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn column(&self, m: usize) -> RatVector {
        self.matrix.column(m)
    }

    pub fn rank(&self) -> usize {
        self.matrix.rank()
    }

    /// The experiment that reveals nothing: a single realization.
    pub fn uninformative(n_states: usize) -> Self {
        let matrix = RatMatrix::from_rows(vec![vec![Rational::one()]; n_states]).expect("rectangular");
        Self { matrix, labels: None }
    }
}

pub fn validate_experiment(matrix: &RatMatrix) -> Result<()> {
    if matrix.rows() == 0 || matrix.cols() == 0 {
        return Err(Error::EmptyExperiment);
    }
    for i in 0..matrix.rows() {
        let row = matrix.row(i);
        if let Some(j) = row.iter().position(Signed::is_negative) {
            return Err(Error::NegativeEntry(i + 1, j + 1));
        }
        let sum: Rational = row.iter().sum();
        if !sum.is_one() {
            return Err(Error::RowSumNotOne(i + 1, sum));
        }
    }
    Ok(())
}

/// A distribution over states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prior(RatVector);

impl Prior {
    pub fn new(mu: RatVector) -> Result<Self> {
        if mu.is_empty() {
            return Err(Error::InvalidPrior("empty".into()));
        }
        if let Some(n) = mu.iter().position(Signed::is_negative) {
            return Err(Error::InvalidPrior(format!("negative mass on state {}", n + 1)));
        }
        let total: Rational = mu.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidPrior(format!("sums to {}", render_rational(&total))));
        }
        Ok(Self(mu))
    }

    pub fn uniform(n: usize) -> Self {
        Self(vec![ratio(1, n as i64); n])
    }

    /// Point mass on state `n` (0-based).
    pub fn degenerate(len: usize, n: usize) -> Self {
        let mut mu = zero_vec(len);
        mu[n] = Rational::one();
        Self(mu)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(Signed::is_positive)
    }

    pub fn require_interior(&self) -> Result<()> {
        if self.is_interior() {
            Ok(())
        } else {
            Err(Error::NonInteriorPrior)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorAtom {
    pub realization: usize,
    pub posterior: RatVector,
    pub weight: Rational,
}

/// Induced distribution of posteriors, one atom per realization with
/// positive marginal probability. Atoms that happen to share a posterior
/// are kept apart so that they stay aligned with experiment columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PosteriorDistribution {
    pub atoms: Vec<PosteriorAtom>,
    pub dropped_realizations: Vec<usize>,
}

impl PosteriorDistribution {
    /// `Σ weight · posterior`, which equals the prior.
    pub fn barycenter(&self) -> RatVector {
        let n = self.atoms.first().map_or(0, |a| a.posterior.len());
        let mut out = zero_vec(n);
        for atom in &self.atoms {
            for (o, p) in out.iter_mut().zip(&atom.posterior) {
                *o += &atom.weight * p;
            }
        }
        out
    }
}

pub fn posteriors(e: &Experiment, mu0: &Prior) -> Result<PosteriorDistribution> {
    check_len(e.n_states(), mu0.len(), "prior")?;
    let mut atoms = Vec::new();
    let mut dropped = Vec::new();
    for m in 0..e.n_realizations() {
        let joint: RatVector = (0..e.n_states())
            .map(|n| &mu0.as_slice()[n] * &e.matrix()[(n, m)])
            .collect();
        let marginal: Rational = joint.iter().sum();
        if marginal.is_zero() {
            dropped.push(m);
            continue;
        }
        let posterior = joint.iter().map(|j| j / &marginal).collect();
        atoms.push(PosteriorAtom {
            realization: m,
            posterior,
            weight: marginal,
        });
    }
    Ok(PosteriorDistribution {
        atoms,
        dropped_realizations: dropped,
    })
}

/// `max { βᵀ·A·v : 0 ≤ v ≤ 1 } = Σ_m max(0, (βᵀA)_m)`.
pub fn support_function(matrix: &RatMatrix, beta: &[Rational]) -> Result<Rational> {
    let along = matrix.vec_mul(beta)?;
    Ok(along.into_iter().filter(Signed::is_positive).sum())
}

impl Experiment {
    pub fn support_function(&self, beta: &[Rational]) -> Result<Rational> {
        support_function(&self.matrix, beta)
    }
}

/// Deduplicated subset sums `{A·v : v ∈ {0,1}^M}` in lexicographic order,
/// plus the index into that list for every subset bitmask.
#[derive(Debug, Clone)]
pub struct SubsetSums {
    pub points: Vec<RatVector>,
    pub subset_map: Vec<usize>,
}

pub fn subset_sums(matrix: &RatMatrix, cap: usize) -> Result<SubsetSums> {
    let m = matrix.cols();
    if m > cap || m >= usize::BITS as usize {
        return Err(Error::TooManyRealizations { count: m, cap });
    }
    let columns = matrix.columns();
    let count = 1usize << m;
    let mut sums: Vec<RatVector> = Vec::with_capacity(count);
    sums.push(zero_vec(matrix.rows()));
    for mask in 1..count {
        let low = mask.trailing_zeros() as usize;
        let prev = &sums[mask & (mask - 1)];
        let next = prev.iter().zip(&columns[low]).map(|(a, b)| a + b).collect();
        sums.push(next);
    }
    let mut index: BTreeMap<RatVector, usize> = BTreeMap::new();
    for s in &sums {
        index.entry(s.clone()).or_insert(0);
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let subset_map = sums.iter().map(|s| index[s]).collect();
    let points = index.into_keys().collect();
    Ok(SubsetSums { points, subset_map })
}

/// All subset sums of the columns with duplicates removed. This is a
/// superset of the vertex set of the zonotope.
pub fn zonotope_vertices(e: &Experiment) -> Result<Vec<RatVector>> {
    zonotope_vertices_with_cap(e, DEFAULT_REALIZATION_CAP)
}

pub fn zonotope_vertices_with_cap(e: &Experiment, cap: usize) -> Result<Vec<RatVector>> {
    Ok(subset_sums(e.matrix(), cap)?.points)
}

/// Rows of `E` scaled by the prior: `(μ0 ⊙ E)_{n,m} = μ0(n)·E_{n,m}`.
pub fn weighted_experiment(e: &Experiment, mu0: &Prior) -> Result<RatMatrix> {
    check_len(e.n_states(), mu0.len(), "prior")?;
    let mut out = e.matrix().clone();
    for n in 0..out.rows() {
        for m in 0..out.cols() {
            out[(n, m)] *= &mu0.as_slice()[n];
        }
    }
    Ok(out)
}

/// `μ0ᵀ·E`: the marginal probability of each realization.
pub fn marginals(e: &Experiment, mu0: &Prior) -> Result<RatVector> {
    e.matrix().vec_mul(mu0.as_slice())
}

pub(crate) fn check_len(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{what} has length {got}, expected {expected}")))
    }
}

/// `β·x` for two equally long vectors.
pub fn pairing(beta: &[Rational], x: &[Rational]) -> Result<Rational> {
    check_len(beta.len(), x.len(), "vector")?;
    Ok(dot(beta, x))
}
