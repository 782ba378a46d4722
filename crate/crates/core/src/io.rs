//! JSON documents for experiments, priors, environments and results.
//!
//! Every rational travels as a string accepted by [`parse_rational`] and is
//! written back in lowest-terms `p/q` form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{parse_rational, render_rational, RatMatrix, RatVector, Rational};
use crate::experiments::{Experiment, PosteriorDistribution, Prior};
use crate::moralhazard::{ConstraintClass, CostSpec, Counterexample, Environment, MhSolution, Plc, UtilitySpec};
use crate::orders::{Certificate, Order, OrderVerdict, RelationRow};
use crate::sweep::SweepReport;

fn strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(render_rational).collect()
}

fn parse_all(v: &[String]) -> Result<RatVector> {
    v.iter().map(|s| parse_rational(s)).collect()
}

fn matrix_strings(m: &RatMatrix) -> Vec<Vec<String>> {
    m.to_rows().iter().map(|r| strings(r)).collect()
}

fn parse_matrix(rows: &[Vec<String>], cols_hint: usize) -> Result<RatMatrix> {
    if rows.is_empty() {
        return Ok(RatMatrix::zeros(0, cols_hint));
    }
    RatMatrix::from_rows(rows.iter().map(|r| parse_all(r)).collect::<Result<_>>()?)
}

pub fn from_json<'a, T: Deserialize<'a>>(text: &'a str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Json(e.to_string()))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("documents always serialize")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentDoc {
    pub states: usize,
    pub realizations: usize,
    pub rows: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl ExperimentDoc {
    pub fn from_experiment(e: &Experiment) -> Self {
        ExperimentDoc {
            states: e.n_states(),
            realizations: e.n_realizations(),
            rows: matrix_strings(e.matrix()),
            labels: e.labels().map(<[String]>::to_vec),
        }
    }

    pub fn to_experiment(&self) -> Result<Experiment> {
        if self.rows.len() != self.states {
            return Err(Error::DimensionMismatch(format!(
                "declared {} states but found {} rows",
                self.states,
                self.rows.len()
            )));
        }
        if let Some(i) = self.rows.iter().position(|r| r.len() != self.realizations) {
            return Err(Error::DimensionMismatch(format!(
                "row {} has {} entries, expected {}",
                i + 1,
                self.rows[i].len(),
                self.realizations
            )));
        }
        if self.states == 0 || self.realizations == 0 {
            return Err(Error::EmptyExperiment);
        }
        let e = Experiment::new(parse_matrix(&self.rows, self.realizations)?)?;
        match &self.labels {
            Some(l) => e.with_labels(l.clone()),
            None => Ok(e),
        }
    }
}

pub fn parse_experiment(text: &str) -> Result<Experiment> {
    from_json::<ExperimentDoc>(text)?.to_experiment()
}

pub fn experiment_json(e: &Experiment) -> String {
    to_json(&ExperimentDoc::from_experiment(e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorDoc {
    pub mu: Vec<String>,
}

pub fn parse_prior(text: &str) -> Result<Prior> {
    Prior::new(parse_all(&from_json::<PriorDoc>(text)?.mu)?)
}

pub fn prior_json(p: &Prior) -> String {
    to_json(&PriorDoc {
        mu: strings(p.as_slice()),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilityDoc {
    RiskNeutral,
    Plc { breakpoints: Vec<(String, String)> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintsDoc {
    None,
    Ll,
    LlB {
        #[serde(rename = "B")]
        b: String,
    },
    BOnly {
        #[serde(rename = "B")]
        b: String,
    },
}

fn zero_string() -> String {
    "0".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvironmentDoc {
    pub mu0: Vec<String>,
    pub gradient: Vec<String>,
    pub cost_level: String,
    #[serde(default = "zero_string")]
    pub outside_option: String,
    pub utility: UtilityDoc,
    pub constraints: ConstraintsDoc,
}

impl EnvironmentDoc {
    pub fn from_environment(env: &Environment) -> Self {
        let utility = match &env.utility {
            UtilitySpec::RiskNeutral => UtilityDoc::RiskNeutral,
            UtilitySpec::PiecewiseLinearConcave(p) => UtilityDoc::Plc {
                breakpoints: p
                    .breakpoints()
                    .iter()
                    .map(|(t, u)| (render_rational(t), render_rational(u)))
                    .collect(),
            },
        };
        let constraints = match &env.constraints {
            ConstraintClass::None => ConstraintsDoc::None,
            ConstraintClass::LimitedLiability => ConstraintsDoc::Ll,
            ConstraintClass::LimitedLiabilityBudget(b) => ConstraintsDoc::LlB { b: render_rational(b) },
            ConstraintClass::BudgetOnly(b) => ConstraintsDoc::BOnly { b: render_rational(b) },
        };
        EnvironmentDoc {
            mu0: strings(env.mu0.as_slice()),
            gradient: strings(&env.cost.gradient),
            cost_level: render_rational(&env.cost.cost_level),
            outside_option: render_rational(&env.outside_option),
            utility,
            constraints,
        }
    }

    pub fn to_environment(&self) -> Result<Environment> {
        let utility = match &self.utility {
            UtilityDoc::RiskNeutral => UtilitySpec::RiskNeutral,
            UtilityDoc::Plc { breakpoints } => UtilitySpec::PiecewiseLinearConcave(Plc::new(
                breakpoints
                    .iter()
                    .map(|(t, u)| Ok((parse_rational(t)?, parse_rational(u)?)))
                    .collect::<Result<_>>()?,
            )?),
        };
        let constraints = match &self.constraints {
            ConstraintsDoc::None => ConstraintClass::None,
            ConstraintsDoc::Ll => ConstraintClass::LimitedLiability,
            ConstraintsDoc::LlB { b } => ConstraintClass::LimitedLiabilityBudget(parse_rational(b)?),
            ConstraintsDoc::BOnly { b } => ConstraintClass::BudgetOnly(parse_rational(b)?),
        };
        let env = Environment {
            mu0: Prior::new(parse_all(&self.mu0)?)?,
            cost: CostSpec {
                gradient: parse_all(&self.gradient)?,
                cost_level: parse_rational(&self.cost_level)?,
            },
            outside_option: parse_rational(&self.outside_option)?,
            utility,
            constraints,
        };
        env.validate()?;
        Ok(env)
    }
}

pub fn parse_environment(text: &str) -> Result<Environment> {
    from_json::<EnvironmentDoc>(text)?.to_environment()
}

pub fn environment_json(env: &Environment) -> String {
    to_json(&EnvironmentDoc::from_environment(env))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessDoc {
    pub point: Vec<String>,
    pub beta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictDoc {
    pub order: String,
    pub dominates: bool,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<String>>>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset_map: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessDoc>,
}

impl VerdictDoc {
    pub fn from_verdict(v: &OrderVerdict) -> Self {
        let mut doc = VerdictDoc {
            order: v.order.to_string(),
            dominates: v.dominates,
            g: None,
            h: None,
            subset_map: None,
            witness: None,
        };
        match &v.certificate {
            Certificate::FactorG(g) | Certificate::Garbling(g) => doc.g = Some(matrix_strings(g)),
            Certificate::FactorH { h, subset_map } => {
                doc.h = Some(matrix_strings(h));
                doc.subset_map = Some(subset_map.clone());
            }
            Certificate::Witness { point, beta } => {
                doc.witness = Some(WitnessDoc {
                    point: strings(point),
                    beta: strings(beta),
                })
            }
        }
        doc
    }

    /// `rows_hint` is the realization count of the dominating experiment,
    /// needed only when a factor has no columns.
    pub fn to_verdict(&self, rows_hint: usize) -> Result<OrderVerdict> {
        let order: Order = self.order.parse().map_err(Error::Json)?;
        let certificate = match (&self.g, &self.h, &self.witness) {
            (Some(g), None, None) => {
                let g = parse_matrix(g, 0)?;
                let g = if g.rows() == 0 { RatMatrix::zeros(rows_hint, 0) } else { g };
                if order == Order::Blackwell {
                    Certificate::Garbling(g)
                } else {
                    Certificate::FactorG(g)
                }
            }
            (None, Some(h), None) => Certificate::FactorH {
                h: parse_matrix(h, 0)?,
                subset_map: self
                    .subset_map
                    .clone()
                    .ok_or_else(|| Error::Json("H certificate needs subset_map".into()))?,
            },
            (None, None, Some(w)) => Certificate::Witness {
                point: parse_all(&w.point)?,
                beta: parse_all(&w.beta)?,
            },
            _ => return Err(Error::Json("verdict needs exactly one of G, H or witness".into())),
        };
        Ok(OrderVerdict {
            order,
            dominates: self.dominates,
            certificate,
        })
    }
}

pub fn verdict_json(v: &OrderVerdict) -> String {
    to_json(&VerdictDoc::from_verdict(v))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDoc {
    pub order: String,
    pub forward: bool,
    pub backward: bool,
    pub strict_forward: bool,
    pub strict_backward: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationsDoc {
    pub relations: Vec<RelationDoc>,
}

pub fn relations_doc(rows: &[RelationRow]) -> RelationsDoc {
    RelationsDoc {
        relations: rows
            .iter()
            .map(|r| RelationDoc {
                order: r.order.to_string(),
                forward: r.forward,
                backward: r.backward,
                strict_forward: r.strict_forward(),
                strict_backward: r.strict_backward(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolutionDoc {
    Optimal {
        cost: String,
        t: Vec<String>,
        lambda: String,
        eta: Vec<String>,
    },
    Infeasible {
        cost: String,
    },
}

impl SolutionDoc {
    pub fn from_solution(s: &MhSolution) -> Self {
        match s {
            MhSolution::Optimal { cost, t, lambda, eta } => SolutionDoc::Optimal {
                cost: render_rational(cost),
                t: strings(t),
                lambda: render_rational(lambda),
                eta: strings(eta),
            },
            MhSolution::Infeasible => SolutionDoc::Infeasible { cost: "inf".into() },
        }
    }

    pub fn to_solution(&self) -> Result<MhSolution> {
        match self {
            SolutionDoc::Optimal { cost, t, lambda, eta } => Ok(MhSolution::Optimal {
                cost: parse_rational(cost)?,
                t: parse_all(t)?,
                lambda: parse_rational(lambda)?,
                eta: parse_all(eta)?,
            }),
            SolutionDoc::Infeasible { .. } => Ok(MhSolution::Infeasible),
        }
    }
}

pub fn solution_json(s: &MhSolution) -> String {
    to_json(&SolutionDoc::from_solution(s))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomDoc {
    pub realization: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub weight: String,
    pub posterior: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosteriorsDoc {
    pub prior: Vec<String>,
    /// Atoms sharing a posterior are listed separately, one per realization.
    pub merged: bool,
    pub atoms: Vec<AtomDoc>,
    pub dropped_realizations: Vec<usize>,
}

/// Realizations are reported 1-based.
pub fn posteriors_doc(e: &Experiment, prior: &Prior, d: &PosteriorDistribution) -> PosteriorsDoc {
    PosteriorsDoc {
        prior: strings(prior.as_slice()),
        merged: false,
        atoms: d
            .atoms
            .iter()
            .map(|a| AtomDoc {
                realization: a.realization + 1,
                label: e.labels().map(|l| l[a.realization].clone()),
                weight: render_rational(&a.weight),
                posterior: strings(&a.posterior),
            })
            .collect(),
        dropped_realizations: d.dropped_realizations.iter().map(|m| m + 1).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterexampleDoc {
    pub order: String,
    pub environment: EnvironmentDoc,
    pub witness: Vec<String>,
    pub reflected: bool,
    /// Cost keyed by experiment name.
    pub costs: serde_json::Map<String, serde_json::Value>,
    pub strict: bool,
}

pub fn counterexample_doc(ce: &Counterexample, name_e: &str, name_e2: &str) -> CounterexampleDoc {
    let mut costs = serde_json::Map::new();
    costs.insert(name_e2.to_string(), ce.cost_e2.to_string().into());
    costs.insert(name_e.to_string(), ce.cost_e.to_string().into());
    CounterexampleDoc {
        order: ce.order.to_string(),
        environment: EnvironmentDoc::from_environment(&ce.env),
        witness: strings(&ce.witness),
        reflected: ce.reflected,
        costs,
        strict: ce.strict(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationDoc {
    pub trial: usize,
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepDoc {
    pub theorem: u8,
    pub order: String,
    pub dominates: bool,
    pub trials: usize,
    pub seed: u64,
    pub checks: usize,
    pub violations: Vec<ViolationDoc>,
    pub counterexamples: Vec<CounterexampleDoc>,
    pub failures: Vec<String>,
}

pub fn sweep_doc(r: &SweepReport, name_e: &str, name_e2: &str) -> SweepDoc {
    SweepDoc {
        theorem: r.theorem,
        order: r.order.to_string(),
        dominates: r.dominates,
        trials: r.trials,
        seed: r.seed,
        checks: r.checks,
        violations: r
            .violations
            .iter()
            .map(|v| ViolationDoc {
                trial: v.trial,
                check: v.check.to_string(),
                detail: v.detail.clone(),
            })
            .collect(),
        counterexamples: r
            .counterexamples
            .iter()
            .map(|c| counterexample_doc(c, name_e, name_e2))
            .collect(),
        failures: r.failures.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{int, ratio};
    use crate::orders::{cone_dominates, zon_dominates};

    const E1: &str = r#"{"states": 2, "realizations": 2, "rows": [["3/5","2/5"],["2/5","3/5"]], "labels": ["y1","y2"]}"#;

    #[test]
    fn experiment_round_trip() {
        let e = parse_experiment(E1).unwrap();
        assert_eq!(e.matrix()[(0, 0)], ratio(3, 5));
        assert_eq!(parse_experiment(&experiment_json(&e)).unwrap(), e);
        let decimal = r#"{"states": 1, "realizations": 2, "rows": [["0.25", ".75"]]}"#;
        assert_eq!(parse_experiment(decimal).unwrap().matrix()[(0, 1)], ratio(3, 4));
    }

    #[test]
    fn experiment_errors() {
        let bad = r#"{"states": 2, "realizations": 2, "rows": [["1/2","1/2"],["1/2","1/3"]]}"#;
        assert!(matches!(parse_experiment(bad), Err(Error::RowSumNotOne(2, _))));
        let short = r#"{"states": 2, "realizations": 2, "rows": [["1","0"]]}"#;
        assert!(matches!(parse_experiment(short), Err(Error::DimensionMismatch(_))));
        assert!(matches!(parse_experiment("{"), Err(Error::Json(_))));
        let junk = r#"{"states": 1, "realizations": 1, "rows": [["one"]]}"#;
        assert!(matches!(parse_experiment(junk), Err(Error::MalformedNumber(_))));
    }

    #[test]
    fn environment_round_trip() {
        let text = r#"{"mu0":["1/2","1/2"],"gradient":["1","-1"],"cost_level":"1/5","outside_option":"0","utility":{"kind":"risk_neutral"},"constraints":{"kind":"ll_b","B":"3/2"}}"#;
        let env = parse_environment(text).unwrap();
        assert_eq!(env.constraints, ConstraintClass::LimitedLiabilityBudget(ratio(3, 2)));
        assert_eq!(parse_environment(&environment_json(&env)).unwrap(), env);

        let plc = r#"{"mu0":["1/2","1/2"],"gradient":["1","-1"],"cost_level":"0","utility":{"kind":"plc","breakpoints":[["0","0"],["1","1"],["3","2"]]},"constraints":{"kind":"none"}}"#;
        let env = parse_environment(plc).unwrap();
        assert!(matches!(env.utility, UtilitySpec::PiecewiseLinearConcave(_)));
        assert_eq!(env.outside_option, int(0));
        assert_eq!(parse_environment(&environment_json(&env)).unwrap(), env);
    }

    #[test]
    fn verdict_round_trip() {
        let e1 = parse_experiment(E1).unwrap();
        let e2 = Experiment::from_ratios(&[&[(1, 2), (2, 5), (1, 10)], &[(1, 10), (2, 5), (1, 2)]]).unwrap();
        for v in [
            cone_dominates(&e1, &e2).unwrap(),
            cone_dominates(&e2, &e1).unwrap(),
            zon_dominates(&e2, &e2).unwrap(),
        ] {
            let doc: VerdictDoc = from_json(&verdict_json(&v)).unwrap();
            assert_eq!(doc.to_verdict(0).unwrap(), v);
        }
        let v = cone_dominates(&e1, &e2).unwrap();
        let text = verdict_json(&v);
        assert!(text.contains("\"witness\""));
        assert!(text.starts_with("{\n  \"order\": \"cone\",\n  \"dominates\": false"));
    }

    #[test]
    fn solution_docs() {
        assert_eq!(solution_json(&MhSolution::Infeasible), "{\n  \"status\": \"infeasible\",\n  \"cost\": \"inf\"\n}");
        let s = MhSolution::Optimal {
            cost: int(1),
            t: vec![int(2), int(0)],
            lambda: int(1),
            eta: vec![int(0), int(0)],
        };
        let doc: SolutionDoc = from_json(&solution_json(&s)).unwrap();
        assert_eq!(doc.to_solution().unwrap(), s);
    }
}
