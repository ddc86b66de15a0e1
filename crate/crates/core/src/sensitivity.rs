//! Query sensitivity to single meta parameters and constraint-driven tuning.
//!
//! `Pr(e)` is linear in every meta parameter `τ_{x|u}`, and so are `Pr(y, e)`
//! and `Pr(z, e)`. Their slopes follow from the family marginals of one
//! propagation each:
//!
//! ```text
//! ∂Pr(i)/∂τ_{x|u} = Pr(i, x, u) / θ_{x|u} − Σ_{x'≠x} Pr(i, x', u) / Σ_{x'≠x} θ_{x'|u}
//! ```
//!
//! With the slopes of all three quantities at hand, a DIFFERENCE, RATIO or
//! VALUE constraint on posteriors becomes a linear inequality in the change
//! `δ` for each parameter, solved in closed form. Solving for every parameter
//! of the network costs one propagation per conditioning instantiation
//! (`e`, `y e` and, when present, `z e`).
//!
//! The quotient form needs `θ_{x|u} > 0` and positive sibling mass. Otherwise
//! the slope is read off two scratch revisions at `τ = 1/4` and `τ = 3/4`,
//! which is exact because the dependence is linear.

use std::cell::Cell;
use std::cmp::Ordering;

use serde::Serialize;

use crate::bounds::{self, Interval};
use crate::error::{Error, Result};
use crate::inference::{FamilyMarginals, JoinTree};
use crate::model::{apply_parameter_change, BeliefNetwork, Event, Evidence, MetaParameter};

/// Residual tolerance for admitting an interval endpoint, in units of
/// posterior probability.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

/// Relative size below which a constraint's slope in `δ` counts as zero.
const DEGENERATE_SLOPE: f64 = 1e-13;

/// A quantity that is linear in a meta parameter: its current value and its
/// slope.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Slope {
    pub value: f64,
    pub alpha: f64,
}

impl Slope {
    /// Value after changing the parameter by `delta`.
    pub fn at(&self, delta: f64) -> f64 {
        self.value + self.alpha * delta
    }
}

/// `Pr(e)`, `Pr(y, e)` and optionally `Pr(z, e)` with their slopes in one
/// meta parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlphaConstants {
    pub evidence: Slope,
    pub y: Slope,
    pub z: Option<Slope>,
}

/// Shares one compiled join tree between all propagations of a request and
/// counts them.
struct Propagator<'a> {
    net: &'a BeliefNetwork,
    tree: JoinTree,
    propagations: Cell<usize>,
}

/// Conditioning instantiation with its marginals. `None` evidence means the
/// instantiation is contradictory and has probability zero.
struct Conditioned {
    evidence: Option<Evidence>,
    marginals: FamilyMarginals,
}

impl<'a> Propagator<'a> {
    fn new(net: &'a BeliefNetwork) -> Self {
        Self {
            net,
            tree: JoinTree::compile(net),
            propagations: Cell::new(0),
        }
    }

    fn run(&self, net: &BeliefNetwork, evidence: Option<&Evidence>) -> FamilyMarginals {
        match evidence {
            Some(ev) => {
                self.propagations.set(self.propagations.get() + 1);
                self.tree.propagate(net, ev)
            }
            None => FamilyMarginals::zero(net),
        }
    }

    fn condition(&self, evidence: Option<Evidence>) -> Conditioned {
        let marginals = self.run(self.net, evidence.as_ref());
        Conditioned {
            evidence,
            marginals,
        }
    }

    fn slope(&self, cond: &Conditioned, param: &MetaParameter) -> Slope {
        let value = cond.marginals.evidence_probability();
        let alpha = match quotient_alpha(self.net, &cond.marginals, param) {
            Some(alpha) => alpha,
            None => {
                let low = apply_parameter_change(self.net, param, 0.25).expect("0.25 is valid");
                let high = apply_parameter_change(self.net, param, 0.75).expect("0.75 is valid");
                let p_low = self.run(&low, cond.evidence.as_ref()).evidence_probability();
                let p_high = self.run(&high, cond.evidence.as_ref()).evidence_probability();
                (p_high - p_low) / 0.5
            }
        };
        Slope { value, alpha }
    }
}

/// Quotient-form slope, or `None` when the driven parameter or its sibling
/// mass is zero.
fn quotient_alpha(net: &BeliefNetwork, fm: &FamilyMarginals, param: &MetaParameter) -> Option<f64> {
    let row = net.cpt(param.var).row(param.row);
    let theta = row[param.value];
    let sibling_mass: f64 = row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != param.value)
        .map(|(_, p)| p)
        .sum();
    if theta <= 0.0 || sibling_mass <= 0.0 {
        return None;
    }
    let card = row.len();
    let family = &fm.family(param.var)[param.row * card..(param.row + 1) * card];
    let sibling_joint: f64 = family
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != param.value)
        .map(|(_, p)| p)
        .sum();
    Some(family[param.value] / theta - sibling_joint / sibling_mass)
}

fn nonzero_evidence(fm: &FamilyMarginals) -> Result<f64> {
    let pe = fm.evidence_probability();
    if pe > 0.0 {
        Ok(pe)
    } else {
        Err(Error::ZeroEvidence)
    }
}

/// Slopes of `Pr(e)`, `Pr(y, e)` and `Pr(z, e)` in `param`.
pub fn alpha_constants(
    net: &BeliefNetwork,
    evidence: &Evidence,
    y: Event,
    z: Option<Event>,
    param: &MetaParameter,
) -> Result<AlphaConstants> {
    let prop = Propagator::new(net);
    let e = prop.condition(Some(evidence.clone()));
    let ye = prop.condition(evidence.with_event(y));
    let ze = z.map(|z| prop.condition(evidence.with_event(z)));
    Ok(AlphaConstants {
        evidence: prop.slope(&e, param),
        y: prop.slope(&ye, param),
        z: ze.map(|c| prop.slope(&c, param)),
    })
}

/// `∂Pr(e)/∂τ_{x|u}` under the co-variation scheme of `param`. For binary
/// variables this is the plain two-parameter form.
pub fn multi_valued_alpha(
    net: &BeliefNetwork,
    evidence: &Evidence,
    param: &MetaParameter,
) -> Result<f64> {
    let prop = Propagator::new(net);
    let e = prop.condition(Some(evidence.clone()));
    Ok(prop.slope(&e, param).alpha)
}

/// `∂Pr(y|e)/∂τ_{x|u}` by the quotient rule on the slopes.
pub fn query_derivative(
    net: &BeliefNetwork,
    evidence: &Evidence,
    y: Event,
    param: &MetaParameter,
) -> Result<f64> {
    let prop = Propagator::new(net);
    let e = prop.condition(Some(evidence.clone()));
    let pe = nonzero_evidence(&e.marginals)?;
    let ye = prop.condition(evidence.with_event(y));
    let se = prop.slope(&e, param);
    let sy = prop.slope(&ye, param);
    Ok((sy.alpha * pe - se.alpha * sy.value) / (pe * pe))
}

/// `f(τ) = (a τ + b) / (c τ + d)` giving `Pr(y|e)` as a function of one meta
/// parameter, in raw probability scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SensitivityFunction {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Parameter value the coefficients were computed at.
    pub tau0: f64,
}

impl SensitivityFunction {
    /// `None` where the denominator `Pr(e)` vanishes.
    pub fn eval(&self, tau: f64) -> Option<f64> {
        let den = self.c * tau + self.d;
        (den > 0.0).then(|| (self.a * tau + self.b) / den)
    }

    pub fn derivative(&self, tau: f64) -> Option<f64> {
        let den = self.c * tau + self.d;
        (den > 0.0).then(|| (self.a * self.d - self.b * self.c) / (den * den))
    }
}

pub fn sensitivity_function(
    net: &BeliefNetwork,
    evidence: &Evidence,
    y: Event,
    param: &MetaParameter,
) -> Result<SensitivityFunction> {
    let prop = Propagator::new(net);
    let e = prop.condition(Some(evidence.clone()));
    nonzero_evidence(&e.marginals)?;
    let ye = prop.condition(evidence.with_event(y));
    let se = prop.slope(&e, param);
    let sy = prop.slope(&ye, param);
    let tau0 = param.current_value(net);
    Ok(SensitivityFunction {
        a: sy.alpha,
        b: sy.value - sy.alpha * tau0,
        c: se.alpha,
        d: se.value - se.alpha * tau0,
        tau0,
    })
}

/// Range that `Pr(y|e)` is guaranteed to stay in when `param` moves to a new
/// value, read off the log-odds change of the parameter's CPT row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GuaranteedInterval {
    pub current: f64,
    /// Log-odds budget of the change: `|lo(p') − lo(p)|` for binary
    /// variables, the ratio spread of the whole row otherwise.
    pub budget: f64,
    pub interval: Interval,
}

pub fn query_interval_after_change(
    net: &BeliefNetwork,
    evidence: &Evidence,
    y: Event,
    param: &MetaParameter,
    new_value: f64,
) -> Result<GuaranteedInterval> {
    if !(0.0..=1.0).contains(&new_value) {
        return Err(Error::InvalidProbability(new_value));
    }
    let fm = crate::inference::family_marginals(net, evidence);
    let q0 = crate::inference::posterior_from(net, &fm, y)?;
    let row = net.cpt(param.var).row(param.row);
    let budget = if row.len() == 2 {
        bounds::log_odds_distance(row[param.value], new_value)?
    } else {
        let row_new = crate::model::covaried_row(row, param.value, new_value);
        bounds::multi_valued_log_odds_bound(row, &row_new)?
    };
    Ok(GuaranteedInterval {
        current: q0,
        budget,
        interval: bounds::query_bounds_for_distance(q0, budget)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `Pr(y|e) − Pr(z|e) ⋈ ε`
    Difference,
    /// `Pr(y|e) / Pr(z|e) ⋈ ε`
    Ratio,
    /// `Pr(y|e) ⋈ ε`
    Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtLeast,
    AtMost,
}

impl Direction {
    pub fn symbol(self) -> &'static str {
        match self {
            Direction::AtLeast => ">=",
            Direction::AtMost => "<=",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub y: Event,
    pub z: Option<Event>,
    pub epsilon: f64,
    pub direction: Direction,
}

/// `constant + slope·δ ≥ 0`, equivalent to the constraint after a change `δ`.
#[derive(Clone, Copy, Debug)]
struct LinearForm {
    constant: f64,
    slope: f64,
}

impl Constraint {
    pub fn value(y: Event, direction: Direction, epsilon: f64) -> Self {
        Self {
            kind: ConstraintKind::Value,
            y,
            z: None,
            epsilon,
            direction,
        }
    }

    pub fn difference(y: Event, z: Event, direction: Direction, epsilon: f64) -> Self {
        Self {
            kind: ConstraintKind::Difference,
            y,
            z: Some(z),
            epsilon,
            direction,
        }
    }

    pub fn ratio(y: Event, z: Event, direction: Direction, epsilon: f64) -> Self {
        Self {
            kind: ConstraintKind::Ratio,
            y,
            z: Some(z),
            epsilon,
            direction,
        }
    }

    pub fn validate(&self, net: &BeliefNetwork, evidence: &Evidence) -> Result<()> {
        if !self.epsilon.is_finite() {
            return Err(Error::InvalidConstraint(format!(
                "threshold {} is not finite",
                self.epsilon
            )));
        }
        match (self.kind, self.z) {
            (ConstraintKind::Value, Some(_)) => {
                return Err(Error::InvalidConstraint(
                    "VALUE constraints take a single event".into(),
                ))
            }
            (ConstraintKind::Difference | ConstraintKind::Ratio, None) => {
                return Err(Error::InvalidConstraint(
                    "DIFFERENCE and RATIO constraints need a second event".into(),
                ))
            }
            _ => {}
        }
        if self.kind == ConstraintKind::Ratio && self.epsilon < 0.0 {
            return Err(Error::InvalidConstraint(format!(
                "RATIO threshold {} must be non-negative",
                self.epsilon
            )));
        }
        for event in std::iter::once(self.y).chain(self.z) {
            if event.var.0 >= net.len() || event.value >= net.cardinality(event.var) {
                return Err(Error::InvalidConstraint("event outside the network".into()));
            }
            if evidence.contains(event.var) {
                return Err(Error::InvalidConstraint(format!(
                    "query variable `{}` is part of the evidence",
                    net.name(event.var)
                )));
            }
        }
        Ok(())
    }

    fn linear_form(&self, a: &AlphaConstants) -> LinearForm {
        let eps = self.epsilon;
        let (ye, e) = (a.y, a.evidence);
        let ze = a.z.unwrap_or(Slope {
            value: 0.0,
            alpha: 0.0,
        });
        let (constant, slope) = match self.kind {
            ConstraintKind::Difference => (
                ye.value - ze.value - eps * e.value,
                ye.alpha - ze.alpha - eps * e.alpha,
            ),
            ConstraintKind::Ratio => (ye.value - eps * ze.value, ye.alpha - eps * ze.alpha),
            ConstraintKind::Value => (ye.value - eps * e.value, ye.alpha - eps * e.alpha),
        };
        match self.direction {
            Direction::AtLeast => LinearForm { constant, slope },
            Direction::AtMost => LinearForm {
                constant: -constant,
                slope: -slope,
            },
        }
    }

    /// Signed slack of the constraint, positive when it holds, in posterior
    /// units: `Pr(y|e) − Pr(z|e) − ε`, `Pr(y|e) − ε·Pr(z|e)` or `Pr(y|e) − ε`
    /// (negated for `≤`).
    pub fn residual(&self, pr_e: f64, pr_ye: f64, pr_ze: f64) -> f64 {
        let eps = self.epsilon;
        let raw = match self.kind {
            ConstraintKind::Difference => pr_ye - pr_ze - eps * pr_e,
            ConstraintKind::Ratio => pr_ye - eps * pr_ze,
            ConstraintKind::Value => pr_ye - eps * pr_e,
        } / pr_e;
        match self.direction {
            Direction::AtLeast => raw,
            Direction::AtMost => -raw,
        }
    }

    pub fn describe(&self, net: &BeliefNetwork) -> String {
        let y = self.y.describe(net);
        let lhs = match (self.kind, self.z) {
            (ConstraintKind::Difference, Some(z)) => format!("P({y}) - P({})", z.describe(net)),
            (ConstraintKind::Ratio, Some(z)) => format!("P({y}) / P({})", z.describe(net)),
            _ => format!("P({y})"),
        };
        format!("{lhs} {} {}", self.direction.symbol(), self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommendationStatus {
    /// The current value already satisfies the constraint.
    Satisfied,
    /// The parameter must be raised to at least the endpoint.
    Increase,
    /// The parameter must be lowered to at most the endpoint.
    Decrease,
    /// No value of this parameter enforces the constraint.
    Irrelevant,
}

/// Outcome of solving a constraint for one meta parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Recommendation {
    pub param: MetaParameter,
    pub current: f64,
    /// New values of `τ` that enforce the constraint; `None` when empty.
    pub feasible: Option<Interval>,
    /// Point of `feasible` closest to `current`.
    pub minimal_new_value: Option<f64>,
    /// `|ln O' − ln O|` of the minimal change; infinite when the change
    /// reaches 0 or 1.
    pub log_odds_distance: Option<f64>,
    pub status: RecommendationStatus,
}

impl Recommendation {
    pub fn is_empty(&self) -> bool {
        self.feasible.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuningReport {
    /// One entry per meta parameter, non-empty intervals first in ascending
    /// log-odds distance.
    pub recommendations: Vec<Recommendation>,
    pub already_satisfied: bool,
    /// Join-tree propagations performed.
    pub propagations: usize,
}

impl TuningReport {
    pub fn feasible(&self) -> impl Iterator<Item = &Recommendation> {
        self.recommendations.iter().filter(|r| !r.is_empty())
    }

    pub fn irrelevant_count(&self) -> usize {
        self.recommendations.iter().filter(|r| r.is_empty()).count()
    }
}

/// Solves the constraint for every meta parameter of the network.
pub fn solve_constraint(
    net: &BeliefNetwork,
    evidence: &Evidence,
    constraint: &Constraint,
) -> Result<Vec<Recommendation>> {
    Ok(tune(net, evidence, constraint)?.recommendations)
}

pub fn tune(net: &BeliefNetwork, evidence: &Evidence, constraint: &Constraint) -> Result<TuningReport> {
    constraint.validate(net, evidence)?;
    let prop = Propagator::new(net);
    let e = prop.condition(Some(evidence.clone()));
    let pr_e = nonzero_evidence(&e.marginals)?;
    let ye = prop.condition(evidence.with_event(constraint.y));
    let ze = constraint.z.map(|z| prop.condition(evidence.with_event(z)));

    let current_residual = constraint.residual(
        pr_e,
        ye.marginals.evidence_probability(),
        ze.as_ref().map_or(0.0, |c| c.marginals.evidence_probability()),
    );
    let already_satisfied = current_residual >= -FEASIBILITY_TOLERANCE;

    let mut recommendations: Vec<Recommendation> = net
        .meta_parameters()
        .into_iter()
        .map(|param| {
            let alphas = AlphaConstants {
                evidence: prop.slope(&e, &param),
                y: prop.slope(&ye, &param),
                z: ze.as_ref().map(|c| prop.slope(c, &param)),
            };
            let form = constraint.linear_form(&alphas);
            recommend(net, param, form, pr_e, constraint.epsilon)
        })
        .collect();

    recommendations.sort_by(|a, b| compare_recommendations(net, a, b));
    Ok(TuningReport {
        recommendations,
        already_satisfied,
        propagations: prop.propagations.get(),
    })
}

fn compare_recommendations(net: &BeliefNetwork, a: &Recommendation, b: &Recommendation) -> Ordering {
    let rank = |r: &Recommendation| match r.log_odds_distance {
        Some(d) => (0, d),
        None => (1, 0.0),
    };
    let (ra, da) = rank(a);
    let (rb, db) = rank(b);
    ra.cmp(&rb)
        .then_with(|| da.total_cmp(&db))
        .then_with(|| a.param.sort_key(net).cmp(&b.param.sort_key(net)))
}

fn recommend(
    net: &BeliefNetwork,
    param: MetaParameter,
    form: LinearForm,
    pr_e: f64,
    epsilon: f64,
) -> Recommendation {
    let p = param.current_value(net);
    let residual = |tau: f64| (form.constant + (tau - p) * form.slope) / pr_e;
    let scale = pr_e * (1.0 + epsilon.abs());

    let feasible = if form.slope.abs() <= DEGENERATE_SLOPE * scale {
        (form.constant / pr_e >= -FEASIBILITY_TOLERANCE).then(|| Interval::new(0.0, 1.0))
    } else {
        let t = p - form.constant / form.slope;
        if form.slope > 0.0 {
            // τ' ≥ t
            if t <= 1.0 {
                Some(Interval::new(t.max(0.0), 1.0))
            } else {
                (residual(1.0) >= -FEASIBILITY_TOLERANCE).then(|| Interval::new(1.0, 1.0))
            }
        } else if t >= 0.0 {
            Some(Interval::new(0.0, t.min(1.0)))
        } else {
            (residual(0.0) >= -FEASIBILITY_TOLERANCE).then(|| Interval::new(0.0, 0.0))
        }
    };

    let (minimal_new_value, status) = match feasible {
        None => (None, RecommendationStatus::Irrelevant),
        Some(iv) if iv.contains(p) || residual(p) >= -FEASIBILITY_TOLERANCE => {
            (Some(p), RecommendationStatus::Satisfied)
        }
        Some(iv) if iv.lo > p => (Some(iv.lo), RecommendationStatus::Increase),
        Some(iv) => (Some(iv.hi), RecommendationStatus::Decrease),
    };
    let log_odds_distance = minimal_new_value.map(|m| {
        if m == p {
            0.0
        } else {
            bounds::log_odds_distance(p, m).unwrap_or(f64::INFINITY)
        }
    });

    Recommendation {
        param,
        current: p,
        feasible,
        minimal_new_value,
        log_odds_distance,
        status,
    }
}
