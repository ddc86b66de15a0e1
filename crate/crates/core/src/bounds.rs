//! Closed-form robustness bounds in log-odds space.
//!
//! None of these functions look at a network. Probabilities at exactly 0 or
//! 1 are rejected with [`Error::Boundary`] instead of being clamped, since a
//! clamped log-odds value would silently change what the bound means.

use serde::Serialize;

use crate::error::{Error, Result};

fn open_unit(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value < 1.0 {
        Ok(value)
    } else {
        Err(Error::Boundary { what, value })
    }
}

/// `ln(p / (1 - p))`.
pub fn log_odds(p: f64) -> Result<f64> {
    let p = open_unit("log odds", p)?;
    Ok(p.ln() - (-p).ln_1p())
}

/// Inverse of [`log_odds`].
pub fn logistic(lo: f64) -> f64 {
    if lo >= 0.0 {
        1.0 / (1.0 + (-lo).exp())
    } else {
        let e = lo.exp();
        e / (1.0 + e)
    }
}

/// `|ln O(p') - ln O(p)|`.
pub fn log_odds_distance(p: f64, p_new: f64) -> Result<f64> {
    Ok((log_odds(p_new)? - log_odds(p)?).abs())
}

/// Upper bound on `|∂Pr(y|e)/∂τ_{x|u}|` for a binary `X`:
/// `q(1 - q) / (p(1 - p))`.
pub fn derivative_bound(q: f64, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Domain(format!("query value {q} is not a probability")));
    }
    let p = open_unit("derivative bound", p)?;
    Ok(q * (1.0 - q) / (p * (1.0 - p)))
}

/// Coefficient `(1 - q) / (1 - p)` bounding the relative change of a query
/// by the relative change of a meta parameter `p ≤ 0.5` under an
/// infinitesimal change. Never exceeds 2.
pub fn relative_sensitivity_bound(q: f64, p: f64) -> Result<f64> {
    let q = open_unit("relative sensitivity", q)?;
    let p = open_unit("relative sensitivity", p)?;
    if p > 0.5 {
        return Err(Error::Domain(format!(
            "parameter {p} exceeds 0.5; use the complementary parameter instead"
        )));
    }
    Ok((1.0 - q) / (1.0 - p))
}

/// A closed interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Range of query values reachable when its log-odds move by at most
/// `distance`.
pub fn query_bounds_for_distance(q0: f64, distance: f64) -> Result<Interval> {
    if !(distance >= 0.0) {
        return Err(Error::Domain(format!(
            "log-odds distance {distance} must be non-negative"
        )));
    }
    let lo = log_odds(q0)?;
    Ok(Interval::new(logistic(lo - distance), logistic(lo + distance)))
}

/// Interval guaranteed to contain `Pr'(y|e)` after changing a binary meta
/// parameter from `p` to `p_new`, given the current query value `q0`.
pub fn query_bounds_after_change(q0: f64, p: f64, p_new: f64) -> Result<Interval> {
    let distance = log_odds_distance(p, p_new)?;
    query_bounds_for_distance(q0, distance)
}

/// New parameter values not ruled out by the log-odds bound for moving the
/// query from `q0` to `q_target`.
///
/// Any `p'` reaching the target satisfies `p' ≤ decrease_max` or
/// `p' ≥ increase_min`. This is necessary, not sufficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NecessaryChange {
    pub required_distance: f64,
    pub decrease_max: f64,
    pub increase_min: f64,
}

impl NecessaryChange {
    pub fn admits(&self, p_new: f64) -> bool {
        p_new <= self.decrease_max || p_new >= self.increase_min
    }
}

pub fn necessary_parameter_interval(q0: f64, q_target: f64, p: f64) -> Result<NecessaryChange> {
    let required = (log_odds(q_target)? - log_odds(q0)?).abs();
    let lp = log_odds(p)?;
    if required == 0.0 {
        return Ok(NecessaryChange {
            required_distance: 0.0,
            decrease_max: 1.0,
            increase_min: 0.0,
        });
    }
    Ok(NecessaryChange {
        required_distance: required,
        decrease_max: logistic(lp - required),
        increase_min: logistic(lp + required),
    })
}

/// Exact new prior for a root variable `X` so that `Pr(x|e)` moves from `q0`
/// to `q_target`: the odds of the prior scale by the same factor as the odds
/// of the posterior.
pub fn root_prior_exact(q0: f64, q_target: f64, p: f64) -> Result<f64> {
    let shift = log_odds(q_target)? - log_odds(q0)?;
    Ok(logistic(log_odds(p)? + shift))
}

/// Changes `δ` to a parameter currently at `p` that keep its log-odds within
/// `budget` of the current value.
pub fn permissible_delta(p: f64, budget: f64) -> Result<Interval> {
    if !(budget >= 0.0) {
        return Err(Error::Domain(format!("budget {budget} must be non-negative")));
    }
    let lp = log_odds(p)?;
    Ok(Interval::new(logistic(lp - budget) - p, logistic(lp + budget) - p))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopePoint {
    pub p: f64,
    /// Keeps the query inside the whole range.
    pub two_sided: Interval,
    /// Keeps the query at or below the upper end of the range.
    pub upper_guard: Interval,
    /// Keeps the query at or above the lower end of the range.
    pub lower_guard: Interval,
}

/// Parameter changes guaranteed to keep a query inside a target range,
/// sampled over current parameter values.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope {
    pub query_current: f64,
    pub query_range: Interval,
    /// `|lo(q_hi) - lo(q0)|`
    pub budget_upper: f64,
    /// `|lo(q0) - lo(q_lo)|`
    pub budget_lower: f64,
    pub points: Vec<EnvelopePoint>,
}

/// `{0.005, 0.010, ..., 0.995}`.
pub fn default_grid() -> Vec<f64> {
    grid(0.005)
}

/// Grid over the open unit interval with the given step.
pub fn grid(step: f64) -> Vec<f64> {
    if !(step > 0.0 && step < 1.0) {
        return Vec::new();
    }
    let n = (1.0 / step).round() as usize;
    (1..n)
        .map(|i| i as f64 * step)
        .filter(|&p| p > 0.0 && p < 1.0)
        .collect()
}

pub fn permissible_envelope(q0: f64, q_range: Interval, p_grid: &[f64]) -> Result<Envelope> {
    if !(q_range.lo < q0 && q0 < q_range.hi) {
        return Err(Error::Domain(format!(
            "current query value {q0} must lie strictly inside [{}, {}]",
            q_range.lo, q_range.hi
        )));
    }
    let l0 = log_odds(q0)?;
    let budget_upper = (log_odds(q_range.hi)? - l0).abs();
    let budget_lower = (l0 - log_odds(q_range.lo)?).abs();
    let budget = budget_upper.min(budget_lower);
    let points = p_grid
        .iter()
        .map(|&p| {
            Ok(EnvelopePoint {
                p,
                two_sided: permissible_delta(p, budget)?,
                upper_guard: permissible_delta(p, budget_upper)?,
                lower_guard: permissible_delta(p, budget_lower)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Envelope {
        query_current: q0,
        query_range: q_range,
        budget_upper,
        budget_lower,
        points,
    })
}

/// Bound on the log-odds change of any query when a whole CPT row moves from
/// `row` to `row_new`: `ln max(θ'/θ) - ln min(θ'/θ)`.
///
/// Values with zero probability in both rows are ignored; a value that is
/// zero in only one of them makes the ratio unbounded and is rejected.
pub fn multi_valued_log_odds_bound(row: &[f64], row_new: &[f64]) -> Result<f64> {
    if row.len() != row_new.len() || row.len() < 2 {
        return Err(Error::Domain(format!(
            "rows must have equal length of at least two, got {} and {}",
            row.len(),
            row_new.len()
        )));
    }
    let mut max = f64::NEG_INFINITY;
    let mut min = f64::INFINITY;
    for (i, (&a, &b)) in row.iter().zip(row_new).enumerate() {
        match (a > 0.0, b > 0.0) {
            (false, false) => continue,
            (true, true) => {
                let r = b.ln() - a.ln();
                max = max.max(r);
                min = min.min(r);
            }
            _ => {
                return Err(Error::Domain(format!(
                    "value #{i} has support in only one of the rows"
                )))
            }
        }
    }
    if !max.is_finite() {
        return Err(Error::Domain("rows have no common support".into()));
    }
    Ok(max - min)
}
