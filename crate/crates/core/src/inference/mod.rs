//! Exact inference.
//!
//! [`family_marginals`] runs one inward/outward propagation over a join tree
//! built from a min-fill elimination order and returns `Pr(i)` together with
//! `Pr(i, x, u)` for every family instantiation. [`brute_force`] computes the
//! same quantities by enumerating the joint distribution and exists to check
//! the former.

mod factor;
mod jointree;
mod order;

pub use jointree::JoinTree;
pub use order::{find_elimination_order, order_width, EliminationOrder};

use crate::error::{Error, Result};
use crate::model::{joint_probability_of, BeliefNetwork, Event, Evidence, VarId};

/// Default cap on the number of full instantiations [`brute_force`] will visit.
pub const DEFAULT_STATE_SPACE_CAP: u128 = 1 << 20;

/// `Pr(i)` and, per variable `X`, a table of `Pr(i, x, u)` laid out like the
/// variable's CPT (row = parent instantiation, column = child value).
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyMarginals {
    evidence_probability: f64,
    tables: Vec<Vec<f64>>,
}

impl FamilyMarginals {
    pub(crate) fn new(evidence_probability: f64, tables: Vec<Vec<f64>>) -> Self {
        Self {
            evidence_probability,
            tables,
        }
    }

    /// Marginals of an impossible conditioning instantiation.
    pub fn zero(net: &BeliefNetwork) -> Self {
        Self {
            evidence_probability: 0.0,
            tables: net
                .var_ids()
                .map(|v| vec![0.0; net.cpt(v).probabilities().len()])
                .collect(),
        }
    }

    pub fn evidence_probability(&self) -> f64 {
        self.evidence_probability
    }

    pub fn family(&self, var: VarId) -> &[f64] {
        &self.tables[var.0]
    }

    /// `Pr(i, x, u)` for CPT row `row` and child value `value`.
    pub fn get(&self, net: &BeliefNetwork, var: VarId, row: usize, value: usize) -> f64 {
        self.tables[var.0][row * net.cardinality(var) + value]
    }

    /// `Pr(i, x)` for every value `x` of `var`.
    pub fn variable_marginal(&self, net: &BeliefNetwork, var: VarId) -> Vec<f64> {
        let card = net.cardinality(var);
        let mut out = vec![0.0; card];
        for row in self.tables[var.0].chunks(card) {
            for (o, p) in out.iter_mut().zip(row) {
                *o += p;
            }
        }
        out
    }

    /// `Pr(i, y)`.
    pub fn event_probability(&self, net: &BeliefNetwork, event: Event) -> f64 {
        self.variable_marginal(net, event.var)[event.value]
    }
}

/// Exact `Pr(i)` and all family marginals.
pub fn family_marginals(net: &BeliefNetwork, conditioning: &Evidence) -> FamilyMarginals {
    JoinTree::compile(net).propagate(net, conditioning)
}

pub fn probability_of_evidence(net: &BeliefNetwork, evidence: &Evidence) -> f64 {
    family_marginals(net, evidence).evidence_probability()
}

/// `Pr(y | e)`; fails when `Pr(e) = 0`.
pub fn posterior(net: &BeliefNetwork, evidence: &Evidence, event: Event) -> Result<f64> {
    let fm = family_marginals(net, evidence);
    posterior_from(net, &fm, event)
}

pub(crate) fn posterior_from(
    net: &BeliefNetwork,
    fm: &FamilyMarginals,
    event: Event,
) -> Result<f64> {
    let pe = fm.evidence_probability();
    if pe <= 0.0 {
        return Err(Error::ZeroEvidence);
    }
    Ok((fm.event_probability(net, event) / pe).clamp(0.0, 1.0))
}

/// Family marginals by summing the joint over every completion of the
/// evidence. Fails when the state space exceeds [`DEFAULT_STATE_SPACE_CAP`].
pub fn brute_force(net: &BeliefNetwork, evidence: &Evidence) -> Result<FamilyMarginals> {
    brute_force_with_cap(net, evidence, DEFAULT_STATE_SPACE_CAP)
}

pub fn brute_force_with_cap(
    net: &BeliefNetwork,
    evidence: &Evidence,
    cap: u128,
) -> Result<FamilyMarginals> {
    let states = net.state_space();
    if states > cap {
        return Err(Error::StateSpaceTooLarge { states, cap });
    }
    let mut tables: Vec<Vec<f64>> = net
        .var_ids()
        .map(|v| vec![0.0; net.cpt(v).probabilities().len()])
        .collect();
    let mut total = 0.0;
    let free: Vec<VarId> = net.var_ids().filter(|&v| !evidence.contains(v)).collect();
    let mut values: Vec<usize> = net.var_ids().map(|v| evidence.get(v).unwrap_or(0)).collect();

    loop {
        let p = joint_probability_of(net, &values);
        total += p;
        for var in net.var_ids() {
            let cpt = net.cpt(var);
            let parent_values: Vec<usize> = cpt.parents().iter().map(|u| values[u.0]).collect();
            let row = cpt.row_index(&parent_values);
            tables[var.0][row * net.cardinality(var) + values[var.0]] += p;
        }

        // advance the odometer over free variables
        let mut i = free.len();
        loop {
            if i == 0 {
                return Ok(FamilyMarginals::new(total, tables));
            }
            i -= 1;
            let v = free[i];
            values[v.0] += 1;
            if values[v.0] < net.cardinality(v) {
                break;
            }
            values[v.0] = 0;
        }
    }
}
