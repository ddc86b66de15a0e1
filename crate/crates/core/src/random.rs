//! Random networks and evidence for property tests and benchmarks.

use rand::Rng;

use crate::model::{BeliefNetwork, Evidence, NetworkBuilder, VarId};

#[derive(Clone, Debug)]
pub struct RandomNetworkConfig {
    pub variables: usize,
    pub max_parents: usize,
    /// Cardinalities are drawn from `2..=max_cardinality`.
    pub max_cardinality: usize,
    /// Chance that a CPT entry is exactly zero (one entry per row always
    /// stays positive).
    pub zero_probability: f64,
}

impl Default for RandomNetworkConfig {
    fn default() -> Self {
        Self {
            variables: 8,
            max_parents: 3,
            max_cardinality: 2,
            zero_probability: 0.0,
        }
    }
}

/// Random DAG over variables `V0, V1, ...`, each parent drawn from earlier
/// variables.
pub fn random_network<R: Rng + ?Sized>(rng: &mut R, config: &RandomNetworkConfig) -> BeliefNetwork {
    let names: Vec<String> = (0..config.variables).map(|i| format!("V{i}")).collect();
    let mut cards = Vec::with_capacity(config.variables);
    let mut builder = NetworkBuilder::new();
    for i in 0..config.variables {
        let card = rng.random_range(2..=config.max_cardinality.max(2));
        cards.push(card);
        let mut candidates: Vec<usize> = (0..i).collect();
        let wanted = rng.random_range(0..=config.max_parents.min(i));
        let mut parents = Vec::with_capacity(wanted);
        for _ in 0..wanted {
            let k = rng.random_range(0..candidates.len());
            parents.push(candidates.swap_remove(k));
        }
        let rows: usize = parents.iter().map(|&p| cards[p]).product();
        let mut cpt = Vec::with_capacity(rows * card);
        for _ in 0..rows {
            cpt.extend(random_row(rng, card, config.zero_probability));
        }
        let values: Vec<String> = (0..card).map(|v| format!("s{v}")).collect();
        let values: Vec<&str> = values.iter().map(String::as_str).collect();
        let parents: Vec<&str> = parents.iter().map(|&p| names[p].as_str()).collect();
        builder = builder.variable(&names[i], &values, &parents, &cpt);
    }
    builder.build().expect("generated network is valid")
}

fn random_row<R: Rng + ?Sized>(rng: &mut R, card: usize, zero_probability: f64) -> Vec<f64> {
    let keep = rng.random_range(0..card);
    let mut row: Vec<f64> = (0..card)
        .map(|i| {
            if i != keep && zero_probability > 0.0 && rng.random_bool(zero_probability) {
                0.0
            } else {
                rng.random_range(0.05..1.0)
            }
        })
        .collect();
    let total: f64 = row.iter().sum();
    for p in &mut row {
        *p /= total;
    }
    // absorb rounding so the row sums to one as closely as possible
    let drift = 1.0 - row.iter().sum::<f64>();
    row[keep] += drift;
    row
}

/// Evidence on up to `max_observed` distinct random variables.
pub fn random_evidence<R: Rng + ?Sized>(
    rng: &mut R,
    net: &BeliefNetwork,
    max_observed: usize,
) -> Evidence {
    let mut ev = Evidence::new();
    let count = rng.random_range(0..=max_observed.min(net.len()));
    let mut vars: Vec<usize> = (0..net.len()).collect();
    for _ in 0..count {
        let var = VarId(vars.swap_remove(rng.random_range(0..vars.len())));
        let value = rng.random_range(0..net.cardinality(var));
        ev.assign(net, var, value).expect("fresh variable");
    }
    ev
}
