//! Belief-network representation, the canonical document format and
//! parameter changes.
//!
//! A [`BeliefNetwork`] is immutable once built. Changing a parameter through
//! [`apply_parameter_change`] yields a fresh revision and leaves the original
//! untouched.
//!
//! CPT rows are laid out row-major over the parent instantiations with the
//! first parent varying slowest; inside a row the child values follow their
//! declared order. The same layout is used by the canonical document and by
//! the family tables produced by inference.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for the sum-to-one check on CPT rows.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl VarId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    name: String,
    values: Vec<String>,
}

impl Variable {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }

    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn is_binary(&self) -> bool {
        self.values.len() == 2
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// Conditional probability table of one variable given its parents.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    child: VarId,
    parents: Vec<VarId>,
    /// Cardinalities of the parents, in parent order.
    parent_cards: Vec<usize>,
    child_card: usize,
    probs: Vec<f64>,
}

impl Cpt {
    pub fn child(&self) -> VarId {
        self.child
    }

    pub fn parents(&self) -> &[VarId] {
        &self.parents
    }

    pub fn row_count(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row_len(&self) -> usize {
        self.child_card
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.child_card;
        &self.probs[row * n..(row + 1) * n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.probs.chunks(self.child_card)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn parameter(&self, row: usize, value: usize) -> f64 {
        self.probs[row * self.child_card + value]
    }

    /// Row index of a parent instantiation given as value indices in parent order.
    pub fn row_index(&self, parent_values: &[usize]) -> usize {
        debug_assert_eq!(parent_values.len(), self.parents.len());
        parent_values
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&v, &card)| acc * card + v)
    }

    /// Inverse of [`Cpt::row_index`].
    pub fn parent_values(&self, mut row: usize) -> Vec<usize> {
        let mut values = vec![0; self.parents.len()];
        for (slot, &card) in values.iter_mut().zip(&self.parent_cards).rev() {
            *slot = row % card;
            row /= card;
        }
        values
    }
}

/// A directed acyclic graph of discrete variables, one CPT per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNetwork {
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    by_name: HashMap<String, VarId>,
    topological: Vec<VarId>,
}

impl BeliefNetwork {
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_ids(&self) -> impl Iterator<Item = VarId> {
        (0..self.variables.len()).map(VarId)
    }

    pub fn cpt(&self, id: VarId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn cardinality(&self, id: VarId) -> usize {
        self.variables[id.0].values.len()
    }

    pub fn name(&self, id: VarId) -> &str {
        &self.variables[id.0].name
    }

    /// Variables in an order where every parent precedes its children.
    pub fn topological_order(&self) -> &[VarId] {
        &self.topological
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn lookup(&self, name: &str) -> Result<VarId> {
        self.find(name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn lookup_value(&self, var: VarId, label: &str) -> Result<usize> {
        let variable = self.variable(var);
        variable
            .value_index(label)
            .ok_or_else(|| Error::UnknownValue {
                variable: variable.name.clone(),
                value: label.to_string(),
            })
    }

    /// Number of full instantiations, saturating at `u128::MAX`.
    pub fn state_space(&self) -> u128 {
        self.variables
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.values.len() as u128))
    }

    /// Builds and validates a network from its document form.
    pub fn from_document(doc: &NetworkDocument) -> Result<Self> {
        let mut by_name = HashMap::with_capacity(doc.variables.len());
        let mut variables = Vec::with_capacity(doc.variables.len());
        for (i, v) in doc.variables.iter().enumerate() {
            if v.name.is_empty() {
                return Err(Error::Validation(format!(
                    "variable #{i} has an empty name"
                )));
            }
            if by_name.insert(v.name.clone(), VarId(i)).is_some() {
                return Err(Error::Validation(format!(
                    "variable `{}` is declared twice",
                    v.name
                )));
            }
            if v.values.len() < 2 {
                return Err(Error::Validation(format!(
                    "variable `{}` needs at least two values",
                    v.name
                )));
            }
            for (j, label) in v.values.iter().enumerate() {
                if v.values[..j].contains(label) {
                    return Err(Error::Validation(format!(
                        "variable `{}` repeats value `{label}`",
                        v.name
                    )));
                }
            }
            variables.push(Variable {
                name: v.name.clone(),
                values: v.values.clone(),
            });
        }

        let mut cpts = Vec::with_capacity(variables.len());
        for (i, v) in doc.variables.iter().enumerate() {
            let mut parents = Vec::with_capacity(v.parents.len());
            for p in &v.parents {
                let id = *by_name.get(p).ok_or_else(|| {
                    Error::Validation(format!(
                        "variable `{}` lists unknown parent `{p}`",
                        v.name
                    ))
                })?;
                if id.0 == i {
                    return Err(Error::Cycle(vec![v.name.clone(), v.name.clone()]));
                }
                if parents.contains(&id) {
                    return Err(Error::Validation(format!(
                        "variable `{}` lists parent `{p}` twice",
                        v.name
                    )));
                }
                parents.push(id);
            }
            let parent_cards: Vec<usize> = parents
                .iter()
                .map(|p| variables[p.0].values.len())
                .collect();
            let child_card = variables[i].values.len();
            let rows: usize = parent_cards.iter().product();
            if v.cpt.len() != rows * child_card {
                return Err(Error::Validation(format!(
                    "CPT of `{}` has {} entries, expected {} ({} rows of {})",
                    v.name,
                    v.cpt.len(),
                    rows * child_card,
                    rows,
                    child_card
                )));
            }
            for (r, row) in v.cpt.chunks(child_card).enumerate() {
                if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                    return Err(Error::Validation(format!(
                        "CPT of `{}` row {r} contains {bad}, outside [0, 1]",
                        v.name
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(Error::Validation(format!(
                        "CPT of `{}` row {r} sums to {sum}",
                        v.name
                    )));
                }
            }
            cpts.push(Cpt {
                child: VarId(i),
                parents,
                parent_cards,
                child_card,
                probs: v.cpt.clone(),
            });
        }

        let topological = topological_sort(&variables, &cpts)?;
        Ok(Self {
            variables,
            cpts,
            by_name,
            topological,
        })
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            variables: self
                .variables
                .iter()
                .zip(&self.cpts)
                .map(|(v, cpt)| VariableDocument {
                    name: v.name.clone(),
                    values: v.values.clone(),
                    parents: cpt
                        .parents
                        .iter()
                        .map(|p| self.variables[p.0].name.clone())
                        .collect(),
                    cpt: cpt.probs.clone(),
                })
                .collect(),
        }
    }

    /// All meta parameters of the network in declaration order.
    ///
    /// Binary variables contribute one parameter per CPT row (driving the
    /// first declared value; the second co-varies as its complement).
    /// Multi-valued variables contribute one parameter per (row, value) pair
    /// under the proportional scheme.
    pub fn meta_parameters(&self) -> Vec<MetaParameter> {
        let mut out = Vec::new();
        for var in self.var_ids() {
            let cpt = self.cpt(var);
            let card = self.cardinality(var);
            let driven = if card == 2 { 1 } else { card };
            for row in 0..cpt.row_count() {
                for value in 0..driven {
                    out.push(MetaParameter {
                        var,
                        row,
                        value,
                        scheme: CoVariation::for_cardinality(card),
                    });
                }
            }
        }
        out
    }

    fn with_row(&self, var: VarId, row: usize, new_row: &[f64]) -> Self {
        let mut next = self.clone();
        let cpt = &mut next.cpts[var.0];
        let n = cpt.child_card;
        cpt.probs[row * n..(row + 1) * n].copy_from_slice(new_row);
        next
    }
}

fn topological_sort(variables: &[Variable], cpts: &[Cpt]) -> Result<Vec<VarId>> {
    let n = variables.len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for cpt in cpts {
        for p in &cpt.parents {
            children[p.0].push(cpt.child.0);
            indegree[cpt.child.0] += 1;
        }
    }
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(VarId(v));
        for &c in children[v].iter().rev() {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Walk parent links among the unsorted nodes until a node repeats.
    let mut seen = vec![usize::MAX; n];
    let mut path = Vec::new();
    let mut current = (0..n).find(|&i| indegree[i] > 0).expect("cycle exists");
    loop {
        if seen[current] != usize::MAX {
            let start = seen[current];
            let mut cycle: Vec<String> = path[start..]
                .iter()
                .map(|&i: &usize| variables[i].name.clone())
                .collect();
            // `path` follows child -> parent links; report it in edge direction.
            cycle.reverse();
            cycle.push(cycle[0].clone());
            return Err(Error::Cycle(cycle));
        }
        seen[current] = path.len();
        path.push(current);
        current = cpts[current]
            .parents
            .iter()
            .map(|p| p.0)
            .find(|&p| indegree[p] > 0)
            .expect("node on a cycle has an unsorted parent");
    }
}

/// Serde form of the canonical network document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub variables: Vec<VariableDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableDocument {
    pub name: String,
    pub values: Vec<String>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Vec<f64>,
}

/// Parses and validates a canonical network document.
pub fn load_network(text: &str) -> Result<BeliefNetwork> {
    let doc: NetworkDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    BeliefNetwork::from_document(&doc)
}

/// Renders the canonical document. Floating-point values are written in
/// shortest round-trip form, so [`load_network`] restores them bit for bit.
pub fn serialize_network(net: &BeliefNetwork) -> String {
    serde_json::to_string_pretty(&net.to_document()).expect("document is always serialisable")
}

/// Partial instantiation of network variables, stored as value indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Evidence {
    assignments: BTreeMap<VarId, usize>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds evidence from `(variable, value)` label pairs.
    pub fn from_labels<'a, I>(net: &BeliefNetwork, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut ev = Self::new();
        for (name, label) in pairs {
            let var = net.lookup(name)?;
            let value = net.lookup_value(var, label)?;
            ev.assign(net, var, value)?;
        }
        Ok(ev)
    }

    /// Adds an assignment; re-assigning the same value is a no-op.
    pub fn assign(&mut self, net: &BeliefNetwork, var: VarId, value: usize) -> Result<()> {
        if value >= net.cardinality(var) {
            return Err(Error::UnknownValue {
                variable: net.name(var).to_string(),
                value: value.to_string(),
            });
        }
        match self.assignments.insert(var, value) {
            Some(old) if old != value => {
                self.assignments.insert(var, old);
                Err(Error::ConflictingAssignment(net.name(var).to_string()))
            }
            _ => Ok(()),
        }
    }

    /// Evidence extended with an event, or `None` when the event contradicts it.
    pub fn with_event(&self, event: Event) -> Option<Self> {
        match self.assignments.get(&event.var) {
            Some(&v) if v != event.value => None,
            _ => {
                let mut next = self.clone();
                next.assignments.insert(event.var, event.value);
                Some(next)
            }
        }
    }

    pub fn get(&self, var: VarId) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.assignments.contains_key(&var)
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, usize)> + '_ {
        self.assignments.iter().map(|(&k, &v)| (k, v))
    }

    pub fn to_labels(&self, net: &BeliefNetwork) -> Vec<(String, String)> {
        self.iter()
            .map(|(var, v)| {
                let variable = net.variable(var);
                (variable.name.clone(), variable.values[v].clone())
            })
            .collect()
    }
}

/// An event `Y = y`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub var: VarId,
    pub value: usize,
}

impl Event {
    pub fn new(var: VarId, value: usize) -> Self {
        Self { var, value }
    }

    pub fn from_labels(net: &BeliefNetwork, name: &str, label: &str) -> Result<Self> {
        let var = net.lookup(name)?;
        let value = net.lookup_value(var, label)?;
        Ok(Self { var, value })
    }

    pub fn describe(&self, net: &BeliefNetwork) -> String {
        format!("{}={}", net.name(self.var), net.variable(self.var).values[self.value])
    }
}

/// How the other parameters of a CPT row follow a change to the driven one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoVariation {
    /// Binary rows: the other parameter becomes `1 - τ`.
    Complement,
    /// Multi-valued rows: the siblings keep their mutual ratios.
    Proportional,
}

impl CoVariation {
    pub fn for_cardinality(card: usize) -> Self {
        if card == 2 {
            CoVariation::Complement
        } else {
            CoVariation::Proportional
        }
    }
}

/// Identifies the meta parameter `τ_{x|u}`: the CPT row of `var` selected by
/// a full parent instantiation, and the child value whose parameter is driven.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MetaParameter {
    pub var: VarId,
    pub row: usize,
    pub value: usize,
    pub scheme: CoVariation,
}

impl MetaParameter {
    /// `parent_values` assigns every parent of `var`, in parent order.
    pub fn new(
        net: &BeliefNetwork,
        var: VarId,
        parent_values: &[usize],
        value: usize,
    ) -> Result<Self> {
        let cpt = net.cpt(var);
        if parent_values.len() != cpt.parents.len() {
            return Err(Error::Validation(format!(
                "parameter of `{}` needs {} parent values, got {}",
                net.name(var),
                cpt.parents.len(),
                parent_values.len()
            )));
        }
        for (&p, &v) in cpt.parents.iter().zip(parent_values) {
            if v >= net.cardinality(p) {
                return Err(Error::UnknownValue {
                    variable: net.name(p).to_string(),
                    value: v.to_string(),
                });
            }
        }
        if value >= net.cardinality(var) {
            return Err(Error::UnknownValue {
                variable: net.name(var).to_string(),
                value: value.to_string(),
            });
        }
        Ok(Self {
            var,
            row: cpt.row_index(parent_values),
            value,
            scheme: CoVariation::for_cardinality(net.cardinality(var)),
        })
    }

    pub fn current_value(&self, net: &BeliefNetwork) -> f64 {
        net.cpt(self.var).parameter(self.row, self.value)
    }

    /// Textual form `Child|Parent=v,...:value` (`Child:value` for roots).
    pub fn describe(&self, net: &BeliefNetwork) -> String {
        let cpt = net.cpt(self.var);
        let var = net.variable(self.var);
        let mut out = var.name.clone();
        if !cpt.parents.is_empty() {
            out.push('|');
            let parents: Vec<String> = cpt
                .parents
                .iter()
                .zip(cpt.parent_values(self.row))
                .map(|(&p, v)| format!("{}={}", net.name(p), net.variable(p).values[v]))
                .collect();
            out.push_str(&parents.join(","));
        }
        out.push(':');
        out.push_str(&var.values[self.value]);
        out
    }

    /// Sort key: variable name, then parent instantiation, then value.
    pub(crate) fn sort_key<'a>(&self, net: &'a BeliefNetwork) -> (&'a str, usize, usize) {
        (net.name(self.var), self.row, self.value)
    }
}

/// Returns the probability of a complete instantiation: the product of the
/// parameters consistent with it.
pub fn joint_probability(net: &BeliefNetwork, full: &Evidence) -> Result<f64> {
    let mut values = Vec::with_capacity(net.len());
    for var in net.var_ids() {
        match full.get(var) {
            Some(v) => values.push(v),
            None => return Err(Error::IncompleteInstantiation(net.name(var).to_string())),
        }
    }
    Ok(joint_probability_of(net, &values))
}

/// Joint probability of an instantiation given as a value index per variable.
pub(crate) fn joint_probability_of(net: &BeliefNetwork, values: &[usize]) -> f64 {
    net.cpts
        .iter()
        .map(|cpt| {
            let row = cpt
                .parents
                .iter()
                .zip(&cpt.parent_cards)
                .fold(0, |acc, (p, &card)| acc * card + values[p.0]);
            cpt.probs[row * cpt.child_card + values[cpt.child.0]]
        })
        .product()
}

/// New CPT row after setting the driven parameter to `new_value`.
///
/// Siblings are rescaled to keep their mutual ratios. When they carry no mass
/// at all the freed mass is spread uniformly over them.
pub fn covaried_row(row: &[f64], driven: usize, new_value: f64) -> Vec<f64> {
    let mut out = vec![0.0; row.len()];
    let rest = 1.0 - new_value;
    if row.len() == 2 {
        out[driven] = new_value;
        out[1 - driven] = rest;
        return out;
    }
    let sibling_mass: f64 = row
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != driven)
        .map(|(_, p)| p)
        .sum();
    let uniform = rest / (row.len() - 1) as f64;
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = if i == driven {
            new_value
        } else if sibling_mass > 0.0 {
            row[i] * rest / sibling_mass
        } else {
            uniform
        };
    }
    out
}

/// Returns a new revision with `τ_{x|u} := new_value`, co-varying the rest of
/// the row according to the parameter's scheme.
pub fn apply_parameter_change(
    net: &BeliefNetwork,
    param: &MetaParameter,
    new_value: f64,
) -> Result<BeliefNetwork> {
    if !(0.0..=1.0).contains(&new_value) {
        return Err(Error::InvalidProbability(new_value));
    }
    let row = covaried_row(net.cpt(param.var).row(param.row), param.value, new_value);
    Ok(net.with_row(param.var, param.row, &row))
}

/// Convenience builder, mostly for tests and fixtures.
#[derive(Clone, Debug, Default)]
pub struct NetworkBuilder {
    doc: Vec<VariableDocument>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn variable(mut self, name: &str, values: &[&str], parents: &[&str], cpt: &[f64]) -> Self {
        self.doc.push(VariableDocument {
            name: name.to_string(),
            values: values.iter().map(|s| s.to_string()).collect(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            cpt: cpt.to_vec(),
        });
        self
    }

    pub fn binary(self, name: &str, parents: &[&str], cpt: &[f64]) -> Self {
        self.variable(name, &["true", "false"], parents, cpt)
    }

    pub fn build(self) -> Result<BeliefNetwork> {
        BeliefNetwork::from_document(&NetworkDocument {
            variables: self.doc,
        })
    }
}

/// The fire/tampering alarm network used throughout the examples and tests.
pub fn fire_network() -> BeliefNetwork {
    NetworkBuilder::new()
        .binary("Fire", &[], &[0.01, 0.99])
        .binary("Tampering", &[], &[0.02, 0.98])
        .binary("Smoke", &["Fire"], &[0.9, 0.1, 0.01, 0.99])
        .binary(
            "Alarm",
            &["Fire", "Tampering"],
            &[0.5, 0.5, 0.99, 0.01, 0.85, 0.15, 0.0001, 0.9999],
        )
        .binary("Leaving", &["Alarm"], &[0.88, 0.12, 0.001, 0.999])
        .binary("Report", &["Leaving"], &[0.75, 0.25, 0.01, 0.99])
        .build()
        .expect("fire network is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_node(theta: f64) -> BeliefNetwork {
        NetworkBuilder::new()
            .binary("X", &[], &[theta, 1.0 - theta])
            .build()
            .unwrap()
    }

    #[test]
    fn loads_fire_document() {
        let text = serialize_network(&fire_network());
        let net = load_network(&text).unwrap();
        assert_eq!(net.len(), 6);
        let alarm = net.lookup("Alarm").unwrap();
        assert_eq!(net.cpt(alarm).row_count(), 4);
        assert_eq!(
            net.cpt(alarm).probabilities(),
            &[0.5, 0.5, 0.99, 0.01, 0.85, 0.15, 0.0001, 0.9999]
        );
    }

    #[test]
    fn loads_minimal_network() {
        let net = load_network(
            r#"{"variables":[{"name":"X","values":["true","false"],"parents":[],"cpt":[0.3,0.7]}]}"#,
        )
        .unwrap();
        assert_eq!(net.len(), 1);
    }

    #[test]
    fn rejects_row_not_summing_to_one() {
        let err = load_network(
            r#"{"variables":[{"name":"X","values":["true","false"],"parents":[],"cpt":[0.5,0.6]}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("row 0 sums to 1.1"), "{err}");
        assert!(err.to_string().contains("`X`"));
    }

    #[test]
    fn parse_errors_carry_position() {
        match load_network("{\"variables\": [\n  {\"name\": }").unwrap_err() {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_cycles_listing_one() {
        let err = NetworkBuilder::new()
            .binary("A", &["C"], &[0.5, 0.5, 0.5, 0.5])
            .binary("B", &["A"], &[0.5, 0.5, 0.5, 0.5])
            .binary("C", &["B"], &[0.5, 0.5, 0.5, 0.5])
            .binary("D", &[], &[0.5, 0.5])
            .build()
            .unwrap_err();
        match err {
            Error::Cycle(names) => {
                assert_eq!(names.len(), 4);
                assert_eq!(names.first(), names.last());
                for n in ["A", "B", "C"] {
                    assert!(names.iter().any(|m| m == n));
                }
                // Each consecutive pair is a parent -> child edge.
                let pos = |n: &str| names.iter().position(|m| m == n).unwrap();
                let a = pos("A");
                assert_eq!(names[a + 1], "B");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_structural_mistakes() {
        let dup = NetworkBuilder::new()
            .binary("A", &[], &[0.5, 0.5])
            .binary("A", &[], &[0.5, 0.5])
            .build();
        assert!(matches!(dup, Err(Error::Validation(_))));

        let wrong_len = NetworkBuilder::new()
            .binary("A", &[], &[0.5, 0.5])
            .binary("B", &["A"], &[0.5, 0.5])
            .build();
        assert!(matches!(wrong_len, Err(Error::Validation(m)) if m.contains("`B`")));

        let unknown = NetworkBuilder::new().binary("B", &["Q"], &[0.5, 0.5, 0.5, 0.5]).build();
        assert!(matches!(unknown, Err(Error::Validation(m)) if m.contains("`Q`")));

        let single = NetworkBuilder::new().variable("A", &["only"], &[], &[1.0]).build();
        assert!(single.is_err());

        let repeated = NetworkBuilder::new()
            .variable("A", &["a", "a"], &[], &[0.5, 0.5])
            .build();
        assert!(repeated.is_err());

        let negative = NetworkBuilder::new().binary("A", &[], &[1.5, -0.5]).build();
        assert!(negative.is_err());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = load_network(r#"{"variables":[], "extra": 1}"#).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn joint_probability_of_fire_instantiation() {
        let net = fire_network();
        // fire, tampering, smoke, alarm, not leaving, report
        let full = Evidence::from_labels(
            &net,
            [
                ("Fire", "true"),
                ("Tampering", "false"),
                ("Smoke", "true"),
                ("Alarm", "true"),
                ("Leaving", "false"),
                ("Report", "true"),
            ],
        )
        .unwrap();
        let p = joint_probability(&net, &full).unwrap();
        assert!((p - 0.01 * 0.98 * 0.9 * 0.99 * 0.12 * 0.01).abs() < 1e-12);
    }

    #[test]
    fn joint_probability_needs_full_instantiation() {
        let net = fire_network();
        let partial = Evidence::from_labels(&net, [("Fire", "true")]).unwrap();
        assert!(matches!(
            joint_probability(&net, &partial),
            Err(Error::IncompleteInstantiation(_))
        ));
        let one = one_node(0.3);
        let full = Evidence::from_labels(&one, [("X", "true")]).unwrap();
        assert_eq!(joint_probability(&one, &full).unwrap(), 0.3);
    }

    #[test]
    fn proportional_scheme_keeps_ratios() {
        assert_eq!(covaried_row(&[0.5, 0.5], 0, 0.5), vec![0.5, 0.5]);
        let row = covaried_row(&[0.6, 0.3, 0.1], 0, 0.8);
        for (a, b) in row.iter().zip([0.8, 0.15, 0.05]) {
            assert!((a - b).abs() < 1e-12);
        }
        let row = covaried_row(&[1.0, 0.0, 0.0], 0, 0.4);
        for (a, b) in row.iter().zip([0.4, 0.3, 0.3]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_change_leaves_original_untouched() {
        let net = fire_network();
        let tampering = net.lookup("Tampering").unwrap();
        let param = MetaParameter::new(&net, tampering, &[], 0).unwrap();
        let next = apply_parameter_change(&net, &param, 0.036).unwrap();
        assert_eq!(net.cpt(tampering).row(0), &[0.02, 0.98]);
        assert_eq!(next.cpt(tampering).row(0)[0], 0.036);
        assert!((next.cpt(tampering).row(0)[1] - 0.964).abs() < 1e-15);
        assert!(apply_parameter_change(&net, &param, 1.2).is_err());
    }

    #[test]
    fn meta_parameter_text() {
        let net = fire_network();
        let alarm = net.lookup("Alarm").unwrap();
        let p = MetaParameter::new(&net, alarm, &[1, 0], 0).unwrap();
        assert_eq!(p.describe(&net), "Alarm|Fire=false,Tampering=true:true");
        assert_eq!(p.row, 2);
        assert_eq!(p.current_value(&net), 0.85);
        assert_eq!(net.cpt(alarm).parent_values(2), vec![1, 0]);
        assert!(MetaParameter::new(&net, alarm, &[1], 0).is_err());
    }

    #[test]
    fn meta_parameters_enumeration() {
        let net = fire_network();
        // 1 + 1 + 2 + 4 + 2 + 2 rows, one parameter per binary row
        assert_eq!(net.meta_parameters().len(), 12);
        let tri = NetworkBuilder::new()
            .variable("X", &["a", "b", "c"], &[], &[0.6, 0.3, 0.1])
            .build()
            .unwrap();
        assert_eq!(tri.meta_parameters().len(), 3);
        assert!(tri
            .meta_parameters()
            .iter()
            .all(|p| p.scheme == CoVariation::Proportional));
    }

    #[test]
    fn evidence_conflicts() {
        let net = fire_network();
        let fire = net.lookup("Fire").unwrap();
        let mut ev = Evidence::new();
        ev.assign(&net, fire, 0).unwrap();
        ev.assign(&net, fire, 0).unwrap();
        assert!(ev.assign(&net, fire, 1).is_err());
        assert_eq!(ev.get(fire), Some(0));
        assert!(ev.with_event(Event::new(fire, 1)).is_none());
        assert!(Evidence::from_labels(&net, [("Fire", "maybe")]).is_err());
        assert!(Evidence::from_labels(&net, [("Nope", "true")]).is_err());
    }
}
