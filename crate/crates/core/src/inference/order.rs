use std::collections::BTreeSet;

use crate::model::{BeliefNetwork, VarId};

/// A permutation of the network variables and the width it induces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder {
    pub order: Vec<VarId>,
    /// Largest cluster size minus one.
    pub width: usize,
}

/// Undirected moral graph: parents married, directions dropped.
pub(crate) fn moral_graph(net: &BeliefNetwork) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); net.len()];
    for var in net.var_ids() {
        let parents = net.cpt(var).parents();
        for (i, p) in parents.iter().enumerate() {
            adj[var.0].insert(p.0);
            adj[p.0].insert(var.0);
            for q in &parents[i + 1..] {
                adj[p.0].insert(q.0);
                adj[q.0].insert(p.0);
            }
        }
    }
    adj
}

fn fill_in(adj: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = adj[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        for &b in &nbrs[i + 1..] {
            if !adj[a].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Greedy min-fill ordering. Ties go to the lexicographically smallest
/// variable name, so the order is reproducible.
pub fn find_elimination_order(net: &BeliefNetwork) -> EliminationOrder {
    let mut adj = moral_graph(net);
    let n = net.len();
    let mut alive = vec![true; n];
    let mut fill: Vec<usize> = (0..n).map(|v| fill_in(&adj, v)).collect();
    let mut order = Vec::with_capacity(n);
    let mut width = 0;

    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by(|&a, &b| {
                fill[a]
                    .cmp(&fill[b])
                    .then_with(|| net.name(VarId(a)).cmp(net.name(VarId(b))))
            })
            .expect("a live variable remains");
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        width = width.max(nbrs.len());
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        adj[v].clear();
        alive[v] = false;
        order.push(VarId(v));

        // Only vertices within distance two of `v` can change their fill-in.
        let mut touched = BTreeSet::new();
        for &a in &nbrs {
            touched.insert(a);
            touched.extend(adj[a].iter().copied());
        }
        for t in touched {
            fill[t] = fill_in(&adj, t);
        }
    }

    EliminationOrder { order, width }
}

/// Width induced by an arbitrary order.
pub fn order_width(net: &BeliefNetwork, order: &[VarId]) -> usize {
    let mut adj = moral_graph(net);
    let mut width = 0;
    for &VarId(v) in order {
        let nbrs: Vec<usize> = adj[v].iter().copied().collect();
        width = width.max(nbrs.len());
        for (i, &a) in nbrs.iter().enumerate() {
            for &b in &nbrs[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
        for &a in &nbrs {
            adj[a].remove(&v);
        }
        adj[v].clear();
    }
    width
}
