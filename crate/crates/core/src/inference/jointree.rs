use std::collections::BTreeSet;

use super::factor::Factor;
use super::order::{find_elimination_order, moral_graph, EliminationOrder};
use super::FamilyMarginals;
use crate::model::{BeliefNetwork, Evidence, VarId};

#[derive(Clone, Debug)]
struct Cluster {
    scope: Vec<(VarId, usize)>,
    /// Variables shared with the parent cluster (empty for the root and for
    /// component roots hooked onto it).
    separator: Vec<VarId>,
}

/// Join tree compiled from an elimination order.
///
/// The tree depends only on the network structure, so one compilation serves
/// every revision that differs from the original in parameter values alone.
#[derive(Clone, Debug)]
pub struct JoinTree {
    order: EliminationOrder,
    clusters: Vec<Cluster>,
    children: Vec<Vec<usize>>,
    /// Parents after children.
    post_order: Vec<usize>,
    root: usize,
    /// Cluster holding each variable's CPT.
    family_cluster: Vec<usize>,
    /// Cluster created when each variable was eliminated (contains it).
    home_cluster: Vec<usize>,
    /// Family scope per variable: parents in CPT order, then the child.
    family_order: Vec<Vec<VarId>>,
    cards: Vec<usize>,
}

impl JoinTree {
    pub fn compile(net: &BeliefNetwork) -> Self {
        Self::with_order(net, find_elimination_order(net))
    }

    pub fn with_order(net: &BeliefNetwork, order: EliminationOrder) -> Self {
        let n = net.len();
        let cards: Vec<usize> = net.var_ids().map(|v| net.cardinality(v)).collect();
        let mut position = vec![0usize; n];
        for (k, v) in order.order.iter().enumerate() {
            position[v.0] = k;
        }

        let mut adj = moral_graph(net);
        let mut scopes: Vec<BTreeSet<usize>> = Vec::with_capacity(n);
        for &VarId(v) in &order.order {
            let nbrs: Vec<usize> = adj[v].iter().copied().collect();
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
            let mut scope: BTreeSet<usize> = nbrs.into_iter().collect();
            scope.insert(v);
            scopes.push(scope);
        }

        // Parent of cluster k: the cluster of the earliest-eliminated
        // variable among its other members.
        let mut parent: Vec<Option<usize>> = (0..n)
            .map(|k| {
                let v = order.order[k].0;
                scopes[k]
                    .iter()
                    .filter(|&&u| u != v)
                    .map(|&u| position[u])
                    .min()
            })
            .collect();
        let root = n.saturating_sub(1);
        for (k, p) in parent.iter_mut().enumerate() {
            if p.is_none() && k != root {
                *p = Some(root);
            }
        }

        let mut children = vec![Vec::new(); n];
        for (k, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(k);
            }
        }

        let clusters: Vec<Cluster> = (0..n)
            .map(|k| {
                let separator = match parent[k] {
                    Some(p) => scopes[k]
                        .intersection(&scopes[p])
                        .map(|&u| VarId(u))
                        .collect(),
                    None => Vec::new(),
                };
                Cluster {
                    scope: scopes[k].iter().map(|&u| (VarId(u), cards[u])).collect(),
                    separator,
                }
            })
            .collect();

        let mut post_order = Vec::with_capacity(n);
        if n > 0 {
            let mut stack = vec![(root, false)];
            while let Some((k, expanded)) = stack.pop() {
                if expanded {
                    post_order.push(k);
                } else {
                    stack.push((k, true));
                    stack.extend(children[k].iter().map(|&c| (c, false)));
                }
            }
        }

        let family_order: Vec<Vec<VarId>> = net
            .var_ids()
            .map(|v| {
                let mut f = net.cpt(v).parents().to_vec();
                f.push(v);
                f
            })
            .collect();
        let family_cluster = family_order
            .iter()
            .map(|f| f.iter().map(|u| position[u.0]).min().expect("family is non-empty"))
            .collect();
        let home_cluster = position;

        Self {
            order,
            clusters,
            children,
            post_order,
            root,
            family_cluster,
            home_cluster,
            family_order,
            cards,
        }
    }

    pub fn elimination_order(&self) -> &EliminationOrder {
        &self.order
    }

    pub fn width(&self) -> usize {
        self.order.width
    }

    /// One inward and one outward pass, yielding `Pr(i)` and `Pr(i, x, u)`
    /// for every family.
    pub fn propagate(&self, net: &BeliefNetwork, evidence: &Evidence) -> FamilyMarginals {
        debug_assert_eq!(net.len(), self.cards.len());
        let n = self.clusters.len();
        if n == 0 {
            return FamilyMarginals::new(1.0, Vec::new());
        }

        let mut pots: Vec<Factor> = self
            .clusters
            .iter()
            .map(|c| Factor::ones(c.scope.clone()))
            .collect();
        for var in net.var_ids() {
            pots[self.family_cluster[var.0]]
                .multiply_table(&self.family_order[var.0], net.cpt(var).probabilities());
        }
        for (var, value) in evidence.iter() {
            pots[self.home_cluster[var.0]].observe(var, value);
        }

        // Inward pass.
        let mut up: Vec<Option<Factor>> = vec![None; n];
        for &k in &self.post_order {
            for &c in &self.children[k] {
                let msg = up[c].as_ref().expect("children are processed first");
                pots[k].multiply_subset(msg);
            }
            if k != self.root {
                up[k] = Some(pots[k].marginal(&self.clusters[k].separator));
            }
        }

        // Outward pass: `pots` become cluster beliefs Pr(i, cluster).
        for &k in self.post_order.iter().rev() {
            for &c in &self.children[k] {
                let mut down = pots[k].marginal(&self.clusters[c].separator);
                down.divide_subset(up[c].as_ref().expect("computed inward"));
                pots[c].multiply_subset(&down);
            }
        }

        let evidence_probability = pots[self.root].total();
        let tables = net
            .var_ids()
            .map(|var| pots[self.family_cluster[var.0]].project(&self.family_order[var.0]))
            .collect();
        FamilyMarginals::new(evidence_probability, tables)
    }
}
