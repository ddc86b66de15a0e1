use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use bntune_core::inference::find_elimination_order;
use bntune_core::BeliefNetwork;

/// The parameter change that produced a revision from its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct Change {
    pub param: String,
    pub value: f64,
}

/// Immutable view of one stored revision.
#[derive(Clone, Debug)]
pub struct Revision {
    pub id: String,
    pub network: Arc<BeliefNetwork>,
    pub parent: Option<String>,
    pub change: Option<Change>,
    /// Width of the min-fill elimination order, shared along a lineage.
    pub width: usize,
}

struct Entry {
    revision: Revision,
    children: Vec<String>,
    last_used: u64,
}

struct Inner {
    entries: HashMap<String, Entry>,
    next_id: u64,
    clock: u64,
}

/// In-memory revision tree. Revisions never change once stored; when the
/// store is full the least recently used leaf is evicted.
pub struct RevisionStore {
    cap: usize,
    inner: Mutex<Inner>,
}

impl RevisionStore {
    pub fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            inner: Mutex::new(Inner {
                entries: HashMap::new(),
                next_id: 1,
                clock: 0,
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.inner.lock().unwrap().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores an uploaded network as a new lineage root.
    pub fn insert_root(&self, network: BeliefNetwork) -> Revision {
        let width = find_elimination_order(&network).width;
        self.insert(network, None, None, width)
    }

    /// Stores `network` as a child of `parent`. Returns `None` when the
    /// parent is unknown.
    pub fn derive(&self, parent: &str, network: BeliefNetwork, change: Change) -> Option<Revision> {
        let width = self.get(parent)?.width;
        Some(self.insert(network, Some(parent.to_string()), Some(change), width))
    }

    pub fn get(&self, id: &str) -> Option<Revision> {
        let mut inner = self.inner.lock().unwrap();
        inner.clock += 1;
        let now = inner.clock;
        let entry = inner.entries.get_mut(id)?;
        entry.last_used = now;
        Some(entry.revision.clone())
    }

    pub fn children(&self, id: &str) -> Vec<String> {
        let inner = self.inner.lock().unwrap();
        inner
            .entries
            .get(id)
            .map(|e| e.children.clone())
            .unwrap_or_default()
    }

    fn insert(
        &self,
        network: BeliefNetwork,
        parent: Option<String>,
        change: Option<Change>,
        width: usize,
    ) -> Revision {
        let mut inner = self.inner.lock().unwrap();
        let id = format!("rev-{}", inner.next_id);
        inner.next_id += 1;
        inner.clock += 1;
        let now = inner.clock;
        if let Some(p) = parent.as_ref().and_then(|p| inner.entries.get_mut(p)) {
            p.children.push(id.clone());
            p.last_used = now;
        }
        let revision = Revision {
            id: id.clone(),
            network: Arc::new(network),
            parent,
            change,
            width,
        };
        inner.entries.insert(
            id.clone(),
            Entry {
                revision: revision.clone(),
                children: Vec::new(),
                last_used: now,
            },
        );
        while inner.entries.len() > self.cap {
            if !evict_one(&mut inner, &id) {
                break;
            }
        }
        revision
    }
}

fn evict_one(inner: &mut Inner, keep: &str) -> bool {
    let victim = inner
        .entries
        .iter()
        .filter(|(id, e)| e.children.is_empty() && id.as_str() != keep)
        .min_by_key(|(_, e)| e.last_used)
        .map(|(id, _)| id.clone());
    let Some(victim) = victim else {
        return false;
    };
    let entry = inner.entries.remove(&victim).expect("victim exists");
    if let Some(parent) = entry
        .revision
        .parent
        .as_ref()
        .and_then(|p| inner.entries.get_mut(p))
    {
        parent.children.retain(|c| c != &victim);
    }
    true
}
