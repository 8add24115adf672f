//! Scenarios and the order theory over their events: closure, reduction,
//! minimal elements, layer peeling and linear extensions.
//!
//! Events are addressed by their declaration index; every enumeration is
//! ordered by that index so results are reproducible.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::policy::{Atom, PolicyRule, PolicySet};
use crate::terms::Term;
use crate::transition::{Event, Query};

/// Enumeration stops being attempted above this many events.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("order is cyclic: {}", .0.join(" < "))]
    CyclicOrder(Vec<String>),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("{events} events exceed the enumeration cap of {cap}")]
    TooLarge { events: usize, cap: usize },
    #[error("duplicate event `{0}`")]
    DuplicateEvent(String),
}

/// The causality relation: events plus the declared `l1 < l2` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalityRelation {
    events: Vec<Event>,
    edges: Vec<(usize, usize)>,
    closure: Vec<Vec<bool>>,
}

impl CausalityRelation {
    /// Checks acyclicity and name uniqueness up front, so the order
    /// operations below are total.
    pub fn new(events: Vec<Event>, edges: Vec<(usize, usize)>) -> Result<Self, ScenarioError> {
        let n = events.len();
        for (i, e) in events.iter().enumerate() {
            if events[..i].iter().any(|o| o.name == e.name) {
                return Err(ScenarioError::DuplicateEvent(e.name.clone()));
            }
        }
        assert!(
            edges.iter().all(|&(a, b)| a < n && b < n),
            "edge endpoints must index events"
        );
        let closure = closure_matrix(n, &edges);
        if let Some(i) = (0..n).find(|&i| closure[i][i]) {
            let names = cycle_witness(n, &edges, i)
                .into_iter()
                .map(|k| events[k].name.clone())
                .collect();
            return Err(ScenarioError::CyclicOrder(names));
        }
        Ok(CausalityRelation {
            events,
            edges,
            closure,
        })
    }

    pub fn from_names(events: Vec<Event>, edges: &[(&str, &str)]) -> Result<Self, ScenarioError> {
        let idx = |name: &str| {
            events
                .iter()
                .position(|e| e.name == name)
                .ok_or_else(|| ScenarioError::UnknownEvent(name.to_string()))
        };
        let pairs = edges
            .iter()
            .map(|&(a, b)| Ok((idx(a)?, idx(b)?)))
            .collect::<Result<Vec<_>, ScenarioError>>()?;
        CausalityRelation::new(events, pairs)
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, ScenarioError> {
        self.events
            .iter()
            .position(|e| e.name == name)
            .ok_or_else(|| ScenarioError::UnknownEvent(name.to_string()))
    }

    /// `a ⤳ b` in the transitive closure.
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.closure[a][b]
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        a == b || self.closure[a][b] || self.closure[b][a]
    }

    pub fn names(&self, idx: impl IntoIterator<Item = usize>) -> Vec<String> {
        idx.into_iter().map(|i| self.events[i].name.clone()).collect()
    }
}

fn closure_matrix(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(a, b) in edges {
        m[a][b] = true;
    }
    // Warshall
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    m
}

/// A shortest cycle through `start`, found by breadth-first search.
fn cycle_witness(n: usize, edges: &[(usize, usize)], start: usize) -> Vec<usize> {
    let mut parent = vec![None; n];
    let mut queue = std::collections::VecDeque::from([start]);
    let mut seen = vec![false; n];
    while let Some(u) = queue.pop_front() {
        for &(a, b) in edges.iter().filter(|&&(a, _)| a == u) {
            if b == start {
                let mut path = vec![a];
                let mut cur = a;
                while let Some(p) = parent[cur] {
                    path.push(p);
                    cur = p;
                }
                path.reverse();
                path.push(start);
                return path;
            }
            if !seen[b] {
                seen[b] = true;
                parent[b] = Some(a);
                queue.push_back(b);
            }
        }
    }
    vec![start, start]
}

/// The closed relation as a sorted set of index pairs.
pub fn transitive_closure(rel: &CausalityRelation) -> BTreeSet<(usize, usize)> {
    let n = rel.len();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter(|&(i, j)| rel.closure[i][j])
        .collect()
}

/// The Hasse diagram of the relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalityGraph {
    pub nodes: usize,
    pub arcs: BTreeSet<(usize, usize)>,
}

pub fn transitive_reduction(rel: &CausalityRelation) -> CausalityGraph {
    let n = rel.len();
    let c = &rel.closure;
    let arcs = transitive_closure(rel)
        .into_iter()
        .filter(|&(a, b)| !(0..n).any(|k| c[a][k] && c[k][b]))
        .collect();
    CausalityGraph { nodes: n, arcs }
}

pub fn minimal_elements(rel: &CausalityRelation) -> Vec<usize> {
    let n = rel.len();
    (0..n).filter(|&j| !(0..n).any(|i| rel.closure[i][j])).collect()
}

/// Repeatedly removes the sources of the graph. Layers are sorted by index.
pub fn peel_layers(cg: &CausalityGraph) -> Vec<Vec<usize>> {
    let mut remaining: BTreeSet<usize> = (0..cg.nodes).collect();
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        let layer: Vec<usize> = remaining
            .iter()
            .copied()
            .filter(|&j| !cg.arcs.iter().any(|&(a, b)| b == j && remaining.contains(&a)))
            .collect();
        assert!(!layer.is_empty(), "causality graphs are acyclic");
        for j in &layer {
            remaining.remove(j);
        }
        layers.push(layer);
    }
    layers
}

pub fn predecessors(rel: &CausalityRelation, name: &str) -> Result<Vec<usize>, ScenarioError> {
    let l = rel.index_of(name)?;
    Ok((0..rel.len()).filter(|&i| rel.closure[i][l]).collect())
}

/// Streams linear extensions in lexicographic order of declaration index.
///
/// Each call to `linear_extensions` returns an independent cursor.
#[derive(Debug, Clone)]
pub struct LinearExtensions<'a> {
    rel: &'a CausalityRelation,
    stack: Vec<usize>,
    placed: Vec<bool>,
    started: bool,
    done: bool,
}

pub fn linear_extensions(rel: &CausalityRelation) -> LinearExtensions<'_> {
    LinearExtensions {
        rel,
        stack: Vec::new(),
        placed: vec![false; rel.len()],
        started: false,
        done: false,
    }
}

impl LinearExtensions<'_> {
    fn available(&self, j: usize) -> bool {
        !self.placed[j] && (0..self.rel.len()).all(|i| !self.rel.closure[i][j] || self.placed[i])
    }

    fn place(&mut self, j: usize) {
        self.placed[j] = true;
        self.stack.push(j);
    }

    // A downward-closed prefix always extends, so completion cannot fail.
    fn complete(&mut self) {
        while let Some(j) = (0..self.rel.len()).find(|&j| self.available(j)) {
            self.place(j);
        }
    }
}

impl Iterator for LinearExtensions<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            self.complete();
            return Some(self.stack.clone());
        }
        // Backtrack to the deepest position with an untried sibling.
        while let Some(j) = self.stack.pop() {
            self.placed[j] = false;
            if let Some(k) = (j + 1..self.rel.len()).find(|&k| self.available(k)) {
                self.place(k);
                self.complete();
                return Some(self.stack.clone());
            }
        }
        self.done = true;
        None
    }
}

pub fn count_linear_extensions(rel: &CausalityRelation) -> Result<u64, ScenarioError> {
    count_linear_extensions_capped(rel, DEFAULT_ENUMERATION_CAP)
}

pub fn count_linear_extensions_capped(rel: &CausalityRelation, cap: usize) -> Result<u64, ScenarioError> {
    if rel.len() > cap {
        return Err(ScenarioError::TooLarge {
            events: rel.len(),
            cap,
        });
    }
    Ok(linear_extensions(rel).count() as u64)
}

/// A hint that replaces the default abduction for one event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UknowsHint {
    pub event: String,
    pub fact: Atom,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub principals: Vec<Term>,
    pub attributes: Vec<Term>,
    pub policies: PolicySet,
    pub causality: CausalityRelation,
    pub query: Query,
    pub hints: Vec<UknowsHint>,
}

impl Scenario {
    pub fn events(&self) -> &[Event] {
        self.causality.events()
    }

    pub fn user_rules(&self) -> &[PolicyRule] {
        self.policies.user_rules()
    }

    pub fn hints_for(&self, event: &str) -> Vec<Atom> {
        self.hints
            .iter()
            .filter(|h| h.event == event)
            .map(|h| h.fact.clone())
            .collect()
    }

    pub fn with_query(&self, query: Query) -> Scenario {
        Scenario {
            query,
            ..self.clone()
        }
    }

    /// The same scenario without the named user policy.
    pub fn without_policy(&self, name: &str) -> Scenario {
        Scenario {
            policies: self.policies.without(name),
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cro;
    
    fn chain_events(n: usize) -> Vec<Event> {
        (0..n)
            .map(|i| {
                Event::new(
                    format!("e{i}"),
                    Term::principal("A"),
                    Term::a2i(Term::principal("A"), Term::attribute("k")).unwrap(),
                    Term::principal("B"),
                )
                .unwrap()
            })
            .collect()
    }

    fn rel(n: usize, edges: &[(usize, usize)]) -> CausalityRelation {
        CausalityRelation::new(chain_events(n), edges.to_vec()).unwrap()
    }

    fn cro_rel() -> CausalityRelation {
        CausalityRelation::new(cro::events(), cro::order()).unwrap()
    }

    #[test]
    fn closure_of_a_chain() {
        let r = rel(3, &[(0, 1), (1, 2)]);
        assert_eq!(
            transitive_closure(&r),
            [(0, 1), (1, 2), (0, 2)].into_iter().collect()
        );
    }

    #[test]
    fn cro_is_already_closed() {
        let r = cro_rel();
        assert_eq!(
            transitive_closure(&r),
            cro::order().into_iter().collect()
        );
        assert_eq!(transitive_reduction(&r).arcs.len(), 3);
    }

    #[test]
    fn cycles_are_rejected_with_a_witness() {
        let err = CausalityRelation::new(chain_events(2), vec![(0, 1), (1, 0)]).unwrap_err();
        assert_eq!(err, ScenarioError::CyclicOrder(vec!["e0".into(), "e1".into(), "e0".into()]));
        let err = CausalityRelation::new(chain_events(1), vec![(0, 0)]).unwrap_err();
        assert!(matches!(err, ScenarioError::CyclicOrder(_)));
    }

    #[test]
    fn reduction_drops_implied_arcs() {
        let r = rel(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(
            transitive_reduction(&r).arcs,
            [(0, 1), (1, 2)].into_iter().collect()
        );
        assert!(transitive_reduction(&rel(3, &[])).arcs.is_empty());
    }

    #[test]
    fn minimal_and_layers() {
        let r = cro_rel();
        assert_eq!(r.names(minimal_elements(&r)), ["SEC", "SHC", "SPC"]);
        let layers = peel_layers(&transitive_reduction(&r));
        assert_eq!(layers, vec![vec![0, 1, 2], vec![3, 4, 5]]);
        let chain = rel(3, &[(0, 1), (1, 2)]);
        assert_eq!(minimal_elements(&chain), vec![0]);
        assert_eq!(
            peel_layers(&transitive_reduction(&chain)),
            vec![vec![0], vec![1], vec![2]]
        );
        assert_eq!(peel_layers(&transitive_reduction(&rel(4, &[]))), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn predecessors_in_closure() {
        let r = cro_rel();
        assert_eq!(r.names(predecessors(&r, "SEC2").unwrap()), ["SEC"]);
        assert!(predecessors(&r, "SEC").unwrap().is_empty());
        assert_eq!(
            predecessors(&r, "nope").unwrap_err(),
            ScenarioError::UnknownEvent("nope".into())
        );
        let chain = rel(3, &[(0, 1), (1, 2)]);
        assert_eq!(predecessors(&chain, "e2").unwrap(), vec![0, 1]);
    }

    #[test]
    fn extensions_of_small_orders() {
        let anti = rel(2, &[]);
        assert_eq!(linear_extensions(&anti).collect::<Vec<_>>(), vec![vec![0, 1], vec![1, 0]]);
        let chain = rel(3, &[(0, 1), (1, 2)]);
        assert_eq!(linear_extensions(&chain).collect::<Vec<_>>(), vec![vec![0, 1, 2]]);
        assert_eq!(count_linear_extensions(&rel(3, &[])).unwrap(), 6);
        assert_eq!(count_linear_extensions(&rel(0, &[])).unwrap(), 1);
    }

    #[test]
    fn cro_has_ninety_extensions() {
        let r = cro_rel();
        assert_eq!(count_linear_extensions(&r).unwrap(), 90);
        let first = linear_extensions(&r).next().unwrap();
        assert_eq!(first, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn enumeration_is_lexicographic() {
        let all: Vec<Vec<usize>> = linear_extensions(&rel(4, &[(0, 3)])).collect();
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(all, sorted);
        assert_eq!(all.len(), 12);
    }

    #[test]
    fn too_large_beyond_cap() {
        let r = rel(11, &[]);
        assert_eq!(
            count_linear_extensions(&r).unwrap_err(),
            ScenarioError::TooLarge { events: 11, cap: 10 }
        );
    }

    #[test]
    fn duplicate_event_names() {
        let mut evs = chain_events(2);
        evs[1].name = "e0".into();
        assert_eq!(
            CausalityRelation::new(evs, vec![]).unwrap_err(),
            ScenarioError::DuplicateEvent("e0".into())
        );
    }
}
