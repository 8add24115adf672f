//! Reachability drivers for scenarios: exhaustive interleaving search and
//! the layered partial-order run, with uknows abduction and the
//! compatibility checks that justify the layered run.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use thiserror::Error;

use crate::fixpoint::{derivation_of, DerivationTree, FixpointError, Justification, DEFAULT_BUDGET};
use crate::policy::{Atom, PolicyError, Predicate};
use crate::scenario::{
    linear_extensions, minimal_elements, peel_layers, transitive_reduction, CausalityRelation, Scenario,
};
use crate::transition::{check_query, enabled, Acs, Event, State, TransitionError, UknowsBatch};

/// Event count above which exhaustive compatibility checking is refused.
pub const EXHAUSTIVE_COMPAT_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Fixpoint(#[from] FixpointError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("event `{event}` is disabled after prefix [{}]", .prefix.join(", "))]
    DisabledEvent { event: String, prefix: Vec<String> },
    #[error("event `{event}` in layer {layer} is disabled; missing {missing}")]
    CompatViolation {
        event: String,
        layer: usize,
        missing: Atom,
    },
    #[error("{events} events exceed the exhaustive compatibility cap of {cap}")]
    TooLarge { events: usize, cap: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Interleaving,
    PartialOrder,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Interleaving => "interleaving",
            Mode::PartialOrder => "partial-order",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnalysisOptions {
    pub budget: usize,
    /// Stop the interleaving search at the first witnessing sequence.
    pub early_exit: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            budget: DEFAULT_BUDGET,
            early_exit: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WitnessStep {
    pub events: Vec<String>,
    pub injected: UknowsBatch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    /// State closures: one for the initial state and one per step.
    pub fixpoint_calls: usize,
    pub sequences_explored: u64,
    pub layers: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub mode: Mode,
    pub reachable: bool,
    /// Steps in execution order; empty when unreachable.
    pub witness: Vec<WitnessStep>,
    /// Number of witness steps after which the query first held.
    pub satisfied_at: Option<usize>,
    /// One tree per query conjunct, with messages expanded into the events
    /// that sent them.
    pub derivations: Vec<DerivationTree>,
    pub stats: Stats,
}

impl Verdict {
    /// All injected facts across the witness.
    pub fn injected(&self) -> UknowsBatch {
        self.witness
            .iter()
            .fold(UknowsBatch::empty(), |acc, s| acc.union(&s.injected))
    }
}

fn acs_for(sc: &Scenario, budget: usize) -> Result<Acs, AnalysisError> {
    Ok(Acs::new(&sc.policies, sc.principals.clone(), budget)?)
}

/// The internal knowledge that enables `e` in `s`: nothing when it is
/// already enabled, the declared hints if any, otherwise the sender's
/// internal knowledge of the payload.
pub fn abduce_uknows(s: &State, e: &Event, hints: &[Atom]) -> UknowsBatch {
    if enabled(s, e) {
        UknowsBatch::empty()
    } else if !hints.is_empty() {
        UknowsBatch::new(hints.iter().cloned())
    } else {
        let fact = Atom::uknows(e.sender.clone(), e.payload.clone()).expect("event is well-sorted");
        UknowsBatch::new([fact])
    }
}

fn event_names(sc: &Scenario, idx: &[usize]) -> Vec<String> {
    sc.causality.names(idx.iter().copied())
}

/// Derivation trees of the query conjuncts in `s`, with every message leaf
/// replaced by the event that sent it and the derivation of its guard.
pub fn explain(sc: &Scenario, s: &State) -> Result<Vec<DerivationTree>, FixpointError> {
    let by_msg: BTreeMap<Atom, &Event> = sc.events().iter().map(|e| (e.message(), e)).collect();
    sc.query
        .conjuncts
        .iter()
        .map(|g| Ok(expand_events(derivation_of(&s.closure, g)?, s, &by_msg)))
        .collect()
}

fn expand_events(tree: DerivationTree, s: &State, by_msg: &BTreeMap<Atom, &Event>) -> DerivationTree {
    tree.expand_leaves(&mut |leaf| {
        if leaf.root.pred() != Predicate::Msg || leaf.justification != Justification::Input {
            return None;
        }
        let e = by_msg.get(&leaf.root)?;
        let guard = derivation_of(&s.closure, &e.guard()).ok()?;
        Some(DerivationTree {
            root: leaf.root.clone(),
            justification: Justification::Event {
                name: e.name.clone(),
            },
            children: vec![expand_events(guard, s, by_msg)],
        })
    })
}

/// Explores every linear extension, injecting abduced facts before each
/// step and checking the query in every state.
pub fn analyze_interleaving(sc: &Scenario, opts: AnalysisOptions) -> Result<Verdict, AnalysisError> {
    let acs = acs_for(sc, opts.budget)?;
    let rel = &sc.causality;
    let s0 = acs.initial_state(&UknowsBatch::empty())?;

    // states[k] is the state after the first k events of `prev`.
    let mut prev: Vec<usize> = Vec::new();
    let mut states: Vec<State> = vec![s0];
    let mut batches: Vec<UknowsBatch> = Vec::new();
    let mut explored = 0u64;
    let mut found: Option<(Vec<usize>, Vec<UknowsBatch>, usize, State)> = None;

    for seq in linear_extensions(rel) {
        explored += 1;
        let lcp = prev.iter().zip(&seq).take_while(|(a, b)| a == b).count();
        states.truncate(lcp + 1);
        batches.truncate(lcp);
        for k in lcp..seq.len() {
            let e = &rel.events()[seq[k]];
            let s = &states[k];
            let h = abduce_uknows(s, e, &sc.hints_for(&e.name));
            let next = acs.apply_events(s, std::slice::from_ref(e), &h).map_err(|err| match err {
                TransitionError::DisabledEvent(event) => AnalysisError::DisabledEvent {
                    event,
                    prefix: event_names(sc, &seq[..k]),
                },
                TransitionError::Fixpoint(f) => f.into(),
            })?;
            states.push(next);
            batches.push(h);
        }
        prev = seq;
        if found.is_none() {
            if let Some(k) = states.iter().position(|s| check_query(s, &sc.query)) {
                let last = states.last().expect("non-empty").clone();
                found = Some((prev.clone(), batches.clone(), k, last));
                if opts.early_exit {
                    break;
                }
            }
        }
    }

    let stats = Stats {
        fixpoint_calls: acs.closures(),
        sequences_explored: explored,
        layers: 0,
    };
    Ok(match found {
        Some((seq, hs, k, last)) => Verdict {
            mode: Mode::Interleaving,
            reachable: true,
            witness: seq
                .iter()
                .zip(hs)
                .map(|(&i, injected)| WitnessStep {
                    events: vec![rel.events()[i].name.clone()],
                    injected,
                })
                .collect(),
            satisfied_at: Some(k),
            derivations: explain(sc, &last)?,
            stats: Stats {
                layers: seq.len(),
                ..stats
            },
        },
        None => unreachable_verdict(Mode::Interleaving, stats),
    })
}

fn unreachable_verdict(mode: Mode, stats: Stats) -> Verdict {
    Verdict {
        mode,
        reachable: false,
        witness: Vec::new(),
        satisfied_at: None,
        derivations: Vec::new(),
        stats,
    }
}

/// Union of the abductions for `events`, each computed against `s`.
fn abduce_layer(sc: &Scenario, s: &State, events: &[usize]) -> UknowsBatch {
    events.iter().fold(UknowsBatch::empty(), |acc, &i| {
        let e = &sc.events()[i];
        acc.union(&abduce_uknows(s, e, &sc.hints_for(&e.name)))
    })
}

/// The canonical layered run: abduction for the first layer only, then one
/// parallel step per layer. Returns every state, starting with the empty
/// network.
fn layered_run(
    sc: &Scenario,
    acs: &Acs,
    layers: &[Vec<usize>],
) -> Result<(Vec<State>, UknowsBatch), AnalysisError> {
    let s_pre = acs.initial_state(&UknowsBatch::empty())?;
    let h0 = layers
        .first()
        .map(|l| abduce_layer(sc, &s_pre, l))
        .unwrap_or_default();
    let mut states = vec![s_pre];
    for (k, layer) in layers.iter().enumerate() {
        let h = if k == 0 { h0.clone() } else { UknowsBatch::empty() };
        let evs: Vec<Event> = layer.iter().map(|&i| sc.events()[i].clone()).collect();
        let s = states.last().expect("non-empty");
        match acs.apply_events(s, &evs, &h) {
            Ok(next) => states.push(next),
            Err(TransitionError::DisabledEvent(name)) => {
                let e = evs.iter().find(|e| e.name == name).expect("event of this layer");
                return Err(AnalysisError::CompatViolation {
                    event: name,
                    layer: k,
                    missing: e.guard(),
                });
            }
            Err(TransitionError::Fixpoint(f)) => return Err(f.into()),
        }
    }
    Ok((states, h0))
}

/// Executes the layers of the causality graph as parallel steps.
pub fn analyze_partial_order(sc: &Scenario, opts: AnalysisOptions) -> Result<Verdict, AnalysisError> {
    let acs = acs_for(sc, opts.budget)?;
    let layers = peel_layers(&transitive_reduction(&sc.causality));
    let (states, h0) = layered_run(sc, &acs, &layers)?;
    let stats = Stats {
        fixpoint_calls: acs.closures(),
        sequences_explored: 1,
        layers: layers.len(),
    };
    let Some(k) = states.iter().position(|s| check_query(s, &sc.query)) else {
        return Ok(unreachable_verdict(Mode::PartialOrder, stats));
    };
    let last = states.last().expect("non-empty");
    Ok(Verdict {
        mode: Mode::PartialOrder,
        reachable: true,
        witness: layers
            .iter()
            .enumerate()
            .map(|(i, l)| WitnessStep {
                events: event_names(sc, l),
                injected: if i == 0 { h0.clone() } else { UknowsBatch::empty() },
            })
            .collect(),
        satisfied_at: Some(k),
        derivations: explain(sc, last)?,
        stats,
    })
}

/// Re-executes a witness from the empty network and reports whether the
/// query holds at the end.
pub fn replay_witness(sc: &Scenario, v: &Verdict, budget: usize) -> Result<bool, AnalysisError> {
    let acs = acs_for(sc, budget)?;
    let mut s = acs.initial_state(&UknowsBatch::empty())?;
    for step in &v.witness {
        let evs = step
            .events
            .iter()
            .map(|n| {
                sc.events()
                    .iter()
                    .find(|e| &e.name == n)
                    .cloned()
                    .ok_or_else(|| AnalysisError::DisabledEvent {
                        event: n.clone(),
                        prefix: Vec::new(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        s = acs.apply_events(&s, &evs, &step.injected).map_err(|err| match err {
            TransitionError::DisabledEvent(event) => AnalysisError::DisabledEvent {
                event,
                prefix: Vec::new(),
            },
            TransitionError::Fixpoint(f) => f.into(),
        })?;
    }
    Ok(check_query(&s, &sc.query))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompatMode {
    /// States of the canonical layered run.
    Strict,
    /// Additionally every prefix state of every linear extension.
    Exhaustive,
}

/// Executing `by` flipped the enabledness of `event` in a state where
/// neither had run yet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Comp1Violation {
    pub by: String,
    pub event: String,
    /// Number of steps executed before the state that exhibits the flip.
    pub step: usize,
    pub enabled_before: bool,
}

impl fmt::Display for Comp1Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = if self.enabled_before {
            ("enabled", "disabled")
        } else {
            ("disabled", "enabled")
        };
        write!(
            f,
            "executing {} turns {} from {a} to {b} (state after {} steps)",
            self.by, self.event, self.step
        )
    }
}

/// Running all predecessors of `event` does not enable it.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Comp2Violation {
    pub event: String,
    pub missing: Atom,
}

impl fmt::Display for Comp2Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stays disabled after its predecessors; missing {}", self.event, self.missing)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompatReport {
    pub comp1: Vec<Comp1Violation>,
    pub comp2: Vec<Comp2Violation>,
}

impl CompatReport {
    pub fn comp1_holds(&self) -> bool {
        self.comp1.is_empty()
    }

    pub fn comp2_holds(&self) -> bool {
        self.comp2.is_empty()
    }

    pub fn passes(&self) -> bool {
        self.comp1_holds() && self.comp2_holds()
    }
}

/// Checks both compatibility conditions of the causality relation.
pub fn check_compat(sc: &Scenario, mode: CompatMode, budget: usize) -> Result<CompatReport, AnalysisError> {
    let acs = acs_for(sc, budget)?;
    let rel = &sc.causality;
    let n = rel.len();
    if mode == CompatMode::Exhaustive && n > EXHAUSTIVE_COMPAT_CAP {
        return Err(AnalysisError::TooLarge {
            events: n,
            cap: EXHAUSTIVE_COMPAT_CAP,
        });
    }
    let mut comp1 = BTreeSet::new();
    let layers = peel_layers(&transitive_reduction(rel));

    // COMP1 on the layered run. The empty network and the network with the
    // first-layer abduction both precede any execution.
    let s_pre = acs.initial_state(&UknowsBatch::empty())?;
    let h0 = layers.first().map(|l| abduce_layer(sc, &s_pre, l)).unwrap_or_default();
    let mut base: Vec<(State, Vec<bool>)> = vec![(s_pre.clone(), vec![false; n])];
    if !h0.is_empty() {
        let injected = acs.apply_events(&s_pre, &[], &h0).map_err(transition_err)?;
        base.push((State { step: 0, ..injected }, vec![false; n]));
    }
    let mut run_state = base.last().expect("non-empty").0.clone();
    let mut done = vec![false; n];
    for layer in &layers {
        let evs: Vec<Event> = layer.iter().map(|&i| rel.events()[i].clone()).collect();
        match acs.apply_events(&run_state, &evs, &UknowsBatch::empty()) {
            Ok(next) => {
                for &i in layer {
                    done[i] = true;
                }
                run_state = next;
                base.push((run_state.clone(), done.clone()));
            }
            // Later layers cannot run; COMP2 reports why.
            Err(TransitionError::DisabledEvent(_)) => break,
            Err(TransitionError::Fixpoint(f)) => return Err(f.into()),
        }
    }
    let mut seen = HashSet::new();
    for (s, executed) in &base {
        comp1_at(sc, &acs, s, executed, &mut seen, &mut comp1)?;
    }

    if mode == CompatMode::Exhaustive {
        for seq in linear_extensions(rel) {
            let mut s = s_pre.clone();
            let mut executed = vec![false; n];
            for &i in &seq {
                comp1_at(sc, &acs, &s, &executed, &mut seen, &mut comp1)?;
                let e = &rel.events()[i];
                let h = abduce_uknows(&s, e, &sc.hints_for(&e.name));
                match acs.apply_events(&s, std::slice::from_ref(e), &h) {
                    Ok(next) => s = next,
                    Err(TransitionError::DisabledEvent(_)) => break,
                    Err(TransitionError::Fixpoint(f)) => return Err(f.into()),
                }
                executed[i] = true;
            }
        }
    }

    let comp2 = check_comp2(sc, &acs)?;
    Ok(CompatReport {
        comp1: comp1.into_iter().collect(),
        comp2,
    })
}

fn transition_err(e: TransitionError) -> AnalysisError {
    match e {
        TransitionError::DisabledEvent(event) => AnalysisError::DisabledEvent {
            event,
            prefix: Vec::new(),
        },
        TransitionError::Fixpoint(f) => f.into(),
    }
}

/// For each pair of unexecuted concurrent events, executing one (after its
/// own abduction) must not change whether the other is enabled.
fn comp1_at(
    sc: &Scenario,
    acs: &Acs,
    s: &State,
    executed: &[bool],
    seen: &mut HashSet<(Vec<bool>, BTreeSet<Atom>, BTreeSet<Atom>)>,
    out: &mut BTreeSet<Comp1Violation>,
) -> Result<(), AnalysisError> {
    if !seen.insert((executed.to_vec(), s.msgs.clone(), s.uknows.clone())) {
        return Ok(());
    }
    let rel: &CausalityRelation = &sc.causality;
    let n = rel.len();
    let step = executed.iter().filter(|&&d| d).count();
    for l1 in (0..n).filter(|&i| !executed[i]) {
        let e1 = &rel.events()[l1];
        let h = abduce_uknows(s, e1, &sc.hints_for(&e1.name));
        let before = if h.is_empty() {
            s.clone()
        } else {
            acs.apply_events(s, &[], &h).map_err(transition_err)?
        };
        let after = match acs.apply_events(&before, std::slice::from_ref(e1), &UknowsBatch::empty()) {
            Ok(a) => a,
            Err(TransitionError::DisabledEvent(_)) => continue,
            Err(TransitionError::Fixpoint(f)) => return Err(f.into()),
        };
        for l2 in (0..n).filter(|&j| !executed[j] && !rel.comparable(l1, j)) {
            let e2 = &rel.events()[l2];
            let was = enabled(&before, e2);
            if was != enabled(&after, e2) {
                out.insert(Comp1Violation {
                    by: e1.name.clone(),
                    event: e2.name.clone(),
                    step,
                    enabled_before: was,
                });
            }
        }
    }
    Ok(())
}

/// Runs exactly the predecessors of each non-minimal event, in layers, with
/// abduction for minimal events, and checks that the event is then enabled.
fn check_comp2(sc: &Scenario, acs: &Acs) -> Result<Vec<Comp2Violation>, AnalysisError> {
    let rel = &sc.causality;
    let minimal: BTreeSet<usize> = minimal_elements(rel).into_iter().collect();
    let layers = peel_layers(&transitive_reduction(rel));
    let mut out = Vec::new();
    for l in (0..rel.len()).filter(|l| !minimal.contains(l)) {
        let pre: BTreeSet<usize> = (0..rel.len()).filter(|&i| rel.precedes(i, l)).collect();
        let mut s = acs.initial_state(&UknowsBatch::empty())?;
        let mut h = UknowsBatch::empty();
        for layer in &layers {
            let sub: Vec<usize> = layer.iter().copied().filter(|i| pre.contains(i)).collect();
            if sub.is_empty() {
                continue;
            }
            let roots: Vec<usize> = sub.iter().copied().filter(|i| minimal.contains(i)).collect();
            h = h.union(&abduce_layer(sc, &s, &roots));
            let with_h = acs.apply_events(&s, &[], &h).map_err(transition_err)?;
            // A disabled intermediate is its own violation; inject its
            // guard so the check of `l` can proceed.
            let stuck: Vec<usize> = sub
                .iter()
                .copied()
                .filter(|&i| !enabled(&with_h, &rel.events()[i]))
                .collect();
            let patch = abduce_layer(sc, &with_h, &stuck);
            let evs: Vec<Event> = sub.iter().map(|&i| rel.events()[i].clone()).collect();
            s = acs.apply_events(&with_h, &evs, &patch).map_err(transition_err)?;
        }
        let e = &rel.events()[l];
        if !enabled(&s, e) {
            out.push(Comp2Violation {
                event: e.name.clone(),
                missing: e.guard(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cro;
    use crate::policy::PolicySet;
    use crate::scenario::UknowsHint;
    use crate::terms::Term;
    use crate::transition::Query;

    fn scenario() -> Scenario {
        Scenario {
            name: "cro".into(),
            principals: cro::principals(),
            attributes: cro::attributes(),
            policies: PolicySet::new(cro::policies()).unwrap(),
            causality: CausalityRelation::new(cro::events(), cro::order()).unwrap(),
            query: Query::new(vec![cro::goal()]),
            hints: vec![],
        }
    }

    fn opts() -> AnalysisOptions {
        AnalysisOptions::default()
    }

    #[test]
    fn abduction_in_the_empty_network() {
        let sc = scenario();
        let acs = acs_for(&sc, DEFAULT_BUDGET).unwrap();
        let s = acs.initial_state(&UknowsBatch::empty()).unwrap();
        assert_eq!(abduce_uknows(&s, &sc.events()[0], &[]), UknowsBatch::new([cro::f1()]));
        assert_eq!(
            abduce_layer(&sc, &s, &[0, 1, 2]),
            UknowsBatch::new(cro::initial_facts())
        );
        let s1 = acs.initial_state(&UknowsBatch::new([cro::f1()])).unwrap();
        assert!(abduce_uknows(&s1, &sc.events()[0], &[]).is_empty());
    }

    #[test]
    fn hints_replace_default_abduction() {
        let s = acs_for(&scenario(), DEFAULT_BUDGET)
            .unwrap()
            .initial_state(&UknowsBatch::empty())
            .unwrap();
        let hint = cro::f2();
        assert_eq!(
            abduce_uknows(&s, &cro::events()[0], &[hint.clone()]),
            UknowsBatch::new([hint])
        );
    }

    #[test]
    fn interleaving_reaches_goal_with_the_three_certificates() {
        let sc = scenario();
        let v = analyze_interleaving(&sc, opts()).unwrap();
        assert!(v.reachable);
        assert_eq!(v.witness.len(), 6);
        assert_eq!(v.satisfied_at, Some(6));
        let batches: Vec<UknowsBatch> = v.witness.iter().map(|s| s.injected.clone()).collect();
        assert_eq!(batches[0], UknowsBatch::new([cro::f1()]));
        assert_eq!(batches[1], UknowsBatch::new([cro::f2()]));
        assert_eq!(batches[2], UknowsBatch::new([cro::f3()]));
        assert!(batches[3..].iter().all(UknowsBatch::is_empty));
        assert_eq!(v.stats.sequences_explored, 1);
        assert!(replay_witness(&sc, &v, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn partial_order_uses_two_layers() {
        let sc = scenario();
        let v = analyze_partial_order(&sc, opts()).unwrap();
        assert!(v.reachable);
        assert_eq!(v.witness[0].events, ["SEC", "SHC", "SPC"]);
        assert_eq!(v.witness[1].events, ["SEC2", "SHC2", "SPC2"]);
        assert_eq!(v.witness[0].injected, UknowsBatch::new(cro::initial_facts()));
        assert!(v.witness[1].injected.is_empty());
        assert_eq!(v.stats.fixpoint_calls, 3);
        assert!(replay_witness(&sc, &v, DEFAULT_BUDGET).unwrap());
    }

    #[test]
    fn exhaustive_interleaving_counts_every_sequence() {
        let v = analyze_interleaving(
            &scenario(),
            AnalysisOptions {
                early_exit: false,
                ..opts()
            },
        )
        .unwrap();
        assert!(v.reachable);
        assert_eq!(v.stats.sequences_explored, 90);
        assert!(v.stats.fixpoint_calls > 90);
    }

    #[test]
    fn negative_controls() {
        let sc = scenario();
        for bad in [
            sc.without_policy("P4"),
            sc.with_query(Query::new(vec![Atom::knows(
                Term::principal("CRep"),
                Term::a2i(Term::principal("Helen"), Term::attribute("cans")).unwrap(),
            )
            .unwrap()])),
        ] {
            let v = analyze_interleaving(&bad, opts()).unwrap();
            assert!(!v.reachable);
            assert_eq!(v.stats.sequences_explored, 90);
            assert!(!analyze_partial_order(&bad, opts()).unwrap().reachable);
        }
    }

    #[test]
    fn cro_is_compatible() {
        for mode in [CompatMode::Strict, CompatMode::Exhaustive] {
            let r = check_compat(&scenario(), mode, DEFAULT_BUDGET).unwrap();
            assert!(r.passes(), "{mode:?}: {r:?}");
        }
    }

    /// A and B both know `a2i(A, k)`. `fwd` has A tell B; `relay` has B
    /// repeat what A said. Declared concurrent, `relay` depends on `fwd`.
    fn relay_scenario(ordered: bool) -> Scenario {
        let a = Term::principal("A");
        let b = Term::principal("B");
        let c = Term::principal("C");
        let k = Term::a2i(a.clone(), Term::attribute("k")).unwrap();
        let said_k = Term::s2i(a.clone(), Term::said(k.clone()).unwrap()).unwrap();
        let fwd = Event::new("fwd", a.clone(), k.clone(), b.clone()).unwrap();
        let relay = Event::new("relay", b.clone(), said_k.clone(), c.clone()).unwrap();
        let edges = if ordered { vec![(0, 1)] } else { vec![] };
        Scenario {
            name: "relay".into(),
            principals: vec![a.clone(), b.clone(), c.clone()],
            attributes: vec![Term::attribute("k")],
            policies: PolicySet::new(vec![]).unwrap(),
            causality: CausalityRelation::new(vec![fwd, relay], edges).unwrap(),
            query: Query::new(vec![Atom::knows(
                c,
                Term::s2i(b, Term::said(said_k).unwrap()).unwrap(),
            )
            .unwrap()]),
            hints: vec![UknowsHint {
                event: "relay".into(),
                fact: Atom::uknows(a, k).unwrap(),
            }],
        }
    }

    #[test]
    fn comp1_violation_for_hidden_dependency() {
        let r = check_compat(&relay_scenario(false), CompatMode::Strict, DEFAULT_BUDGET).unwrap();
        assert_eq!(
            r.comp1,
            vec![Comp1Violation {
                by: "fwd".into(),
                event: "relay".into(),
                step: 0,
                enabled_before: false,
            }]
        );
        assert!(r.comp2_holds());
        let ok = check_compat(&relay_scenario(true), CompatMode::Strict, DEFAULT_BUDGET).unwrap();
        assert!(ok.passes(), "{ok:?}");
    }

    #[test]
    fn comp2_violation_names_missing_guard() {
        // `second` waits on `first`, but `first` tells B nothing useful.
        let a = Term::principal("A");
        let b = Term::principal("B");
        let k = Term::a2i(a.clone(), Term::attribute("k")).unwrap();
        let j = Term::a2i(b.clone(), Term::attribute("j")).unwrap();
        let first = Event::new("first", a.clone(), k, b.clone()).unwrap();
        let second = Event::new("second", b.clone(), j.clone(), a.clone()).unwrap();
        let b = b.clone();
        let sc = Scenario {
            name: "chain".into(),
            principals: vec![a.clone(), b.clone()],
            attributes: vec![Term::attribute("k"), Term::attribute("j")],
            policies: PolicySet::new(vec![]).unwrap(),
            causality: CausalityRelation::new(vec![first, second.clone()], vec![(0, 1)]).unwrap(),
            query: Query::new(vec![Atom::knows(
                a,
                Term::s2i(b, Term::said(j).unwrap()).unwrap(),
            )
            .unwrap()]),
            hints: vec![],
        };
        let r = check_compat(&sc, CompatMode::Strict, DEFAULT_BUDGET).unwrap();
        assert!(r.comp1_holds());
        assert_eq!(
            r.comp2,
            vec![Comp2Violation {
                event: "second".into(),
                missing: second.guard(),
            }]
        );
        assert!(matches!(
            analyze_partial_order(&sc, opts()),
            Err(AnalysisError::CompatViolation { layer: 1, .. })
        ));
        // Interleaving abduces the missing knowledge instead.
        assert!(analyze_interleaving(&sc, opts()).unwrap().reachable);
    }

    #[test]
    fn goal_tree_root_has_three_hypotheses() {
        let v = analyze_partial_order(&scenario(), opts()).unwrap();
        let t = &v.derivations[0];
        assert_eq!(t.root, cro::goal());
        assert_eq!(t.justification.label(), "P1");
        let kids: Vec<String> = t.children.iter().map(|c| c.root.to_string()).collect();
        assert_eq!(
            kids,
            [
                "knows(CRep, a2i(Helen, ish))",
                "knows(CRep, a2i(Ed, ise))",
                "knows(CRep, s2i(Helen, said(a2i(Ed, cans))))",
            ]
        );
        let events: BTreeSet<String> = t
            .nodes()
            .into_iter()
            .filter_map(|n| match &n.justification {
                Justification::Event { name } => Some(name.clone()),
                _ => None,
            })
            .collect();
        assert_eq!(events.len(), 6);
    }

    #[test]
    fn single_event_agrees() {
        let sc = relay_scenario(true);
        let one = Scenario {
            causality: CausalityRelation::new(vec![sc.events()[0].clone()], vec![]).unwrap(),
            query: Query::new(vec![Atom::knows(
                Term::principal("B"),
                Term::s2i(
                    Term::principal("A"),
                    Term::said(Term::a2i(Term::principal("A"), Term::attribute("k")).unwrap()).unwrap(),
                )
                .unwrap(),
            )
            .unwrap()]),
            hints: vec![],
            ..sc
        };
        let i = analyze_interleaving(&one, opts()).unwrap();
        let p = analyze_partial_order(&one, opts()).unwrap();
        assert!(i.reachable && p.reachable);
        assert_eq!(i.witness, p.witness);
    }
}
