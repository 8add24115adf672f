//! The access-control transition system: states are closed fact sets,
//! events add messages, and queries are conjunctions of `knows` atoms.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::fixpoint::{constr_fp, constr_fp_extend, entails, FactSet, FixpointError, Program};
use crate::policy::{Atom, PolicyError, PolicySet, Predicate};
use crate::terms::{Sort, Term, TermError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransitionError {
    #[error("event `{0}` is not enabled")]
    DisabledEvent(String),
    #[error(transparent)]
    Fixpoint(#[from] FixpointError),
}

/// An instance of `knows(sender, payload) ⇒ ⊕msg(sender, said(payload), receiver)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Event {
    pub name: String,
    pub sender: Term,
    pub payload: Term,
    pub receiver: Term,
}

impl Event {
    pub fn new(
        name: impl Into<String>,
        sender: Term,
        payload: Term,
        receiver: Term,
    ) -> Result<Event, TermError> {
        sender.expect_sort(Sort::Principal)?;
        receiver.expect_sort(Sort::Principal)?;
        payload.expect_sort(Sort::Infon)?;
        for t in [&sender, &payload, &receiver] {
            if !t.is_ground() {
                return Err(TermError::NotGround(t.clone()));
            }
        }
        Ok(Event {
            name: name.into(),
            sender,
            payload,
            receiver,
        })
    }

    /// `knows(sender, payload)`
    pub fn guard(&self) -> Atom {
        Atom::knows(self.sender.clone(), self.payload.clone()).expect("checked on construction")
    }

    /// `msg(sender, said(payload), receiver)`
    pub fn message(&self) -> Atom {
        let said = Term::said(self.payload.clone()).expect("payload is an infon");
        Atom::msg(self.sender.clone(), said, self.receiver.clone()).expect("well-sorted")
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: send {} -> {} : {}",
            self.name, self.sender, self.receiver, self.payload
        )
    }
}

/// Non-mechanizable facts injected at one step. Empty means `H_i := true`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UknowsBatch {
    facts: BTreeSet<Atom>,
}

impl UknowsBatch {
    pub fn new(facts: impl IntoIterator<Item = Atom>) -> UknowsBatch {
        let facts: BTreeSet<Atom> = facts.into_iter().collect();
        assert!(
            facts.iter().all(|a| a.pred() == Predicate::Uknows && a.is_ground()),
            "uknows batches hold ground uknows atoms"
        );
        UknowsBatch { facts }
    }

    pub fn empty() -> UknowsBatch {
        UknowsBatch::default()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }

    pub fn union(&self, other: &UknowsBatch) -> UknowsBatch {
        UknowsBatch {
            facts: self.facts.union(&other.facts).cloned().collect(),
        }
    }
}

impl fmt::Display for UknowsBatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.facts.is_empty() {
            return f.write_str("true");
        }
        for (i, a) in self.facts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Query {
    pub conjuncts: Vec<Atom>,
}

impl Query {
    pub fn new(conjuncts: Vec<Atom>) -> Query {
        assert!(
            conjuncts
                .iter()
                .all(|a| a.pred() == Predicate::Knows && a.is_ground()),
            "queries are conjunctions of ground knows atoms"
        );
        Query { conjuncts }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A reachable configuration. Value-like: transitions return new states.
#[derive(Debug, Clone)]
pub struct State {
    pub step: usize,
    pub msgs: BTreeSet<Atom>,
    pub uknows: BTreeSet<Atom>,
    pub closure: Arc<FactSet>,
}

impl State {
    /// Equality of messages, internal knowledge and closure, ignoring the step.
    pub fn same_configuration(&self, other: &State) -> bool {
        self.msgs == other.msgs
            && self.uknows == other.uknows
            && self.closure.ground_set() == other.closure.ground_set()
    }
}

/// Grounded policies and closure settings shared by every state of one
/// scenario. Counts closure steps for statistics.
#[derive(Debug)]
pub struct Acs {
    program: Program,
    base: FactSet,
    budget: usize,
    closures: AtomicUsize,
}

impl Clone for Acs {
    fn clone(&self) -> Self {
        Acs {
            program: self.program.clone(),
            base: self.base.clone(),
            budget: self.budget,
            closures: AtomicUsize::new(self.closures()),
        }
    }
}

impl Acs {
    pub fn new(policies: &PolicySet, principals: Vec<Term>, budget: usize) -> Result<Acs, PolicyError> {
        let rules = policies.ground(&principals)?;
        Ok(Acs {
            program: Program::new(rules, principals.clone()),
            base: FactSet::new(policies.schemata(), principals),
            budget,
            closures: AtomicUsize::new(0),
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// Number of state closures computed so far (initial states plus
    /// transitions).
    pub fn closures(&self) -> usize {
        self.closures.load(Ordering::Relaxed)
    }

    pub fn reset_closures(&self) {
        self.closures.store(0, Ordering::Relaxed);
    }

    /// The empty network with `h0` as internal knowledge, closed.
    pub fn initial_state(&self, h0: &UknowsBatch) -> Result<State, FixpointError> {
        self.closures.fetch_add(1, Ordering::Relaxed);
        let f = self.base.clone().with_facts(h0.iter().cloned());
        let closure = constr_fp(&f, &self.program, self.budget)?;
        Ok(State {
            step: 0,
            msgs: BTreeSet::new(),
            uknows: h0.iter().cloned().collect(),
            closure: Arc::new(closure),
        })
    }

    /// Injects `h`, fires every event of `es` in one step, and closes.
    pub fn apply_events(
        &self,
        s: &State,
        es: &[Event],
        h: &UknowsBatch,
    ) -> Result<State, TransitionError> {
        self.closures.fetch_add(1, Ordering::Relaxed);
        let fresh: Vec<Atom> = h.iter().filter(|a| !s.uknows.contains(a)).cloned().collect();
        let injected = if fresh.is_empty() {
            s.closure.clone()
        } else {
            Arc::new(constr_fp_extend(&s.closure, fresh, &self.program, self.budget)?)
        };
        if let Some(e) = es.iter().find(|e| !entails(&injected, &e.guard())) {
            return Err(TransitionError::DisabledEvent(e.name.clone()));
        }
        let new_msgs: Vec<Atom> = es
            .iter()
            .map(Event::message)
            .filter(|m| !s.msgs.contains(m))
            .collect();
        let closure = if new_msgs.is_empty() {
            injected
        } else {
            Arc::new(constr_fp_extend(&injected, new_msgs.iter().cloned(), &self.program, self.budget)?)
        };
        let mut msgs = s.msgs.clone();
        msgs.extend(new_msgs);
        let mut uknows = s.uknows.clone();
        uknows.extend(h.iter().cloned());
        Ok(State {
            step: s.step + 1,
            msgs,
            uknows,
            closure,
        })
    }

    /// Recomputes the closure of `s` from its messages and internal knowledge.
    pub fn reclose(&self, s: &State) -> Result<FactSet, FixpointError> {
        let f = self
            .base
            .clone()
            .with_facts(s.uknows.iter().cloned())
            .with_facts(s.msgs.iter().cloned());
        constr_fp(&f, &self.program, self.budget)
    }
}

pub fn enabled(s: &State, e: &Event) -> bool {
    entails(&s.closure, &e.guard())
}

pub fn check_query(s: &State, g: &Query) -> bool {
    g.conjuncts.iter().all(|a| entails(&s.closure, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cro;
    use crate::fixpoint::DEFAULT_BUDGET;

    fn acs() -> Acs {
        Acs::new(
            &PolicySet::new(cro::policies()).unwrap(),
            cro::principals(),
            DEFAULT_BUDGET,
        )
        .unwrap()
    }

    fn ev(name: &str) -> Event {
        cro::events().into_iter().find(|e| e.name == name).unwrap()
    }

    fn h0() -> UknowsBatch {
        UknowsBatch::new(cro::initial_facts())
    }

    fn knows(p: &str, x: Term) -> Atom {
        Atom::knows(Term::principal(p), x).unwrap()
    }

    #[test]
    fn initial_state_derives_internal_knowledge() {
        let s0 = acs().initial_state(&h0()).unwrap();
        assert!(s0.msgs.is_empty());
        for (p, x) in [
            ("CA", cro::ed_ise()),
            ("CA", cro::helen_ish()),
            ("Helen", cro::ed_cans()),
        ] {
            assert!(entails(&s0.closure, &knows(p, x)));
        }
    }

    #[test]
    fn empty_initial_state() {
        let s = acs().initial_state(&UknowsBatch::empty()).unwrap();
        assert!(s.closure.is_empty());
    }

    #[test]
    fn initial_state_single_fact() {
        let s = acs().initial_state(&UknowsBatch::new([cro::f1()])).unwrap();
        assert!(entails(&s.closure, &knows("CA", cro::ed_ise())));
        assert!(!entails(&s.closure, &knows("Helen", cro::ed_cans())));
        // oracle: exactly the input plus its internal-knowledge copy
        assert_eq!(s.closure.len(), 2);
    }

    #[test]
    fn enabledness_of_sec_and_sec2() {
        let a = acs();
        let s0 = a.initial_state(&h0()).unwrap();
        assert!(enabled(&s0, &ev("SEC")));
        assert!(!enabled(&s0, &ev("SEC2")));
        let s1 = a.apply_events(&s0, &[ev("SEC")], &UknowsBatch::empty()).unwrap();
        assert!(enabled(&s1, &ev("SEC2")));
        assert_eq!(s1.msgs.iter().cloned().collect::<Vec<_>>(), vec![ev("SEC").message()]);
    }

    #[test]
    fn parallel_layer_reaches_s6() {
        let a = acs();
        let s0 = a.initial_state(&h0()).unwrap();
        let first: Vec<Event> = ["SEC", "SHC", "SPC"].map(ev).to_vec();
        let second: Vec<Event> = ["SEC2", "SHC2", "SPC2"].map(ev).to_vec();
        let s3 = a.apply_events(&s0, &first, &UknowsBatch::empty()).unwrap();
        assert!(!check_query(&s3, &Query::new(vec![cro::goal()])));
        let s6 = a.apply_events(&s3, &second, &UknowsBatch::empty()).unwrap();
        assert_eq!(s6.msgs.len(), 6);
        assert!(check_query(&s6, &Query::new(vec![cro::goal()])));
        assert!(!check_query(&s0, &Query::new(vec![cro::goal()])));
        assert_eq!(s6.closure.ground_set(), a.reclose(&s6).unwrap().ground_set());
    }

    #[test]
    fn empty_step_is_identity() {
        let a = acs();
        let s0 = a.initial_state(&h0()).unwrap();
        let s1 = a.apply_events(&s0, &[], &UknowsBatch::empty()).unwrap();
        assert_eq!(s1.step, 1);
        assert!(s1.same_configuration(&s0));
    }

    #[test]
    fn disabled_event_is_rejected() {
        let a = acs();
        let s0 = a.initial_state(&h0()).unwrap();
        assert_eq!(
            a.apply_events(&s0, &[ev("SEC2")], &UknowsBatch::empty()).unwrap_err(),
            TransitionError::DisabledEvent("SEC2".into())
        );
    }

    #[test]
    fn injection_enables_in_the_same_step() {
        let a = acs();
        let s = a.initial_state(&UknowsBatch::empty()).unwrap();
        let s1 = a
            .apply_events(&s, &[ev("SEC")], &UknowsBatch::new([cro::f1()]))
            .unwrap();
        assert!(s1.uknows.contains(&cro::f1()));
        assert!(s1.msgs.contains(&ev("SEC").message()));
    }

    #[test]
    fn empty_query_is_vacuous() {
        let s = acs().initial_state(&UknowsBatch::empty()).unwrap();
        assert!(check_query(&s, &Query::default()));
    }

    #[test]
    fn concurrent_events_commute() {
        let a = acs();
        let s0 = a.initial_state(&h0()).unwrap();
        let none = UknowsBatch::empty();
        let (e1, e2) = (ev("SEC"), ev("SPC"));
        let ab = a
            .apply_events(&a.apply_events(&s0, &[e1.clone()], &none).unwrap(), &[e2.clone()], &none)
            .unwrap();
        let ba = a
            .apply_events(&a.apply_events(&s0, &[e2.clone()], &none).unwrap(), &[e1.clone()], &none)
            .unwrap();
        let par = a.apply_events(&s0, &[e1, e2], &none).unwrap();
        assert!(ab.same_configuration(&ba));
        assert!(ab.same_configuration(&par));
    }
}
