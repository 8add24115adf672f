//! Workloads shared by the benchmarks.

use acsan_core::fixpoint::{constr_fp, FactSet, Program};
use acsan_core::policy::PolicySet;
use acsan_core::scenario::CausalityRelation;
use acsan_core::terms::Term;
use acsan_core::{cro, Event, DEFAULT_BUDGET};

/// The CRO program together with its final-state facts (F1–F3 plus all six messages).
pub fn cro_final_state() -> (Program, FactSet) {
    let set = PolicySet::new(cro::policies()).expect("valid policies");
    let principals = cro::principals();
    let program = Program::new(set.ground(&principals).expect("groundable"), principals.clone());
    let mut facts = cro::initial_facts();
    facts.extend(cro::events().iter().map(Event::message));
    (program, FactSet::new(set.schemata(), principals).with_facts(facts))
}

/// Closes `facts` under `program`.
pub fn close(program: &Program, facts: &FactSet) -> FactSet {
    constr_fp(facts, program, DEFAULT_BUDGET).expect("converges")
}

/// `k` independent chains of length `len`; the extension count grows as a
/// multinomial in `k * len`.
pub fn chains(k: usize, len: usize) -> CausalityRelation {
    let a = Term::principal("A");
    let x = Term::a2i(a.clone(), Term::attribute("k")).expect("well-sorted");
    let n = k * len;
    let events = (0..n)
        .map(|i| Event::new(format!("e{i}"), a.clone(), x.clone(), a.clone()).expect("well-sorted"))
        .collect();
    let edges = (0..k)
        .flat_map(|c| (1..len).map(move |j| (c * len + j - 1, c * len + j)))
        .collect();
    CausalityRelation::new(events, edges).expect("acyclic")
}
