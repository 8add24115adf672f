//! The car registration office example, built programmatically.
//!
//! Four principals, three primitive attributes, policies P1–P4, the
//! certificates F1–F3 and the six send events of the user-pull run. The
//! same scenario ships as `examples/cro.acs`.

use crate::policy::{Atom, Constraint, PolicyRule, PolicySet};
use crate::scenario::{CausalityRelation, Scenario};
use crate::terms::{Sort, Term};
use crate::transition::{Event, Query};

fn p(name: &str) -> Term {
    Term::principal(name)
}

fn a(name: &str) -> Term {
    Term::attribute(name)
}

fn a2i(x: Term, y: Term) -> Term {
    Term::a2i(x, y).expect("well-sorted")
}

fn s2i(x: Term, y: Term) -> Term {
    Term::s2i(x, y).expect("well-sorted")
}

fn said(x: Term) -> Term {
    Term::said(x).expect("well-sorted")
}

fn td_on(x: Term) -> Term {
    Term::td_on(x).expect("well-sorted")
}

fn knows(x: Term, y: Term) -> Atom {
    Atom::knows(x, y).expect("well-sorted")
}

pub fn principals() -> Vec<Term> {
    ["Ed", "Helen", "CA", "CRep"].into_iter().map(p).collect()
}

pub fn attributes() -> Vec<Term> {
    ["ise", "ish", "cans"].into_iter().map(a).collect()
}

pub fn ed_ise() -> Term {
    a2i(p("Ed"), a("ise"))
}

pub fn helen_ish() -> Term {
    a2i(p("Helen"), a("ish"))
}

pub fn ed_cans() -> Term {
    a2i(p("Ed"), a("cans"))
}

/// `uknows(CA, a2i(Ed, ise))`
pub fn f1() -> Atom {
    Atom::uknows(p("CA"), ed_ise()).expect("well-sorted")
}

/// `uknows(CA, a2i(Helen, ish))`
pub fn f2() -> Atom {
    Atom::uknows(p("CA"), helen_ish()).expect("well-sorted")
}

/// `uknows(Helen, a2i(Ed, cans))`
pub fn f3() -> Atom {
    Atom::uknows(p("Helen"), ed_cans()).expect("well-sorted")
}

pub fn initial_facts() -> Vec<Atom> {
    vec![f1(), f2(), f3()]
}

/// `knows(CRep, a2i(Ed, cans))`
pub fn goal() -> Atom {
    knows(p("CRep"), ed_cans())
}

pub fn policies() -> Vec<PolicyRule> {
    let vp = Term::var("p", Sort::Principal);
    let vq = Term::var("q", Sort::Principal);
    let vr = Term::var("r", Sort::Principal);
    let vx = Term::var("x", Sort::Infon);
    let crep = p("CRep");
    let ca = p("CA");

    let p1 = PolicyRule::new(
        "P1",
        knows(crep.clone(), a2i(vp.clone(), a("cans"))),
        vec![
            knows(crep.clone(), a2i(vq.clone(), a("ish"))),
            knows(crep.clone(), a2i(vp.clone(), a("ise"))),
            knows(crep, s2i(vq.clone(), said(a2i(vp.clone(), a("cans"))))),
        ],
        Constraint::True,
    );
    let p2 = PolicyRule::new(
        "P2",
        knows(vp.clone(), a2i(ca.clone(), td_on(vx.clone()))),
        vec![],
        Constraint::True,
    );
    let p3 = PolicyRule::new(
        "P3",
        knows(vp.clone(), a2i(vq.clone(), td_on(s2i(ca, said(vx))))),
        vec![],
        Constraint::True,
    );
    let p4 = PolicyRule::new(
        "P4",
        knows(
            vp.clone(),
            a2i(
                vq.clone(),
                td_on(s2i(vr.clone(), said(a2i(vq, a("cans"))))),
            ),
        ),
        vec![knows(vp, a2i(vr, a("ish")))],
        Constraint::True,
    );
    vec![p1, p2, p3, p4]
}

fn event(name: &str, from: &str, payload: Term, to: &str) -> Event {
    Event::new(name, p(from), payload, p(to)).expect("well-sorted")
}

/// SEC, SHC, SPC, SEC2, SHC2, SPC2 in declaration order.
pub fn events() -> Vec<Event> {
    vec![
        event("SEC", "CA", ed_ise(), "Ed"),
        event("SHC", "CA", helen_ish(), "Ed"),
        event("SPC", "Helen", ed_cans(), "Ed"),
        event("SEC2", "Ed", s2i(p("CA"), said(ed_ise())), "CRep"),
        event("SHC2", "Ed", s2i(p("CA"), said(helen_ish())), "CRep"),
        event("SPC2", "Ed", s2i(p("Helen"), said(ed_cans())), "CRep"),
    ]
}

/// `SEC < SEC2`, `SHC < SHC2`, `SPC < SPC2` as index pairs into [`events`].
pub fn order() -> Vec<(usize, usize)> {
    vec![(0, 3), (1, 4), (2, 5)]
}

/// The full scenario with query `knows(CRep, a2i(Ed, cans))`.
pub fn scenario() -> Scenario {
    Scenario {
        name: "cro".into(),
        principals: principals(),
        attributes: attributes(),
        policies: PolicySet::new(policies()).expect("no clash with built-ins"),
        causality: CausalityRelation::new(events(), order()).expect("acyclic"),
        query: Query::new(vec![goal()]),
        hints: Vec::new(),
    }
}
