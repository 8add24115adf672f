//! Random workloads: orders and CRO-style scenarios. Deterministic for a
//! seeded generator.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::cro;
use crate::policy::{Atom, PolicySet};
use crate::scenario::{CausalityRelation, Scenario};
use crate::terms::Term;
use crate::transition::{Event, Query};

/// Edges `i < j` over `n` nodes, each present with probability `density`.
pub fn random_dag<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// A random order on `n` nodes: a DAG under a random relabelling, so that
/// declaration order and causal order need not agree.
pub fn random_order<R: Rng>(rng: &mut R, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut label: Vec<usize> = (0..n).collect();
    label.shuffle(rng);
    random_dag(rng, n, density)
        .into_iter()
        .map(|(a, b)| (label[a], label[b]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioShape {
    pub max_events: usize,
    pub max_principals: usize,
    pub order_density: f64,
}

impl Default for ScenarioShape {
    fn default() -> Self {
        ScenarioShape {
            max_events: 6,
            max_principals: 4,
            order_density: 0.3,
        }
    }
}

fn pick<'a, R: Rng, T>(rng: &mut R, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty")
}

/// A scenario over the CRO vocabulary: a random subset of the principals
/// (CA and CRep always present), of P1–P4 and of certificate-style events,
/// with a random order and query.
pub fn random_scenario<R: Rng>(rng: &mut R, shape: ScenarioShape) -> Scenario {
    let all = cro::principals();
    // Ed, Helen, CA, CRep: keep CA and CRep, which the policies mention.
    let k = rng.gen_range(2..=shape.max_principals.clamp(2, 4));
    let mut principals: Vec<Term> = vec![all[2].clone(), all[3].clone()];
    principals.extend(all[..2].iter().take(k - 2).cloned());
    let attributes = cro::attributes();

    let policies: Vec<_> = cro::policies()
        .into_iter()
        .filter(|_| rng.gen_bool(0.75))
        .collect();

    let n = rng.gen_range(1..=shape.max_events);
    let events: Vec<Event> = if rng.gen_bool(0.3) && n <= 6 {
        // A subset of the CRO events, in declaration order.
        let mut idx: Vec<usize> = (0..6).collect();
        idx.shuffle(rng);
        idx.truncate(n);
        idx.sort_unstable();
        let base = cro::events();
        idx.into_iter()
            .filter(|&i| {
                let e = &base[i];
                principals.contains(&e.sender) && principals.contains(&e.receiver)
            })
            .map(|i| base[i].clone())
            .collect()
    } else {
        (0..n)
            .map(|i| {
                let subject = pick(rng, &principals).clone();
                let attr = pick(rng, &attributes).clone();
                let cert = Term::a2i(subject, attr).expect("well-sorted");
                let sender = pick(rng, &principals).clone();
                let receiver = pick(rng, &principals).clone();
                let payload = if rng.gen_bool(0.5) {
                    cert
                } else {
                    let speaker = pick(rng, &principals).clone();
                    Term::s2i(speaker, Term::said(cert).expect("infon")).expect("well-sorted")
                };
                Event::new(format!("E{i}"), sender, payload, receiver).expect("well-sorted")
            })
            .collect()
    };
    let edges = random_order(rng, events.len(), shape.order_density);
    let causality = CausalityRelation::new(events, edges).expect("acyclic by construction");

    let roll: f64 = rng.gen();
    let query = if roll < 0.3 {
        cro::goal()
    } else if roll < 0.6 && !causality.is_empty() {
        // What some receiver learns, directly or by trusting the sender.
        let e = pick(rng, causality.events());
        let heard = Term::s2i(e.sender.clone(), Term::said(e.payload.clone()).expect("infon"))
            .expect("well-sorted");
        let x = if rng.gen_bool(0.5) { heard } else { e.payload.clone() };
        Atom::knows(e.receiver.clone(), x).expect("well-sorted")
    } else {
        let subject = pick(rng, &principals).clone();
        let attr = pick(rng, &attributes).clone();
        let who = pick(rng, &principals).clone();
        Atom::knows(who, Term::a2i(subject, attr).expect("well-sorted")).expect("well-sorted")
    };
    Scenario {
        name: "random".into(),
        principals,
        attributes,
        policies: PolicySet::new(policies).expect("no clash with built-ins"),
        causality,
        query: Query::new(vec![query]),
        hints: Vec::new(),
    }
}
