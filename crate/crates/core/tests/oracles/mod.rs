//! Reference implementations used as test oracles. They favour obviousness
//! over speed and share no matching or closure code with the library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use acsan_core::policy::{Atom, Constraint, PolicyRule, Predicate};
use acsan_core::terms::{Sort, Term, Variable};
use rand::seq::SliceRandom;
use rand::Rng;

/// Every permutation of `0..n` consistent with `edges`, by brute force.
pub fn permutation_filter(n: usize, edges: &[(usize, usize)]) -> BTreeSet<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for i in 0..n {
            if !prefix.contains(&i) {
                prefix.push(i);
                go(prefix, n, out);
                prefix.pop();
            }
        }
    }
    let mut all = Vec::new();
    go(&mut Vec::new(), n, &mut all);
    all.into_iter()
        .filter(|p| {
            let at = |x: usize| p.iter().position(|&y| y == x).unwrap();
            edges.iter().all(|&(a, b)| at(a) < at(b))
        })
        .collect()
}

type Env = BTreeMap<Variable, Term>;

fn bind(pattern: &Term, target: &Term, env: &mut Env) -> bool {
    match (pattern, target) {
        (Term::Var(v), t) => {
            if v.sort() != t.sort() {
                return false;
            }
            match env.get(v) {
                Some(bound) => bound == t,
                None => {
                    env.insert(v.clone(), t.clone());
                    true
                }
            }
        }
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g && xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(x, y)| bind(x, y, env))
        }
        (a, b) => a == b,
    }
}

fn subst(t: &Term, env: &Env) -> Term {
    match t {
        Term::Var(v) => env.get(v).cloned().unwrap_or_else(|| t.clone()),
        Term::App(c, xs) => Term::app(*c, xs.iter().map(|x| subst(x, env)).collect()).unwrap(),
        _ => t.clone(),
    }
}

fn subst_atom(a: &Atom, env: &Env) -> Atom {
    Atom::new(a.pred(), a.args().iter().map(|t| subst(t, env)).collect()).unwrap()
}

fn holds(c: &Constraint, env: &Env) -> bool {
    match c {
        Constraint::True => true,
        Constraint::Eq(a, b) => subst(a, env) == subst(b, env),
        Constraint::Prim(a) => matches!(subst(a, env), Term::Const { sort: Sort::Attribute, .. }),
        Constraint::Not(c) => !holds(c, env),
        Constraint::And(a, b) => holds(a, env) && holds(b, env),
        Constraint::Or(a, b) => holds(a, env) || holds(b, env),
    }
}

fn vars_of(t: &Term, out: &mut BTreeSet<Variable>) {
    match t {
        Term::Var(v) => {
            out.insert(v.clone());
        }
        Term::App(_, xs) => xs.iter().for_each(|x| vars_of(x, out)),
        _ => {}
    }
}

fn rule_vars(r: &PolicyRule) -> BTreeSet<Variable> {
    let mut out = BTreeSet::new();
    for a in std::iter::once(&r.head).chain(&r.body) {
        for t in a.args().iter() {
            vars_of(t, &mut out);
        }
    }
    fn cvars(c: &Constraint, out: &mut BTreeSet<Variable>) {
        match c {
            Constraint::True => {}
            Constraint::Eq(a, b) => {
                vars_of(a, out);
                vars_of(b, out);
            }
            Constraint::Prim(a) => vars_of(a, out),
            Constraint::Not(c) => cvars(c, out),
            Constraint::And(a, b) | Constraint::Or(a, b) => {
                cvars(a, out);
                cvars(b, out);
            }
        }
    }
    cvars(&r.constraint, &mut out);
    out
}

/// Naive bottom-up evaluation: fire every rule against every combination
/// of known facts until nothing changes. Variables left unbound by the body
/// range over `principals`. Rules must have bodies.
pub fn naive_closure(facts: &[Atom], rules: &[PolicyRule], principals: &[Term]) -> BTreeSet<Atom> {
    let mut known: BTreeSet<Atom> = facts.iter().cloned().collect();
    loop {
        let snapshot: Vec<Atom> = known.iter().cloned().collect();
        let mut added = Vec::new();
        for r in rules {
            assert!(!r.body.is_empty(), "the oracle handles rules with bodies only");
            let mut envs = vec![Env::new()];
            for b in &r.body {
                let mut next = Vec::new();
                for env in &envs {
                    for f in &snapshot {
                        if f.pred() != b.pred() {
                            continue;
                        }
                        let mut e = env.clone();
                        if b.args().iter().zip(f.args().iter()).all(|(p, t)| bind(p, t, &mut e)) {
                            next.push(e);
                        }
                    }
                }
                envs = next;
            }
            let all = rule_vars(r);
            for env in envs {
                let free: Vec<Variable> = all.iter().filter(|v| !env.contains_key(*v)).cloned().collect();
                let mut grounded = vec![env];
                for v in free {
                    assert_eq!(v.sort(), Sort::Principal);
                    grounded = grounded
                        .into_iter()
                        .flat_map(|e| {
                            let v = &v;
                            principals.iter().map(move |p| {
                                let mut e = e.clone();
                                e.insert(v.clone(), p.clone());
                                e
                            })
                        })
                        .collect();
                }
                for env in grounded {
                    if holds(&r.constraint, &env) {
                        added.push(subst_atom(&r.head, &env));
                    }
                }
            }
        }
        let before = known.len();
        known.extend(added);
        if known.len() == before {
            return known;
        }
    }
}

/// Random ground infon over the given constants, of nesting depth at most
/// `depth`.
pub fn random_infon<R: Rng>(rng: &mut R, principals: &[Term], attributes: &[Term], depth: usize) -> Term {
    let p = principals.choose(rng).unwrap().clone();
    let choice = if depth == 0 { 0 } else { rng.gen_range(0..4) };
    match choice {
        0 | 1 => Term::a2i(p, attributes.choose(rng).unwrap().clone()).unwrap(),
        2 => {
            let x = random_infon(rng, principals, attributes, depth - 1);
            Term::s2i(p, Term::said(x).unwrap()).unwrap()
        }
        _ => {
            let x = random_infon(rng, principals, attributes, depth - 1);
            Term::a2i(p, Term::td_on(x).unwrap()).unwrap()
        }
    }
}

/// Random ground facts of all three predicates.
pub fn random_facts<R: Rng>(
    rng: &mut R,
    principals: &[Term],
    attributes: &[Term],
    n: usize,
) -> Vec<Atom> {
    (0..n)
        .map(|_| {
            let p = principals.choose(rng).unwrap().clone();
            let x = random_infon(rng, principals, attributes, 2);
            match rng.gen_range(0..3) {
                0 => Atom::new(Predicate::Uknows, vec![p, x]).unwrap(),
                1 => Atom::new(Predicate::Knows, vec![p, x]).unwrap(),
                _ => {
                    let q = principals.choose(rng).unwrap().clone();
                    Atom::new(Predicate::Msg, vec![p, Term::said(x).unwrap(), q]).unwrap()
                }
            }
        })
        .collect()
}
