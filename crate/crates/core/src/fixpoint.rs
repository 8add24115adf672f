//! Least-fixpoint closure of ground facts under grounded policy rules.
//!
//! Evaluation proceeds in rounds. Each round matches rule bodies against the
//! facts known at the start of the round, and at least one premise must be
//! new since the previous round (semi-naive). Facts found in round `k`
//! therefore have derivations of depth `k`, and the first derivation found
//! for a fact, in rule declaration order, is the one recorded.
//!
//! Bodiless rules stay symbolic as schemata. An atom is entailed if it is a
//! known ground fact or an instance of some schema whose constraint holds.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::policy::{eval_constraint, match_atom, Atom, PolicyError, PolicyRule, Predicate};
use crate::terms::{apply_unifier, unify_all, Sort, Substitution, Term, Variable};

/// Default number of rounds before [`FixpointError::BudgetExceeded`].
pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FixpointError {
    #[error("fixpoint did not converge within {budget} rounds")]
    BudgetExceeded { budget: usize },
    #[error("`{0}` is not derivable")]
    NotDerivable(Atom),
    #[error(transparent)]
    Policy(#[from] PolicyError),
}

/// How a ground fact came to be in a [`FactSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Input,
    Derived(Arc<Derivation>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derivation {
    pub rule: String,
    pub subst: Substitution,
    /// Ground body atoms, in body order.
    pub premises: Vec<Atom>,
}

/// Grounded rules plus the principal universe used to instantiate
/// principal variables that only occur in a rule head.
#[derive(Debug, Clone)]
pub struct Program {
    rules: Vec<PolicyRule>,
    principals: Arc<[Term]>,
}

impl Program {
    /// `rules` must have no principal body-only variables left; bodiless
    /// rules are ignored here and belong in the fact set as schemata.
    pub fn new(rules: Vec<PolicyRule>, principals: Vec<Term>) -> Program {
        Program {
            rules: rules.into_iter().filter(|r| !r.is_schema()).collect(),
            principals: principals.into(),
        }
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn principals(&self) -> &[Term] {
        &self.principals
    }
}

#[derive(Debug, Clone)]
pub struct FactSet {
    facts: Vec<Atom>,
    provenance: HashMap<Atom, Provenance>,
    by_first: HashMap<(Predicate, Term), Vec<usize>>,
    by_pred: HashMap<Predicate, Vec<usize>>,
    schemata: Arc<[PolicyRule]>,
    principals: Arc<[Term]>,
}

impl PartialEq for FactSet {
    fn eq(&self, other: &Self) -> bool {
        self.ground_set() == other.ground_set() && self.schemata == other.schemata
    }
}

impl FactSet {
    /// An empty fact set with the given schemata. `principals` is the
    /// universe over which schema constraints with extra variables range.
    pub fn new(schemata: Vec<PolicyRule>, principals: Vec<Term>) -> FactSet {
        FactSet {
            facts: Vec::new(),
            provenance: HashMap::new(),
            by_first: HashMap::new(),
            by_pred: HashMap::new(),
            schemata: schemata.into_iter().filter(|r| r.is_schema()).collect(),
            principals: principals.into(),
        }
    }

    pub fn empty() -> FactSet {
        FactSet::new(Vec::new(), Vec::new())
    }

    pub fn with_facts(mut self, facts: impl IntoIterator<Item = Atom>) -> FactSet {
        for f in facts {
            self.insert_input(f);
        }
        self
    }

    /// Adds a ground input fact. Returns false if it was already present.
    pub fn insert_input(&mut self, a: Atom) -> bool {
        assert!(a.is_ground(), "fact sets hold ground atoms only: {a}");
        self.insert(a, Provenance::Input)
    }

    fn insert(&mut self, a: Atom, prov: Provenance) -> bool {
        if self.provenance.contains_key(&a) {
            return false;
        }
        let idx = self.facts.len();
        self.by_pred.entry(a.pred()).or_default().push(idx);
        self.by_first
            .entry((a.pred(), a.args()[0].clone()))
            .or_default()
            .push(idx);
        self.provenance.insert(a.clone(), prov);
        self.facts.push(a);
        true
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.provenance.contains_key(a)
    }

    pub fn provenance(&self, a: &Atom) -> Option<&Provenance> {
        self.provenance.get(a)
    }

    /// Ground facts in insertion order.
    pub fn ground(&self) -> impl Iterator<Item = &Atom> {
        self.facts.iter()
    }

    pub fn ground_set(&self) -> BTreeSet<Atom> {
        self.facts.iter().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn schemata(&self) -> &[PolicyRule] {
        &self.schemata
    }

    pub fn principals(&self) -> &[Term] {
        &self.principals
    }

    /// Ground facts whose predicate and (when ground) first argument agree
    /// with `pattern`.
    fn candidates<'a>(&'a self, pattern: &Atom) -> Box<dyn Iterator<Item = &'a Atom> + 'a> {
        let first = &pattern.args()[0];
        let idx = if first.is_ground() {
            self.by_first.get(&(pattern.pred(), first.clone()))
        } else {
            self.by_pred.get(&pattern.pred())
        };
        match idx {
            Some(v) => Box::new(v.iter().map(move |&i| &self.facts[i])),
            None => Box::new(std::iter::empty()),
        }
    }

    /// The first schema (in declaration order) having `a` as an instance.
    pub fn schema_for(&self, a: &Atom) -> Option<(&PolicyRule, Substitution)> {
        self.schemata.iter().find_map(|r| {
            let mut s = Substitution::new();
            if !match_atom(&r.head, a, &mut s) {
                return None;
            }
            let mut extra = Vec::new();
            r.constraint.collect_vars(&mut extra);
            extra.retain(|v| s.get(v).is_none());
            assignments(&extra, &self.principals)
                .into_iter()
                .map(|more| {
                    let mut s = s.clone();
                    for (v, t) in more {
                        s.bind(v, t);
                    }
                    s
                })
                .find(|s| eval_constraint(&r.constraint, s).unwrap_or(false))
                .map(|s| (r, s))
        })
    }
}

/// True iff `a` is a ground fact of `f` or an instance of one of its schemata.
pub fn entails(f: &FactSet, a: &Atom) -> bool {
    f.contains(a) || f.schema_for(a).is_some()
}

/// Every assignment of `vars` (all principal-sorted) to `principals`. One
/// empty assignment when `vars` is empty; none if a variable has another
/// sort.
fn assignments(vars: &[Variable], principals: &[Term]) -> Vec<Vec<(Variable, Term)>> {
    if vars.iter().any(|v| v.sort() != Sort::Principal) {
        return Vec::new();
    }
    let mut out: Vec<Vec<(Variable, Term)>> = vec![Vec::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                principals.iter().map(move |p| {
                    let mut next = prefix.clone();
                    next.push((v.clone(), p.clone()));
                    next
                })
            })
            .collect();
    }
    out
}

/// Closes `f` under `program` from scratch: facts already in `f` are all
/// treated as inputs of the first round.
pub fn constr_fp(f: &FactSet, program: &Program, budget: usize) -> Result<FactSet, FixpointError> {
    run(f.clone(), None, program, budget)
}

/// Extends an already closed `closed` with `added` facts and re-closes it.
/// Only derivations that use at least one new fact are searched, so the
/// result equals `constr_fp(closed ∪ added)` on ground facts while existing
/// derivation records are kept.
pub fn constr_fp_extend(
    closed: &FactSet,
    added: impl IntoIterator<Item = Atom>,
    program: &Program,
    budget: usize,
) -> Result<FactSet, FixpointError> {
    let mut f = closed.clone();
    let mut delta = Vec::new();
    for a in added {
        if f.insert_input(a.clone()) {
            delta.push(a);
        }
    }
    run(f, Some(delta), program, budget)
}

fn run(
    mut f: FactSet,
    delta: Option<Vec<Atom>>,
    program: &Program,
    budget: usize,
) -> Result<FactSet, FixpointError> {
    // `None` marks a from-scratch first round with no delta restriction.
    let mut delta = delta;
    let mut rounds = 0usize;
    loop {
        if matches!(&delta, Some(d) if d.is_empty()) {
            return Ok(f);
        }
        let mut found: Vec<(Atom, Derivation)> = Vec::new();
        let mut seen: BTreeSet<Atom> = BTreeSet::new();
        let delta_set: Option<BTreeSet<&Atom>> = delta.as_ref().map(|d| d.iter().collect());
        for rule in program.rules() {
            fire(&f, rule, delta_set.as_ref(), program.principals(), &mut |head, d| {
                if !f.contains(&head) && f.schema_for(&head).is_none() && seen.insert(head.clone())
                {
                    found.push((head, d));
                }
            })?;
        }
        if found.is_empty() {
            return Ok(f);
        }
        rounds += 1;
        if rounds > budget {
            return Err(FixpointError::BudgetExceeded { budget });
        }
        let mut next = Vec::with_capacity(found.len());
        for (head, d) in found {
            f.insert(head.clone(), Provenance::Derived(Arc::new(d)));
            next.push(head);
        }
        delta = Some(next);
    }
}

/// Enumerates every firing of `rule` against `f`. With `delta`, only
/// firings with at least one premise in `delta` are reported.
fn fire(
    f: &FactSet,
    rule: &PolicyRule,
    delta: Option<&BTreeSet<&Atom>>,
    principals: &[Term],
    emit: &mut dyn FnMut(Atom, Derivation),
) -> Result<(), FixpointError> {
    let mut err = None;
    let mut on_body = |s: &Substitution, premises: &[Atom]| {
        if err.is_some() {
            return;
        }
        // Principal variables occurring only in the head range over C.
        let mut free = rule.head.vars();
        rule.constraint.collect_vars(&mut free);
        free.retain(|v| s.get(v).is_none());
        for extra in assignments(&free, principals) {
            let mut s = s.clone();
            for (v, t) in extra {
                s.bind(v, t);
            }
            match eval_constraint(&rule.constraint, &s) {
                Ok(true) => {}
                Ok(false) => continue,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
            let head = rule.head.apply(&s);
            if !head.is_ground() {
                continue;
            }
            emit(
                head,
                Derivation {
                    rule: rule.name.clone(),
                    subst: s.restrict(&rule.all_vars()),
                    premises: premises.to_vec(),
                },
            );
        }
    };
    match delta {
        None => {
            let remaining: Vec<usize> = (0..rule.body.len()).collect();
            let mut premises = vec![None; rule.body.len()];
            solve(f, rule, &remaining, Substitution::new(), &mut premises, &mut on_body);
        }
        Some(delta) => {
            for pivot in 0..rule.body.len() {
                let pat = &rule.body[pivot];
                for d in delta.iter().filter(|d| d.pred() == pat.pred()) {
                    let mut s = Substitution::new();
                    if !match_atom(pat, d, &mut s) {
                        continue;
                    }
                    let remaining: Vec<usize> =
                        (0..rule.body.len()).filter(|&i| i != pivot).collect();
                    let mut premises = vec![None; rule.body.len()];
                    premises[pivot] = Some((*d).clone());
                    solve(f, rule, &remaining, s, &mut premises, &mut on_body);
                }
            }
        }
    }
    match err {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

fn solve(
    f: &FactSet,
    rule: &PolicyRule,
    remaining: &[usize],
    subst: Substitution,
    premises: &mut Vec<Option<Atom>>,
    on_body: &mut dyn FnMut(&Substitution, &[Atom]),
) {
    if remaining.is_empty() {
        let ground: Vec<Atom> = premises.iter().map(|p| p.clone().expect("solved")).collect();
        on_body(&subst, &ground);
        return;
    }
    // Ground atoms first; otherwise the leftmost remaining one.
    let pick = remaining
        .iter()
        .position(|&i| rule.body[i].apply(&subst).is_ground())
        .unwrap_or(0);
    let i = remaining[pick];
    let rest: Vec<usize> = remaining.iter().copied().filter(|&j| j != i).collect();
    let pat = rule.body[i].apply(&subst);

    if pat.is_ground() {
        if entails(f, &pat) {
            premises[i] = Some(pat);
            solve(f, rule, &rest, subst, premises, on_body);
            premises[i] = None;
        }
        return;
    }

    let mut tried: BTreeSet<Atom> = BTreeSet::new();
    for cand in f.candidates(&pat) {
        let mut s = subst.clone();
        if match_atom(&pat, cand, &mut s) {
            tried.insert(cand.clone());
            premises[i] = Some(cand.clone());
            solve(f, rule, &rest, s, premises, on_body);
        }
    }
    for inst in schema_instances(f, &pat) {
        if tried.contains(&inst) {
            continue;
        }
        let mut s = subst.clone();
        if match_atom(&pat, &inst, &mut s) {
            tried.insert(inst.clone());
            premises[i] = Some(inst);
            solve(f, rule, &rest, s, premises, on_body);
        }
    }
    premises[i] = None;
}

/// Ground instances of the schemata that unify with `pat`, enumerating
/// leftover principal variables over the universe. Unifiers that leave a
/// non-principal variable open would denote infinitely many instances and
/// are skipped.
fn schema_instances(f: &FactSet, pat: &Atom) -> Vec<Atom> {
    let mut out = Vec::new();
    for (k, r) in f.schemata().iter().enumerate() {
        if r.head.pred() != pat.pred() {
            continue;
        }
        let renamed = r.rename_vars(|v| Variable::new(format!("'{k}{}", v.name()), v.sort()));
        let pairs = pat
            .args()
            .iter()
            .cloned()
            .zip(renamed.head.args().iter().cloned())
            .collect();
        let Some(u) = unify_all(pairs) else { continue };
        let inst = pat.map_terms(|t| apply_unifier(&u, t));
        for extra in assignments(&inst.vars(), &f.principals) {
            let s: Substitution = extra.into_iter().collect();
            let ground = inst.apply(&s);
            if ground.is_ground() && f.schema_for(&ground).is_some() && !out.contains(&ground) {
                out.push(ground);
            }
        }
    }
    out
}

/// How a node of a [`DerivationTree`] is justified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Justification {
    /// A fact given as input to the closure.
    Input,
    /// An instance of a bodiless rule.
    Schema { rule: String, subst: Substitution },
    /// The head of a rule instance whose premises are the children.
    Rule { rule: String, subst: Substitution },
    /// A message produced by firing the named event; the single child
    /// derives the event's guard.
    Event { name: String },
}

impl Justification {
    /// Short label: `input`, `schema:P2`, `trust`, `event:SEC`.
    pub fn label(&self) -> String {
        match self {
            Justification::Input => "input".into(),
            Justification::Schema { rule, .. } => format!("schema:{rule}"),
            Justification::Rule { rule, .. } => rule.clone(),
            Justification::Event { name } => format!("event:{name}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTree {
    pub root: Atom,
    pub justification: Justification,
    pub children: Vec<DerivationTree>,
}

impl DerivationTree {
    pub fn leaf(root: Atom, justification: Justification) -> Self {
        DerivationTree {
            root,
            justification,
            children: Vec::new(),
        }
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(DerivationTree::depth).max().unwrap_or(0)
    }

    /// Leaves in left-to-right order.
    pub fn leaves(&self) -> Vec<&DerivationTree> {
        if self.children.is_empty() {
            return vec![self];
        }
        self.children.iter().flat_map(|c| c.leaves()).collect()
    }

    /// All nodes in pre-order.
    pub fn nodes(&self) -> Vec<&DerivationTree> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.nodes());
        }
        out
    }

    /// Rewrites every leaf for which `f` returns a replacement.
    pub fn expand_leaves(self, f: &mut dyn FnMut(&DerivationTree) -> Option<DerivationTree>) -> Self {
        if self.children.is_empty() {
            return f(&self).unwrap_or(self);
        }
        DerivationTree {
            root: self.root,
            justification: self.justification,
            children: self.children.into_iter().map(|c| c.expand_leaves(f)).collect(),
        }
    }

    fn render(&self, out: &mut String, depth: usize) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        out.push_str(&format!("{}  [{}]\n", self.root, self.justification.label()));
        for c in &self.children {
            c.render(out, depth + 1);
        }
    }
}

impl fmt::Display for DerivationTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render(&mut s, 0);
        f.write_str(&s)
    }
}

/// Rebuilds the recorded derivation of `a` from a closed fact set.
pub fn derivation_of(f: &FactSet, a: &Atom) -> Result<DerivationTree, FixpointError> {
    match f.provenance(a) {
        Some(Provenance::Input) => Ok(DerivationTree::leaf(a.clone(), Justification::Input)),
        Some(Provenance::Derived(d)) => {
            let children = d
                .premises
                .iter()
                .map(|p| derivation_of(f, p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(DerivationTree {
                root: a.clone(),
                justification: Justification::Rule {
                    rule: d.rule.clone(),
                    subst: d.subst.clone(),
                },
                children,
            })
        }
        None => match f.schema_for(a) {
            Some((r, subst)) => Ok(DerivationTree::leaf(
                a.clone(),
                Justification::Schema {
                    rule: r.name.clone(),
                    subst,
                },
            )),
            None => Err(FixpointError::NotDerivable(a.clone())),
        },
    }
}

/// Checks that every rule node of `tree` is a correct instance of the named
/// rule from `rules` (or a schema of `f`) and that its constraint holds.
pub fn replay(tree: &DerivationTree, rules: &[PolicyRule], f: &FactSet) -> bool {
    match &tree.justification {
        Justification::Input | Justification::Event { .. } => {
            tree.children.iter().all(|c| replay(c, rules, f))
        }
        Justification::Schema { rule, subst } => f.schemata().iter().any(|r| {
            &r.name == rule
                && r.head.apply(subst) == tree.root
                && eval_constraint(&r.constraint, subst).unwrap_or(false)
        }),
        Justification::Rule { rule, subst } => {
            let ok = rules.iter().any(|r| {
                &r.name == rule
                    && r.head.apply(subst) == tree.root
                    && r.body.len() == tree.children.len()
                    && r
                        .body
                        .iter()
                        .zip(&tree.children)
                        .all(|(b, c)| b.apply(subst) == c.root)
                    && eval_constraint(&r.constraint, subst).unwrap_or(false)
            });
            ok && tree.children.iter().all(|c| replay(c, rules, f))
        }
    }
}
