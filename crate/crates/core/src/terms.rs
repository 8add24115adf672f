//! Sorted term algebra over principals, attributes, infons and speech.
//!
//! Terms are built from declared constants and the four constructors
//! `a2i`, `s2i`, `said` and `tdOn`. Equality is syntactic: two terms are
//! equal iff they are the same tree.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Principal,
    Attribute,
    Infon,
    Speech,
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sort::Principal => "Principal",
            Sort::Attribute => "Attribute",
            Sort::Infon => "Infon",
            Sort::Speech => "Speech",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constructor {
    /// `Principal × Attribute → Infon`
    A2i,
    /// `Principal × Speech → Infon`
    S2i,
    /// `Infon → Speech`
    Said,
    /// `Infon → Attribute`
    TdOn,
}

impl Constructor {
    pub const ALL: [Constructor; 4] = [
        Constructor::A2i,
        Constructor::S2i,
        Constructor::Said,
        Constructor::TdOn,
    ];

    /// Argument sorts and result sort.
    pub fn signature(self) -> (&'static [Sort], Sort) {
        match self {
            Constructor::A2i => (&[Sort::Principal, Sort::Attribute], Sort::Infon),
            Constructor::S2i => (&[Sort::Principal, Sort::Speech], Sort::Infon),
            Constructor::Said => (&[Sort::Infon], Sort::Speech),
            Constructor::TdOn => (&[Sort::Infon], Sort::Attribute),
        }
    }

    pub fn arity(self) -> usize {
        self.signature().0.len()
    }

    pub fn result_sort(self) -> Sort {
        self.signature().1
    }

    pub fn name(self) -> &'static str {
        match self {
            Constructor::A2i => "a2i",
            Constructor::S2i => "s2i",
            Constructor::Said => "said",
            Constructor::TdOn => "tdOn",
        }
    }

    pub fn from_name(name: &str) -> Option<Constructor> {
        Constructor::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Constructor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TermError {
    #[error("sort error: argument {position} of {constructor} must be {expected}, got {found}")]
    Sort {
        constructor: Constructor,
        position: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("arity error: {constructor} takes {expected} argument(s), got {found}")]
    Arity {
        constructor: Constructor,
        expected: usize,
        found: usize,
    },
    #[error("sort error: expected a term of sort {expected}, got {found}")]
    Expected { expected: Sort, found: Sort },
    #[error("term `{0}` is not ground")]
    NotGround(Term),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    name: Arc<str>,
    sort: Sort,
}

impl Variable {
    pub fn new(name: impl Into<Arc<str>>, sort: Sort) -> Self {
        Variable {
            name: name.into(),
            sort,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sort(&self) -> Sort {
        self.sort
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A term of the substrate algebra. Patterns may contain variables; states
/// only ever hold ground terms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const { name: Arc<str>, sort: Sort },
    Var(Variable),
    App(Constructor, Arc<[Term]>),
}

impl Term {
    pub fn constant(name: impl Into<Arc<str>>, sort: Sort) -> Term {
        Term::Const {
            name: name.into(),
            sort,
        }
    }

    pub fn principal(name: impl Into<Arc<str>>) -> Term {
        Term::constant(name, Sort::Principal)
    }

    pub fn attribute(name: impl Into<Arc<str>>) -> Term {
        Term::constant(name, Sort::Attribute)
    }

    pub fn var(name: impl Into<Arc<str>>, sort: Sort) -> Term {
        Term::Var(Variable::new(name, sort))
    }

    /// Applies `constructor` to `args`, checking arity and argument sorts.
    pub fn app(constructor: Constructor, args: Vec<Term>) -> Result<Term, TermError> {
        let (params, _) = constructor.signature();
        if params.len() != args.len() {
            return Err(TermError::Arity {
                constructor,
                expected: params.len(),
                found: args.len(),
            });
        }
        for (position, (arg, expected)) in args.iter().zip(params).enumerate() {
            if arg.sort() != *expected {
                return Err(TermError::Sort {
                    constructor,
                    position: position + 1,
                    expected: *expected,
                    found: arg.sort(),
                });
            }
        }
        Ok(Term::App(constructor, args.into()))
    }

    pub fn a2i(p: Term, a: Term) -> Result<Term, TermError> {
        Term::app(Constructor::A2i, vec![p, a])
    }

    pub fn s2i(p: Term, s: Term) -> Result<Term, TermError> {
        Term::app(Constructor::S2i, vec![p, s])
    }

    pub fn said(x: Term) -> Result<Term, TermError> {
        Term::app(Constructor::Said, vec![x])
    }

    pub fn td_on(x: Term) -> Result<Term, TermError> {
        Term::app(Constructor::TdOn, vec![x])
    }

    pub fn sort(&self) -> Sort {
        match self {
            Term::Const { sort, .. } => *sort,
            Term::Var(v) => v.sort,
            Term::App(c, _) => c.result_sort(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Const { .. } => true,
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// Collects the variables of the term in first-occurrence order.
    pub fn collect_vars(&self, out: &mut Vec<Variable>) {
        match self {
            Term::Const { .. } => {}
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    pub fn vars(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    /// Fails with [`TermError::Expected`] unless the term has sort `sort`.
    pub fn expect_sort(&self, sort: Sort) -> Result<&Term, TermError> {
        if self.sort() == sort {
            Ok(self)
        } else {
            Err(TermError::Expected {
                expected: sort,
                found: self.sort(),
            })
        }
    }

    /// Every constant occurring in the term.
    pub fn constants(&self) -> Vec<(&str, Sort)> {
        let mut out = Vec::new();
        self.walk_constants(&mut out);
        out
    }

    fn walk_constants<'a>(&'a self, out: &mut Vec<(&'a str, Sort)>) {
        match self {
            Term::Const { name, sort } => out.push((name, *sort)),
            Term::Var(_) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.walk_constants(out)),
        }
    }

    /// Renames every variable with `f`, keeping sorts.
    pub fn rename_vars(&self, f: &impl Fn(&Variable) -> Variable) -> Term {
        match self {
            Term::Const { .. } => self.clone(),
            Term::Var(v) => Term::Var(f(v)),
            Term::App(c, args) => {
                Term::App(*c, args.iter().map(|a| a.rename_vars(f)).collect())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const { name, .. } => f.write_str(name),
            Term::Var(v) => write!(f, "{v}"),
            Term::App(c, args) => {
                write!(f, "{c}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// True iff `a` is a primitive attribute, i.e. a declared attribute
/// constant. Any `tdOn`-rooted attribute is not primitive.
pub fn is_prim(a: &Term) -> Result<bool, TermError> {
    a.expect_sort(Sort::Attribute)?;
    if !a.is_ground() {
        return Err(TermError::NotGround(a.clone()));
    }
    Ok(matches!(a, Term::Const { .. }))
}

/// A finite, sort-preserving map from variables to terms.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution {
    map: BTreeMap<Variable, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, v: &Variable) -> Option<&Term> {
        self.map.get(v)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Variable, &Term)> {
        self.map.iter()
    }

    /// Binds `v` to `t`. Returns false (and leaves the map untouched) if the
    /// sorts differ or `v` is already bound to a different term.
    pub fn bind(&mut self, v: Variable, t: Term) -> bool {
        if v.sort() != t.sort() {
            return false;
        }
        match self.map.get(&v) {
            Some(existing) => *existing == t,
            None => {
                self.map.insert(v, t);
                true
            }
        }
    }

    pub fn apply(&self, t: &Term) -> Term {
        match t {
            Term::Const { .. } => t.clone(),
            Term::Var(v) => self.map.get(v).cloned().unwrap_or_else(|| t.clone()),
            Term::App(c, args) => Term::App(*c, args.iter().map(|a| self.apply(a)).collect()),
        }
    }

    /// Restricts the substitution to the given variables.
    pub fn restrict(&self, vars: &[Variable]) -> Substitution {
        Substitution {
            map: self
                .map
                .iter()
                .filter(|(k, _)| vars.contains(k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }
}

impl FromIterator<(Variable, Term)> for Substitution {
    fn from_iter<I: IntoIterator<Item = (Variable, Term)>>(iter: I) -> Self {
        let mut s = Substitution::new();
        for (v, t) in iter {
            s.bind(v, t);
        }
        s
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v} ↦ {t}")?;
        }
        f.write_str("}")
    }
}

/// One-sided matching: extends `subst` so that `subst(pattern) == target`.
/// On failure `subst` may hold partial bindings; callers clone first.
pub fn match_into(pattern: &Term, target: &Term, subst: &mut Substitution) -> bool {
    match (pattern, target) {
        (Term::Var(v), _) => subst.bind(v.clone(), target.clone()),
        (Term::Const { .. }, _) => pattern == target,
        (Term::App(c1, a1), Term::App(c2, a2)) => {
            c1 == c2
                && a1.len() == a2.len()
                && a1.iter().zip(a2.iter()).all(|(p, t)| match_into(p, t, subst))
        }
        _ => false,
    }
}

/// The most general matcher of `pattern` onto `target`, if any.
pub fn match_term(pattern: &Term, target: &Term) -> Option<Substitution> {
    let mut s = Substitution::new();
    match_into(pattern, target, &mut s).then_some(s)
}

/// Syntactic unification with occurs check. Both sides may contain
/// variables. The result is idempotent: no bound variable occurs in any
/// binding.
pub fn unify(a: &Term, b: &Term) -> Option<BTreeMap<Variable, Term>> {
    unify_all(vec![(a.clone(), b.clone())])
}

/// Simultaneous unification of every pair.
pub fn unify_all(pairs: Vec<(Term, Term)>) -> Option<BTreeMap<Variable, Term>> {
    let mut subst = BTreeMap::new();
    let mut stack = pairs;
    while let Some((x, y)) = stack.pop() {
        let x = resolve(&subst, &x);
        let y = resolve(&subst, &y);
        if x == y {
            continue;
        }
        match (&x, &y) {
            (Term::Var(v), other) | (other, Term::Var(v)) => {
                if v.sort() != other.sort() || occurs(v, other) {
                    return None;
                }
                bind_solved(&mut subst, v.clone(), other.clone());
            }
            (Term::App(c1, a1), Term::App(c2, a2)) if c1 == c2 && a1.len() == a2.len() => {
                stack.extend(a1.iter().cloned().zip(a2.iter().cloned()));
            }
            _ => return None,
        }
    }
    Some(subst)
}

fn resolve(subst: &BTreeMap<Variable, Term>, t: &Term) -> Term {
    match t {
        Term::Const { .. } => t.clone(),
        Term::Var(v) => match subst.get(v) {
            Some(bound) => bound.clone(),
            None => t.clone(),
        },
        Term::App(c, args) => Term::App(*c, args.iter().map(|a| resolve(subst, a)).collect()),
    }
}

fn bind_solved(subst: &mut BTreeMap<Variable, Term>, v: Variable, t: Term) {
    let single: BTreeMap<Variable, Term> = [(v.clone(), t.clone())].into_iter().collect();
    for bound in subst.values_mut() {
        *bound = resolve(&single, bound);
    }
    subst.insert(v, t);
}

fn occurs(v: &Variable, t: &Term) -> bool {
    match t {
        Term::Const { .. } => false,
        Term::Var(w) => v == w,
        Term::App(_, args) => args.iter().any(|a| occurs(v, a)),
    }
}

/// Applies a unifier produced by [`unify`].
pub fn apply_unifier(subst: &BTreeMap<Variable, Term>, t: &Term) -> Term {
    resolve(subst, t)
}
