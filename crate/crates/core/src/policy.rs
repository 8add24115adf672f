//! Policy rules: `head ← body ∧ constraint`, their well-formedness check,
//! grounding of body-only principal variables, and constraint evaluation.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::terms::{is_prim, Sort, Substitution, Term, TermError, Variable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Uknows,
    Knows,
    Msg,
}

impl Predicate {
    pub fn signature(self) -> &'static [Sort] {
        match self {
            Predicate::Uknows | Predicate::Knows => &[Sort::Principal, Sort::Infon],
            Predicate::Msg => &[Sort::Principal, Sort::Speech, Sort::Principal],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Predicate::Uknows => "uknows",
            Predicate::Knows => "knows",
            Predicate::Msg => "msg",
        }
    }

    pub fn from_name(name: &str) -> Option<Predicate> {
        match name {
            "uknows" => Some(Predicate::Uknows),
            "knows" => Some(Predicate::Knows),
            "msg" => Some(Predicate::Msg),
            _ => None,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolicyError {
    #[error(transparent)]
    Term(#[from] TermError),
    #[error("{predicate} takes {expected} argument(s), got {found}")]
    Arity {
        predicate: Predicate,
        expected: usize,
        found: usize,
    },
    #[error("argument {position} of {predicate} must be {expected}, got {found}")]
    Sort {
        predicate: Predicate,
        position: usize,
        expected: Sort,
        found: Sort,
    },
    #[error("cannot ground rule `{0}` over an empty set of principals")]
    EmptyPrincipalSet(String),
    #[error("constraint variable `{0}` is not bound by the substitution")]
    UnboundVariable(Variable),
    #[error("`{0}` is a built-in rule name")]
    BuiltinName(String),
    #[error("rule `{0}` is a copy of built-in rule `{1}`")]
    BuiltinCopy(String, String),
    #[error("duplicate rule name `{0}`")]
    DuplicateName(String),
}

/// A predicate applied to well-sorted arguments.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pred: Predicate,
    args: Arc<[Term]>,
}

impl Atom {
    pub fn new(pred: Predicate, args: Vec<Term>) -> Result<Atom, PolicyError> {
        let sig = pred.signature();
        if sig.len() != args.len() {
            return Err(PolicyError::Arity {
                predicate: pred,
                expected: sig.len(),
                found: args.len(),
            });
        }
        for (i, (a, s)) in args.iter().zip(sig).enumerate() {
            if a.sort() != *s {
                return Err(PolicyError::Sort {
                    predicate: pred,
                    position: i + 1,
                    expected: *s,
                    found: a.sort(),
                });
            }
        }
        Ok(Atom {
            pred,
            args: args.into(),
        })
    }

    pub fn knows(p: Term, x: Term) -> Result<Atom, PolicyError> {
        Atom::new(Predicate::Knows, vec![p, x])
    }

    pub fn uknows(p: Term, x: Term) -> Result<Atom, PolicyError> {
        Atom::new(Predicate::Uknows, vec![p, x])
    }

    pub fn msg(p: Term, s: Term, q: Term) -> Result<Atom, PolicyError> {
        Atom::new(Predicate::Msg, vec![p, s, q])
    }

    pub fn pred(&self) -> Predicate {
        self.pred
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    pub fn collect_vars(&self, out: &mut Vec<Variable>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }

    pub fn vars(&self) -> Vec<Variable> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, s: &Substitution) -> Atom {
        Atom {
            pred: self.pred,
            args: self.args.iter().map(|a| s.apply(a)).collect(),
        }
    }

    pub fn map_terms(&self, f: impl Fn(&Term) -> Term) -> Atom {
        Atom {
            pred: self.pred,
            args: self.args.iter().map(f).collect(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.pred)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// Matches an atom pattern against a ground atom, extending `subst`.
pub fn match_atom(pattern: &Atom, target: &Atom, subst: &mut Substitution) -> bool {
    pattern.pred == target.pred
        && pattern
            .args
            .iter()
            .zip(target.args.iter())
            .all(|(p, t)| crate::terms::match_into(p, t, subst))
}

/// Quantifier-free constraint over term equality and `prim`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constraint {
    True,
    Eq(Term, Term),
    Prim(Term),
    Not(Box<Constraint>),
    And(Box<Constraint>, Box<Constraint>),
    Or(Box<Constraint>, Box<Constraint>),
}

impl Constraint {
    pub fn eq(a: Term, b: Term) -> Result<Constraint, PolicyError> {
        if a.sort() != b.sort() {
            return Err(TermError::Expected {
                expected: a.sort(),
                found: b.sort(),
            }
            .into());
        }
        Ok(Constraint::Eq(a, b))
    }

    pub fn prim(a: Term) -> Result<Constraint, PolicyError> {
        a.expect_sort(Sort::Attribute)?;
        Ok(Constraint::Prim(a))
    }

    pub fn is_true(&self) -> bool {
        matches!(self, Constraint::True)
    }

    pub fn collect_vars(&self, out: &mut Vec<Variable>) {
        match self {
            Constraint::True => {}
            Constraint::Eq(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Constraint::Prim(a) => a.collect_vars(out),
            Constraint::Not(c) => c.collect_vars(out),
            Constraint::And(a, b) | Constraint::Or(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn apply(&self, s: &Substitution) -> Constraint {
        match self {
            Constraint::True => Constraint::True,
            Constraint::Eq(a, b) => Constraint::Eq(s.apply(a), s.apply(b)),
            Constraint::Prim(a) => Constraint::Prim(s.apply(a)),
            Constraint::Not(c) => Constraint::Not(Box::new(c.apply(s))),
            Constraint::And(a, b) => Constraint::And(Box::new(a.apply(s)), Box::new(b.apply(s))),
            Constraint::Or(a, b) => Constraint::Or(Box::new(a.apply(s)), Box::new(b.apply(s))),
        }
    }

    fn map_terms(&self, f: &impl Fn(&Term) -> Term) -> Constraint {
        match self {
            Constraint::True => Constraint::True,
            Constraint::Eq(a, b) => Constraint::Eq(f(a), f(b)),
            Constraint::Prim(a) => Constraint::Prim(f(a)),
            Constraint::Not(c) => Constraint::Not(Box::new(c.map_terms(f))),
            Constraint::And(a, b) => {
                Constraint::And(Box::new(a.map_terms(f)), Box::new(b.map_terms(f)))
            }
            Constraint::Or(a, b) => {
                Constraint::Or(Box::new(a.map_terms(f)), Box::new(b.map_terms(f)))
            }
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::True => f.write_str("true"),
            Constraint::Eq(a, b) => write!(f, "{a} = {b}"),
            Constraint::Prim(a) => write!(f, "prim({a})"),
            Constraint::Not(c) => write!(f, "not ({c})"),
            Constraint::And(a, b) => write!(f, "({a}) and ({b})"),
            Constraint::Or(a, b) => write!(f, "({a}) or ({b})"),
        }
    }
}

/// Evaluates a constraint in the free term algebra under `subst`.
pub fn eval_constraint(c: &Constraint, subst: &Substitution) -> Result<bool, PolicyError> {
    let ground = |t: &Term| -> Result<Term, PolicyError> {
        let applied = subst.apply(t);
        match applied.vars().into_iter().next() {
            Some(v) => Err(PolicyError::UnboundVariable(v)),
            None => Ok(applied),
        }
    };
    Ok(match c {
        Constraint::True => true,
        Constraint::Eq(a, b) => ground(a)? == ground(b)?,
        Constraint::Prim(a) => is_prim(&ground(a)?)?,
        Constraint::Not(c) => !eval_constraint(c, subst)?,
        Constraint::And(a, b) => eval_constraint(a, subst)? && eval_constraint(b, subst)?,
        Constraint::Or(a, b) => eval_constraint(a, subst)? || eval_constraint(b, subst)?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PolicyRule {
    pub name: String,
    pub head: Atom,
    pub body: Vec<Atom>,
    pub constraint: Constraint,
}

impl PolicyRule {
    pub fn new(name: impl Into<String>, head: Atom, body: Vec<Atom>, constraint: Constraint) -> Self {
        PolicyRule {
            name: name.into(),
            head,
            body,
            constraint,
        }
    }

    pub fn is_schema(&self) -> bool {
        self.body.is_empty()
    }

    pub fn head_vars(&self) -> Vec<Variable> {
        self.head.vars()
    }

    /// Variables occurring in the body or constraint but not in the head.
    pub fn body_only_vars(&self) -> Vec<Variable> {
        let head = self.head.vars();
        let mut out = Vec::new();
        for a in &self.body {
            a.collect_vars(&mut out);
        }
        self.constraint.collect_vars(&mut out);
        out.retain(|v| !head.contains(v));
        out
    }

    pub fn all_vars(&self) -> Vec<Variable> {
        let mut out = self.head.vars();
        for a in &self.body {
            a.collect_vars(&mut out);
        }
        self.constraint.collect_vars(&mut out);
        out
    }

    pub fn apply(&self, s: &Substitution) -> PolicyRule {
        PolicyRule {
            name: self.name.clone(),
            head: self.head.apply(s),
            body: self.body.iter().map(|a| a.apply(s)).collect(),
            constraint: self.constraint.apply(s),
        }
    }

    /// Renames all variables with `f`.
    pub fn rename_vars(&self, f: impl Fn(&Variable) -> Variable) -> PolicyRule {
        let g = |t: &Term| t.rename_vars(&f);
        PolicyRule {
            name: self.name.clone(),
            head: self.head.map_terms(g),
            body: self.body.iter().map(|a| a.map_terms(g)).collect(),
            constraint: self.constraint.map_terms(&g),
        }
    }

    /// Structural equality up to a consistent renaming of variables.
    pub fn alpha_equivalent(&self, other: &PolicyRule) -> bool {
        let canon = |r: &PolicyRule| {
            let vars = r.all_vars();
            r.rename_vars(|v| {
                let idx = vars.iter().position(|w| w == v).unwrap_or(usize::MAX);
                Variable::new(format!("_{idx}"), v.sort())
            })
        };
        let (a, b) = (canon(self), canon(other));
        a.head == b.head && a.body == b.body && a.constraint == b.constraint
    }
}

impl fmt::Display for PolicyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- ", self.head)?;
        if self.body.is_empty() {
            return write!(f, "{}", self.constraint);
        }
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        if !self.constraint.is_true() {
            write!(f, " | {}", self.constraint)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleViolation {
    /// The head predicate is not `knows`.
    HeadPredicate(Predicate),
    /// A non-principal head variable does not occur in the body.
    UnboundHeadVariable(Variable),
    /// A variable occurring only in the body is not principal-sorted.
    NonPrincipalBodyVariable(Variable),
}

impl RuleViolation {
    pub fn variable(&self) -> Option<&Variable> {
        match self {
            RuleViolation::HeadPredicate(_) => None,
            RuleViolation::UnboundHeadVariable(v) | RuleViolation::NonPrincipalBodyVariable(v) => {
                Some(v)
            }
        }
    }
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleViolation::HeadPredicate(p) => write!(f, "head predicate must be knows, got {p}"),
            RuleViolation::UnboundHeadVariable(v) => write!(
                f,
                "head variable `{v}` of sort {} does not occur in the body",
                v.sort()
            ),
            RuleViolation::NonPrincipalBodyVariable(v) => write!(
                f,
                "body-only variable `{v}` has sort {}, only Principal variables may occur solely in the body",
                v.sort()
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RuleReport {
    pub violations: Vec<RuleViolation>,
}

impl RuleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn offenders(&self) -> Vec<&Variable> {
        self.violations.iter().filter_map(RuleViolation::variable).collect()
    }
}

pub fn validate_rule(r: &PolicyRule) -> RuleReport {
    let mut violations = Vec::new();
    if r.head.pred() != Predicate::Knows {
        violations.push(RuleViolation::HeadPredicate(r.head.pred()));
    }
    if !r.is_schema() {
        let mut body_vars = Vec::new();
        for a in &r.body {
            a.collect_vars(&mut body_vars);
        }
        for v in r.head_vars() {
            if v.sort() != Sort::Principal && !body_vars.contains(&v) {
                violations.push(RuleViolation::UnboundHeadVariable(v));
            }
        }
    }
    for v in r.body_only_vars() {
        if v.sort() != Sort::Principal {
            violations.push(RuleViolation::NonPrincipalBodyVariable(v));
        }
    }
    RuleReport { violations }
}

/// Instantiates the principal-sorted body-only variables of `r` with every
/// combination of constants from `principals`.
pub fn ground_rule(r: &PolicyRule, principals: &[Term]) -> Result<Vec<PolicyRule>, PolicyError> {
    if principals.is_empty() {
        return Err(PolicyError::EmptyPrincipalSet(r.name.clone()));
    }
    let to_ground: Vec<Variable> = r
        .body_only_vars()
        .into_iter()
        .filter(|v| v.sort() == Sort::Principal)
        .collect();
    if to_ground.is_empty() || r.is_schema() {
        return Ok(vec![r.clone()]);
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; to_ground.len()];
    loop {
        let s: Substitution = to_ground
            .iter()
            .zip(&idx)
            .map(|(v, &i)| (v.clone(), principals[i].clone()))
            .collect();
        out.push(r.apply(&s));
        // odometer increment, last variable fastest
        let mut k = idx.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < principals.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub const INTERNAL: &str = "internal";
pub const RECEIVE: &str = "receive";
pub const TRUST: &str = "trust";
pub const BUILTIN_NAMES: [&str; 3] = [INTERNAL, RECEIVE, TRUST];

fn v(name: &str, sort: Sort) -> Term {
    Term::var(name, sort)
}

/// `knows(p, x) ← uknows(p, x)`
pub fn internal_knowledge_rule() -> PolicyRule {
    let (p, x) = (v("p", Sort::Principal), v("x", Sort::Infon));
    PolicyRule::new(
        INTERNAL,
        Atom::knows(p.clone(), x.clone()).expect("well-sorted"),
        vec![Atom::uknows(p, x).expect("well-sorted")],
        Constraint::True,
    )
}

/// `knows(q, s2i(p, s)) ← msg(p, s, q)`
pub fn receive_rule() -> PolicyRule {
    let (p, s, q) = (
        v("p", Sort::Principal),
        v("s", Sort::Speech),
        v("q", Sort::Principal),
    );
    PolicyRule::new(
        RECEIVE,
        Atom::knows(q.clone(), Term::s2i(p.clone(), s.clone()).expect("well-sorted"))
            .expect("well-sorted"),
        vec![Atom::msg(p, s, q).expect("well-sorted")],
        Constraint::True,
    )
}

/// `knows(p, x) ← knows(p, s2i(q, said(x))) ∧ knows(p, a2i(q, tdOn(x)))`
pub fn trust_application_rule() -> PolicyRule {
    let (p, q, x) = (
        v("p", Sort::Principal),
        v("q", Sort::Principal),
        v("x", Sort::Infon),
    );
    let said_x = Term::said(x.clone()).expect("well-sorted");
    let td_x = Term::td_on(x.clone()).expect("well-sorted");
    PolicyRule::new(
        TRUST,
        Atom::knows(p.clone(), x).expect("well-sorted"),
        vec![
            Atom::knows(p.clone(), Term::s2i(q.clone(), said_x).expect("well-sorted"))
                .expect("well-sorted"),
            Atom::knows(p, Term::a2i(q, td_x).expect("well-sorted")).expect("well-sorted"),
        ],
        Constraint::True,
    )
}

pub fn builtin_rules() -> Vec<PolicyRule> {
    vec![
        internal_knowledge_rule(),
        receive_rule(),
        trust_application_rule(),
    ]
}

/// The built-in rules followed by the user rules, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicySet {
    rules: Vec<PolicyRule>,
}

impl PolicySet {
    pub fn new(user_rules: Vec<PolicyRule>) -> Result<PolicySet, PolicyError> {
        let builtins = builtin_rules();
        let mut names: BTreeSet<String> = BTreeSet::new();
        for r in &user_rules {
            if BUILTIN_NAMES.contains(&r.name.as_str()) {
                return Err(PolicyError::BuiltinName(r.name.clone()));
            }
            if let Some(b) = builtins.iter().find(|b| b.alpha_equivalent(r)) {
                return Err(PolicyError::BuiltinCopy(r.name.clone(), b.name.clone()));
            }
            if !names.insert(r.name.clone()) {
                return Err(PolicyError::DuplicateName(r.name.clone()));
            }
        }
        let mut rules = builtins;
        rules.extend(user_rules);
        Ok(PolicySet { rules })
    }

    pub fn rules(&self) -> &[PolicyRule] {
        &self.rules
    }

    pub fn user_rules(&self) -> &[PolicyRule] {
        &self.rules[BUILTIN_NAMES.len()..]
    }

    /// Bodiless rules, kept as schemata.
    pub fn schemata(&self) -> Vec<PolicyRule> {
        self.rules.iter().filter(|r| r.is_schema()).cloned().collect()
    }

    /// Grounds every rule with a body over `principals`.
    pub fn ground(&self, principals: &[Term]) -> Result<Vec<PolicyRule>, PolicyError> {
        let mut out = Vec::new();
        for r in self.rules.iter().filter(|r| !r.is_schema()) {
            out.extend(ground_rule(r, principals)?);
        }
        Ok(out)
    }

    pub fn without(&self, name: &str) -> PolicySet {
        PolicySet {
            rules: self.rules.iter().filter(|r| r.name != name).cloned().collect(),
        }
    }
}
